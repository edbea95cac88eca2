/*
 * Copyright 2026 The relsynth Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace relsynth {

/// Keeps glibc from returning large blocks to the kernel after every use.
/// Training and reverse sampling allocate the same multi-megabyte Eigen
/// temporaries on every step; with the default thresholds each one is an
/// mmap/munmap pair and page faults dominate the run time. Call once at the
/// start of main. A no-op on other C libraries.
inline void tune_allocator() {
#ifdef M_MMAP_THRESHOLD
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

}  // namespace relsynth
