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

#include "relsynth/allocator.hpp"
#include "relsynth/codec.hpp"
#include "relsynth/csv.hpp"
#include "relsynth/database.hpp"
#include "relsynth/denoiser.hpp"
#include "relsynth/diffusion.hpp"
#include "relsynth/error.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/metrics.hpp"
#include "relsynth/pipeline.hpp"
#include "relsynth/random.hpp"
#include "relsynth/schedule.hpp"
#include "relsynth/schema.hpp"
#include "relsynth/stats.hpp"
#include "relsynth/structure.hpp"
#include "relsynth/toy.hpp"
