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

// Command-line front end: relsynth train|sample|evaluate|end2end.
//
// Exit codes: 0 success, 1 usage or configuration problem, 2 bad input data,
// 3 numerical failure during training or sampling.

#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "relsynth/allocator.hpp"
#include "relsynth/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int run(const std::string& command, const std::string& config_path, const relsynth::CommandOptions& options) {
  using namespace relsynth;
  const RunConfig cfg = apply_overrides(load_run_config(config_path), options);
  cfg.diffusion.validate();
  if (command == "train") {
    cmd_train(cfg, &std::cerr);
    std::cout << "checkpoint written to " << cfg.checkpoint_path().string() << '\n';
  } else if (command == "sample") {
    require_file(cfg.schema, "schema");
    const DatabaseSchema schema = load_schema(cfg.schema);
    const Database db = cmd_sample(cfg.checkpoint_path(), cfg.scale, cfg.seed, cfg.synthetic_dir(), &schema);
    std::cout << "synthetic database written to " << cfg.synthetic_dir().string() << '\n';
    for (std::size_t t = 0; t < db.tables.size(); ++t) {
      std::cout << "  " << schema.table(t).name << ": " << db.tables[t].keys.size() << " rows\n";
    }
  } else if (command == "evaluate") {
    const auto report = cmd_evaluate(cfg.data_dir, cfg.synthetic_dir(), cfg.schema, cfg.output_dir, cfg.metrics);
    std::cout << metrics::to_text(report);
  } else {
    const auto report = cmd_end2end(cfg, &std::cerr);
    std::cout << metrics::to_text(report);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  relsynth::tune_allocator();
  CLI::App app{"Synthetic relational databases from graph-conditioned diffusion", "relsynth"};
  app.require_subcommand(1, 1);

  std::string config_path;
  relsynth::CommandOptions options;
  std::uint64_t seed = 0;
  double scale = 1.0;
  int hops = 0;

  for (const char* name : {"train", "sample", "evaluate", "end2end"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--scale", scale, "root table scale factor, overrides the config");
    sub->add_option("--k-hops", hops, "message-passing depth K, overrides the config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  const auto* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) options.seed = seed;
  if (chosen->count("--scale")) options.scale = scale;
  if (chosen->count("--k-hops")) options.hops = hops;

  try {
    return run(chosen->get_name(), config_path, options);
  } catch (const relsynth::UsageError& e) {
    std::cerr << "relsynth: " << e.what() << '\n';
    return kUsage;
  } catch (const relsynth::DataError& e) {
    std::cerr << "relsynth: data error: " << e.what() << '\n';
    return kData;
  } catch (const relsynth::NumericError& e) {
    std::cerr << "relsynth: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "relsynth: " << e.what() << '\n';
    return kData;
  }
}
