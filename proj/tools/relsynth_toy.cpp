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

// Writes the bundled toy databases (schema.json, one CSV per table, and a
// run configuration) so the examples in the README can be reproduced.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "relsynth/pipeline.hpp"
#include "relsynth/toy.hpp"

namespace {

void write_dataset(const std::filesystem::path& root, const std::string& name, const relsynth::Database& db) {
  namespace fs = std::filesystem;
  const fs::path dir = root / name;
  fs::create_directories(dir);
  relsynth::export_database(db, dir / "tables");
  std::ofstream(dir / "schema.json") << relsynth::schema_to_json(db.schema).dump(2) << '\n';

  nlohmann::json config{{"schema", "schema.json"},
                        {"data_dir", "tables"},
                        {"output_dir", "out"},
                        {"seed", 7},
                        {"scale", 1.0},
                        {"diffusion",
                         {{"timesteps", 2000},
                          {"k_hops", 1},
                          {"batch_size", 256},
                          {"train_steps", 5000},
                          {"learning_rate", 6e-4},
                          {"weight_decay", 1e-5},
                          {"hidden_dim", 64},
                          {"mlp_layers", {256, 256}},
                          {"log_every", 500}}}};
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
  std::cout << "wrote " << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the bundled toy relational databases", "relsynth-toy"};
  std::string out = "data";
  std::uint64_t seed = 2024;
  app.add_option("output", out, "destination directory");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    write_dataset(out, "household", relsynth::toy::household_database(300, seed));
    write_dataset(out, "chain", relsynth::toy::chain_database(200, seed));
  } catch (const std::exception& e) {
    std::cerr << "relsynth-toy: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
