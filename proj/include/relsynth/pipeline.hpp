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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relsynth/codec.hpp"
#include "relsynth/database.hpp"
#include "relsynth/denoiser.hpp"
#include "relsynth/diffusion.hpp"
#include "relsynth/error.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/metrics.hpp"
#include "relsynth/random.hpp"
#include "relsynth/schedule.hpp"
#include "relsynth/schema.hpp"
#include "relsynth/structure.hpp"

namespace relsynth {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration.

struct RunConfig {
  fs::path schema;
  fs::path data_dir;
  fs::path output_dir = "out";
  fs::path checkpoint;  // defaults to <output_dir>/model.ckpt
  std::uint64_t seed = 0;
  double scale = 1.0;
  DiffusionConfig diffusion;
  metrics::MetricToggles metrics;

  fs::path checkpoint_path() const { return checkpoint.empty() ? output_dir / "model.ckpt" : checkpoint; }
  fs::path synthetic_dir() const { return output_dir / "synthetic"; }
};

inline nlohmann::json diffusion_to_json(const DiffusionConfig& c) {
  return {{"timesteps", c.timesteps},
          {"schedule", c.schedule},
          {"k_hops", c.hops},
          {"neighbor_cap", c.neighbor_cap ? nlohmann::json(*c.neighbor_cap) : nlohmann::json(nullptr)},
          {"batch_size", c.batch_size},
          {"train_steps", c.train_steps},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"ema_decay", c.ema_decay},
          {"hidden_dim", c.hidden},
          {"mlp_layers", c.mlp_layers},
          {"log_every", c.log_every}};
}

inline DiffusionConfig diffusion_from_json(const nlohmann::json& j) {
  DiffusionConfig c;
  c.timesteps = j.value("timesteps", c.timesteps);
  c.schedule = j.value("schedule", c.schedule);
  c.hops = j.value("k_hops", c.hops);
  if (j.contains("neighbor_cap") && !j["neighbor_cap"].is_null()) c.neighbor_cap = j["neighbor_cap"].get<int>();
  c.batch_size = j.value("batch_size", c.batch_size);
  c.train_steps = j.value("train_steps", c.train_steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.ema_decay = j.value("ema_decay", c.ema_decay);
  c.hidden = j.value("hidden_dim", c.hidden);
  c.mlp_layers = j.value("mlp_layers", c.mlp_layers);
  c.log_every = j.value("log_every", c.log_every);
  c.validate();
  return c;
}

/// Reads a JSON run configuration. Relative paths are resolved against the
/// directory holding the configuration file.
inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto resolve = [&](const char* key) -> fs::path {
    if (!j.contains(key) || j[key].is_null()) return {};
    const fs::path p = j[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  RunConfig c;
  try {
    c.schema = resolve("schema");
    c.data_dir = resolve("data_dir");
    if (j.contains("output_dir")) c.output_dir = resolve("output_dir");
    c.checkpoint = resolve("checkpoint");
    c.seed = j.value("seed", std::uint64_t{0});
    c.scale = j.value("scale", 1.0);
    if (j.contains("diffusion")) c.diffusion = diffusion_from_json(j["diffusion"]);
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      c.metrics.cardinality = m.value("cardinality", true);
      c.metrics.column_shapes = m.value("column_shapes", true);
      c.metrics.intra_table = m.value("intra_table_trends", true);
      c.metrics.inter_table = m.value("inter_table_trends", true);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  if (!(c.scale > 0.0)) throw UsageError("scale must be positive");
  return c;
}

inline void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError("config does not name a " + what);
  if (!fs::exists(p)) throw UsageError(what + " not found: " + p.string());
}

// ---------------------------------------------------------------------------
// Trained model and its checkpoint container.

/// Everything needed to sample: schema, codecs, structure model, diffusion
/// settings, and denoiser weights.
struct Model {
  DatabaseSchema schema;
  CodecBundle codecs;
  DegreeModel degree_model;
  DiffusionConfig diffusion;
  DenoiserParams params;
};

inline constexpr char kCheckpointMagic[8] = {'R', 'S', 'Y', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  return value;
}

inline std::vector<std::size_t> attribute_dims(const DatabaseSchema& schema) {
  std::vector<std::size_t> dims;
  for (const auto& t : schema.tables()) dims.push_back(t.attributes.size());
  return dims;
}

}  // namespace detail

/// Layout: 8-byte magic "RSYNCKPT", u32 version, u64 header length, UTF-8
/// JSON header, u64 parameter count, then the parameters as little-endian
/// float64.
inline void save_checkpoint(const fs::path& path, const Model& model) {
  nlohmann::json header{{"schema_hash", schema_hash(model.schema)},
                        {"schema", schema_to_json(model.schema)},
                        {"codecs", codecs_to_json(model.codecs)},
                        {"degree_model", degree_model_to_json(model.degree_model, model.schema)},
                        {"diffusion", diffusion_to_json(model.diffusion)}};
  const std::string text = header.dump();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::write_le<std::uint64_t>(out, model.params.values.size());
  out.write(reinterpret_cast<const char*>(model.params.values.data()),
            static_cast<std::streamsize>(model.params.values.size() * sizeof(double)));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

inline Model load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + " is not a relsynth checkpoint");
  }
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_size = detail::read_le<std::uint64_t>(in);
  std::string text(header_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw DataError("truncated checkpoint header");
  Model model;
  try {
    const auto header = nlohmann::json::parse(text);
    model.schema = schema_from_json(header.at("schema"));
    if (header.at("schema_hash").get<std::string>() != schema_hash(model.schema)) {
      throw DataError("checkpoint schema hash mismatch");
    }
    model.codecs = codecs_from_json(header.at("codecs"));
    model.degree_model = degree_model_from_json(header.at("degree_model"), model.schema);
    model.diffusion = diffusion_from_json(header.at("diffusion"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt checkpoint header: " + std::string(e.what()));
  }
  model.params = init_params(detail::attribute_dims(model.schema), graph_skeleton(model.schema).edge_types,
                             model.diffusion.denoiser(), 0);
  const auto count = detail::read_le<std::uint64_t>(in);
  if (count != model.params.values.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) + " parameters, expected " +
                    std::to_string(model.params.values.size()));
  }
  in.read(reinterpret_cast<char*>(model.params.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw DataError("truncated checkpoint parameters");
  return model;
}

// ---------------------------------------------------------------------------
// In-memory pipeline stages.

struct TrainResult {
  Model model;
  std::vector<LossRecord> loss_curve;
};

/// Fits codecs and the degree model, then trains the denoiser. Seeds for
/// initialization and training are derived from `seed` by label.
inline TrainResult train_model(const Database& db, const DiffusionConfig& cfg, std::uint64_t seed,
                               const std::function<void(const LossRecord&)>& on_log = {}) {
  cfg.validate();
  topological_order(db.schema);  // rejects schemas without roots
  TrainResult result;
  Model& model = result.model;
  model.schema = db.schema;
  model.diffusion = cfg;
  model.codecs = fit_codecs(db);
  const HeteroGraph graph = rdb_to_graph(db, model.codecs);
  model.degree_model = fit_degree_model(graph, db.schema);
  const NoiseSchedule sched = make_schedule(cfg.schedule, cfg.timesteps);
  TrainingState state(init_params(detail::attribute_dims(db.schema), graph.edge_types, cfg.denoiser(),
                                  derive_seed(seed, "init")),
                      cfg);
  result.loss_curve = train(state, graph, cfg, sched, derive_seed(seed, "training"), on_log);
  model.params = state.sampling_params();
  return result;
}

/// Samples a structure with the degree model, denoises features on it, and
/// rebuilds a database with fresh keys.
inline Database sample_database(const Model& model, double scale, std::uint64_t seed,
                                const std::function<void(int)>& on_step = {}) {
  DegreeModel degrees = model.degree_model;
  degrees.scale = scale;
  const HeteroGraph structure = sample_structure(degrees, model.schema, derive_seed(seed, "structure"));
  const NoiseSchedule sched = make_schedule(model.diffusion.schedule, model.diffusion.timesteps);
  const HeteroGraph g = sample_features(structure, model.params, model.diffusion, sched,
                                        derive_seed(seed, "sampling"), ReverseMode::kFullGraph, on_step);
  Database db = graph_to_rdb(g, model.schema, model.codecs);
  check_integrity(db);
  return db;
}

inline void write_loss_curve(const fs::path& path, const std::vector<LossRecord>& curve) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "step,loss\n";
  for (const auto& r : curve) out << r.step << ',' << format_number(r.loss) << '\n';
}

inline void write_report(const fs::path& dir, const metrics::FidelityReport& report) {
  fs::create_directories(dir);
  std::ofstream json(dir / "report.json", std::ios::binary);
  json << metrics::to_json(report).dump(2) << '\n';
  std::ofstream text(dir / "report.txt", std::ios::binary);
  text << metrics::to_text(report);
  if (!json || !text) throw DataError("cannot write report into " + dir.string());
}

// ---------------------------------------------------------------------------
// Commands.

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::optional<int> hops;
  std::ostream* log = nullptr;
};

inline RunConfig apply_overrides(RunConfig cfg, const CommandOptions& opt) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.scale) {
    if (!(*opt.scale > 0.0)) throw UsageError("--scale must be positive");
    cfg.scale = *opt.scale;
  }
  if (opt.hops) {
    if (*opt.hops < 0) throw UsageError("--k-hops must be non-negative");
    cfg.diffusion.hops = *opt.hops;
  }
  return cfg;
}

/// Trains on <data_dir> and writes the checkpoint plus
/// <output_dir>/train_loss.csv.
inline Model cmd_train(const RunConfig& cfg, std::ostream* log = nullptr) {
  require_file(cfg.schema, "schema");
  require_file(cfg.data_dir, "data directory");
  const DatabaseSchema schema = load_schema(cfg.schema);
  const Database db = load_database(schema, cfg.data_dir);
  auto result = train_model(db, cfg.diffusion, cfg.seed, [log](const LossRecord& r) {
    if (log) *log << "step " << r.step << " loss " << r.loss << '\n';
  });
  write_loss_curve(cfg.output_dir / "train_loss.csv", result.loss_curve);
  save_checkpoint(cfg.checkpoint_path(), result.model);
  return std::move(result.model);
}

/// Samples a synthetic database from the checkpoint into `out_dir`.
inline Database cmd_sample(const fs::path& checkpoint, double scale, std::uint64_t seed,
                           const fs::path& out_dir, const DatabaseSchema* expected_schema = nullptr) {
  if (!fs::exists(checkpoint)) throw UsageError("checkpoint not found: " + checkpoint.string());
  const Model model = load_checkpoint(checkpoint);
  if (expected_schema && schema_hash(*expected_schema) != schema_hash(model.schema)) {
    throw DataError("checkpoint/schema hash mismatch: checkpoint was trained on a different schema");
  }
  const Database db = sample_database(model, scale, seed);
  export_database(db, out_dir);
  load_database(model.schema, out_dir);  // the written files must ingest cleanly
  return db;
}

inline metrics::FidelityReport cmd_evaluate(const fs::path& real_dir, const fs::path& synth_dir,
                                            const fs::path& schema_path, const fs::path& report_dir,
                                            const metrics::MetricToggles& toggles = {}) {
  require_file(schema_path, "schema");
  require_file(real_dir, "real data directory");
  require_file(synth_dir, "synthetic data directory");
  const DatabaseSchema schema = load_schema(schema_path);
  const Database real = load_database(schema, real_dir);
  const Database synth = load_database(schema, synth_dir);
  const auto report = metrics::evaluate(real, synth, toggles);
  write_report(report_dir, report);
  return report;
}

/// train -> sample -> evaluate, all under the configuration's master seed.
inline metrics::FidelityReport cmd_end2end(const RunConfig& cfg, std::ostream* log = nullptr) {
  const Model model = cmd_train(cfg, log);
  cmd_sample(cfg.checkpoint_path(), cfg.scale, cfg.seed, cfg.synthetic_dir(), &model.schema);
  return cmd_evaluate(cfg.data_dir, cfg.synthetic_dir(), cfg.schema, cfg.output_dir, cfg.metrics);
}

}  // namespace relsynth
