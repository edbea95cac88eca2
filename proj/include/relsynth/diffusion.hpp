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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relsynth/denoiser.hpp"
#include "relsynth/error.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/random.hpp"
#include "relsynth/schedule.hpp"

namespace relsynth {

struct DiffusionConfig {
  int timesteps = 2000;
  std::string schedule = "cosine";
  int hops = 1;
  std::optional<int> neighbor_cap;
  int batch_size = 1024;
  int train_steps = 200000;
  double learning_rate = 6e-4;
  double weight_decay = 1e-5;
  // Decay of the exponential moving average of the weights that is kept for
  // sampling; 0 samples with the raw final iterate.
  double ema_decay = 0.999;
  int hidden = 128;
  std::vector<int> mlp_layers{512, 1024, 1024, 1024, 1024, 512};
  int log_every = 100;

  DenoiserConfig denoiser() const { return DenoiserConfig{hops, hidden, mlp_layers}; }
  SubgraphOptions subgraph() const { return SubgraphOptions{hops, neighbor_cap}; }

  void validate() const {
    if (timesteps < 1) throw UsageError("timesteps must be >= 1");
    if (hops < 0) throw UsageError("k_hops must be >= 0");
    if (neighbor_cap && *neighbor_cap < 1) throw UsageError("neighbor_cap must be >= 1");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (train_steps < 0) throw UsageError("train_steps must be >= 0");
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    if (weight_decay < 0.0) throw UsageError("weight_decay must be non-negative");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw UsageError("ema_decay must be in [0, 1)");
    if (hidden < 2) throw UsageError("hidden_dim must be >= 2");
    if (log_every < 1) throw UsageError("log_every must be >= 1");
  }

  bool operator==(const DiffusionConfig&) const = default;
};

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(std::size_t size, double learning_rate, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(epsilon),
        m_(size, 0.0), v_(size, 0.0) {}

  void step(ParamVector& params, const ParamVector& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= lr_ * wd_ * params[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  long long steps() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

/// Packed minibatch of noisy subgraphs with the noise added to each center.
struct TrainingBatch {
  BatchGraph batch;
  std::vector<Matrix> target;  // [type] one row per center, aligned with batch.centers
  std::vector<int> timesteps;  // one per subgraph
};

namespace detail {

constexpr std::uint64_t kTrainStream = 0x71;
constexpr std::uint64_t kInitNoiseStream = 0x72;
constexpr std::uint64_t kReverseNoiseStream = 0x73;
constexpr std::uint64_t kReverseSubgraphStream = 0x74;

inline void append_subgraph(BatchGraph& batch, std::vector<std::vector<Eigen::RowVectorXd>>& rows,
                            const Subgraph& sub, const std::vector<Matrix>& noisy, std::int32_t group) {
  auto& g = batch.graph;
  std::vector<NodeId> offset(g.num_types());
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    offset[t] = g.node_counts[t];
    g.node_counts[t] += sub.graph.node_counts[t];
    for (Eigen::Index i = 0; i < noisy[t].rows(); ++i) rows[t].push_back(noisy[t].row(i));
    batch.group[t].insert(batch.group[t].end(), static_cast<std::size_t>(sub.graph.node_counts[t]), group);
  }
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& et = g.edge_types[e];
    for (const auto& [c, p] : sub.graph.edges[e]) {
      g.edges[e].emplace_back(c + offset[et.child], p + offset[et.parent]);
    }
  }
  batch.centers[sub.center.type].push_back(sub.center.id + offset[sub.center.type]);
}

inline BatchGraph empty_batch(const HeteroGraph& like) {
  BatchGraph batch;
  batch.graph.node_types = like.node_types;
  batch.graph.edge_types = like.edge_types;
  batch.graph.node_counts.assign(like.num_types(), 0);
  batch.graph.edges.resize(like.edge_types.size());
  batch.group.resize(like.num_types());
  batch.centers.resize(like.num_types());
  return batch;
}

/// Nodes whose noise can be predicted (types with at least one attribute).
class NodeSampler {
 public:
  explicit NodeSampler(const HeteroGraph& g) {
    for (std::size_t t = 0; t < g.num_types(); ++t) {
      if (g.features[t].cols() == 0 || g.node_counts[t] == 0) continue;
      types_.push_back(t);
      total_ += g.node_counts[t];
      cumulative_.push_back(total_);
    }
  }

  bool empty() const { return total_ == 0; }

  NodeRef operator()(Rng& rng) const {
    const auto k = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(total_)));
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), k);
    const auto i = static_cast<std::size_t>(it - cumulative_.begin());
    const NodeId before = i == 0 ? 0 : cumulative_[i - 1];
    return NodeRef{types_[i], k - before};
  }

 private:
  std::vector<std::size_t> types_;
  std::vector<NodeId> cumulative_;
  NodeId total_ = 0;
};

}  // namespace detail

/// Draws one minibatch: for each element a node v uniform over all nodes
/// with attributes, its K-hop subgraph, t uniform in 1..T, and iid standard
/// normal noise for every subgraph node; every node is noised to the same t
/// with the closed-form forward process.
inline TrainingBatch draw_training_batch(const HeteroGraph& g, const UndirectedView& view,
                                         const DiffusionConfig& cfg, const NoiseSchedule& sched,
                                         Rng& rng) {
  if (!g.has_features()) throw ValidationError("training graph has no features");
  const detail::NodeSampler nodes(g);
  if (nodes.empty()) throw ValidationError("no node carries attributes to learn");
  TrainingBatch tb;
  tb.batch = detail::empty_batch(g);
  const std::size_t types = g.num_types();
  std::vector<std::vector<Eigen::RowVectorXd>> rows(types), targets(types);
  for (int b = 0; b < cfg.batch_size; ++b) {
    const NodeRef v = nodes(rng);
    const Subgraph sub = k_hop_subgraph(g, view, v, cfg.subgraph(), &rng);
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps)));
    const double a = std::sqrt(sched.alpha_bar[static_cast<std::size_t>(t)]);
    const double s = std::sqrt(1.0 - sched.alpha_bar[static_cast<std::size_t>(t)]);
    std::vector<Matrix> noisy(types);
    for (std::size_t ty = 0; ty < types; ++ty) {
      const Matrix& x0 = sub.graph.features[ty];
      Matrix eps(x0.rows(), x0.cols());
      for (Eigen::Index i = 0; i < eps.rows(); ++i) {
        for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = rng.normal();
      }
      noisy[ty] = a * x0 + s * eps;
      if (ty == sub.center.type) targets[ty].push_back(eps.row(sub.center.id));
    }
    detail::append_subgraph(tb.batch, rows, sub, noisy, b);
    tb.batch.times.push_back(static_cast<double>(t));
    tb.timesteps.push_back(t);
  }
  tb.batch.graph.features.resize(types);
  tb.target.resize(types);
  for (std::size_t ty = 0; ty < types; ++ty) {
    const auto width = g.features[ty].cols();
    auto fill = [width](const std::vector<Eigen::RowVectorXd>& src, Matrix& dst) {
      dst.resize(static_cast<Eigen::Index>(src.size()), width);
      for (std::size_t i = 0; i < src.size(); ++i) dst.row(static_cast<Eigen::Index>(i)) = src[i];
    };
    fill(rows[ty], tb.batch.graph.features[ty]);
    fill(targets[ty], tb.target[ty]);
  }
  return tb;
}

/// L_simple on a batch: mean over centers of ||eps - eps_hat||^2.
inline double simple_loss(const TrainingBatch& tb, const std::vector<Matrix>& predicted) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < tb.target.size(); ++t) {
    if (tb.target[t].rows() == 0) continue;
    total += (tb.target[t] - predicted[t]).squaredNorm();
    count += static_cast<std::size_t>(tb.target[t].rows());
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

struct TrainingState {
  DenoiserParams params;
  AdamW optimizer;
  double ema_decay = 0.0;
  ParamVector ema;  // moving average of params.values, empty when disabled
  long long step = 0;

  TrainingState(DenoiserParams p, const DiffusionConfig& cfg)
      : params(std::move(p)), optimizer(params.size(), cfg.learning_rate, cfg.weight_decay),
        ema_decay(cfg.ema_decay) {
    if (ema_decay > 0.0) ema = params.values;
  }

  /// The weights to sample with: the moving average when enabled.
  DenoiserParams sampling_params() const {
    DenoiserParams p = params;
    if (!ema.empty()) p.values = ema;
    return p;
  }
};

/// One optimizer step on a freshly drawn batch; returns the batch loss.
/// Randomness comes from a stream keyed by (seed, step index), so a run is
/// reproducible regardless of how it is split into calls.
inline double training_step(TrainingState& state, const HeteroGraph& g, const UndirectedView& view,
                            const DiffusionConfig& cfg, const NoiseSchedule& sched,
                            std::uint64_t seed) {
  Rng rng(mix_seed(seed, {detail::kTrainStream, static_cast<std::uint64_t>(state.step)}));
  const TrainingBatch tb = draw_training_batch(g, view, cfg, sched, rng);
  ForwardCache cache;
  const auto predicted = predict(state.params, tb.batch, &cache);
  const double loss = simple_loss(tb, predicted);
  if (!std::isfinite(loss)) {
    double norm = 0.0;
    for (double x : state.params.values) norm += x * x;
    const auto [tmin, tmax] = std::minmax_element(tb.timesteps.begin(), tb.timesteps.end());
    std::ostringstream msg;
    msg << "non-finite training loss at step " << state.step << " (t in [" << *tmin << ", " << *tmax
        << "], parameter norm " << std::sqrt(norm) << ")";
    throw NumericError(msg.str());
  }
  std::size_t count = 0;
  for (const auto& m : tb.target) count += static_cast<std::size_t>(m.rows());
  std::vector<Matrix> d_out(predicted.size());
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    d_out[t] = (2.0 / static_cast<double>(count)) * (predicted[t] - tb.target[t]);
  }
  ParamVector grad(state.params.size(), 0.0);
  backpropagate(state.params, tb.batch, cache, d_out, grad);
  state.optimizer.step(state.params.values, grad);
  if (!state.ema.empty()) {
    const double d = state.ema_decay;
    for (std::size_t i = 0; i < state.ema.size(); ++i) {
      state.ema[i] = d * state.ema[i] + (1.0 - d) * state.params.values[i];
    }
  }
  ++state.step;
  return loss;
}

struct LossRecord {
  long long step = 0;
  double loss = 0.0;
};

/// Runs cfg.train_steps optimizer steps; records the loss every
/// cfg.log_every steps (and at the first and last step).
inline std::vector<LossRecord> train(TrainingState& state, const HeteroGraph& g,
                                     const DiffusionConfig& cfg, const NoiseSchedule& sched,
                                     std::uint64_t seed,
                                     const std::function<void(const LossRecord&)>& on_log = {}) {
  const UndirectedView view(g);
  std::vector<LossRecord> curve;
  for (int i = 0; i < cfg.train_steps; ++i) {
    const long long step = state.step;
    const double loss = training_step(state, g, view, cfg, sched, seed);
    if (step % cfg.log_every == 0 || i + 1 == cfg.train_steps) {
      curve.push_back({step, loss});
      if (on_log) on_log(curve.back());
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Sampling.

enum class ReverseMode {
  kFullGraph,  // one batched pass over the whole graph
  kPerNode,    // one K-hop subgraph evaluation per node
};

/// Standard normal draws for one node, keyed by (seed, stream, t, type, id).
inline Eigen::RowVectorXd node_noise(std::uint64_t seed, std::uint64_t stream, int t, NodeRef node,
                                     Eigen::Index dim) {
  Rng rng(mix_seed(seed, {stream, static_cast<std::uint64_t>(t), node.type,
                          static_cast<std::uint64_t>(node.id)}));
  Eigen::RowVectorXd z(dim);
  for (Eigen::Index j = 0; j < dim; ++j) z(j) = rng.normal();
  return z;
}

/// Whole-graph batch whose centers are every node with attributes.
inline BatchGraph full_graph_batch(const HeteroGraph& g, int t) {
  BatchGraph batch;
  batch.graph = g;
  batch.times = {static_cast<double>(t)};
  batch.group.resize(g.num_types());
  batch.centers.resize(g.num_types());
  for (std::size_t ty = 0; ty < g.num_types(); ++ty) {
    batch.group[ty].assign(static_cast<std::size_t>(g.node_counts[ty]), 0);
    if (g.features[ty].cols() == 0) continue;
    for (NodeId v = 0; v < g.node_counts[ty]; ++v) batch.centers[ty].push_back(v);
  }
  return batch;
}

/// Noise estimates for every node of a graph whose features are all at
/// timestep t.
inline std::vector<Matrix> predict_all(const HeteroGraph& g_t, const UndirectedView& view, int t,
                                       const DenoiserParams& params, const DiffusionConfig& cfg,
                                       std::uint64_t seed, ReverseMode mode,
                                       const std::vector<NodeRef>* order = nullptr) {
  const std::size_t types = g_t.num_types();
  std::vector<Matrix> eps(types);
  if (mode == ReverseMode::kFullGraph && !cfg.neighbor_cap) {
    BatchGraph batch = full_graph_batch(g_t, t);
    eps = predict(params, batch);
    for (std::size_t ty = 0; ty < types; ++ty) {
      if (g_t.features[ty].cols() == 0) eps[ty] = Matrix(g_t.node_counts[ty], 0);
    }
    return eps;
  }
  for (std::size_t ty = 0; ty < types; ++ty) eps[ty] = Matrix::Zero(g_t.node_counts[ty], g_t.features[ty].cols());
  std::vector<NodeRef> nodes;
  if (order) {
    nodes = *order;
  } else {
    for (std::size_t ty = 0; ty < types; ++ty) {
      for (NodeId v = 0; v < g_t.node_counts[ty]; ++v) nodes.push_back({ty, v});
    }
  }
  for (const NodeRef& node : nodes) {
    if (g_t.features[node.type].cols() == 0) continue;
    Rng rng(mix_seed(seed, {detail::kReverseSubgraphStream, static_cast<std::uint64_t>(t), node.type,
                            static_cast<std::uint64_t>(node.id)}));
    const Subgraph sub = k_hop_subgraph(g_t, view, node, cfg.subgraph(), &rng);
    eps[node.type].row(node.id) = predict_noise(params, sub, t).transpose();
  }
  return eps;
}

/// x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t) + sigma_t z,
/// with z = 0 at t = 1. Every node reads only timestep-t features.
inline std::vector<Matrix> reverse_step(const HeteroGraph& g_t, const UndirectedView& view, int t,
                                        const DenoiserParams& params, const DiffusionConfig& cfg,
                                        const NoiseSchedule& sched, std::uint64_t seed,
                                        ReverseMode mode = ReverseMode::kFullGraph,
                                        const std::vector<NodeRef>* order = nullptr) {
  if (t < 1 || t > sched.steps) throw ValidationError("timestep out of range");
  const auto eps = predict_all(g_t, view, t, params, cfg, seed, mode, order);
  const auto ts = static_cast<std::size_t>(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha[ts]);
  const double coef = sched.beta[ts] / std::sqrt(1.0 - sched.alpha_bar[ts]);
  std::vector<Matrix> next(g_t.num_types());
  for (std::size_t ty = 0; ty < g_t.num_types(); ++ty) {
    const Matrix& x = g_t.features[ty];
    next[ty] = inv_sqrt_alpha * (x - coef * eps[ty]);
    if (t > 1) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        next[ty].row(i) += sched.sigma[ts] *
                           node_noise(seed, detail::kReverseNoiseStream, t, NodeRef{ty, i}, x.cols());
      }
    }
    for (Eigen::Index i = 0; i < next[ty].size(); ++i) {
      if (!std::isfinite(next[ty].data()[i])) {
        throw NumericError("non-finite value while denoising type '" + g_t.node_types[ty] +
                           "' at t=" + std::to_string(t));
      }
    }
  }
  return next;
}

/// Initial x_T ~ N(0, I) for every node, keyed per node.
inline std::vector<Matrix> initial_noise(const HeteroGraph& structure, const std::vector<std::size_t>& dims,
                                         int steps, std::uint64_t seed) {
  std::vector<Matrix> x(structure.num_types());
  for (std::size_t ty = 0; ty < structure.num_types(); ++ty) {
    const auto d = static_cast<Eigen::Index>(dims[ty]);
    x[ty].resize(structure.node_counts[ty], d);
    for (NodeId v = 0; v < structure.node_counts[ty]; ++v) {
      x[ty].row(v) = node_noise(seed, detail::kInitNoiseStream, steps + 1, NodeRef{ty, v}, d);
    }
  }
  return x;
}

/// Runs the reverse process from pure noise on a fixed structure and
/// returns the structure with features X^(0).
inline HeteroGraph sample_features(const HeteroGraph& structure, const DenoiserParams& params,
                                   const DiffusionConfig& cfg, const NoiseSchedule& sched,
                                   std::uint64_t seed, ReverseMode mode = ReverseMode::kFullGraph,
                                   const std::function<void(int)>& on_step = {}) {
  check_graph(structure, true);
  HeteroGraph g = structure;
  g.features = initial_noise(structure, params.dims, sched.steps, seed);
  const UndirectedView view(g);
  for (int t = sched.steps; t >= 1; --t) {
    g.features = reverse_step(g, view, t, params, cfg, sched, seed, mode);
    if (on_step) on_step(t);
  }
  return g;
}

}  // namespace relsynth
