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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relsynth/error.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/random.hpp"

namespace relsynth {

/// Shape of the noise predictor.
struct DenoiserConfig {
  int hops = 1;  // message-passing layers; 0 disables message passing
  int hidden = 128;
  std::vector<int> mlp_layers{512, 1024, 1024, 1024, 1024, 512};

  bool operator==(const DenoiserConfig&) const = default;
};

/// A matrix (rows x cols, row-major) or vector (cols == 1) inside the flat
/// parameter array.
struct Block {
  std::size_t offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

// Flat parameter and gradient storage. The aligned allocator pins the base
// address to Eigen's vector alignment, so the vectorized kernels working on
// maps into it always split their work the same way and results do not
// depend on where the heap happened to put the buffer.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Learnable parameters of the heterogeneous message-passing denoiser,
/// stored flat so that optimizers and serialization can treat them as one
/// vector. Gradients use the same layout.
struct DenoiserParams {
  DenoiserConfig config;
  std::vector<std::size_t> dims;      // attribute count per node type
  std::vector<EdgeType> edge_types;   // relations are derived from these
  ParamVector values;

  // Sinusoidal timestep features -> Linear -> SiLU -> Linear.
  Block time_w1, time_b1, time_w2, time_b2;
  std::vector<Block> input_w, input_b;                 // [type]
  std::vector<std::vector<Block>> message_w;           // [layer][relation]
  std::vector<std::vector<Block>> self_w, self_b;      // [layer][type]
  std::vector<std::vector<Block>> head_w, head_b;      // [type][layer]

  std::size_t num_types() const { return dims.size(); }
  std::size_t num_relations() const { return 2 * edge_types.size(); }
  std::size_t size() const { return values.size(); }

  MatrixMap mat(ParamVector& data, const Block& b) const {
    return MatrixMap(data.data() + b.offset, b.rows, b.cols);
  }
  ConstMatrixMap mat(const ParamVector& data, const Block& b) const {
    return ConstMatrixMap(data.data() + b.offset, b.rows, b.cols);
  }
  VectorMap vec(ParamVector& data, const Block& b) const {
    return VectorMap(data.data() + b.offset, b.rows);
  }
  ConstVectorMap vec(const ParamVector& data, const Block& b) const {
    return ConstVectorMap(data.data() + b.offset, b.rows);
  }
};

namespace detail {

struct LayoutBuilder {
  std::size_t next = 0;
  std::vector<std::pair<Block, std::size_t>> fan_in;  // block, fan-in for init

  Block matrix(Eigen::Index rows, Eigen::Index cols) {
    Block b{next, rows, cols};
    next += b.size();
    fan_in.emplace_back(b, static_cast<std::size_t>(cols));
    return b;
  }
  Block vector(Eigen::Index n, std::size_t fan) {
    Block b{next, n, 1};
    next += b.size();
    fan_in.emplace_back(b, fan);
    return b;
  }
};

}  // namespace detail

/// Lays out and initializes the parameters. Every block is drawn from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) out of one seeded stream.
inline DenoiserParams init_params(const std::vector<std::size_t>& dims,
                                  const std::vector<EdgeType>& edge_types,
                                  const DenoiserConfig& config, std::uint64_t seed) {
  if (config.hops < 0) throw ValidationError("hop count must be non-negative");
  if (config.hidden < 2) throw ValidationError("hidden width must be at least 2");
  for (int width : config.mlp_layers) {
    if (width < 1) throw ValidationError("MLP layer widths must be positive");
  }
  DenoiserParams p;
  p.config = config;
  p.dims = dims;
  p.edge_types = edge_types;
  const Eigen::Index h = config.hidden;
  detail::LayoutBuilder layout;
  p.time_w1 = layout.matrix(h, h);
  p.time_b1 = layout.vector(h, static_cast<std::size_t>(h));
  p.time_w2 = layout.matrix(h, h);
  p.time_b2 = layout.vector(h, static_cast<std::size_t>(h));
  for (std::size_t d : dims) {
    p.input_w.push_back(layout.matrix(h, static_cast<Eigen::Index>(d)));
    p.input_b.push_back(layout.vector(h, d));
  }
  const std::size_t relations = 2 * edge_types.size();
  p.message_w.resize(static_cast<std::size_t>(config.hops));
  p.self_w.resize(static_cast<std::size_t>(config.hops));
  p.self_b.resize(static_cast<std::size_t>(config.hops));
  for (int l = 0; l < config.hops; ++l) {
    for (std::size_t r = 0; r < relations; ++r) p.message_w[l].push_back(layout.matrix(h, h));
    for (std::size_t t = 0; t < dims.size(); ++t) {
      p.self_w[l].push_back(layout.matrix(h, h));
      p.self_b[l].push_back(layout.vector(h, static_cast<std::size_t>(h)));
    }
  }
  p.head_w.resize(dims.size());
  p.head_b.resize(dims.size());
  for (std::size_t t = 0; t < dims.size(); ++t) {
    if (dims[t] == 0) continue;
    Eigen::Index in = h;
    std::vector<Eigen::Index> widths(config.mlp_layers.begin(), config.mlp_layers.end());
    widths.push_back(static_cast<Eigen::Index>(dims[t]));
    for (Eigen::Index out : widths) {
      p.head_w[t].push_back(layout.matrix(out, in));
      p.head_b[t].push_back(layout.vector(out, static_cast<std::size_t>(in)));
      in = out;
    }
  }
  p.values.assign(layout.next, 0.0);
  Rng rng(seed);
  for (const auto& [block, fan] : layout.fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan, 1)));
    for (std::size_t i = 0; i < block.size(); ++i) {
      p.values[block.offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  return p;
}

/// Input of one denoiser evaluation: a graph whose features are the noisy
/// x_t, the timestep of each connected group of nodes, and the nodes whose
/// noise should be predicted. Training packs many subgraphs (one group
/// each) into a single disjoint union.
struct BatchGraph {
  HeteroGraph graph;
  std::vector<double> times;                    // [group]
  std::vector<std::vector<std::int32_t>> group; // [type][node]
  std::vector<std::vector<NodeId>> centers;     // [type]
};

/// Intermediate values kept for backpropagation.
struct ForwardCache {
  Matrix time_features, time_pre, time_act;
  std::vector<std::vector<Matrix>> hidden;       // [layer 0..L][type]
  std::vector<std::vector<Matrix>> pre;          // [layer][type]
  std::vector<std::vector<Matrix>> aggregated;   // [layer][relation]
  std::vector<std::vector<Matrix>> head_act;     // [type][layer 0..M] inputs to each head layer
  std::vector<std::vector<Matrix>> head_pre;     // [type][layer]
};

/// Sinusoidal embedding [cos(t f_0..f_{h/2-1}), sin(...)] with
/// f_i = exp(-ln(10000) i / (h/2)); odd widths get a trailing zero.
inline Matrix timestep_features(const std::vector<double>& times, int width) {
  const int half = width / 2;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(times.size()), width);
  for (std::size_t g = 0; g < times.size(); ++g) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
      const double arg = times[g] * freq;
      out(static_cast<Eigen::Index>(g), i) = std::cos(arg);
      out(static_cast<Eigen::Index>(g), half + i) = std::sin(arg);
    }
  }
  return out;
}

namespace detail {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

inline void check_batch(const DenoiserParams& p, const BatchGraph& batch) {
  const auto& g = batch.graph;
  if (g.num_types() != p.num_types() || g.edge_types != p.edge_types) {
    throw ValidationError("denoiser input has unknown node or edge types");
  }
  if (!g.has_features() || batch.group.size() != p.num_types() || batch.centers.size() != p.num_types()) {
    throw ValidationError("denoiser input is missing features, groups or centers");
  }
  for (std::size_t t = 0; t < p.num_types(); ++t) {
    if (static_cast<std::size_t>(g.features[t].cols()) != p.dims[t] ||
        g.features[t].rows() != g.node_counts[t] ||
        static_cast<NodeId>(batch.group[t].size()) != g.node_counts[t]) {
      throw ValidationError("denoiser input features of type '" + g.node_types[t] + "' have the wrong shape");
    }
    if (!batch.centers[t].empty() && p.dims[t] == 0) {
      throw ValidationError("cannot predict noise for attribute-free type '" + g.node_types[t] + "'");
    }
  }
}

}  // namespace detail

/// Evaluates the noise predictor. Returns, per node type, one row of
/// predicted noise per requested center.
///
/// h0 = W_in x + b_in + temb(t); each layer computes, per node type,
/// h' = ReLU(W_self h + b + sum over relations r into the type of
/// W_r * (sum of neighbour h)); the per-type MLP head maps the final h of
/// each center to its noise estimate. Neighbour sums over an empty set are
/// zero.
inline std::vector<Matrix> predict(const DenoiserParams& p, const BatchGraph& batch,
                                   ForwardCache* cache = nullptr) {
  detail::check_batch(p, batch);
  const auto& g = batch.graph;
  const auto& v = p.values;
  const Eigen::Index h = p.config.hidden;
  const std::size_t types = p.num_types();
  const auto relations = relations_of(g.edge_types);
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;

  c.time_features = timestep_features(batch.times, p.config.hidden);
  c.time_pre = c.time_features * p.mat(v, p.time_w1).transpose();
  c.time_pre.rowwise() += p.vec(v, p.time_b1);
  c.time_act = c.time_pre.unaryExpr(&detail::silu);
  Matrix time_embedding = c.time_act * p.mat(v, p.time_w2).transpose();
  time_embedding.rowwise() += p.vec(v, p.time_b2);

  const auto layers = static_cast<std::size_t>(p.config.hops);
  c.hidden.assign(layers + 1, std::vector<Matrix>(types));
  c.pre.assign(layers, std::vector<Matrix>(types));
  c.aggregated.assign(layers, std::vector<Matrix>(relations.size()));
  for (std::size_t t = 0; t < types; ++t) {
    Matrix& h0 = c.hidden[0][t];
    h0.noalias() = g.features[t] * p.mat(v, p.input_w[t]).transpose();
    h0.rowwise() += p.vec(v, p.input_b[t]);
    for (Eigen::Index i = 0; i < h0.rows(); ++i) h0.row(i) += time_embedding.row(batch.group[t][i]);
  }

  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t t = 0; t < types; ++t) {
      Matrix& z = c.pre[l][t];
      z.noalias() = c.hidden[l][t] * p.mat(v, p.self_w[l][t]).transpose();
      z.rowwise() += p.vec(v, p.self_b[l][t]);
    }
    for (std::size_t r = 0; r < relations.size(); ++r) {
      const auto& rel = relations[r];
      const Matrix& src = c.hidden[l][rel.source];
      Matrix& agg = c.aggregated[l][r];
      agg = Matrix::Zero(g.node_counts[rel.target], h);
      for (const auto& [child, parent] : g.edges[rel.edge_type]) {
        const NodeId from = rel.reversed ? child : parent;
        const NodeId to = rel.reversed ? parent : child;
        agg.row(to) += src.row(from);
      }
      c.pre[l][rel.target].noalias() += agg * p.mat(v, p.message_w[l][r]).transpose();
    }
    for (std::size_t t = 0; t < types; ++t) c.hidden[l + 1][t] = c.pre[l][t].cwiseMax(0.0);
  }

  std::vector<Matrix> out(types);
  c.head_act.assign(types, {});
  c.head_pre.assign(types, {});
  for (std::size_t t = 0; t < types; ++t) {
    const auto& centers = batch.centers[t];
    out[t].resize(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(p.dims[t]));
    if (centers.empty()) continue;
    const Matrix& last = c.hidden[layers][t];
    Matrix act(static_cast<Eigen::Index>(centers.size()), h);
    for (std::size_t i = 0; i < centers.size(); ++i) act.row(static_cast<Eigen::Index>(i)) = last.row(centers[i]);
    const std::size_t depth = p.head_w[t].size();
    c.head_act[t].reserve(depth + 1);
    c.head_pre[t].reserve(depth);
    c.head_act[t].push_back(std::move(act));
    for (std::size_t j = 0; j < depth; ++j) {
      Matrix z = c.head_act[t][j] * p.mat(v, p.head_w[t][j]).transpose();
      z.rowwise() += p.vec(v, p.head_b[t][j]);
      if (j + 1 < depth) c.head_act[t].push_back(z.cwiseMax(0.0));
      c.head_pre[t].push_back(std::move(z));
    }
    out[t] = c.head_pre[t].back();
  }
  return out;
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) per
/// type (same shapes as predict's result). `cache` must come from the
/// matching predict call.
inline void backpropagate(const DenoiserParams& p, const BatchGraph& batch, const ForwardCache& c,
                          const std::vector<Matrix>& d_out, ParamVector& grad) {
  if (grad.size() != p.size()) grad.assign(p.size(), 0.0);
  const auto& g = batch.graph;
  const auto& v = p.values;
  const Eigen::Index h = p.config.hidden;
  const std::size_t types = p.num_types();
  const auto relations = relations_of(g.edge_types);
  const auto layers = static_cast<std::size_t>(p.config.hops);

  std::vector<Matrix> d_hidden(types);
  for (std::size_t t = 0; t < types; ++t) d_hidden[t] = Matrix::Zero(g.node_counts[t], h);

  for (std::size_t t = 0; t < types; ++t) {
    const auto& centers = batch.centers[t];
    if (centers.empty()) continue;
    Matrix d = d_out[t];
    for (std::size_t j = p.head_w[t].size(); j-- > 0;) {
      if (j + 1 < p.head_w[t].size()) {
        d = d.cwiseProduct((c.head_pre[t][j].array() > 0.0).cast<double>().matrix());
      }
      p.mat(grad, p.head_w[t][j]).noalias() += d.transpose() * c.head_act[t][j];
      p.vec(grad, p.head_b[t][j]) += d.colwise().sum();
      d = (d * p.mat(v, p.head_w[t][j])).eval();
    }
    for (std::size_t i = 0; i < centers.size(); ++i) d_hidden[t].row(centers[i]) += d.row(static_cast<Eigen::Index>(i));
  }

  for (std::size_t l = layers; l-- > 0;) {
    std::vector<Matrix> d_pre(types);
    std::vector<Matrix> d_prev(types);
    for (std::size_t t = 0; t < types; ++t) {
      d_pre[t] = d_hidden[t].cwiseProduct((c.pre[l][t].array() > 0.0).cast<double>().matrix());
      p.mat(grad, p.self_w[l][t]).noalias() += d_pre[t].transpose() * c.hidden[l][t];
      p.vec(grad, p.self_b[l][t]) += d_pre[t].colwise().sum();
      d_prev[t].noalias() = d_pre[t] * p.mat(v, p.self_w[l][t]);
    }
    for (std::size_t r = 0; r < relations.size(); ++r) {
      const auto& rel = relations[r];
      const Matrix& dz = d_pre[rel.target];
      p.mat(grad, p.message_w[l][r]).noalias() += dz.transpose() * c.aggregated[l][r];
      const Matrix d_agg = dz * p.mat(v, p.message_w[l][r]);
      for (const auto& [child, parent] : g.edges[rel.edge_type]) {
        const NodeId from = rel.reversed ? child : parent;
        const NodeId to = rel.reversed ? parent : child;
        d_prev[rel.source].row(from) += d_agg.row(to);
      }
    }
    d_hidden = std::move(d_prev);
  }

  Matrix d_time = Matrix::Zero(static_cast<Eigen::Index>(batch.times.size()), h);
  for (std::size_t t = 0; t < types; ++t) {
    const Matrix& d = d_hidden[t];
    p.mat(grad, p.input_w[t]).noalias() += d.transpose() * g.features[t];
    p.vec(grad, p.input_b[t]) += d.colwise().sum();
    for (Eigen::Index i = 0; i < d.rows(); ++i) d_time.row(batch.group[t][i]) += d.row(i);
  }
  p.mat(grad, p.time_w2).noalias() += d_time.transpose() * c.time_act;
  p.vec(grad, p.time_b2) += d_time.colwise().sum();
  const Matrix d_act = d_time * p.mat(v, p.time_w2);
  const Matrix d_time_pre = d_act.cwiseProduct(c.time_pre.unaryExpr(&detail::silu_grad));
  p.mat(grad, p.time_w1).noalias() += d_time_pre.transpose() * c.time_features;
  p.vec(grad, p.time_b1) += d_time_pre.colwise().sum();
}

/// Wraps a single subgraph (all nodes at timestep t) as a batch whose only
/// center is the subgraph center.
inline BatchGraph single_batch(const Subgraph& sub, int t) {
  BatchGraph batch;
  batch.graph = sub.graph;
  batch.times = {static_cast<double>(t)};
  batch.group.resize(sub.graph.num_types());
  batch.centers.resize(sub.graph.num_types());
  for (std::size_t i = 0; i < sub.graph.num_types(); ++i) {
    batch.group[i].assign(static_cast<std::size_t>(sub.graph.node_counts[i]), 0);
  }
  batch.centers[sub.center.type].push_back(sub.center.id);
  return batch;
}

/// Noise estimate for the center of a noisy subgraph.
inline Vector predict_noise(const DenoiserParams& p, const Subgraph& sub, int t) {
  const auto out = predict(p, single_batch(sub, t));
  return out[sub.center.type].row(0).transpose();
}

struct LossAndGradient {
  double loss = 0.0;
  ParamVector gradient;
};

/// ||target - predict_noise||^2 and its exact gradient.
inline LossAndGradient noise_gradients(const DenoiserParams& p, const Subgraph& sub, int t,
                                       const Vector& target) {
  const BatchGraph batch = single_batch(sub, t);
  ForwardCache cache;
  const auto out = predict(p, batch, &cache);
  const std::size_t type = sub.center.type;
  if (static_cast<std::size_t>(target.size()) != p.dims[type]) {
    throw ValidationError("target noise has the wrong dimension");
  }
  const Eigen::RowVectorXd residual = out[type].row(0) - target.transpose();
  LossAndGradient result;
  result.loss = residual.squaredNorm();
  std::vector<Matrix> d_out(p.num_types());
  for (std::size_t i = 0; i < p.num_types(); ++i) {
    d_out[i] = Matrix::Zero(out[i].rows(), out[i].cols());
  }
  d_out[type].row(0) = 2.0 * residual;
  result.gradient.assign(p.size(), 0.0);
  backpropagate(p, batch, cache, d_out, result.gradient);
  for (double gval : result.gradient) {
    if (!std::isfinite(gval)) throw NumericError("non-finite denoiser gradient");
  }
  return result;
}

}  // namespace relsynth
