// nn.hpp -- GCN backbone with per-level heads, masked losses, Adam, and the
// plateau learning-rate schedule. Parameters are named dense tensors with an
// exact flatten/unflatten round trip for the optimizer and the CL
// regularizers.

#pragma once

#include "grapal/autodiff.hpp"
#include "grapal/common.hpp"
#include "grapal/graph.hpp"

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace grapal {

struct ParameterSet {
  std::vector<std::pair<std::string, Mat>> tensors;  // fixed order

  Mat& at(const std::string& name) {
    for (auto& [n, t] : tensors)
      if (n == name) return t;
    throw ShapeError("no parameter named " + name);
  }
  const Mat& at(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw ShapeError("no parameter named " + name);
  }

  i64 total_size() const {
    i64 s = 0;
    for (const auto& [n, t] : tensors) s += t.size();
    return s;
  }

  Vec flatten() const {
    Vec out(total_size());
    i64 at = 0;
    for (const auto& [n, t] : tensors) {
      out.segment(at, t.size()) = Eigen::Map<const Vec>(t.data(), t.size());
      at += t.size();
    }
    return out;
  }

  void unflatten(const Eigen::Ref<const Vec>& flat) {
    if (flat.size() != total_size()) throw ShapeError("unflatten: size mismatch");
    i64 at = 0;
    for (auto& [n, t] : tensors) {
      Eigen::Map<Vec>(t.data(), t.size()) = flat.segment(at, t.size());
      at += t.size();
    }
  }
};

inline Mat glorot_uniform(i64 rows, i64 cols, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Mat m(rows, cols);
  for (i64 r = 0; r < rows; ++r)
    for (i64 c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

enum class HeadKind { node_class, pair_score, pair_class, graph_class };

struct GcnArch {
  i64 in_dim = 0;
  i64 hidden = 256;
  i64 layers = 3;
  HeadKind head = HeadKind::node_class;
  i64 num_classes = 2;  // unused for pair_score
};

inline ParameterSet init_params(const GcnArch& a, Rng& rng) {
  ParameterSet p;
  i64 d = a.in_dim;
  for (i64 l = 0; l < a.layers; ++l) {
    p.tensors.emplace_back("gcn." + std::to_string(l) + ".weight",
                           glorot_uniform(d, a.hidden, rng));
    d = a.hidden;
  }
  const i64 h = a.hidden;
  auto linear = [&](const std::string& name, i64 in, i64 out) {
    p.tensors.emplace_back(name + ".weight", glorot_uniform(in, out, rng));
    p.tensors.emplace_back(name + ".bias", Mat::Zero(1, out));
  };
  switch (a.head) {
    case HeadKind::node_class:
      linear("head", h, a.num_classes);
      break;
    case HeadKind::pair_score:
      linear("pair.0", 2 * h, h);
      linear("pair.1", h, h);
      linear("pair.2", h, 1);
      break;
    case HeadKind::pair_class:
      linear("pair.0", 2 * h, h);
      linear("pair.1", h, h);
      linear("pair.2", h, h);
      linear("head", h, a.num_classes);
      break;
    case HeadKind::graph_class:
      linear("mlp.0", h, h);
      linear("mlp.1", h, h);
      linear("mlp.2", h, a.num_classes);
      break;
  }
  return p;
}

// Parameter leaves registered on a tape for one forward pass.
struct TapedParams {
  std::vector<std::pair<std::string, Tape::ValueId>> ids;

  Tape::ValueId id(const std::string& name) const {
    for (const auto& [n, v] : ids)
      if (n == name) return v;
    throw ShapeError("no taped parameter named " + name);
  }
};

inline TapedParams register_params(Tape& tape, const ParameterSet& p) {
  TapedParams tp;
  for (const auto& [name, t] : p.tensors) tp.ids.emplace_back(name, tape.param(t));
  return tp;
}

// Flat gradient in ParameterSet order; call after tape.backward().
inline Vec collect_grads(const Tape& tape, const TapedParams& tp, const ParameterSet& p) {
  Vec out(p.total_size());
  i64 at = 0;
  for (size_t i = 0; i < p.tensors.size(); ++i) {
    Mat g = tape.grad(tp.ids[i].second);
    out.segment(at, g.size()) = Eigen::Map<const Vec>(g.data(), g.size());
    at += g.size();
  }
  return out;
}

// H^{l+1} = ReLU(A H^l W^l), final layer linear; dropout masks (one per
// layer, already scaled by 1/keep) are applied to each layer's input.
inline Tape::ValueId backbone_forward(Tape& tape, const TapedParams& tp, const Csr& adj,
                                      const Mat& features, i64 layers,
                                      const std::vector<Mat>* dropout_masks = nullptr) {
  if (adj.rows != adj.cols || adj.rows != features.rows())
    throw ShapeError("backbone: adjacency/features disagree");
  Tape::ValueId h = tape.constant(features);
  for (i64 l = 0; l < layers; ++l) {
    if (dropout_masks) h = tape.mul_mask(h, (*dropout_masks)[static_cast<size_t>(l)]);
    h = tape.spmm(adj, h);
    h = tape.matmul(h, tp.id("gcn." + std::to_string(l) + ".weight"));
    if (l + 1 < layers) h = tape.relu(h);
  }
  return h;
}

inline Tape::ValueId head_nc(Tape& tape, const TapedParams& tp, Tape::ValueId embeddings) {
  return tape.add_rowvec(tape.matmul(embeddings, tp.id("head.weight")), tp.id("head.bias"));
}

namespace detail {
inline Tape::ValueId mlp3(Tape& tape, const TapedParams& tp, const std::string& prefix,
                          Tape::ValueId x) {
  for (int l = 0; l < 3; ++l) {
    std::string base = prefix + "." + std::to_string(l);
    x = tape.add_rowvec(tape.matmul(x, tp.id(base + ".weight")), tp.id(base + ".bias"));
    if (l < 2) x = tape.relu(x);
  }
  return x;
}
}  // namespace detail

// Concatenated pair embeddings through the 3-layer MLP. Output is n x 1 for
// the score head (LP) and n x hidden for the classification head (LC).
inline Tape::ValueId head_pair(Tape& tape, const TapedParams& tp, Tape::ValueId emb_u,
                               Tape::ValueId emb_v) {
  if (tape.value(emb_u).cols() != tape.value(emb_v).cols())
    throw ShapeError("head_pair: embedding widths differ");
  return detail::mlp3(tape, tp, "pair", tape.concat_cols(emb_u, emb_v));
}

// Mean-pool node embeddings per graph, then the 3-layer MLP.
inline Tape::ValueId head_gc(Tape& tape, const TapedParams& tp, Tape::ValueId embeddings,
                             std::span<const i64> membership, i64 num_graphs) {
  return detail::mlp3(tape, tp, "mlp", tape.segment_mean(embeddings, membership, num_graphs));
}

inline Tape::ValueId cross_entropy(Tape& tape, Tape::ValueId logits,
                                   std::span<const int> targets, ClassMask mask = {}) {
  return tape.masked_cross_entropy(logits, targets, std::move(mask));
}

// GradientSet for the swept loss, flattened in ParameterSet order.
inline Vec grad(Tape& tape, Tape::ValueId loss, const TapedParams& tp, const ParameterSet& p) {
  tape.backward(loss);
  return collect_grads(tape, tp, p);
}

// ---- Adam -------------------------------------------------------------

struct AdamState {
  Vec m, v;
  i64 t = 0;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState fresh(i64 size, double lr, double b1 = 0.9, double b2 = 0.999,
                         double eps = 1e-8) {
    AdamState s;
    s.m = Vec::Zero(size);
    s.v = Vec::Zero(size);
    s.lr = lr;
    s.beta1 = b1;
    s.beta2 = b2;
    s.eps = eps;
    return s;
  }
};

inline void adam_step(AdamState& s, Vec& params, const Vec& grads) {
  if (params.size() != grads.size() || params.size() != s.m.size())
    throw ShapeError("adam: shape mismatch");
  s.t += 1;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseProduct(grads);
  double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  params -= (s.lr / c1) * s.m.cwiseQuotient(((s.v / c2).cwiseSqrt().array() + s.eps).matrix());
}

// ---- plateau schedule ---------------------------------------------------

enum class PlateauAction { proceed, decay_lr, stop };

// Decays lr by 10x after `patience` epochs without strict improvement; stops
// once the decay budget implied by stop_factor is spent (stop_decays =
// round(log10(stop_factor)), integer-exact).
struct PlateauState {
  i64 patience = 20;
  i64 stop_decays = 3;
  i64 bad_epochs = 0;
  i64 decays_done = 0;
  double best = -std::numeric_limits<double>::infinity();

  static PlateauState fresh(i64 patience, double stop_factor) {
    PlateauState s;
    s.patience = patience;
    s.stop_decays = static_cast<i64>(std::llround(std::log10(stop_factor)));
    return s;
  }
};

inline PlateauAction plateau_schedule(PlateauState& s, double val_metric) {
  if (val_metric > s.best) {
    s.best = val_metric;
    s.bad_epochs = 0;
    return PlateauAction::proceed;
  }
  if (++s.bad_epochs < s.patience) return PlateauAction::proceed;
  s.bad_epochs = 0;
  if (s.decays_done >= s.stop_decays) return PlateauAction::stop;
  ++s.decays_done;
  return PlateauAction::decay_lr;
}

}  // namespace grapal
