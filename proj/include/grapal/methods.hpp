// methods.hpp -- reference continual-learning methods on top of the event
// hooks: LwF (distillation), EWC (Fisher-weighted anchoring), MAS
// (sensitivity-weighted anchoring), and GEM (episodic memory with gradient
// projection). Each method is nothing but a set of hook closures over the
// shared training-state dictionary.

#pragma once

#include "grapal/trainer.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace grapal {

// ---- LwF -------------------------------------------------------------

// lambda * T^2 * KL(softmax(old/T) || softmax(new/T)), averaged over the
// current task's train instances and restricted to previously seen classes.
inline Tape::ValueId lwf_loss(Tape& tape, Tape::ValueId new_logits, Mat old_logits,
                              double temperature, double lambda, ClassMask seen_mask = {}) {
  Tape::ValueId kl = tape.kl_to_reference(new_logits, std::move(old_logits), temperature,
                                          std::move(seen_mask));
  return tape.scale(kl, lambda * temperature * temperature);
}

// ---- quadratic anchoring (EWC / MAS) ----------------------------------

struct Anchor {
  Vec theta;   // parameters at the end of a past task
  Vec weight;  // per-parameter importance (Fisher diagonal or MAS Omega)
};

// (lambda/2) * sum over anchors of sum_j w_j (theta_j - theta*_j)^2
inline double quadratic_penalty(const Vec& params, const std::vector<Anchor>& anchors,
                                double lambda) {
  double total = 0;
  for (const Anchor& a : anchors) {
    if (a.theta.size() != params.size() || a.weight.size() != params.size())
      throw ShapeError("quadratic_penalty: anchor shape mismatch");
    total += a.weight.dot((params - a.theta).cwiseAbs2());
  }
  return 0.5 * lambda * total;
}

inline Vec quadratic_penalty_grad(const Vec& params, const std::vector<Anchor>& anchors,
                                  double lambda) {
  Vec g = Vec::Zero(params.size());
  for (const Anchor& a : anchors) {
    if (a.theta.size() != params.size() || a.weight.size() != params.size())
      throw ShapeError("quadratic_penalty: anchor shape mismatch");
    g += a.weight.cwiseProduct(params - a.theta);
  }
  return lambda * g;
}

// F_j = mean over train instances of (d log-likelihood / d theta_j)^2.
inline Vec estimate_fisher_diag(const TaskBinding& binding, const ParameterSet& params) {
  Vec f = Vec::Zero(params.total_size());
  const i64 n = binding.train_size();
  for (i64 k = 0; k < n; ++k) {
    Vec g = binding.batch_grad(params, binding.train_instance(k));
    f += g.cwiseAbs2();
  }
  return f / static_cast<double>(n);
}

// Omega_j = mean over instances of | d ||f(x)||^2 / d theta_j |.
inline Vec mas_importance(const TaskBinding& binding, const ParameterSet& params) {
  Vec o = Vec::Zero(params.total_size());
  const i64 n = binding.train_size();
  for (i64 k = 0; k < n; ++k) {
    Vec g = binding.output_sqnorm_grad(params, binding.train_instance(k));
    o += g.cwiseAbs();
  }
  return o / static_cast<double>(n);
}

// ---- GEM ----------------------------------------------------------------

// Uniform sample without replacement from the task's train set, size
// min(capacity, |train|); deterministic given the rng state.
inline MemoryBatch gem_sample_memory(const TaskBinding& binding, i64 capacity, Rng& rng) {
  if (capacity <= 0) throw Error("gem memory capacity must be positive");
  const i64 n = binding.train_size();
  std::vector<i64> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<size_t>(std::min(capacity, n)));
  std::sort(idx.begin(), idx.end());
  MemoryBatch out;
  bool first = true;
  for (i64 k : idx) {
    MemoryBatch one = binding.train_instance(k);
    if (first) {
      out = one;
      first = false;
      continue;
    }
    out.payloads.push_back(one.payloads[0]);
    out.labels.push_back(one.labels[0]);
    if (!one.graphs.empty()) out.graphs.push_back(one.graphs[0]);
  }
  return out;
}

// Projects g onto { z : z . g_k >= 0 for all k } when any constraint is
// violated, via the dual QP over the past tasks:
//   min_v 0.5 v^T (G G^T) v + (G g)^T v,  v >= 0,  z = G^T v + g,
// solved by exact cyclic coordinate descent; the margin is added to the dual
// solution before reconstructing z.
inline Vec gem_project(const Vec& g, const std::vector<Vec>& memories, double margin,
                       double tol = 1e-8) {
  if (memories.empty()) return g;
  const i64 t = static_cast<i64>(memories.size());
  for (const Vec& m : memories)
    if (m.size() != g.size()) throw ShapeError("gem_project: gradient dimension mismatch");

  bool violated = false;
  Vec q(t);
  for (i64 k = 0; k < t; ++k) {
    q[k] = memories[static_cast<size_t>(k)].dot(g);
    if (q[k] < 0) violated = true;
  }
  if (!violated) return g;

  Mat p(t, t);
  for (i64 k = 0; k < t; ++k)
    for (i64 l = k; l < t; ++l)
      p(k, l) = p(l, k) = memories[static_cast<size_t>(k)].dot(memories[static_cast<size_t>(l)]);

  Vec v = Vec::Zero(t);
  for (int it = 0; it < 100000; ++it) {
    double max_change = 0;
    for (i64 k = 0; k < t; ++k) {
      if (p(k, k) <= 0) continue;  // zero memory gradient: constraint is vacuous
      double step = (p.row(k).dot(v) + q[k]) / p(k, k);
      double nv = std::max(0.0, v[k] - step);
      max_change = std::max(max_change, std::abs(nv - v[k]));
      v[k] = nv;
    }
    if (max_change < tol) break;
  }
  if (margin > 0) v.array() += margin;

  Vec z = g;
  for (i64 k = 0; k < t; ++k) z += v[k] * memories[static_cast<size_t>(k)];
  return z;
}

// ---- hook factories ---------------------------------------------------

struct MethodConfig {
  std::string name = "bare";  // bare | lwf | ewc | mas | gem
  double lambda = 1.0;        // lwf/mas default 1.0; ewc commonly 100
  double temperature = 2.0;   // lwf
  i64 memory = 12;            // gem capacity per task
  double margin = 0.5;        // gem dual margin
};

inline EventHooks lwf_hooks(double lambda, double temperature) {
  EventHooks h;
  h.name = "lwf";
  h.process_train_iteration = [lambda, temperature](TrainingStateDict& state, TrainContext& ctx) {
    auto fwd = ctx.forward();
    ParameterSet* old_params = state.find<ParameterSet>("lwf.old_params");
    if (old_params && lambda > 0) {
      // The old model is fixed for the whole task; cache its train outputs.
      i64* cached_task = state.find<i64>("lwf.cached_task");
      if (!cached_task || *cached_task != ctx.task_index) {
        state.put("lwf.cached_outputs", ctx.binding->train_outputs(*old_params));
        state.put("lwf.cached_task", ctx.task_index);
      }
      const Mat& old_out = state.get<Mat>("lwf.cached_outputs");
      Tape::ValueId term = lwf_loss(fwd.tape, fwd.train_out, old_out, temperature, lambda,
                                    ctx.seen_before);
      fwd.loss = fwd.tape.add(fwd.loss, term);
    }
    ctx.step(std::move(fwd));
  };
  h.process_after_training = [](TrainingStateDict& state, TrainContext& ctx) {
    state.put("lwf.old_params", *ctx.params);
  };
  return h;
}

inline EventHooks anchoring_hooks(const std::string& name, double lambda, bool fisher) {
  EventHooks h;
  h.name = name;
  std::string key = name + ".anchors";
  h.init_training_states = [key](TrainingStateDict& state, const RunInfo&) {
    state.put(key, std::vector<Anchor>{});
  };
  h.process_train_iteration = [lambda, key](TrainingStateDict& state, TrainContext& ctx) {
    auto fwd = ctx.forward();
    const auto& anchors = state.get<std::vector<Anchor>>(key);
    if (!anchors.empty() && lambda > 0) {
      ctx.step(std::move(fwd), [&](Vec& g) {
        g += quadratic_penalty_grad(ctx.params->flatten(), anchors, lambda);
      });
    } else {
      ctx.step(std::move(fwd));
    }
  };
  h.process_after_training = [key, fisher](TrainingStateDict& state, TrainContext& ctx) {
    Vec w = fisher ? estimate_fisher_diag(*ctx.binding, *ctx.params)
                   : mas_importance(*ctx.binding, *ctx.params);
    state.get<std::vector<Anchor>>(key).push_back(Anchor{ctx.params->flatten(), std::move(w)});
  };
  return h;
}

inline EventHooks ewc_hooks(double lambda) { return anchoring_hooks("ewc", lambda, true); }
inline EventHooks mas_hooks(double lambda) { return anchoring_hooks("mas", lambda, false); }

inline EventHooks gem_hooks(i64 capacity, double margin) {
  EventHooks h;
  h.name = "gem";
  h.init_training_states = [](TrainingStateDict& state, const RunInfo&) {
    state.put("gem.memory", std::vector<MemoryBatch>{});
  };
  h.process_train_iteration = [margin](TrainingStateDict& state, TrainContext& ctx) {
    const auto& memory = state.get<std::vector<MemoryBatch>>("gem.memory");
    if (memory.empty()) {
      ctx.step(ctx.forward());
      return;
    }
    ctx.step(ctx.forward(), [&](Vec& g) {
      std::vector<Vec> refs;
      refs.reserve(memory.size());
      for (const MemoryBatch& b : memory) {
        // Under Class-IL the memory loss runs over the grown class set, like
        // any replayed sample would be trained today; elsewhere the mask
        // captured at creation applies.
        if (ctx.setting == Setting::class_il) {
          MemoryBatch grown = b;
          grown.mask = ctx.binding->train_mask();
          refs.push_back(ctx.batch_grad(grown));
        } else {
          refs.push_back(ctx.batch_grad(b));
        }
      }
      g = gem_project(g, refs, margin);
    });
  };
  h.process_after_training = [capacity](TrainingStateDict& state, TrainContext& ctx) {
    if (capacity <= 0) return;
    state.get<std::vector<MemoryBatch>>("gem.memory")
        .push_back(gem_sample_memory(*ctx.binding, capacity, *ctx.method_rng));
  };
  return h;
}

inline EventHooks make_method_hooks(const MethodConfig& mc) {
  if (mc.name == "bare") return bare_hooks();
  if (mc.name == "lwf") return lwf_hooks(mc.lambda, mc.temperature);
  if (mc.name == "ewc") return ewc_hooks(mc.lambda);
  if (mc.name == "mas") return mas_hooks(mc.lambda);
  if (mc.name == "gem") return gem_hooks(mc.memory, mc.margin);
  throw ConfigError("unknown method '" + mc.name + "'");
}

}  // namespace grapal
