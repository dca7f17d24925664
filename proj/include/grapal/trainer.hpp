// trainer.hpp -- the event-driven continual trainer. A generic loop drives
// every method through three hooks (init_training_states,
// process_train_iteration, process_after_training) sharing a string-keyed
// state dictionary; the loop itself never branches on method identity.
// Also provides the per-level model binding, the Bare/Joint baselines, and
// the random-baseline vector used by FWT.

#pragma once

#include "grapal/nn.hpp"
#include "grapal/protocol.hpp"
#include "grapal/scenario.hpp"

#include <any>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace grapal {

struct DivergenceError : Error {
  using Error::Error;
};

struct ModelConfig {
  i64 layers = 3;
  i64 hidden = 256;
  double dropout = 0.25;
  double lr = 5e-3;
  double weight_decay = 0.0;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  i64 max_epochs = 1000;
  i64 patience = 20;
  double stop_factor = 1000.0;
};

// Level-tagged batch of instances with their labels, detached from any task:
// replayed memories, Fisher estimation samples, etc. For graph-level batches
// the graphs ride along; for LP the labels are the 0/1 edge bits.
struct MemoryBatch {
  Level level = Level::node;
  std::vector<Payload> payloads;
  std::vector<int> labels;
  ClassMask mask;  // class mask in force when the batch was captured
  std::vector<std::shared_ptr<const Graph>> graphs;  // gc only, parallel to payloads
};

namespace detail {

// Disjoint union of graphs: block-diagonal normalized adjacency, stacked
// features, and per-node membership.
struct GraphUnion {
  Csr adj;
  Mat features;
  std::vector<i64> membership;
  i64 num_graphs = 0;
};

inline GraphUnion build_union(const std::vector<std::shared_ptr<const Graph>>& graphs) {
  GraphUnion u;
  u.num_graphs = static_cast<i64>(graphs.size());
  i64 total_nodes = 0, total_nnz = 0, dim = -1;
  for (const auto& g : graphs) {
    if (!g->has_features()) throw ShapeError("graph union: graph without features");
    if (dim < 0) dim = g->feature_dim();
    if (g->feature_dim() != dim) throw ShapeError("graph union: feature widths differ");
    total_nodes += g->num_nodes();
    total_nnz += g->num_nodes() + 2 * g->num_edges();  // upper bound incl. self loops
  }
  u.adj.rows = u.adj.cols = total_nodes;
  u.adj.offsets.reserve(total_nodes + 1);
  u.adj.offsets.push_back(0);
  u.adj.indices.reserve(total_nnz);
  u.adj.values.reserve(total_nnz);
  u.features.resize(total_nodes, dim);
  u.membership.reserve(total_nodes);
  i64 base = 0;
  for (size_t k = 0; k < graphs.size(); ++k) {
    const Graph& g = *graphs[k];
    Csr a = normalized_adjacency(g);
    for (i64 r = 0; r < a.rows; ++r) {
      for (i64 e = a.offsets[r]; e < a.offsets[r + 1]; ++e) {
        u.adj.indices.push_back(base + a.indices[e]);
        u.adj.values.push_back(a.values[e]);
      }
      u.adj.offsets.push_back(static_cast<i64>(u.adj.indices.size()));
      u.membership.push_back(static_cast<i64>(k));
    }
    u.features.middleRows(base, g.num_nodes()) = g.features();
    base += g.num_nodes();
  }
  return u;
}

}  // namespace detail

// Binds one task's visible input to the model: builds adjacency once, owns
// the train/val batches, and exposes forward/loss/metric/answer services.
class TaskBinding {
 public:
  TaskBinding(const TaskInput& input, const ModelConfig& cfg)
      : level_(input.level), setting_(input.setting), cfg_(cfg),
        total_classes_(input.total_classes), class_set_(input.visible.class_set) {
    if (level_ == Level::graph) {
      store_ = input.visible.graph_store;
      train_labels_ = input.visible.train.labels;
      val_labels_ = input.visible.val.labels;
      train_graph_ids_ = input.visible.train.ids;
      val_graph_ids_ = input.visible.val.ids;
      std::vector<std::shared_ptr<const Graph>> tg, vg;
      for (i64 id : train_graph_ids_) tg.push_back(store_.at(static_cast<size_t>(id)));
      for (i64 id : val_graph_ids_) vg.push_back(store_.at(static_cast<size_t>(id)));
      train_union_ = detail::build_union(tg);
      val_union_ = detail::build_union(vg);
      arch_.in_dim = train_union_.features.cols();
      arch_.head = HeadKind::graph_class;
    } else {
      graph_ = input.visible.graph;
      if (!graph_ || !graph_->has_features())
        throw ShapeError("task binding: graph with features required");
      adj_ = normalized_adjacency(*graph_);
      arch_.in_dim = graph_->feature_dim();
      if (level_ == Level::node) {
        train_ids_ = input.visible.train.ids;
        train_labels_ = input.visible.train.labels;
        val_ids_ = input.visible.val.ids;
        val_labels_ = input.visible.val.labels;
        arch_.head = HeadKind::node_class;
      } else if (level_ == Level::link_classification) {
        train_pairs_ = input.visible.train_pairs.pairs;
        train_labels_ = input.visible.train_pairs.labels;
        val_pairs_ = input.visible.val_pairs.pairs;
        val_labels_ = input.visible.val_pairs.labels;
        arch_.head = HeadKind::pair_class;
      } else {
        for (const PairRef& p : input.visible.lp_train.pos) {
          train_pairs_.push_back(p);
          train_labels_.push_back(1);
        }
        for (const PairRef& p : input.visible.lp_train.neg) {
          train_pairs_.push_back(p);
          train_labels_.push_back(0);
        }
        for (const PairRef& p : input.visible.lp_val.pos) {
          val_pairs_.push_back(p);
          val_labels_.push_back(1);
        }
        for (const PairRef& p : input.visible.lp_val.neg) {
          val_pairs_.push_back(p);
          val_labels_.push_back(0);
        }
        arch_.head = HeadKind::pair_score;
      }
    }
    arch_.hidden = cfg.hidden;
    arch_.layers = cfg.layers;
    arch_.num_classes = total_classes_;
    if (level_ != Level::link_prediction)
      train_mask_ = make_mask(class_set_, total_classes_);
  }

  const GcnArch& arch() const { return arch_; }
  Level level() const { return level_; }
  const ClassMask& train_mask() const { return train_mask_; }
  const std::vector<int>& class_set() const { return class_set_; }
  i64 train_size() const { return static_cast<i64>(train_labels_.size()); }

  struct Forward {
    Tape tape;
    TapedParams tp;
    Tape::ValueId loss = -1;       // hooks may extend this
    Tape::ValueId train_out = -1;  // masked-loss inputs: logits / scores on the train batch
  };

  // Train-mode forward + data loss. `dropout_rng` null = eval mode.
  Forward train_forward(const ParameterSet& params, Rng* dropout_rng) const {
    Forward f;
    f.tp = register_params(f.tape, params);
    if (level_ == Level::graph) {
      Tape::ValueId emb = forward_backbone(f, train_union_.adj, train_union_.features, dropout_rng);
      f.train_out = head_gc(f.tape, f.tp, emb, train_union_.membership, train_union_.num_graphs);
      f.loss = cross_entropy(f.tape, f.train_out, train_labels_, train_mask_);
      return f;
    }
    Tape::ValueId emb = forward_backbone(f, adj_, graph_->features(), dropout_rng);
    if (level_ == Level::node) {
      Tape::ValueId sel = f.tape.gather_rows(emb, train_ids_);
      f.train_out = head_nc(f.tape, f.tp, sel);
      f.loss = cross_entropy(f.tape, f.train_out, train_labels_, train_mask_);
    } else {
      Tape::ValueId out = pair_forward(f, emb, train_pairs_);
      f.train_out = out;
      if (level_ == Level::link_classification) {
        f.loss = cross_entropy(f.tape, out, train_labels_, train_mask_);
      } else {
        std::vector<double> y(train_labels_.begin(), train_labels_.end());
        f.loss = f.tape.binary_cross_entropy(out, y);
      }
    }
    return f;
  }

  // Eval-mode outputs on the train batch (old-model snapshots for LwF).
  Mat train_outputs(const ParameterSet& params) const {
    Forward f = train_forward(params, nullptr);
    return f.tape.value(f.train_out);
  }

  // Task-local validation performance: accuracy for classification levels,
  // AUROC for link prediction.
  double val_metric(const ParameterSet& params) const {
    Tape tape;
    TapedParams tp = register_params(tape, params);
    if (level_ == Level::graph) {
      Tape::ValueId emb =
          backbone_forward(tape, tp, val_union_.adj, val_union_.features, cfg_.layers);
      Tape::ValueId logits = head_gc(tape, tp, emb, val_union_.membership, val_union_.num_graphs);
      return masked_accuracy(tape.value(logits), val_labels_, train_mask_);
    }
    Tape::ValueId emb = backbone_forward(tape, tp, adj_, graph_->features(), cfg_.layers);
    if (level_ == Level::node) {
      Tape::ValueId sel = tape.gather_rows(emb, val_ids_);
      return masked_accuracy(tape.value(head_nc(tape, tp, sel)), val_labels_, train_mask_);
    }
    Tape::ValueId out = pair_forward_on(tape, tp, emb, val_pairs_);
    if (level_ == Level::link_classification)
      return masked_accuracy(tape.value(out), val_labels_, train_mask_);
    const Mat& s = tape.value(out);
    std::vector<double> scores(static_cast<size_t>(s.rows()));
    for (i64 r = 0; r < s.rows(); ++r) scores[static_cast<size_t>(r)] = s(r, 0);
    return auroc(scores, val_labels_);
  }

  // Single train instance as a detachable batch (Fisher / MAS / GEM capture).
  MemoryBatch train_instance(i64 k) const {
    MemoryBatch b;
    b.level = level_;
    b.mask = train_mask_;
    b.labels = {train_labels_[static_cast<size_t>(k)]};
    if (level_ == Level::node) {
      b.payloads = {NodeRef{train_ids_[static_cast<size_t>(k)]}};
    } else if (level_ == Level::graph) {
      i64 id = train_graph_ids_[static_cast<size_t>(k)];
      b.payloads = {GraphRef{id}};
      b.graphs = {store_.at(static_cast<size_t>(id))};
    } else {
      b.payloads = {Payload(train_pairs_[static_cast<size_t>(k)])};
    }
    return b;
  }

  // Gradient of the mean data loss over `batch` (eval mode), flattened.
  Vec batch_grad(const ParameterSet& params, const MemoryBatch& batch) const {
    Tape tape;
    TapedParams tp = register_params(tape, params);
    Tape::ValueId out = batch_outputs(tape, tp, batch);
    Tape::ValueId loss;
    if (level_ == Level::link_prediction) {
      std::vector<double> y(batch.labels.begin(), batch.labels.end());
      loss = tape.binary_cross_entropy(out, y);
    } else {
      loss = tape.masked_cross_entropy(out, batch.labels, batch.mask);
    }
    tape.backward(loss);
    return collect_grads(tape, tp, params);
  }

  // Mean data loss over `batch` (eval mode), no gradient.
  double batch_loss(const ParameterSet& params, const MemoryBatch& batch) const {
    Tape tape;
    TapedParams tp = register_params(tape, params);
    Tape::ValueId out = batch_outputs(tape, tp, batch);
    if (level_ == Level::link_prediction) {
      std::vector<double> y(batch.labels.begin(), batch.labels.end());
      return tape.scalar_value(tape.binary_cross_entropy(out, y));
    }
    return tape.scalar_value(tape.masked_cross_entropy(out, batch.labels, batch.mask));
  }

  // Gradient of || f(x) ||^2 of the batch outputs (MAS sensitivity).
  Vec output_sqnorm_grad(const ParameterSet& params, const MemoryBatch& batch) const {
    Tape tape;
    TapedParams tp = register_params(tape, params);
    Tape::ValueId out = batch_outputs(tape, tp, batch);
    tape.backward(tape.sum_squares(out));
    return collect_grads(tape, tp, params);
  }

  // Scores every query; unresolvable payloads (nodes/graphs not yet present)
  // get the deterministic fallback: lowest allowed class / score 0.
  void answer_queries(const ParameterSet& params, const std::vector<Query>& queries,
                      const std::function<const ClassMask*(const Query&)>& mask_of,
                      AnswerSheet& out) const {
    Tape tape;
    TapedParams tp = register_params(tape, params);
    if (level_ == Level::node) {
      Tape::ValueId emb = backbone_forward(tape, tp, adj_, graph_->features(), cfg_.layers);
      const Mat& logits = tape.value(head_nc(tape, tp, emb));
      for (const Query& q : queries) {
        i64 v = std::get<NodeRef>(q.payload).node;
        const ClassMask* m = mask_of(q);
        if (v < 0 || v >= logits.rows())
          out.set_class(q.id, fallback_class(m));
        else
          out.set_class(q.id, masked_argmax(logits.row(v), m));
      }
      return;
    }
    if (level_ == Level::graph) {
      std::vector<std::shared_ptr<const Graph>> present;
      std::vector<i64> ids;
      for (size_t id = 0; id < store_.size(); ++id)
        if (store_[id]) {
          present.push_back(store_[id]);
          ids.push_back(static_cast<i64>(id));
        }
      detail::GraphUnion u = detail::build_union(present);
      Tape::ValueId emb = backbone_forward(tape, tp, u.adj, u.features, cfg_.layers);
      const Mat& logits = tape.value(head_gc(tape, tp, emb, u.membership, u.num_graphs));
      std::map<i64, i64> row_of;
      for (size_t k = 0; k < ids.size(); ++k) row_of[ids[k]] = static_cast<i64>(k);
      for (const Query& q : queries) {
        i64 id = std::get<GraphRef>(q.payload).graph;
        auto it = row_of.find(id);
        const ClassMask* m = mask_of(q);
        if (it == row_of.end())
          out.set_class(q.id, fallback_class(m));
        else
          out.set_class(q.id, masked_argmax(logits.row(it->second), m));
      }
      return;
    }
    // pair levels
    Tape::ValueId emb = backbone_forward(tape, tp, adj_, graph_->features(), cfg_.layers);
    std::vector<PairRef> valid;
    std::vector<size_t> valid_q;
    const i64 n = graph_->num_nodes();
    for (size_t qi = 0; qi < queries.size(); ++qi) {
      const PairRef& p = std::get<PairRef>(queries[qi].payload);
      if (p.u >= 0 && p.u < n && p.v >= 0 && p.v < n) {
        valid.push_back(p);
        valid_q.push_back(qi);
      }
    }
    Mat outvals;
    if (!valid.empty()) {
      Tape::ValueId o = pair_forward_on(tape, tp, emb, valid);
      outvals = tape.value(o);
    }
    std::map<size_t, i64> row_of;
    for (size_t k = 0; k < valid_q.size(); ++k) row_of[valid_q[k]] = static_cast<i64>(k);
    for (size_t qi = 0; qi < queries.size(); ++qi) {
      const Query& q = queries[qi];
      auto it = row_of.find(qi);
      if (level_ == Level::link_prediction) {
        out.set_score(q.id, it == row_of.end() ? 0.0 : outvals(it->second, 0));
      } else {
        const ClassMask* m = mask_of(q);
        if (it == row_of.end())
          out.set_class(q.id, fallback_class(m));
        else
          out.set_class(q.id, masked_argmax(outvals.row(it->second), m));
      }
    }
  }

  static int masked_argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row, const ClassMask* m) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (i64 c = 0; c < row.cols(); ++c) {
      if (m && !m->empty() && !(*m)[static_cast<size_t>(c)]) continue;
      if (row(c) > best_v) {
        best_v = row(c);
        best = static_cast<int>(c);
      }
    }
    if (best < 0) throw MaskError("no allowed class to answer with");
    return best;
  }

  static int fallback_class(const ClassMask* m) {
    if (!m || m->empty()) return 0;
    for (size_t c = 0; c < m->size(); ++c)
      if ((*m)[c]) return static_cast<int>(c);
    throw MaskError("no allowed class to answer with");
  }

 private:
  Tape::ValueId forward_backbone(Forward& f, const Csr& adj, const Eigen::Ref<const Mat>& x,
                                 Rng* dropout_rng) const {
    std::vector<Mat> masks;
    const std::vector<Mat>* mask_ptr = nullptr;
    if (dropout_rng && cfg_.dropout > 0) {
      std::bernoulli_distribution keep(1.0 - cfg_.dropout);
      const double scl = 1.0 / (1.0 - cfg_.dropout);
      i64 dim = x.cols();
      for (i64 l = 0; l < cfg_.layers; ++l) {
        Mat m(x.rows(), dim);
        for (i64 r = 0; r < m.rows(); ++r)
          for (i64 c = 0; c < m.cols(); ++c) m(r, c) = keep(*dropout_rng) ? scl : 0.0;
        masks.push_back(std::move(m));
        dim = cfg_.hidden;
      }
      mask_ptr = &masks;
    }
    return backbone_forward(f.tape, f.tp, adj, x, cfg_.layers, mask_ptr);
  }

  Tape::ValueId pair_forward(Forward& f, Tape::ValueId emb,
                             const std::vector<PairRef>& pairs) const {
    return pair_forward_on(f.tape, f.tp, emb, pairs);
  }

  Tape::ValueId pair_forward_on(Tape& tape, const TapedParams& tp, Tape::ValueId emb,
                                const std::vector<PairRef>& pairs) const {
    std::vector<i64> us, vs;
    us.reserve(pairs.size());
    vs.reserve(pairs.size());
    for (const PairRef& p : pairs) {
      us.push_back(p.u);
      vs.push_back(p.v);
    }
    Tape::ValueId pe =
        head_pair(tape, tp, tape.gather_rows(emb, us), tape.gather_rows(emb, vs));
    if (level_ == Level::link_classification) return head_nc(tape, tp, pe);
    return pe;  // n x 1 scores
  }

  Tape::ValueId batch_outputs(Tape& tape, const TapedParams& tp, const MemoryBatch& b) const {
    if (b.payloads.empty()) throw ShapeError("empty batch");
    if (b.level != level_) throw ShapeError("batch level mismatch");
    if (level_ == Level::graph) {
      detail::GraphUnion u = detail::build_union(b.graphs);
      Tape::ValueId emb = backbone_forward(tape, tp, u.adj, u.features, cfg_.layers);
      return head_gc(tape, tp, emb, u.membership, u.num_graphs);
    }
    Tape::ValueId emb = backbone_forward(tape, tp, adj_, graph_->features(), cfg_.layers);
    if (level_ == Level::node) {
      std::vector<i64> ids;
      for (const Payload& p : b.payloads) ids.push_back(std::get<NodeRef>(p).node);
      return head_nc(tape, tp, tape.gather_rows(emb, ids));
    }
    std::vector<PairRef> pairs;
    for (const Payload& p : b.payloads) pairs.push_back(std::get<PairRef>(p));
    return pair_forward_on(tape, tp, emb, pairs);
  }

  double masked_accuracy(const Mat& logits, const std::vector<int>& labels,
                         const ClassMask& mask) const {
    std::vector<int> pred(static_cast<size_t>(logits.rows()));
    const ClassMask* m = mask.empty() ? nullptr : &mask;
    for (i64 r = 0; r < logits.rows(); ++r)
      pred[static_cast<size_t>(r)] = masked_argmax(logits.row(r), m);
    return accuracy(pred, labels);
  }

  Level level_;
  Setting setting_;
  ModelConfig cfg_;
  int total_classes_;
  std::vector<int> class_set_;
  ClassMask train_mask_;
  GcnArch arch_;

  std::shared_ptr<const Graph> graph_;
  Csr adj_;
  std::vector<std::shared_ptr<const Graph>> store_;
  detail::GraphUnion train_union_, val_union_;

  std::vector<i64> train_ids_, val_ids_;              // node
  std::vector<i64> train_graph_ids_, val_graph_ids_;  // gc
  std::vector<PairRef> train_pairs_, val_pairs_;      // lc / lp
  std::vector<int> train_labels_, val_labels_;
};

// ---- event hooks ---------------------------------------------------------

class TrainingStateDict {
 public:
  template <class T>
  void put(const std::string& key, T value) {
    store_[key] = std::move(value);
  }
  template <class T>
  T& get(const std::string& key) {
    auto it = store_.find(key);
    if (it == store_.end()) throw Error("training state '" + key + "' not found");
    return std::any_cast<T&>(it->second);
  }
  template <class T>
  T* find(const std::string& key) {
    auto it = store_.find(key);
    return it == store_.end() ? nullptr : std::any_cast<T>(&it->second);
  }
  bool contains(const std::string& key) const { return store_.count(key) != 0; }
  void clear() { store_.clear(); }

 private:
  std::map<std::string, std::any> store_;
};

struct RunInfo {
  Setting setting = Setting::task_il;
  Level level = Level::node;
  int num_tasks = 0;
  int total_classes = 0;
};

struct TrainContext {
  i64 task_index = 0;
  i64 num_tasks = 0;
  i64 epoch = 0;
  Setting setting = Setting::task_il;
  const ModelConfig* config = nullptr;
  const TaskBinding* binding = nullptr;
  ParameterSet* params = nullptr;
  AdamState* adam = nullptr;
  Rng* dropout_rng = nullptr;
  Rng* method_rng = nullptr;
  ClassMask seen_before;  // classes seen strictly before the current task
  double last_loss = 0;
  bool stepped = false;

  TaskBinding::Forward forward() { return binding->train_forward(*params, dropout_rng); }

  // Eval-mode gradient on a detached batch (replayed memories etc.).
  Vec batch_grad(const MemoryBatch& b) const { return binding->batch_grad(*params, b); }

  // Backward + weight decay + optional gradient transform + Adam.
  void step(TaskBinding::Forward fwd, const std::function<void(Vec&)>& grad_hook = {}) {
    last_loss = fwd.tape.scalar_value(fwd.loss);
    fwd.tape.backward(fwd.loss);
    Vec g = collect_grads(fwd.tape, fwd.tp, *params);
    if (config->weight_decay > 0) g += config->weight_decay * params->flatten();
    if (grad_hook) grad_hook(g);
    Vec flat = params->flatten();
    adam_step(*adam, flat, g);
    params->unflatten(flat);
    stepped = true;
  }
};

struct EventHooks {
  std::string name = "bare";
  std::function<void(TrainingStateDict&, const RunInfo&)> init_training_states;
  std::function<void(TrainingStateDict&, TrainContext&)> process_train_iteration;
  std::function<void(TrainingStateDict&, TrainContext&)> process_after_training;
};

// Bare: incremental training with no CL technique; also the default body any
// method-specific iteration hook wraps.
inline void default_iteration(TrainContext& ctx) { ctx.step(ctx.forward()); }

inline EventHooks bare_hooks() {
  EventHooks h;
  h.name = "bare";
  return h;
}

struct RunStats {
  double val_ap = 0;    // mean over tasks of best task-local val metric
  i64 epochs_total = 0;
};

// ---- the generic continual loop -------------------------------------------

inline Report run_continual(const EventHooks& hooks, std::shared_ptr<const Scenario> scenario,
                            const ModelConfig& config, u64 seed, RunStats* stats = nullptr) {
  ScenarioLoader loader(scenario);
  TrainingStateDict state;
  RunInfo info{scenario->setting(), scenario->level(),
               static_cast<int>(scenario->num_tasks()), scenario->total_classes()};
  if (hooks.init_training_states) hooks.init_training_states(state, info);

  ParameterSet params;
  bool params_ready = false;
  Rng dropout_rng = make_rng(seed, kStreamDropout);
  Rng method_rng = make_rng(seed, kStreamMethod);
  std::vector<std::vector<int>> seen_class_sets;
  std::vector<ClassMask> task_masks;  // per seen task, for Task-IL answering
  double val_sum = 0;
  i64 epochs_total = 0;

  while (auto input = loader.next_task()) {
    TaskBinding binding(*input, config);
    if (!params_ready) {
      Rng init_rng = make_rng(seed, kStreamInit);
      params = init_params(binding.arch(), init_rng);
      params_ready = true;
    }
    AdamState adam = AdamState::fresh(params.total_size(), config.lr, config.adam_beta1,
                                      config.adam_beta2, config.adam_eps);
    PlateauState plateau = PlateauState::fresh(config.patience, config.stop_factor);

    TrainContext ctx;
    ctx.task_index = input->task_index;
    ctx.num_tasks = input->num_tasks;
    ctx.setting = input->setting;
    ctx.config = &config;
    ctx.binding = &binding;
    ctx.params = &params;
    ctx.adam = &adam;
    ctx.dropout_rng = &dropout_rng;
    ctx.method_rng = &method_rng;
    if (scenario->level() != Level::link_prediction) {
      std::vector<int> before;
      for (const auto& cs : seen_class_sets) before.insert(before.end(), cs.begin(), cs.end());
      if (!before.empty()) ctx.seen_before = make_mask(before, input->total_classes);
    }
    seen_class_sets.push_back(input->visible.class_set);
    if (scenario->level() != Level::link_prediction)
      task_masks.push_back(make_mask(input->visible.class_set, input->total_classes));

    ParameterSet best = params;
    double best_val = -std::numeric_limits<double>::infinity();
    for (i64 epoch = 0; epoch < config.max_epochs; ++epoch) {
      ctx.epoch = epoch;
      ctx.stepped = false;
      if (hooks.process_train_iteration)
        hooks.process_train_iteration(state, ctx);
      else
        default_iteration(ctx);
      if (!ctx.stepped) throw Error("process_train_iteration must perform a training step");
      if (!std::isfinite(ctx.last_loss)) throw DivergenceError("non-finite training loss");
      ++epochs_total;
      double val = binding.val_metric(params);
      if (val > best_val) {
        best_val = val;
        best = params;
      }
      PlateauAction act = plateau_schedule(plateau, val);
      if (act == PlateauAction::decay_lr)
        adam.lr *= 0.1;
      else if (act == PlateauAction::stop)
        break;
    }
    if (config.max_epochs > 0) {
      params = best;  // early stopping keeps the best task-local val model
      val_sum += best_val;
    }
    if (hooks.process_after_training) hooks.process_after_training(state, ctx);

    // Answer masking: Task-IL queries on seen tasks use that task's class
    // set; Class-IL uses the cumulative set; everything else is unmasked (the
    // class set is global there).
    const Setting setting = scenario->setting();
    const ClassMask* current =
        task_masks.empty() ? nullptr : &task_masks.back();
    auto mask_of = [&](const Query& q) -> const ClassMask* {
      if (scenario->level() == Level::link_prediction) return nullptr;
      if (setting == Setting::task_il) {
        if (q.task_id && *q.task_id < static_cast<int>(task_masks.size()))
          return &task_masks[static_cast<size_t>(*q.task_id)];
        return nullptr;
      }
      if (setting == Setting::class_il) return current;
      return nullptr;
    };
    AnswerSheet answers;
    binding.answer_queries(params, input->queries, mask_of, answers);
    loader.submit_answers(answers);
  }

  if (stats) {
    stats->val_ap = scenario->num_tasks() > 0 && config.max_epochs > 0
                        ? val_sum / static_cast<double>(scenario->num_tasks())
                        : 0.0;
    stats->epochs_total = epochs_total;
  }
  return loader.finalize();
}

// ---- Joint reference -------------------------------------------------------

// Trains one model on the union of every task's train data (ignoring the
// incremental structure), then answers each round with the fixed trained
// model through the regular protocol. The diagonal of its matrix is M^Joint.
inline Report joint_reference(std::shared_ptr<const Scenario> scenario,
                              const ModelConfig& config, u64 seed, RunStats* stats = nullptr) {
  // Merge the tasks' visible inputs into one synthetic task input.
  const auto& tasks = scenario->tasks();
  TaskInput merged;
  merged.task_index = 0;
  merged.num_tasks = 1;
  merged.setting = scenario->setting();
  merged.level = scenario->level();
  merged.total_classes = scenario->total_classes();
  const TaskVisible& last = tasks.back().visible;
  merged.visible.graph = last.graph;
  merged.visible.graph_store = last.graph_store;

  std::vector<int> all_classes;
  for (const TaskSpec& t : tasks)
    all_classes.insert(all_classes.end(), t.visible.class_set.begin(),
                       t.visible.class_set.end());
  std::sort(all_classes.begin(), all_classes.end());
  all_classes.erase(std::unique(all_classes.begin(), all_classes.end()), all_classes.end());
  merged.visible.class_set = all_classes;

  auto append_set = [](LabeledSet& dst, const LabeledSet& src) {
    dst.ids.insert(dst.ids.end(), src.ids.begin(), src.ids.end());
    dst.labels.insert(dst.labels.end(), src.labels.begin(), src.labels.end());
  };
  auto append_pairs = [](LabeledPairs& dst, const LabeledPairs& src) {
    dst.pairs.insert(dst.pairs.end(), src.pairs.begin(), src.pairs.end());
    dst.labels.insert(dst.labels.end(), src.labels.begin(), src.labels.end());
  };
  for (const TaskSpec& t : tasks) {
    append_set(merged.visible.train, t.visible.train);
    append_set(merged.visible.val, t.visible.val);
    append_pairs(merged.visible.train_pairs, t.visible.train_pairs);
    append_pairs(merged.visible.val_pairs, t.visible.val_pairs);
  }
  if (scenario->level() == Level::link_prediction) {
    // Union of observable edges / sampled negatives, deduplicated.
    auto dedupe = [](std::vector<PairRef>& pairs) {
      std::sort(pairs.begin(), pairs.end(),
                [](const PairRef& a, const PairRef& b) {
                  return a.u != b.u ? a.u < b.u : a.v < b.v;
                });
      pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    };
    i64 max_nodes = 0;
    std::vector<std::tuple<i64, i64, double>> edges;
    for (const TaskSpec& t : tasks) {
      const Graph& g = *t.visible.graph;
      max_nodes = std::max(max_nodes, g.num_nodes());
      for (auto [u, v, w] : g.edge_list())
        if (u <= v) edges.emplace_back(u, v, w);
      auto& mv = merged.visible;
      const auto& tv = t.visible;
      mv.lp_train.pos.insert(mv.lp_train.pos.end(), tv.lp_train.pos.begin(), tv.lp_train.pos.end());
      mv.lp_train.neg.insert(mv.lp_train.neg.end(), tv.lp_train.neg.begin(), tv.lp_train.neg.end());
      mv.lp_val.pos.insert(mv.lp_val.pos.end(), tv.lp_val.pos.begin(), tv.lp_val.pos.end());
      mv.lp_val.neg.insert(mv.lp_val.neg.end(), tv.lp_val.neg.begin(), tv.lp_val.neg.end());
    }
    dedupe(merged.visible.lp_train.pos);
    dedupe(merged.visible.lp_train.neg);
    dedupe(merged.visible.lp_val.pos);
    dedupe(merged.visible.lp_val.neg);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    EdgeList el;
    el.num_nodes = max_nodes;
    el.directed = false;
    for (auto [u, v, w] : edges) {
      el.edges.emplace_back(u, v);
      el.weights.push_back(w);
    }
    GraphInputs gi;
    const Graph& lastg = *last.graph;
    if (lastg.has_features()) gi.features = lastg.features();
    merged.visible.graph = std::make_shared<const Graph>(build_graph(el, std::move(gi)));
  }

  TaskBinding binding(merged, config);
  Rng init_rng = make_rng(seed, kStreamInit);
  ParameterSet params = init_params(binding.arch(), init_rng);
  AdamState adam = AdamState::fresh(params.total_size(), config.lr, config.adam_beta1,
                                    config.adam_beta2, config.adam_eps);
  PlateauState plateau = PlateauState::fresh(config.patience, config.stop_factor);
  Rng dropout_rng = make_rng(seed, kStreamDropout);

  TrainContext ctx;
  ctx.task_index = 0;
  ctx.num_tasks = 1;
  ctx.config = &config;
  ctx.binding = &binding;
  ctx.params = &params;
  ctx.adam = &adam;
  ctx.dropout_rng = &dropout_rng;

  ParameterSet best = params;
  double best_val = -std::numeric_limits<double>::infinity();
  i64 epochs_total = 0;
  for (i64 epoch = 0; epoch < config.max_epochs; ++epoch) {
    ctx.epoch = epoch;
    ctx.stepped = false;
    default_iteration(ctx);
    if (!std::isfinite(ctx.last_loss)) throw DivergenceError("non-finite training loss");
    ++epochs_total;
    double val = binding.val_metric(params);
    if (val > best_val) {
      best_val = val;
      best = params;
    }
    PlateauAction act = plateau_schedule(plateau, val);
    if (act == PlateauAction::decay_lr)
      adam.lr *= 0.1;
    else if (act == PlateauAction::stop)
      break;
  }
  if (config.max_epochs > 0) params = best;
  if (stats) {
    stats->val_ap = best_val;
    stats->epochs_total = epochs_total;
  }

  // Answer every round with the fixed trained model and its merged context.
  ScenarioLoader loader(scenario);
  std::vector<ClassMask> task_masks;
  if (scenario->level() != Level::link_prediction)
    for (const TaskSpec& t : tasks)
      task_masks.push_back(make_mask(t.visible.class_set, merged.total_classes));
  auto mask_of = [&](const Query& q) -> const ClassMask* {
    if (scenario->level() == Level::link_prediction) return nullptr;
    if (scenario->setting() == Setting::task_il && q.task_id)
      return &task_masks[static_cast<size_t>(*q.task_id)];
    return nullptr;  // joint sees all classes
  };
  while (auto input = loader.next_task()) {
    AnswerSheet answers;
    binding.answer_queries(params, input->queries, mask_of, answers);
    loader.submit_answers(answers);
  }
  return loader.finalize();
}

// r_i = mean primary-metric performance of freshly initialized, untrained
// models on task i's queries, averaged over the given seeds.
inline std::vector<double> random_baseline(std::shared_ptr<const Scenario> scenario,
                                           const ModelConfig& config,
                                           std::span<const u64> seeds) {
  if (seeds.empty()) throw Error("random_baseline: seed list is empty");
  ModelConfig untrained = config;
  untrained.max_epochs = 0;
  std::vector<double> r(static_cast<size_t>(scenario->num_tasks()), 0.0);
  for (u64 seed : seeds) {
    Report rep = run_continual(bare_hooks(), scenario, untrained, mix_seed(seed, kStreamBaseline));
    const PerformanceMatrix& m = rep.primary();
    for (i64 i = 1; i <= scenario->num_tasks(); ++i)
      r[static_cast<size_t>(i - 1)] += m.at(i, i);
  }
  for (double& v : r) v /= static_cast<double>(seeds.size());
  return r;
}

}  // namespace grapal
