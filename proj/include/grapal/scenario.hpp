// scenario.hpp -- compiles a labeled dataset into an ordered task sequence
// plus sealed ground truth under one of the four incremental settings
// (task / class / domain / time), for node-, link-, and graph-level problems.
//
// Everything a trainer may see lives in TaskVisible / Query; ground truth is
// kept in SealedTruth, which has no trainer-facing accessor and is read only
// by the loader/evaluator. Visible graphs are stripped of every label and
// attribute channel. Construction is deterministic given the seed.

#pragma once

#include "grapal/dataset.hpp"
#include "grapal/graph.hpp"
#include "grapal/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_set>
#include <vector>

namespace grapal {

struct SplitRatios {
  double train = 0.6, val = 0.2, test = 0.2;
};

struct LabeledSet {
  std::vector<i64> ids;
  std::vector<int> labels;
};

struct LabeledPairs {
  std::vector<PairRef> pairs;
  std::vector<int> labels;
};

struct LpSplit {
  std::vector<PairRef> pos, neg;
};

// Per-task trainer-visible payload. Which fields are populated depends on the
// problem level: node/graph classification use `train`/`val`, link
// classification uses `train_pairs`/`val_pairs`, link prediction uses
// `lp_train`/`lp_val`. `graph` is the (possibly per-task) input graph for
// node/link levels; `graph_store` maps GraphRef ids to graphs for the graph
// level (null entries = not yet visible under Time-IL).
struct TaskVisible {
  std::shared_ptr<const Graph> graph;
  std::vector<std::shared_ptr<const Graph>> graph_store;
  LabeledSet train, val;
  LabeledPairs train_pairs, val_pairs;
  LpSplit lp_train, lp_val;
  std::vector<int> class_set;  // C_i (classification levels)
};

struct TaskSpec {
  int index = 0;
  TaskVisible visible;
  std::vector<i64> query_ids;  // queries owned by this task (benchmark side)
};

struct Query {
  i64 id = 0;
  Payload payload;
  std::optional<int> task_id;  // engaged iff Task-IL
};

struct MetricConfig {
  std::string primary = "accuracy";
  int hits_k = 50;
};

namespace detail {

struct SealedEntry {
  int truth = 0;  // class index, or edge-existence bit for LP
  int owner = 0;  // owning task; -1 = shared LP negative
};

struct SealedTruth {
  std::vector<SealedEntry> entries;  // aligned with Scenario::queries()
};

}  // namespace detail

class Scenario {
 public:
  Scenario(Setting setting, Level level, int total_classes, u64 seed,
           std::vector<TaskSpec> tasks, std::vector<Query> queries,
           detail::SealedTruth sealed, MetricConfig metrics, i64 dropped = 0)
      : setting_(setting), level_(level), total_classes_(total_classes), seed_(seed),
        tasks_(std::move(tasks)), queries_(std::move(queries)), sealed_(std::move(sealed)),
        metrics_(std::move(metrics)), dropped_instances_(dropped) {}

  Setting setting() const { return setting_; }
  Level level() const { return level_; }
  int total_classes() const { return total_classes_; }
  u64 seed() const { return seed_; }
  i64 num_tasks() const { return static_cast<i64>(tasks_.size()); }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const std::vector<Query>& queries() const { return queries_; }
  const MetricConfig& metrics() const { return metrics_; }
  i64 dropped_instances() const { return dropped_instances_; }

 private:
  friend class ScenarioLoader;

  Setting setting_;
  Level level_;
  int total_classes_;
  u64 seed_;
  std::vector<TaskSpec> tasks_;
  std::vector<Query> queries_;
  detail::SealedTruth sealed_;  // no public accessor
  MetricConfig metrics_;
  i64 dropped_instances_;
};

namespace detail {

inline void check_ratios(const SplitRatios& r) {
  if (r.train <= 0 || r.val <= 0 || r.test <= 0 ||
      std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw SettingError("split ratios must be positive and sum to 1");
}

// Seeded uniform split of 0..n-1 into train/val/test index sets.
inline std::array<std::vector<size_t>, 3> split_indices(size_t n, const SplitRatios& r, Rng& rng) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  size_t n_train = static_cast<size_t>(r.train * static_cast<double>(n));
  size_t n_val = static_cast<size_t>((r.train + r.val) * static_cast<double>(n)) - n_train;
  std::array<std::vector<size_t>, 3> out;
  out[0].assign(order.begin(), order.begin() + n_train);
  out[1].assign(order.begin() + n_train, order.begin() + n_train + n_val);
  out[2].assign(order.begin() + n_train + n_val, order.end());
  return out;
}

struct ClassificationDraft {
  Setting setting = Setting::task_il;
  Level level = Level::node;
  int total_classes = 0;
  u64 seed = 0;
  i64 dropped = 0;
  std::vector<std::vector<int>> class_sets;
  std::vector<std::vector<Instance>> task_instances;
  // graphs: exactly one of these is used, depending on level/setting
  std::shared_ptr<const Graph> shared_graph;                    // fixed-graph settings
  std::vector<std::shared_ptr<const Graph>> per_task_graph;     // Time-IL node/lc
  std::vector<std::shared_ptr<const Graph>> all_graphs;         // gc
  std::vector<int> graph_task;                                  // gc Time-IL: task of each graph (-1 = all)
};

inline Scenario finish_classification(ClassificationDraft d, const SplitRatios& split) {
  check_ratios(split);
  const i64 n_tasks = static_cast<i64>(d.task_instances.size());
  if (n_tasks == 0) throw SettingError("scenario has no tasks");

  std::vector<TaskSpec> tasks(static_cast<size_t>(n_tasks));
  struct PendingQuery {
    Payload payload;
    int truth;
    int owner;
  };
  std::vector<PendingQuery> pending;

  for (i64 i = 0; i < n_tasks; ++i) {
    auto& insts = d.task_instances[static_cast<size_t>(i)];
    Rng rng = make_rng(d.seed, kStreamScenario * 1000 + 100 + static_cast<u64>(i));
    auto parts = split_indices(insts.size(), split, rng);
    if (parts[0].empty() || parts[1].empty() || parts[2].empty())
      throw SettingError("task " + std::to_string(i) + ": empty train/val/test split");

    TaskSpec& spec = tasks[static_cast<size_t>(i)];
    spec.index = static_cast<int>(i);
    spec.visible.class_set = d.class_sets[static_cast<size_t>(i)];

    auto fill = [&](const std::vector<size_t>& idx, LabeledSet& set, LabeledPairs& pairs) {
      for (size_t k : idx) {
        const Instance& inst = insts[k];
        if (d.level == Level::link_classification) {
          pairs.pairs.push_back(std::get<PairRef>(inst.payload));
          pairs.labels.push_back(inst.label);
        } else if (d.level == Level::graph) {
          set.ids.push_back(std::get<GraphRef>(inst.payload).graph);
          set.labels.push_back(inst.label);
        } else {
          set.ids.push_back(std::get<NodeRef>(inst.payload).node);
          set.labels.push_back(inst.label);
        }
      }
    };
    fill(parts[0], spec.visible.train, spec.visible.train_pairs);
    fill(parts[1], spec.visible.val, spec.visible.val_pairs);
    for (size_t k : parts[2])
      pending.push_back({insts[k].payload, insts[k].label, static_cast<int>(i)});

    if (d.level == Level::graph) {
      auto& store = spec.visible.graph_store;
      store.resize(d.all_graphs.size());
      for (size_t gidx = 0; gidx < d.all_graphs.size(); ++gidx) {
        bool visible = d.graph_task.empty() || d.graph_task[gidx] <= i;
        if (visible) store[gidx] = d.all_graphs[gidx];
      }
    } else if (!d.per_task_graph.empty()) {
      spec.visible.graph = d.per_task_graph[static_cast<size_t>(i)];
    } else {
      spec.visible.graph = d.shared_graph;
    }
  }

  // Global query order is shuffled so position reveals nothing about task
  // membership.
  std::vector<size_t> order(pending.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng qrng = make_rng(d.seed, kStreamScenario * 1000 + 500);
  std::shuffle(order.begin(), order.end(), qrng);

  std::vector<Query> queries(pending.size());
  SealedTruth sealed;
  sealed.entries.resize(pending.size());
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const PendingQuery& p = pending[order[pos]];
    queries[pos].id = static_cast<i64>(pos);
    queries[pos].payload = p.payload;
    if (d.setting == Setting::task_il) queries[pos].task_id = p.owner;
    sealed.entries[pos] = {p.truth, p.owner};
    tasks[static_cast<size_t>(p.owner)].query_ids.push_back(static_cast<i64>(pos));
  }

  return Scenario(d.setting, d.level, d.total_classes, d.seed, std::move(tasks),
                  std::move(queries), std::move(sealed), MetricConfig{"accuracy", 50},
                  d.dropped);
}

inline void validate_groups(const std::vector<std::vector<int>>& groups, int num_classes) {
  if (groups.empty()) throw SettingError("class groups must be nonempty");
  std::set<int> seen;
  for (const auto& g : groups) {
    if (g.empty()) throw SettingError("empty class group");
    for (int c : g) {
      if (c < 0 || c >= num_classes)
        throw SettingError("class " + std::to_string(c) + " out of range");
      if (!seen.insert(c).second)
        throw SettingError("class " + std::to_string(c) + " appears in two groups");
    }
  }
}

inline std::vector<std::vector<Instance>> partition_by_group(
    const std::vector<Instance>& instances, const std::vector<std::vector<int>>& groups) {
  std::map<int, size_t> group_of;
  for (size_t gi = 0; gi < groups.size(); ++gi)
    for (int c : groups[gi]) group_of[c] = gi;
  std::vector<std::vector<Instance>> parts(groups.size());
  for (const Instance& inst : instances) {
    auto it = group_of.find(inst.label);
    if (it == group_of.end()) continue;  // uncovered classes are dropped
    parts[it->second].push_back(inst);
  }
  for (size_t gi = 0; gi < parts.size(); ++gi)
    if (parts[gi].empty())
      throw SettingError("class group " + std::to_string(gi) + " has no instances");
  return parts;
}

inline void attach_level_graphs(ClassificationDraft& d, const Dataset& ds) {
  d.level = ds.level;
  if (ds.level == Level::graph) {
    for (const auto& g : ds.graphs)
      d.all_graphs.push_back(std::make_shared<const Graph>(g->stripped()));
  } else {
    if (!ds.graph) throw SettingError("dataset has no graph");
    d.shared_graph = std::make_shared<const Graph>(ds.graph->stripped());
  }
}

}  // namespace detail

// ---- Task-IL / Class-IL ------------------------------------------------

// Task-IL: pairwise-disjoint class groups, one task per group; queries carry
// the owning task's id. Applies uniformly to NC, LC, and GC instances.
inline Scenario build_task_il(const Dataset& ds, const std::vector<std::vector<int>>& groups,
                              SplitRatios split, u64 seed) {
  detail::validate_groups(groups, ds.num_classes);
  detail::ClassificationDraft d;
  d.setting = Setting::task_il;
  d.total_classes = ds.num_classes;
  d.seed = seed;
  d.task_instances = detail::partition_by_group(ds.instances, groups);
  d.class_sets = groups;
  detail::attach_level_graphs(d, ds);
  return detail::finish_classification(std::move(d), split);
}

// Class-IL: C_i is the union of the first i groups; task i's labeled data is
// the newly added group only, and queries carry no task id.
inline Scenario build_class_il(const Dataset& ds, const std::vector<std::vector<int>>& groups,
                               SplitRatios split, u64 seed) {
  detail::validate_groups(groups, ds.num_classes);
  detail::ClassificationDraft d;
  d.setting = Setting::class_il;
  d.total_classes = ds.num_classes;
  d.seed = seed;
  d.task_instances = detail::partition_by_group(ds.instances, groups);
  std::vector<int> cumulative;
  for (const auto& g : groups) {
    cumulative.insert(cumulative.end(), g.begin(), g.end());
    d.class_sets.push_back(cumulative);
  }
  detail::attach_level_graphs(d, ds);
  return detail::finish_classification(std::move(d), split);
}

// ---- Domain-IL (classification levels) ----------------------------------

// Instances are partitioned by their domain attribute; the class set is the
// full label set for every task. Instances without a domain are dropped and
// counted. `domain_order` empty = ascending distinct domains.
inline Scenario build_domain_il(const Dataset& ds, std::vector<int> domain_order,
                                SplitRatios split, u64 seed) {
  std::set<int> present;
  i64 dropped = 0;
  for (const Instance& inst : ds.instances) {
    if (inst.domain == kNoAttr)
      ++dropped;
    else
      present.insert(inst.domain);
  }
  if (present.empty()) throw SettingError("no instance has a domain attribute");
  if (domain_order.empty()) domain_order.assign(present.begin(), present.end());
  for (int dom : domain_order)
    if (!present.count(dom))
      throw SettingError("domain " + std::to_string(dom) + " not present in the data");

  detail::ClassificationDraft d;
  d.setting = Setting::domain_il;
  d.total_classes = ds.num_classes;
  d.seed = seed;
  d.dropped = dropped;
  d.task_instances.resize(domain_order.size());
  std::map<int, size_t> task_of;
  for (size_t i = 0; i < domain_order.size(); ++i) task_of[domain_order[i]] = i;
  for (const Instance& inst : ds.instances) {
    if (inst.domain == kNoAttr) continue;
    auto it = task_of.find(inst.domain);
    if (it != task_of.end()) d.task_instances[it->second].push_back(inst);
  }
  std::vector<int> all_classes(static_cast<size_t>(ds.num_classes));
  for (int c = 0; c < ds.num_classes; ++c) all_classes[static_cast<size_t>(c)] = c;
  d.class_sets.assign(domain_order.size(), all_classes);
  detail::attach_level_graphs(d, ds);
  return detail::finish_classification(std::move(d), split);
}

// ---- Time-IL (classification levels) -------------------------------------

// Node classification over a growing snapshot sequence: task i's labeled and
// test pools are the labeled nodes first present in snapshot i; the input
// graph for task i is snapshot i.
inline Scenario build_time_il_nc(const SnapshotSequence& snaps, SplitRatios split, u64 seed) {
  const Graph& fin = snaps.final_graph();
  if (!fin.has_labels()) throw SettingError("time-il nc: final graph has no node labels");
  detail::ClassificationDraft d;
  d.setting = Setting::time_il;
  d.level = Level::node;
  d.seed = seed;
  int max_label = -1;
  d.task_instances.resize(static_cast<size_t>(snaps.size()));
  for (i64 i = 0; i < snaps.size(); ++i) {
    auto [lo, hi] = snaps.new_node_range(i);
    if (lo == hi) throw SettingError("snapshot " + std::to_string(i) + " adds no nodes");
    for (i64 v = lo; v < hi; ++v) {
      int l = fin.label(v);
      if (l == kNoAttr) {
        ++d.dropped;
        continue;
      }
      max_label = std::max(max_label, l);
      d.task_instances[static_cast<size_t>(i)].push_back(Instance{NodeRef{v}, l});
    }
    d.per_task_graph.push_back(std::make_shared<const Graph>(snaps.snapshot(i).stripped()));
  }
  d.total_classes = max_label + 1;
  std::vector<int> all_classes(static_cast<size_t>(d.total_classes));
  for (int c = 0; c < d.total_classes; ++c) all_classes[static_cast<size_t>(c)] = c;
  d.class_sets.assign(static_cast<size_t>(snaps.size()), all_classes);
  return detail::finish_classification(std::move(d), split);
}

// Link classification over snapshots: instances are labeled edges, assigned
// to the snapshot where the edge first appears. Pairs must be expressed in
// the sequence's node-id space.
inline Scenario build_time_il_lc(const SnapshotSequence& snaps,
                                 const std::vector<Instance>& edge_instances,
                                 SplitRatios split, u64 seed) {
  const Graph& fin = snaps.final_graph();
  detail::ClassificationDraft d;
  d.setting = Setting::time_il;
  d.level = Level::link_classification;
  d.seed = seed;
  d.task_instances.resize(static_cast<size_t>(snaps.size()));
  int max_label = -1;
  for (const Instance& inst : edge_instances) {
    const auto& p = std::get<PairRef>(inst.payload);
    i64 slot = -1;
    for (i64 e = fin.csr().offsets[p.u]; e < fin.csr().offsets[p.u + 1]; ++e)
      if (fin.csr().indices[e] == p.v) {
        slot = e;
        break;
      }
    if (slot < 0) throw SettingError("time-il lc: instance edge not present in final graph");
    max_label = std::max(max_label, inst.label);
    d.task_instances[static_cast<size_t>(fin.edge_time(slot))].push_back(inst);
  }
  for (i64 i = 0; i < snaps.size(); ++i) {
    if (d.task_instances[static_cast<size_t>(i)].empty())
      throw SettingError("snapshot " + std::to_string(i) + " adds no labeled edges");
    d.per_task_graph.push_back(std::make_shared<const Graph>(snaps.snapshot(i).stripped()));
  }
  d.total_classes = max_label + 1;
  std::vector<int> all_classes(static_cast<size_t>(d.total_classes));
  for (int c = 0; c < d.total_classes; ++c) all_classes[static_cast<size_t>(c)] = c;
  d.class_sets.assign(static_cast<size_t>(snaps.size()), all_classes);
  return detail::finish_classification(std::move(d), split);
}

// Graph classification over time: graphs sorted by their time attribute and
// cut into n_tasks contiguous equal-count blocks; a task's graphs become
// visible only once the task starts.
inline Scenario build_time_il_gc(const Dataset& ds, i64 n_tasks, SplitRatios split, u64 seed) {
  if (ds.level != Level::graph) throw SettingError("time-il gc: dataset is not graph-level");
  if (n_tasks < 1) throw SettingError("time-il gc: need at least one task");
  std::vector<size_t> order;
  i64 dropped = 0;
  for (size_t k = 0; k < ds.instances.size(); ++k) {
    if (ds.instances[k].time == kNoAttr)
      ++dropped;
    else
      order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ds.instances[a].time < ds.instances[b].time;
  });
  if (static_cast<i64>(order.size()) < n_tasks)
    throw SettingError("time-il gc: fewer timed graphs than tasks");

  detail::ClassificationDraft d;
  d.setting = Setting::time_il;
  d.total_classes = ds.num_classes;
  d.seed = seed;
  d.dropped = dropped;
  d.task_instances.resize(static_cast<size_t>(n_tasks));
  d.graph_task.assign(ds.graphs.size(), -1);
  const i64 m = static_cast<i64>(order.size());
  for (i64 pos = 0; pos < m; ++pos) {
    i64 task = pos * n_tasks / m;
    size_t k = order[static_cast<size_t>(pos)];
    d.task_instances[static_cast<size_t>(task)].push_back(ds.instances[k]);
    d.graph_task[std::get<GraphRef>(ds.instances[k].payload).graph] = static_cast<int>(task);
  }
  std::vector<int> all_classes(static_cast<size_t>(ds.num_classes));
  for (int c = 0; c < ds.num_classes; ++c) all_classes[static_cast<size_t>(c)] = c;
  d.class_sets.assign(static_cast<size_t>(n_tasks), all_classes);
  detail::attach_level_graphs(d, ds);
  return detail::finish_classification(std::move(d), split);
}

// ---- negative sampling ----------------------------------------------------

// Uniform distinct ordered non-self pairs excluding `forbidden`, deterministic
// given the seed. Enumerates when the request covers a large share of the
// feasible set, otherwise rejection-samples.
inline std::vector<PairRef> sample_negative_pairs(const Graph& g,
                                                  const std::vector<PairRef>& forbidden,
                                                  i64 count, u64 seed) {
  const i64 n = g.num_nodes();
  if (count == 0) return {};
  if (count < 0) throw SamplingError("negative pair count must be >= 0");
  std::unordered_set<i64> banned;
  banned.reserve(forbidden.size() * 2);
  for (const PairRef& p : forbidden)
    if (p.u != p.v && p.u >= 0 && p.u < n && p.v >= 0 && p.v < n)
      banned.insert(p.u * n + p.v);
  const i64 feasible = n * (n - 1) - static_cast<i64>(banned.size());
  if (count > feasible)
    throw SamplingError("cannot sample " + std::to_string(count) + " negative pairs; only " +
                        std::to_string(feasible) + " non-edges exist");

  Rng rng(seed);
  std::vector<PairRef> out;
  out.reserve(static_cast<size_t>(count));
  if (count * 2 > feasible) {
    for (i64 u = 0; u < n; ++u)
      for (i64 v = 0; v < n; ++v)
        if (u != v && !banned.count(u * n + v)) out.push_back({u, v});
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(static_cast<size_t>(count));
    return out;
  }
  std::uniform_int_distribution<i64> pick(0, n - 1);
  std::unordered_set<i64> chosen;
  while (static_cast<i64>(out.size()) < count) {
    i64 u = pick(rng), v = pick(rng);
    if (u == v) continue;
    i64 key = u * n + v;
    if (banned.count(key) || !chosen.insert(key).second) continue;
    out.push_back({u, v});
  }
  return out;
}

namespace detail {

// Canonical (u < v) undirected negatives for the LP builders.
inline std::vector<PairRef> sample_undirected_negatives(i64 n,
                                                        const std::unordered_set<i64>& banned,
                                                        i64 count, Rng& rng) {
  const i64 feasible_all = n * (n - 1) / 2 - static_cast<i64>(banned.size());
  if (count > feasible_all)
    throw SamplingError("not enough non-edges for negative sampling");
  std::vector<PairRef> out;
  out.reserve(static_cast<size_t>(count));
  if (count * 2 > feasible_all) {
    for (i64 u = 0; u < n; ++u)
      for (i64 v = u + 1; v < n; ++v)
        if (!banned.count(u * n + v)) out.push_back({u, v});
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(static_cast<size_t>(count));
    return out;
  }
  std::uniform_int_distribution<i64> pick(0, n - 1);
  std::unordered_set<i64> chosen;
  while (static_cast<i64>(out.size()) < count) {
    i64 u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    i64 key = u * n + v;
    if (banned.count(key) || !chosen.insert(key).second) continue;
    out.push_back({u, v});
  }
  return out;
}

struct LpTaskDraft {
  std::vector<PairRef> val_pos, test_pos;
  i64 graph_nodes = 0;                  // node count of the visible graph
  std::vector<PairRef> visible_edges;   // observable = train positives
  std::vector<double> visible_weights;
};

inline Scenario finish_lp(Setting setting, const Graph& base, u64 seed,
                          std::vector<LpTaskDraft> drafts, double neg_ratio,
                          i64 test_neg_pool, const std::unordered_set<i64>& all_edges_banned,
                          int hits_k) {
  const i64 n = base.num_nodes();
  const i64 n_tasks = static_cast<i64>(drafts.size());

  // Shared test-negative pool, one per scenario.
  Rng pool_rng = make_rng(seed, kStreamScenario * 1000 + 200);
  i64 feasible = n * (n - 1) / 2 - static_cast<i64>(all_edges_banned.size());
  i64 pool_size = std::min<i64>(test_neg_pool, feasible);
  if (pool_size <= 0) throw SamplingError("no negative pairs available for the test pool");
  std::vector<PairRef> pool =
      sample_undirected_negatives(n, all_edges_banned, pool_size, pool_rng);

  std::vector<TaskSpec> tasks(static_cast<size_t>(n_tasks));
  struct PendingQuery {
    PairRef pair;
    int truth;
    int owner;
  };
  std::vector<PendingQuery> pending;
  for (i64 i = 0; i < n_tasks; ++i) {
    LpTaskDraft& t = drafts[static_cast<size_t>(i)];
    TaskSpec& spec = tasks[static_cast<size_t>(i)];
    spec.index = static_cast<int>(i);

    EdgeList el;
    el.num_nodes = t.graph_nodes;
    el.directed = false;
    el.edges.reserve(t.visible_edges.size());
    // Self-loops carried in the base set may reference nodes not yet present
    // under Time-IL; they are skipped until their node joins.
    std::vector<PairRef> present;
    for (size_t k = 0; k < t.visible_edges.size(); ++k) {
      const PairRef& p = t.visible_edges[k];
      if (p.u >= t.graph_nodes || p.v >= t.graph_nodes) continue;
      el.edges.emplace_back(p.u, p.v);
      el.weights.push_back(t.visible_weights[k]);
      present.push_back(p);
    }
    GraphInputs gi;
    if (base.has_features()) gi.features = base.features().topRows(t.graph_nodes);
    spec.visible.graph = std::make_shared<const Graph>(build_graph(el, std::move(gi)));

    spec.visible.lp_train.pos = std::move(present);
    Rng train_rng = make_rng(seed, kStreamScenario * 1000 + 300 + static_cast<u64>(i));
    spec.visible.lp_train.neg = sample_undirected_negatives(
        n, all_edges_banned,
        std::llround(neg_ratio * static_cast<double>(spec.visible.lp_train.pos.size())),
        train_rng);
    spec.visible.lp_val.pos = t.val_pos;
    Rng val_rng = make_rng(seed, kStreamScenario * 1000 + 400 + static_cast<u64>(i));
    spec.visible.lp_val.neg = sample_undirected_negatives(
        n, all_edges_banned,
        std::max<i64>(1, std::llround(neg_ratio * static_cast<double>(t.val_pos.size()))),
        val_rng);

    for (const PairRef& p : t.test_pos) pending.push_back({p, 1, static_cast<int>(i)});
  }
  for (const PairRef& p : pool) pending.push_back({p, 0, -1});

  std::vector<size_t> order(pending.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng qrng = make_rng(seed, kStreamScenario * 1000 + 500);
  std::shuffle(order.begin(), order.end(), qrng);

  std::vector<Query> queries(pending.size());
  SealedTruth sealed;
  sealed.entries.resize(pending.size());
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const PendingQuery& p = pending[order[pos]];
    queries[pos].id = static_cast<i64>(pos);
    queries[pos].payload = PairRef{p.pair.u, p.pair.v};
    sealed.entries[pos] = {p.truth, p.owner};
    if (p.owner >= 0) tasks[static_cast<size_t>(p.owner)].query_ids.push_back(static_cast<i64>(pos));
  }

  MetricConfig metrics;
  metrics.primary = "hits@" + std::to_string(hits_k);
  metrics.hits_k = hits_k;
  return Scenario(setting, Level::link_prediction, 2, seed, std::move(tasks),
                  std::move(queries), std::move(sealed), std::move(metrics));
}

// Canonical undirected edge list with per-slot weight/domain/time, self-loops
// partitioned out (they stay visible in every task and are never missing).
struct CanonicalEdges {
  std::vector<PairRef> pairs;
  std::vector<double> weights;
  std::vector<int> domains;
  std::vector<int> times;
  std::vector<PairRef> self_loops;
  std::vector<double> self_weights;
};

inline CanonicalEdges canonical_edges(const Graph& g) {
  CanonicalEdges out;
  for (i64 u = 0; u < g.num_nodes(); ++u)
    for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
      i64 v = g.csr().indices[e];
      if (u == v) {
        out.self_loops.push_back({u, v});
        out.self_weights.push_back(g.csr().values[e]);
        continue;
      }
      if (u > v) continue;
      out.pairs.push_back({u, v});
      out.weights.push_back(g.csr().values[e]);
      out.domains.push_back(g.has_edge_domains() ? g.edge_domain(e) : kNoAttr);
      out.times.push_back(g.has_edge_times() ? g.edge_time(e) : kNoAttr);
    }
  return out;
}

}  // namespace detail

// ---- Domain-IL link prediction --------------------------------------------

// Ground-truth edges are split per domain into base edges (shared by every
// task) and additional edges; task i's edge set is base + its domain's
// additional edges, with `missing_fraction` of the additional edges held out
// as val/test positives.
inline Scenario build_domain_il_lp(const Graph& g, double base_fraction,
                                   double missing_fraction, double neg_ratio, u64 seed,
                                   i64 test_neg_pool = 1000, int hits_k = 50) {
  if (base_fraction <= 0 || base_fraction >= 1)
    throw SettingError("base_fraction must be in (0,1)");
  if (missing_fraction <= 0 || missing_fraction >= 1)
    throw SettingError("missing_fraction must be in (0,1)");
  if (!g.has_edge_domains()) throw SettingError("domain-il lp: edges have no domains");

  detail::CanonicalEdges ce = detail::canonical_edges(g);
  std::map<int, std::vector<size_t>> by_domain;
  for (size_t i = 0; i < ce.pairs.size(); ++i) {
    if (ce.domains[i] == kNoAttr) continue;  // dropped
    by_domain[ce.domains[i]].push_back(i);
  }
  if (by_domain.empty()) throw SettingError("domain-il lp: no edge has a domain");

  const i64 n = g.num_nodes();
  std::unordered_set<i64> all_edges;
  for (const PairRef& p : ce.pairs) all_edges.insert(p.u * n + p.v);

  std::vector<PairRef> base_edges;
  std::vector<double> base_weights;
  for (size_t k = 0; k < ce.self_loops.size(); ++k) {
    base_edges.push_back(ce.self_loops[k]);
    base_weights.push_back(ce.self_weights[k]);
  }
  struct DomainSplit {
    std::vector<size_t> additional;
  };
  std::vector<DomainSplit> splits;
  u64 dom_index = 0;
  for (auto& [dom, idx] : by_domain) {
    if (idx.size() < 10)
      throw SettingError("domain " + std::to_string(dom) + " has fewer than 10 edges");
    Rng rng = make_rng(seed, kStreamScenario * 1000 + 100 + dom_index++);
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t n_base = static_cast<size_t>(base_fraction * static_cast<double>(idx.size()));
    DomainSplit ds;
    for (size_t k = 0; k < idx.size(); ++k) {
      if (k < n_base) {
        base_edges.push_back(ce.pairs[idx[k]]);
        base_weights.push_back(ce.weights[idx[k]]);
      } else {
        ds.additional.push_back(idx[k]);
      }
    }
    splits.push_back(std::move(ds));
  }

  std::vector<detail::LpTaskDraft> drafts;
  for (size_t t = 0; t < splits.size(); ++t) {
    const auto& add = splits[t].additional;
    i64 n_miss = std::llround(missing_fraction * static_cast<double>(add.size()));
    if (n_miss < 2)
      throw SettingError("task " + std::to_string(t) +
                         ": fewer than 2 missing edges; raise missing_fraction");
    detail::LpTaskDraft d;
    d.graph_nodes = n;
    i64 n_val = n_miss / 2;
    for (i64 k = 0; k < n_miss; ++k) {
      const PairRef& p = ce.pairs[add[static_cast<size_t>(k)]];
      (k < n_val ? d.val_pos : d.test_pos).push_back(p);
    }
    d.visible_edges = base_edges;
    d.visible_weights = base_weights;
    for (size_t k = static_cast<size_t>(n_miss); k < add.size(); ++k) {
      d.visible_edges.push_back(ce.pairs[add[k]]);
      d.visible_weights.push_back(ce.weights[add[k]]);
    }
    drafts.push_back(std::move(d));
  }

  return detail::finish_lp(Setting::domain_il, g, seed, std::move(drafts), neg_ratio,
                           test_neg_pool, all_edges, hits_k);
}

// ---- Time-IL link prediction ----------------------------------------------

// Task i sees the accumulated base edges plus snapshot i's new edges minus
// the missing set drawn from the new edges; after the task, every non-missing
// new edge joins the base set.
inline Scenario build_time_il_lp(const SnapshotSequence& snaps, double missing_fraction,
                                 double neg_ratio, u64 seed, i64 test_neg_pool = 1000,
                                 int hits_k = 50) {
  if (missing_fraction <= 0 || missing_fraction >= 1)
    throw SettingError("missing_fraction must be in (0,1)");
  const Graph& fin = snaps.final_graph();
  detail::CanonicalEdges ce = detail::canonical_edges(fin);
  const i64 n = fin.num_nodes();
  std::unordered_set<i64> all_edges;
  for (const PairRef& p : ce.pairs) all_edges.insert(p.u * n + p.v);

  std::vector<std::vector<size_t>> new_by_task(static_cast<size_t>(snaps.size()));
  for (size_t i = 0; i < ce.pairs.size(); ++i) {
    if (ce.times[i] == kNoAttr) throw SettingError("time-il lp: edge without join time");
    new_by_task[static_cast<size_t>(ce.times[i])].push_back(i);
  }

  std::vector<PairRef> base_edges;  // accumulated
  std::vector<double> base_weights;
  for (size_t k = 0; k < ce.self_loops.size(); ++k) {
    base_edges.push_back(ce.self_loops[k]);
    base_weights.push_back(ce.self_weights[k]);
  }
  std::vector<detail::LpTaskDraft> drafts;
  for (i64 i = 0; i < snaps.size(); ++i) {
    auto idx = new_by_task[static_cast<size_t>(i)];
    if (idx.empty()) throw SettingError("snapshot " + std::to_string(i) + " adds no edges");
    Rng rng = make_rng(seed, kStreamScenario * 1000 + 100 + static_cast<u64>(i));
    std::shuffle(idx.begin(), idx.end(), rng);
    i64 n_miss = std::llround(missing_fraction * static_cast<double>(idx.size()));
    if (n_miss < 2)
      throw SettingError("snapshot " + std::to_string(i) +
                         ": fewer than 2 missing edges; raise missing_fraction");
    detail::LpTaskDraft d;
    d.graph_nodes = snaps.num_nodes_at(i);
    i64 n_val = n_miss / 2;
    d.visible_edges = base_edges;
    d.visible_weights = base_weights;
    for (size_t k = 0; k < idx.size(); ++k) {
      const PairRef& p = ce.pairs[idx[k]];
      if (static_cast<i64>(k) < n_val)
        d.val_pos.push_back(p);
      else if (static_cast<i64>(k) < n_miss)
        d.test_pos.push_back(p);
      else {
        d.visible_edges.push_back(p);
        d.visible_weights.push_back(ce.weights[idx[k]]);
      }
    }
    // all non-missing new edges join the base set for later tasks
    for (size_t k = static_cast<size_t>(n_miss); k < idx.size(); ++k) {
      base_edges.push_back(ce.pairs[idx[k]]);
      base_weights.push_back(ce.weights[idx[k]]);
    }
    drafts.push_back(std::move(d));
  }

  return detail::finish_lp(Setting::time_il, fin, seed, std::move(drafts), neg_ratio,
                           test_neg_pool, all_edges, hits_k);
}

}  // namespace grapal
