// graph.hpp -- CSR graph containers, adjacency normalization, degree
// features, and snapshot sequences for time-incremental data.
//
// Graphs are immutable after construction and safe to share across threads.
// Node ids are dense integers 0..n-1; feature/label storage is held through
// shared_ptr so snapshot views alias the same buffers instead of copying.

#pragma once

#include "grapal/common.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace grapal {

// Plain CSR matrix with a deterministic row-major multiply. Used for the
// normalized adjacency; reduction order is fixed so training stays bitwise
// reproducible.
struct Csr {
  i64 rows = 0;
  i64 cols = 0;
  std::vector<i64> offsets;  // rows + 1
  std::vector<i64> indices;
  std::vector<double> values;

  i64 nnz() const { return static_cast<i64>(indices.size()); }

  Mat multiply(const Eigen::Ref<const Mat>& x) const {
    if (x.rows() != cols) throw ShapeError("csr multiply: dimension mismatch");
    Mat out = Mat::Zero(rows, x.cols());
    for (i64 r = 0; r < rows; ++r)
      for (i64 e = offsets[r]; e < offsets[r + 1]; ++e)
        out.row(r) += values[e] * x.row(indices[e]);
    return out;
  }

  Csr transposed() const {
    Csr t;
    t.rows = cols;
    t.cols = rows;
    t.offsets.assign(cols + 1, 0);
    for (i64 c : indices) ++t.offsets[c + 1];
    std::partial_sum(t.offsets.begin(), t.offsets.end(), t.offsets.begin());
    t.indices.resize(indices.size());
    t.values.resize(values.size());
    std::vector<i64> cursor(t.offsets.begin(), t.offsets.end() - 1);
    for (i64 r = 0; r < rows; ++r)
      for (i64 e = offsets[r]; e < offsets[r + 1]; ++e) {
        i64 slot = cursor[indices[e]]++;
        t.indices[slot] = r;
        t.values[slot] = values[e];
      }
    return t;
  }
};

// Edge-list description consumed by build_graph. Parallel attribute vectors
// are either empty or exactly edges.size() long.
struct EdgeList {
  i64 num_nodes = 0;
  bool directed = false;
  std::vector<std::pair<i64, i64>> edges;
  std::vector<double> weights;  // empty = unweighted (1.0 each)
  std::vector<int> domains;
  std::vector<int> times;
};

struct GraphInputs {
  Mat features;                  // 0x0 = none
  std::vector<int> node_labels;  // empty = none
  std::vector<int> node_domains;
  std::vector<int> node_times;
};

class Graph {
 public:
  Graph() = default;

  i64 num_nodes() const { return num_nodes_; }
  i64 num_edges() const { return csr_.nnz(); }
  bool directed() const { return directed_; }

  const Csr& csr() const { return csr_; }
  std::span<const i64> row_offsets() const { return csr_.offsets; }
  std::span<const i64> col_indices() const { return csr_.indices; }

  bool has_edge_weights() const { return has_weights_; }
  double edge_weight(i64 e) const { return csr_.values[e]; }
  std::span<const double> edge_weights() const { return csr_.values; }

  bool has_edge(i64 u, i64 v) const {
    if (u < 0 || u >= num_nodes_ || v < 0 || v >= num_nodes_) return false;
    auto begin = csr_.indices.begin() + csr_.offsets[u];
    auto end = csr_.indices.begin() + csr_.offsets[u + 1];
    return std::binary_search(begin, end, v);
  }

  i64 feature_dim() const { return features_ ? features_->cols() : 0; }
  bool has_features() const { return feature_dim() > 0; }
  // Rows beyond num_nodes may exist in the shared store (snapshot views).
  Eigen::Block<const Mat> features() const {
    return features_->topRows(num_nodes_);
  }
  const std::shared_ptr<const Mat>& feature_store() const { return features_; }

  bool has_labels() const { return labels_ && !labels_->empty(); }
  int label(i64 v) const { return (*labels_)[static_cast<size_t>(v)]; }
  const std::shared_ptr<const std::vector<int>>& label_store() const { return labels_; }

  bool has_node_domains() const { return node_domains_ && !node_domains_->empty(); }
  int node_domain(i64 v) const { return (*node_domains_)[static_cast<size_t>(v)]; }
  bool has_node_times() const { return node_times_ && !node_times_->empty(); }
  int node_time(i64 v) const { return (*node_times_)[static_cast<size_t>(v)]; }

  bool has_edge_domains() const { return !edge_domains_.empty(); }
  int edge_domain(i64 e) const { return edge_domains_[static_cast<size_t>(e)]; }
  bool has_edge_times() const { return !edge_times_.empty(); }
  int edge_time(i64 e) const { return edge_times_[static_cast<size_t>(e)]; }

  // Edge list as stored (one entry per CSR slot, both directions for
  // undirected graphs).
  std::vector<std::tuple<i64, i64, double>> edge_list() const {
    std::vector<std::tuple<i64, i64, double>> out;
    out.reserve(static_cast<size_t>(num_edges()));
    for (i64 u = 0; u < num_nodes_; ++u)
      for (i64 e = csr_.offsets[u]; e < csr_.offsets[u + 1]; ++e)
        out.emplace_back(u, csr_.indices[e], csr_.values[e]);
    return out;
  }

  // Trainer-visible copy: structure and features only, every label/attribute
  // channel dropped. Shares the feature store.
  Graph stripped() const {
    Graph g;
    g.num_nodes_ = num_nodes_;
    g.directed_ = directed_;
    g.csr_ = csr_;
    g.has_weights_ = has_weights_;
    g.features_ = features_;
    return g;
  }

 private:
  friend Graph build_graph(const EdgeList&, GraphInputs);
  friend class SnapshotSequence;

  i64 num_nodes_ = 0;
  bool directed_ = false;
  bool has_weights_ = false;
  Csr csr_;
  std::shared_ptr<const Mat> features_;
  std::shared_ptr<const std::vector<int>> labels_;
  std::shared_ptr<const std::vector<int>> node_domains_;
  std::shared_ptr<const std::vector<int>> node_times_;
  std::vector<int> edge_domains_;  // per CSR slot
  std::vector<int> edge_times_;
};

// Builds a CSR graph from an edge list. Column indices are sorted per row,
// duplicate edges collapse with summed weights, and undirected inputs are
// symmetrized before collapsing. Integer edge attributes take the maximum
// across collapsed duplicates (later-task-wins for domain/time columns).
inline Graph build_graph(const EdgeList& in, GraphInputs inputs = {}) {
  const i64 n = in.num_nodes;
  if (n < 0) throw IndexError("build_graph: negative node count");
  const size_t m = in.edges.size();
  auto check_len = [&](size_t len, const char* what) {
    if (len != 0 && len != m)
      throw ShapeError(std::string("build_graph: ") + what + " length mismatch");
  };
  check_len(in.weights.size(), "edge weight");
  check_len(in.domains.size(), "edge domain");
  check_len(in.times.size(), "edge time");
  if (inputs.features.size() > 0 && inputs.features.rows() != n)
    throw ShapeError("build_graph: feature row count != num_nodes");
  auto check_nodes = [&](const std::vector<int>& v, const char* what) {
    if (!v.empty() && static_cast<i64>(v.size()) != n)
      throw ShapeError(std::string("build_graph: ") + what + " length != num_nodes");
  };
  check_nodes(inputs.node_labels, "node label");
  check_nodes(inputs.node_domains, "node domain");
  check_nodes(inputs.node_times, "node time");

  struct Slot {
    i64 u, v;
    double w;
    int domain, time;
  };
  std::vector<Slot> slots;
  slots.reserve(in.directed ? m : 2 * m);
  for (size_t i = 0; i < m; ++i) {
    auto [u, v] = in.edges[i];
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw IndexError("build_graph: edge endpoint out of range");
    double w = in.weights.empty() ? 1.0 : in.weights[i];
    int d = in.domains.empty() ? kNoAttr : in.domains[i];
    int t = in.times.empty() ? kNoAttr : in.times[i];
    slots.push_back({u, v, w, d, t});
    if (!in.directed && u != v) slots.push_back({v, u, w, d, t});
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });

  Graph g;
  g.num_nodes_ = n;
  g.directed_ = in.directed;
  g.has_weights_ = !in.weights.empty();
  g.csr_.rows = g.csr_.cols = n;
  g.csr_.offsets.assign(n + 1, 0);
  const bool keep_domain = !in.domains.empty();
  const bool keep_time = !in.times.empty();
  for (size_t i = 0; i < slots.size();) {
    Slot merged = slots[i];
    size_t j = i + 1;
    while (j < slots.size() && slots[j].u == merged.u && slots[j].v == merged.v) {
      merged.w += slots[j].w;
      merged.domain = std::max(merged.domain, slots[j].domain);
      merged.time = std::max(merged.time, slots[j].time);
      ++j;
    }
    g.csr_.indices.push_back(merged.v);
    g.csr_.values.push_back(merged.w);
    if (keep_domain) g.edge_domains_.push_back(merged.domain);
    if (keep_time) g.edge_times_.push_back(merged.time);
    ++g.csr_.offsets[merged.u + 1];
    i = j;
  }
  std::partial_sum(g.csr_.offsets.begin(), g.csr_.offsets.end(), g.csr_.offsets.begin());

  if (inputs.features.size() > 0)
    g.features_ = std::make_shared<const Mat>(std::move(inputs.features));
  if (!inputs.node_labels.empty())
    g.labels_ = std::make_shared<const std::vector<int>>(std::move(inputs.node_labels));
  if (!inputs.node_domains.empty())
    g.node_domains_ = std::make_shared<const std::vector<int>>(std::move(inputs.node_domains));
  if (!inputs.node_times.empty())
    g.node_times_ = std::make_shared<const std::vector<int>>(std::move(inputs.node_times));
  return g;
}

// Symmetrically normalized adjacency with self-loops:
// entry (i,j) = w(i,j) / sqrt(d_i d_j) over the edges of A+I, where d is the
// weighted degree of A+I. Directed graphs are symmetrized (weights of the two
// orientations sum); a self-loop already present keeps its weight plus 1.
inline Csr normalized_adjacency(const Graph& g) {
  const i64 n = g.num_nodes();
  // Collect A (+ transpose when directed) + I.
  std::vector<std::vector<std::pair<i64, double>>> rows(static_cast<size_t>(n));
  for (i64 u = 0; u < n; ++u)
    for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
      i64 v = g.csr().indices[e];
      double w = g.csr().values[e];
      rows[u].emplace_back(v, w);
      if (g.directed() && u != v) rows[v].emplace_back(u, w);
    }
  for (i64 u = 0; u < n; ++u) rows[u].emplace_back(u, 1.0);

  Csr out;
  out.rows = out.cols = n;
  out.offsets.assign(n + 1, 0);
  std::vector<double> degree(static_cast<size_t>(n), 0.0);
  for (i64 u = 0; u < n; ++u) {
    auto& r = rows[u];
    std::sort(r.begin(), r.end());
    size_t k = 0;
    for (size_t i = 0; i < r.size();) {
      size_t j = i + 1;
      double w = r[i].second;
      while (j < r.size() && r[j].first == r[i].first) w += r[j++].second;
      r[k++] = {r[i].first, w};
      degree[u] += w;
      i = j;
    }
    r.resize(k);
    out.offsets[u + 1] = out.offsets[u] + static_cast<i64>(k);
  }
  out.indices.reserve(out.offsets[n]);
  out.values.reserve(out.offsets[n]);
  for (i64 u = 0; u < n; ++u)
    for (auto [v, w] : rows[u]) {
      out.indices.push_back(v);
      out.values.push_back(w / std::sqrt(degree[u] * degree[v]));
    }
  return out;
}

// (in-degree, out-degree) per node, counting stored CSR slots. For undirected
// graphs both columns coincide.
inline Mat degree_features(const Graph& g) {
  Mat f = Mat::Zero(g.num_nodes(), 2);
  for (i64 u = 0; u < g.num_nodes(); ++u)
    for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
      f(g.csr().indices[e], 0) += 1.0;  // in
      f(u, 1) += 1.0;                   // out
    }
  return f;
}

// A growth-only sequence of graph snapshots over a shared node-id space.
// Nodes are ordered by join snapshot (V^(i) is a prefix of the id range) and
// every edge records the snapshot at which it appears. Feature/label storage
// is shared between the sequence and every view it hands out.
class SnapshotSequence {
 public:
  // `final_graph` must carry edge times in [0, node_counts.size()) and node
  // ids ordered so that node_counts[i] is |V^(i)|.
  static SnapshotSequence from_final(Graph final_graph, std::vector<i64> node_counts) {
    if (node_counts.empty()) throw SettingError("snapshot sequence: no snapshots");
    if (!final_graph.has_edge_times())
      throw SettingError("snapshot sequence: final graph lacks edge join times");
    if (node_counts.back() != final_graph.num_nodes())
      throw ShapeError("snapshot sequence: final node count mismatch");
    for (size_t i = 0; i + 1 < node_counts.size(); ++i)
      if (node_counts[i] > node_counts[i + 1])
        throw SettingError("snapshot sequence: node sets not monotone");
    const i64 s = static_cast<i64>(node_counts.size());
    const auto& csr = final_graph.csr();
    for (i64 u = 0; u < final_graph.num_nodes(); ++u)
      for (i64 e = csr.offsets[u]; e < csr.offsets[u + 1]; ++e) {
        int t = final_graph.edge_time(e);
        if (t < 0 || t >= s) throw SettingError("snapshot sequence: edge time out of range");
        if (u >= node_counts[t] || csr.indices[e] >= node_counts[t])
          throw SettingError("snapshot sequence: edge joins before its endpoints");
      }
    SnapshotSequence seq;
    seq.final_ = std::move(final_graph);
    seq.node_counts_ = std::move(node_counts);
    return seq;
  }

  i64 size() const { return static_cast<i64>(node_counts_.size()); }
  const Graph& final_graph() const { return final_; }
  i64 num_nodes_at(i64 i) const { return node_counts_[static_cast<size_t>(i)]; }

  // Snapshot i as a Graph; feature/label stores are shared, only the CSR is
  // restricted to edges joined by snapshot i.
  Graph snapshot(i64 i) const {
    if (i < 0 || i >= size()) throw IndexError("snapshot index out of range");
    Graph g;
    g.num_nodes_ = node_counts_[static_cast<size_t>(i)];
    g.directed_ = final_.directed_;
    g.has_weights_ = final_.has_weights_;
    g.features_ = final_.features_;
    g.labels_ = final_.labels_;
    g.node_domains_ = final_.node_domains_;
    g.node_times_ = final_.node_times_;
    g.csr_.rows = g.csr_.cols = g.num_nodes_;
    g.csr_.offsets.assign(g.num_nodes_ + 1, 0);
    const auto& csr = final_.csr_;
    for (i64 u = 0; u < g.num_nodes_; ++u) {
      for (i64 e = csr.offsets[u]; e < csr.offsets[u + 1]; ++e)
        if (final_.edge_time(e) <= i) {
          g.csr_.indices.push_back(csr.indices[e]);
          g.csr_.values.push_back(csr.values[e]);
          g.edge_times_.push_back(final_.edge_times_[e]);
          if (final_.has_edge_domains()) g.edge_domains_.push_back(final_.edge_domains_[e]);
          ++g.csr_.offsets[u + 1];
        }
    }
    std::partial_sum(g.csr_.offsets.begin(), g.csr_.offsets.end(), g.csr_.offsets.begin());
    return g;
  }

  // Global ids of nodes first present in snapshot i: [prev_count, count).
  std::pair<i64, i64> new_node_range(i64 i) const {
    if (i < 0 || i >= size()) throw IndexError("snapshot index out of range");
    i64 lo = i == 0 ? 0 : node_counts_[static_cast<size_t>(i - 1)];
    return {lo, node_counts_[static_cast<size_t>(i)]};
  }

  // CSR slot ids (in the final graph) of edges first present in snapshot i.
  std::vector<i64> new_edge_slots(i64 i) const {
    if (i < 0 || i >= size()) throw IndexError("snapshot index out of range");
    std::vector<i64> out;
    for (i64 e = 0; e < final_.num_edges(); ++e)
      if (final_.edge_time(e) == i) out.push_back(e);
    return out;
  }

 private:
  Graph final_;
  std::vector<i64> node_counts_;
};

inline Graph snapshot_view(const SnapshotSequence& s, i64 i) { return s.snapshot(i); }

// Rebuilds `g` as a snapshot sequence with `n_snapshots` groups. Join times
// come from node times when present, otherwise from the earliest incident
// edge time; edges join at max(endpoint joins, own time group). Distinct raw
// time values are bucketed into contiguous groups of near-equal count. Nodes
// are reordered by (join, id); `remap_out`, when given, receives old->new ids.
inline SnapshotSequence build_snapshots(const Graph& g, i64 n_snapshots,
                                        std::vector<i64>* remap_out = nullptr) {
  const i64 n = g.num_nodes();
  if (!g.has_node_times() && !g.has_edge_times())
    throw SettingError("build_snapshots: graph has no time attributes");

  // Bucket distinct raw time values into contiguous groups.
  std::vector<int> raw;
  if (g.has_node_times())
    for (i64 v = 0; v < n; ++v) {
      if (g.node_time(v) == kNoAttr) throw SettingError("build_snapshots: node without time");
      raw.push_back(g.node_time(v));
    }
  if (g.has_edge_times())
    for (i64 e = 0; e < g.num_edges(); ++e) {
      if (g.edge_time(e) == kNoAttr) throw SettingError("build_snapshots: edge without time");
      raw.push_back(g.edge_time(e));
    }
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  const i64 distinct = static_cast<i64>(raw.size());
  if (n_snapshots <= 0) n_snapshots = distinct;
  if (n_snapshots > distinct)
    throw SettingError("build_snapshots: more snapshots than distinct time values");
  auto group_of = [&](int t) {
    i64 pos = std::lower_bound(raw.begin(), raw.end(), t) - raw.begin();
    return pos * n_snapshots / distinct;
  };

  // Edge join groups on the raw graph.
  std::vector<i64> edge_group(static_cast<size_t>(g.num_edges()), -1);
  if (g.has_edge_times())
    for (i64 e = 0; e < g.num_edges(); ++e) edge_group[e] = group_of(g.edge_time(e));

  std::vector<i64> node_group(static_cast<size_t>(n), -1);
  if (g.has_node_times()) {
    for (i64 v = 0; v < n; ++v) node_group[v] = group_of(g.node_time(v));
  } else {
    for (i64 u = 0; u < n; ++u)
      for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
        i64 v = g.csr().indices[e];
        i64 grp = edge_group[e];
        if (node_group[u] < 0 || grp < node_group[u]) node_group[u] = grp;
        if (node_group[v] < 0 || grp < node_group[v]) node_group[v] = grp;
      }
    for (i64 v = 0; v < n; ++v)
      if (node_group[v] < 0) node_group[v] = 0;  // isolated: present from the start
  }

  // Reorder nodes by (join group, id).
  std::vector<i64> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](i64 a, i64 b) { return node_group[a] < node_group[b]; });
  std::vector<i64> remap(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) remap[order[i]] = i;
  if (remap_out) *remap_out = remap;

  std::vector<i64> counts(static_cast<size_t>(n_snapshots), 0);
  for (i64 v = 0; v < n; ++v) ++counts[node_group[v]];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  EdgeList el;
  el.num_nodes = n;
  el.directed = g.directed();
  for (i64 u = 0; u < n; ++u)
    for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
      i64 v = g.csr().indices[e];
      if (!g.directed() && v < u) continue;  // undirected slots are mirrored
      i64 join = std::max(node_group[u], node_group[v]);
      if (edge_group[e] >= 0) join = std::max(join, edge_group[e]);
      el.edges.emplace_back(remap[u], remap[v]);
      el.weights.push_back(g.csr().values[e]);
      el.times.push_back(static_cast<int>(join));
      if (g.has_edge_domains()) el.domains.push_back(g.edge_domain(e));
    }

  GraphInputs inputs;
  if (g.has_features()) {
    Mat f(n, g.feature_dim());
    for (i64 v = 0; v < n; ++v) f.row(remap[v]) = g.features().row(v);
    inputs.features = std::move(f);
  }
  auto permute = [&](auto getter, bool present) {
    std::vector<int> out;
    if (!present) return out;
    out.resize(static_cast<size_t>(n));
    for (i64 v = 0; v < n; ++v) out[remap[v]] = getter(v);
    return out;
  };
  inputs.node_labels = permute([&](i64 v) { return g.label(v); }, g.has_labels());
  inputs.node_domains = permute([&](i64 v) { return g.node_domain(v); }, g.has_node_domains());
  inputs.node_times = permute([&](i64 v) { return g.node_time(v); }, g.has_node_times());

  Graph final_graph = build_graph(el, std::move(inputs));
  return SnapshotSequence::from_final(std::move(final_graph), std::move(counts));
}

}  // namespace grapal
