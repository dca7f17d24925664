// dataset.hpp -- on-disk dataset directories (CSV, header row required) and
// the in-memory Dataset carrier handed to scenario constructors.
//
// Directory layout:
//   edges.csv          src,dst[,weight][,label][,domain][,time]
//   node_features.csv  node_id,f0,f1,...
//   node_labels.csv    node_id,label[,domain][,time]
// graph-level datasets instead use:
//   graphs/<k>.edges.csv, graphs/<k>.features.csv
//   graph_labels.csv   graph_id,label[,domain][,time]
//
// Arbitrary node/graph ids are remapped to dense 0..n-1 (sorted by original
// id) and the mapping is kept for report traceability. Empty cells in
// optional columns mean "attribute missing"; such instances are dropped from
// scenarios and counted. Class labels are remapped to dense 0..C-1 in sorted
// original order.

#pragma once

#include "grapal/graph.hpp"
#include "grapal/types.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace grapal {

struct Dataset {
  Level level = Level::node;
  std::shared_ptr<const Graph> graph;                // node / lc / lp
  std::vector<std::shared_ptr<const Graph>> graphs;  // gc
  std::vector<Instance> instances;                   // labeled instances (empty for lp)
  int num_classes = 0;
  std::vector<int> label_values;  // dense class -> original label value
  std::vector<i64> id_map;        // dense node/graph id -> original id (empty = identity)
  i64 dropped_rows = 0;           // malformed/unmappable rows skipped at ingestion

  int dense_label(int original) const {
    auto it = std::lower_bound(label_values.begin(), label_values.end(), original);
    if (it == label_values.end() || *it != original)
      throw SettingError("unknown class label " + std::to_string(original));
    return static_cast<int>(it - label_values.begin());
  }
};

namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file " + path.string());
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_line(line));
  }
  return t;
}

inline i64 to_i64(const std::string& s, const std::string& ctx) {
  i64 v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError("bad integer '" + s + "' in " + ctx);
  return v;
}

inline double to_double(const std::string& s, const std::string& ctx) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad number '" + s + "' in " + ctx);
  }
}

// Optional attribute cell: absent column or empty cell -> kNoAttr.
inline int attr_cell(const std::vector<std::string>& row, int col, const std::string& ctx) {
  if (col < 0 || row[col].empty()) return kNoAttr;
  return static_cast<int>(to_i64(row[col], ctx));
}

}  // namespace csv

namespace detail {

inline std::vector<int> dense_labels(std::vector<int>& raw_sorted_unique,
                                     const std::vector<int>& raw) {
  raw_sorted_unique = raw;
  std::sort(raw_sorted_unique.begin(), raw_sorted_unique.end());
  raw_sorted_unique.erase(std::unique(raw_sorted_unique.begin(), raw_sorted_unique.end()),
                          raw_sorted_unique.end());
  std::vector<int> dense(raw.size());
  for (size_t i = 0; i < raw.size(); ++i)
    dense[i] = static_cast<int>(std::lower_bound(raw_sorted_unique.begin(),
                                                 raw_sorted_unique.end(), raw[i]) -
                                raw_sorted_unique.begin());
  return dense;
}

// Reads one edges/features/labels triple into a Graph plus raw label rows.
struct NodeLevelRaw {
  EdgeList edges;
  std::vector<int> edge_labels_raw;  // parallel to edges (kNoAttr = unlabeled)
  Mat features;
  std::vector<std::pair<i64, int>> node_label_rows;  // dense node id -> raw label
  std::vector<std::pair<i64, int>> node_domain_rows;
  std::vector<std::pair<i64, int>> node_time_rows;
  std::vector<i64> id_map;
};

inline NodeLevelRaw read_node_level_raw(const std::filesystem::path& dir, bool directed) {
  namespace fs = std::filesystem;
  NodeLevelRaw raw;
  csv::Table edges = csv::read_table(dir / "edges.csv");
  const int c_src = edges.column("src"), c_dst = edges.column("dst");
  if (c_src < 0 || c_dst < 0) throw IoError("edges.csv needs src,dst columns");
  const int c_w = edges.column("weight"), c_lab = edges.column("label");
  const int c_dom = edges.column("domain"), c_time = edges.column("time");

  std::vector<i64> ids;
  for (const auto& row : edges.rows) {
    ids.push_back(csv::to_i64(row[c_src], "edges.csv"));
    ids.push_back(csv::to_i64(row[c_dst], "edges.csv"));
  }
  csv::Table labels;
  bool have_labels = fs::exists(dir / "node_labels.csv");
  if (have_labels) {
    labels = csv::read_table(dir / "node_labels.csv");
    if (labels.column("node_id") < 0 || labels.column("label") < 0)
      throw IoError("node_labels.csv needs node_id,label columns");
    for (const auto& row : labels.rows)
      ids.push_back(csv::to_i64(row[labels.column("node_id")], "node_labels.csv"));
  }
  csv::Table feats;
  bool have_feats = fs::exists(dir / "node_features.csv");
  if (have_feats) {
    feats = csv::read_table(dir / "node_features.csv");
    if (feats.column("node_id") < 0) throw IoError("node_features.csv needs node_id column");
    for (const auto& row : feats.rows)
      ids.push_back(csv::to_i64(row[feats.column("node_id")], "node_features.csv"));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  raw.id_map = ids;
  auto dense = [&](i64 orig) {
    return static_cast<i64>(std::lower_bound(ids.begin(), ids.end(), orig) - ids.begin());
  };
  const i64 n = static_cast<i64>(ids.size());

  raw.edges.num_nodes = n;
  raw.edges.directed = directed;
  for (const auto& row : edges.rows) {
    raw.edges.edges.emplace_back(dense(csv::to_i64(row[c_src], "edges.csv")),
                                 dense(csv::to_i64(row[c_dst], "edges.csv")));
    if (c_w >= 0) raw.edges.weights.push_back(csv::to_double(row[c_w], "edges.csv"));
    if (c_dom >= 0) raw.edges.domains.push_back(csv::attr_cell(row, c_dom, "edges.csv"));
    if (c_time >= 0) raw.edges.times.push_back(csv::attr_cell(row, c_time, "edges.csv"));
    raw.edge_labels_raw.push_back(csv::attr_cell(row, c_lab, "edges.csv"));
  }

  if (have_feats) {
    const i64 d = static_cast<i64>(feats.header.size()) - 1;
    raw.features = Mat::Zero(n, d);
    const int c_id = feats.column("node_id");
    for (const auto& row : feats.rows) {
      i64 v = dense(csv::to_i64(row[c_id], "node_features.csv"));
      i64 j = 0;
      for (size_t c = 0; c < row.size(); ++c) {
        if (static_cast<int>(c) == c_id) continue;
        raw.features(v, j++) = csv::to_double(row[c], "node_features.csv");
      }
    }
  }
  if (have_labels) {
    const int c_id = labels.column("node_id"), c_l = labels.column("label");
    const int c_d = labels.column("domain"), c_t = labels.column("time");
    for (const auto& row : labels.rows) {
      i64 v = dense(csv::to_i64(row[c_id], "node_labels.csv"));
      raw.node_label_rows.emplace_back(v, static_cast<int>(csv::to_i64(row[c_l], "node_labels.csv")));
      if (c_d >= 0) raw.node_domain_rows.emplace_back(v, csv::attr_cell(row, c_d, "node_labels.csv"));
      if (c_t >= 0) raw.node_time_rows.emplace_back(v, csv::attr_cell(row, c_t, "node_labels.csv"));
    }
  }
  return raw;
}

}  // namespace detail

struct ReadOptions {
  Level level = Level::node;
  bool directed = false;
  // When the dataset has no feature matrix, in/out-degrees are used as node
  // features (set false to leave features empty instead).
  bool degree_features_fallback = true;
};

inline Dataset read_dataset_dir(const std::filesystem::path& dir, const ReadOptions& opt) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) throw IoError("dataset directory not found: " + dir.string());
  Dataset ds;
  ds.level = opt.level;

  if (opt.level == Level::graph) {
    csv::Table glab = csv::read_table(dir / "graph_labels.csv");
    const int c_id = glab.column("graph_id"), c_l = glab.column("label");
    if (c_id < 0 || c_l < 0) throw IoError("graph_labels.csv needs graph_id,label columns");
    const int c_d = glab.column("domain"), c_t = glab.column("time");
    std::vector<i64> gids;
    for (const auto& row : glab.rows) gids.push_back(csv::to_i64(row[c_id], "graph_labels.csv"));
    std::sort(gids.begin(), gids.end());
    gids.erase(std::unique(gids.begin(), gids.end()), gids.end());
    ds.id_map = gids;

    std::vector<int> raw_labels(gids.size(), 0);
    std::vector<int> domains(gids.size(), kNoAttr), times(gids.size(), kNoAttr);
    for (const auto& row : glab.rows) {
      i64 k = std::lower_bound(gids.begin(), gids.end(), csv::to_i64(row[c_id], "g")) - gids.begin();
      raw_labels[k] = static_cast<int>(csv::to_i64(row[c_l], "graph_labels.csv"));
      domains[k] = csv::attr_cell(row, c_d, "graph_labels.csv");
      times[k] = csv::attr_cell(row, c_t, "graph_labels.csv");
    }
    std::vector<int> dense = detail::dense_labels(ds.label_values, raw_labels);
    ds.num_classes = static_cast<int>(ds.label_values.size());

    for (size_t k = 0; k < gids.size(); ++k) {
      fs::path epath = dir / "graphs" / (std::to_string(gids[k]) + ".edges.csv");
      csv::Table et = csv::read_table(epath);
      const int cs = et.column("src"), cd = et.column("dst"), cw = et.column("weight");
      if (cs < 0 || cd < 0) throw IoError(epath.string() + " needs src,dst columns");
      std::vector<i64> nids;
      for (const auto& row : et.rows) {
        nids.push_back(csv::to_i64(row[cs], epath.string()));
        nids.push_back(csv::to_i64(row[cd], epath.string()));
      }
      fs::path fpath = dir / "graphs" / (std::to_string(gids[k]) + ".features.csv");
      csv::Table ft;
      bool have_f = fs::exists(fpath);
      if (have_f) {
        ft = csv::read_table(fpath);
        if (ft.column("node_id") < 0) throw IoError(fpath.string() + " needs node_id column");
        for (const auto& row : ft.rows)
          nids.push_back(csv::to_i64(row[ft.column("node_id")], fpath.string()));
      }
      std::sort(nids.begin(), nids.end());
      nids.erase(std::unique(nids.begin(), nids.end()), nids.end());
      auto local = [&](i64 orig) {
        return static_cast<i64>(std::lower_bound(nids.begin(), nids.end(), orig) - nids.begin());
      };
      EdgeList el;
      el.num_nodes = static_cast<i64>(nids.size());
      el.directed = opt.directed;
      for (const auto& row : et.rows) {
        el.edges.emplace_back(local(csv::to_i64(row[cs], "e")), local(csv::to_i64(row[cd], "e")));
        if (cw >= 0) el.weights.push_back(csv::to_double(row[cw], epath.string()));
      }
      GraphInputs gi;
      if (have_f) {
        const int c_nid = ft.column("node_id");
        gi.features = Mat::Zero(el.num_nodes, static_cast<i64>(ft.header.size()) - 1);
        for (const auto& row : ft.rows) {
          i64 v = local(csv::to_i64(row[c_nid], "f"));
          i64 j = 0;
          for (size_t c = 0; c < row.size(); ++c) {
            if (static_cast<int>(c) == c_nid) continue;
            gi.features(v, j++) = csv::to_double(row[c], fpath.string());
          }
        }
      }
      Graph g = build_graph(el, std::move(gi));
      if (!g.has_features() && opt.degree_features_fallback) {
        Mat f = degree_features(g);
        EdgeList el2 = el;  // rebuild with degree features attached
        GraphInputs gi2;
        gi2.features = std::move(f);
        g = build_graph(el2, std::move(gi2));
      }
      ds.graphs.push_back(std::make_shared<const Graph>(std::move(g)));
      ds.instances.push_back(Instance{GraphRef{static_cast<i64>(k)}, dense[k], domains[k], times[k]});
    }
    return ds;
  }

  // Node / link levels.
  detail::NodeLevelRaw raw = detail::read_node_level_raw(dir, opt.directed);
  ds.id_map = raw.id_map;
  const i64 n = raw.edges.num_nodes;

  GraphInputs gi;
  std::vector<int> node_labels, node_domains, node_times;
  std::vector<int> raw_node_labels;
  if (!raw.node_label_rows.empty()) {
    node_labels.assign(static_cast<size_t>(n), kNoAttr);
    for (auto [v, l] : raw.node_label_rows) node_labels[static_cast<size_t>(v)] = l;
  }
  if (!raw.node_domain_rows.empty()) {
    node_domains.assign(static_cast<size_t>(n), kNoAttr);
    for (auto [v, d] : raw.node_domain_rows) node_domains[static_cast<size_t>(v)] = d;
  }
  if (!raw.node_time_rows.empty()) {
    node_times.assign(static_cast<size_t>(n), kNoAttr);
    for (auto [v, t] : raw.node_time_rows) node_times[static_cast<size_t>(v)] = t;
  }

  if (opt.level == Level::node) {
    // Dense class ids over labeled nodes.
    std::vector<int> present;
    for (auto [v, l] : raw.node_label_rows) present.push_back(l);
    std::vector<int> dense = detail::dense_labels(ds.label_values, present);
    ds.num_classes = static_cast<int>(ds.label_values.size());
    size_t i = 0;
    for (auto& [v, l] : raw.node_label_rows) l = dense[i++];
    if (!node_labels.empty())
      for (auto [v, l] : raw.node_label_rows) node_labels[static_cast<size_t>(v)] = l;
  } else if (opt.level == Level::link_classification) {
    std::vector<int> present;
    for (int l : raw.edge_labels_raw)
      if (l != kNoAttr) present.push_back(l);
    if (present.empty()) throw IoError("link classification needs a label column in edges.csv");
    std::vector<int> dense = detail::dense_labels(ds.label_values, present);
    ds.num_classes = static_cast<int>(ds.label_values.size());
    size_t j = 0;
    for (int& l : raw.edge_labels_raw)
      if (l != kNoAttr) l = dense[j++];
  }

  gi.features = std::move(raw.features);
  gi.node_labels = std::move(node_labels);
  gi.node_domains = std::move(node_domains);
  gi.node_times = std::move(node_times);
  // Keep pre-build list for LC instance payloads (duplicates collapse in CSR).
  std::vector<std::pair<i64, i64>> edge_pairs = raw.edges.edges;
  Graph g = build_graph(raw.edges, std::move(gi));
  if (!g.has_features() && opt.degree_features_fallback) {
    Mat f = degree_features(g);
    GraphInputs gi2;
    gi2.features = std::move(f);
    gi2.node_labels = g.has_labels() ? *g.label_store() : std::vector<int>{};
    std::vector<int> nd, nt;
    if (g.has_node_domains()) {
      nd.resize(static_cast<size_t>(n));
      for (i64 v = 0; v < n; ++v) nd[v] = g.node_domain(v);
    }
    if (g.has_node_times()) {
      nt.resize(static_cast<size_t>(n));
      for (i64 v = 0; v < n; ++v) nt[v] = g.node_time(v);
    }
    gi2.node_domains = std::move(nd);
    gi2.node_times = std::move(nt);
    g = build_graph(raw.edges, std::move(gi2));
  }
  ds.graph = std::make_shared<const Graph>(std::move(g));

  if (opt.level == Level::node) {
    for (auto [v, l] : raw.node_label_rows) {
      Instance inst{NodeRef{v}, l, kNoAttr, kNoAttr};
      if (ds.graph->has_node_domains()) inst.domain = ds.graph->node_domain(v);
      if (ds.graph->has_node_times()) inst.time = ds.graph->node_time(v);
      ds.instances.push_back(inst);
    }
  } else if (opt.level == Level::link_classification) {
    for (size_t i = 0; i < edge_pairs.size(); ++i) {
      if (raw.edge_labels_raw[i] == kNoAttr) continue;
      Instance inst{PairRef{edge_pairs[i].first, edge_pairs[i].second}, raw.edge_labels_raw[i],
                    kNoAttr, kNoAttr};
      if (!raw.edges.domains.empty()) inst.domain = raw.edges.domains[i];
      if (!raw.edges.times.empty()) inst.time = raw.edges.times[i];
      ds.instances.push_back(inst);
    }
  }
  return ds;
}

// ---- writing (used by the synthetic generator / `gen` subcommand) ----

inline void write_node_level_dataset(const std::filesystem::path& dir, const Graph& g,
                                     const std::vector<Instance>& edge_instances = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.csv");
    out << "src,dst,weight";
    bool elab = !edge_instances.empty();
    if (elab) out << ",label";
    if (g.has_edge_domains()) out << ",domain";
    if (g.has_edge_times()) out << ",time";
    out << "\n";
    // For undirected graphs emit each edge once (u <= v).
    std::map<std::pair<i64, i64>, size_t> inst_at;
    for (size_t i = 0; i < edge_instances.size(); ++i) {
      const auto& p = std::get<PairRef>(edge_instances[i].payload);
      inst_at[{p.u, p.v}] = i;
    }
    for (i64 u = 0; u < g.num_nodes(); ++u)
      for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
        i64 v = g.csr().indices[e];
        if (!g.directed() && v < u) continue;
        out << u << "," << v << "," << g.edge_weight(e);
        if (elab) {
          auto it = inst_at.find({u, v});
          if (it == inst_at.end()) it = inst_at.find({v, u});
          out << ",";
          if (it != inst_at.end()) out << edge_instances[it->second].label;
        }
        if (g.has_edge_domains()) {
          out << ",";
          if (g.edge_domain(e) != kNoAttr) out << g.edge_domain(e);
        }
        if (g.has_edge_times()) {
          out << ",";
          if (g.edge_time(e) != kNoAttr) out << g.edge_time(e);
        }
        out << "\n";
      }
  }
  if (g.has_features()) {
    std::ofstream out(dir / "node_features.csv");
    out << "node_id";
    for (i64 j = 0; j < g.feature_dim(); ++j) out << ",f" << j;
    out << "\n";
    out.precision(17);
    for (i64 v = 0; v < g.num_nodes(); ++v) {
      out << v;
      for (i64 j = 0; j < g.feature_dim(); ++j) out << "," << g.features()(v, j);
      out << "\n";
    }
  }
  if (g.has_labels()) {
    std::ofstream out(dir / "node_labels.csv");
    out << "node_id,label";
    if (g.has_node_domains()) out << ",domain";
    if (g.has_node_times()) out << ",time";
    out << "\n";
    for (i64 v = 0; v < g.num_nodes(); ++v) {
      if (g.label(v) == kNoAttr) continue;
      out << v << "," << g.label(v);
      if (g.has_node_domains()) {
        out << ",";
        if (g.node_domain(v) != kNoAttr) out << g.node_domain(v);
      }
      if (g.has_node_times()) {
        out << ",";
        if (g.node_time(v) != kNoAttr) out << g.node_time(v);
      }
      out << "\n";
    }
  }
}

inline void write_graph_level_dataset(const std::filesystem::path& dir,
                                      const std::vector<std::shared_ptr<const Graph>>& graphs,
                                      const std::vector<Instance>& instances) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "graphs");
  std::ofstream lab(dir / "graph_labels.csv");
  lab << "graph_id,label,domain,time\n";
  for (size_t k = 0; k < graphs.size(); ++k) {
    const Graph& g = *graphs[k];
    const Instance& inst = instances[k];
    lab << k << "," << inst.label << ",";
    if (inst.domain != kNoAttr) lab << inst.domain;
    lab << ",";
    if (inst.time != kNoAttr) lab << inst.time;
    lab << "\n";
    {
      std::ofstream out(dir / "graphs" / (std::to_string(k) + ".edges.csv"));
      out << "src,dst,weight\n";
      for (i64 u = 0; u < g.num_nodes(); ++u)
        for (i64 e = g.csr().offsets[u]; e < g.csr().offsets[u + 1]; ++e) {
          i64 v = g.csr().indices[e];
          if (!g.directed() && v < u) continue;
          out << u << "," << v << "," << g.edge_weight(e) << "\n";
        }
    }
    if (g.has_features()) {
      std::ofstream out(dir / "graphs" / (std::to_string(k) + ".features.csv"));
      out << "node_id";
      for (i64 j = 0; j < g.feature_dim(); ++j) out << ",f" << j;
      out << "\n";
      out.precision(17);
      for (i64 v = 0; v < g.num_nodes(); ++v) {
        out << v;
        for (i64 j = 0; j < g.feature_dim(); ++j) out << "," << g.features()(v, j);
        out << "\n";
      }
    }
  }
}

// ---- validation diagnostics (`validate` subcommand) ----

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> findings;

  void add(const std::string& msg, bool fatal = false) {
    findings.push_back(msg);
    if (fatal) ok = false;
  }
};

inline ValidationReport validate_dataset_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  ValidationReport rep;
  if (!fs::exists(dir)) {
    rep.add("directory does not exist: " + dir.string(), true);
    return rep;
  }
  const bool graph_level = fs::exists(dir / "graph_labels.csv");
  try {
    if (graph_level) {
      Dataset ds = read_dataset_dir(dir, {.level = Level::graph});
      rep.add("graph-level dataset: " + std::to_string(ds.graphs.size()) + " graphs, " +
              std::to_string(ds.num_classes) + " classes");
      i64 no_dom = 0, no_time = 0;
      for (const auto& inst : ds.instances) {
        if (inst.domain == kNoAttr) ++no_dom;
        if (inst.time == kNoAttr) ++no_time;
      }
      if (no_dom) rep.add(std::to_string(no_dom) +
                          " graphs lack a domain value (dropped under Domain-IL)");
      if (no_time) rep.add(std::to_string(no_time) +
                           " graphs lack a time value (dropped under Time-IL)");
      return rep;
    }

    if (!fs::exists(dir / "edges.csv")) {
      rep.add("edges.csv missing", true);
      return rep;
    }
    csv::Table edges = csv::read_table(dir / "edges.csv");
    if (edges.column("src") < 0 || edges.column("dst") < 0)
      rep.add("edges.csv: missing src/dst columns", true);
    for (const char* col : {"weight", "label", "domain", "time"})
      if (edges.column(col) < 0) rep.add(std::string("edges.csv: no '") + col + "' column");

    std::vector<i64> known;
    bool have_lab = fs::exists(dir / "node_labels.csv");
    bool have_feat = fs::exists(dir / "node_features.csv");
    if (!have_lab) rep.add("node_labels.csv missing (no node/graph classification possible)");
    if (!have_feat) rep.add("node_features.csv missing (degree features will be used)");
    if (have_lab) {
      csv::Table t = csv::read_table(dir / "node_labels.csv");
      int c = t.column("node_id");
      for (const auto& row : t.rows) known.push_back(csv::to_i64(row[c], "node_labels.csv"));
      if (t.column("domain") < 0)
        rep.add("node_labels.csv: no 'domain' column (required for node-level Domain-IL)");
      if (t.column("time") < 0)
        rep.add("node_labels.csv: no 'time' column (required for node-level Time-IL)");
    }
    if (have_feat) {
      csv::Table t = csv::read_table(dir / "node_features.csv");
      int c = t.column("node_id");
      for (const auto& row : t.rows) known.push_back(csv::to_i64(row[c], "node_features.csv"));
    }
    std::sort(known.begin(), known.end());
    known.erase(std::unique(known.begin(), known.end()), known.end());
    if (!known.empty()) {
      int cs = edges.column("src"), cd = edges.column("dst");
      for (size_t r = 0; r < edges.rows.size(); ++r)
        for (int c : {cs, cd}) {
          i64 id = csv::to_i64(edges.rows[r][c], "edges.csv");
          if (!std::binary_search(known.begin(), known.end(), id))
            rep.add("edges.csv line " + std::to_string(r + 2) + ": node id " +
                    std::to_string(id) + " has no feature/label row (zero features assumed)");
        }
      bool dense = known.front() == 0 && known.back() == static_cast<i64>(known.size()) - 1;
      if (!dense) rep.add("node ids are not dense 0..n-1; they will be remapped");
    }
    // Full parse as a final check.
    read_dataset_dir(dir, {.level = Level::node, .degree_features_fallback = true});
    rep.add("ok");
  } catch (const Error& e) {
    rep.add(std::string("parse error: ") + e.what(), true);
  }
  return rep;
}

}  // namespace grapal
