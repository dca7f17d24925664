// config.hpp -- run configuration: a flat key-value format with [sections]
// ('#' comments, repeatable [method] blocks). Grammar documented in the
// README. Values that accept comma lists (seeds, lr, lambda, ...) expand
// into hyperparameter grids where noted.

#pragma once

#include "grapal/methods.hpp"
#include "grapal/report.hpp"
#include "grapal/synthetic.hpp"
#include "grapal/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace grapal {

namespace ini {

struct Section {
  std::string name;
  std::vector<std::pair<std::string, std::string>> kv;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : kv)
      if (k == key) return &v;
    return nullptr;
  }
};

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<Section> parse(std::istream& in) {
  std::vector<Section> out;
  out.push_back({"", {}});  // top-level keys before any section header
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    size_t hash = t.find('#');
    if (hash != std::string::npos) t = trim(t.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      out.push_back({trim(t.substr(1, t.size() - 2)), {}});
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    out.back().kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

inline std::vector<Section> parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "'");
  }
}

inline i64 to_int(const std::string& s) {
  try {
    size_t pos = 0;
    i64 v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + s + "'");
  }
}

inline bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean '" + s + "'");
}

}  // namespace ini

struct MethodGrid {
  MethodConfig base;
  std::vector<double> lambda_grid;  // at least one entry
};

struct RunConfig {
  // dataset
  std::string dataset_path;  // empty = synthetic
  bool directed = false;
  Level level = Level::node;
  SyntheticSpec synthetic;

  // scenario
  Setting setting = Setting::task_il;
  std::vector<std::vector<int>> groups;  // original label values
  std::vector<int> domain_order;
  i64 time_tasks = 0;  // 0 = one task per distinct time value
  SplitRatios split;
  double base_fraction = 0.5;
  double missing_fraction = 0.3;
  double neg_ratio = 1.0;
  i64 test_neg_pool = 1000;
  int hits_k = 50;
  std::string lp_metric = "hits";  // hits | auroc
  u64 scenario_seed = 1;

  // model + grids (singleton grids = no search)
  ModelConfig model;
  std::vector<double> lr_grid{};       // empty = {model.lr}
  std::vector<double> dropout_grid{};  // empty = {model.dropout}
  std::vector<double> wd_grid{};       // empty = {model.weight_decay}

  std::vector<MethodGrid> methods;

  // run
  std::vector<u64> seeds{1};
  std::string out = "report.json";
  bool compute_joint = true;
  std::string fwt_mode = "auto";  // auto | always | never
  int threads = 0;                // 0 = $GRAPAL_THREADS, else hardware
  json echo;                      // resolved config, embedded in the report
};

namespace detail {

inline Level parse_level(const std::string& s) {
  if (s == "node" || s == "nc") return Level::node;
  if (s == "lc" || s == "link-classification") return Level::link_classification;
  if (s == "lp" || s == "link-prediction") return Level::link_prediction;
  if (s == "graph" || s == "gc") return Level::graph;
  throw ConfigError("unknown level '" + s + "'");
}

inline Setting parse_setting(const std::string& s) {
  if (s == "task") return Setting::task_il;
  if (s == "class") return Setting::class_il;
  if (s == "domain") return Setting::domain_il;
  if (s == "time") return Setting::time_il;
  throw ConfigError("unknown setting '" + s + "'");
}

inline std::vector<std::vector<int>> parse_groups(const std::string& s) {
  std::vector<std::vector<int>> out;
  for (const std::string& grp : ini::split_list(s, '|')) {
    std::vector<int> g;
    for (const std::string& c : ini::split_list(grp)) g.push_back(static_cast<int>(ini::to_int(c)));
    out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& v : ini::split_list(s)) out.push_back(ini::to_double(v));
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::vector<ini::Section>& sections) {
  RunConfig cfg;
  bool saw_model_dropout = false, saw_patience = false, saw_stop = false, saw_layers = false,
       saw_hidden = false;
  bool has_dataset_path = false, has_synthetic = false;

  for (const ini::Section& sec : sections) {
    if (sec.name == "" && sec.kv.empty()) continue;
    if (sec.name == "dataset") {
      for (const auto& [k, v] : sec.kv) {
        if (k == "path") {
          cfg.dataset_path = v;
          has_dataset_path = true;
        } else if (k == "directed") {
          cfg.directed = ini::to_bool(v);
        } else if (k == "level") {
          cfg.level = detail::parse_level(v);
        } else {
          throw ConfigError("[dataset] unknown key '" + k + "'");
        }
      }
    } else if (sec.name == "synthetic") {
      has_synthetic = true;
      for (const auto& [k, v] : sec.kv) {
        auto& s = cfg.synthetic;
        if (k == "kind") {
          if (v == "nc") s.kind = SyntheticSpec::Kind::nc;
          else if (v == "lp") s.kind = SyntheticSpec::Kind::lp;
          else if (v == "gc") s.kind = SyntheticSpec::Kind::gc;
          else throw ConfigError("[synthetic] unknown kind '" + v + "'");
        } else if (k == "n_tasks") s.n_tasks = static_cast<int>(ini::to_int(v));
        else if (k == "classes_per_task") s.classes_per_task = static_cast<int>(ini::to_int(v));
        else if (k == "nodes_per_class") s.nodes_per_class = static_cast<int>(ini::to_int(v));
        else if (k == "graphs_per_class") s.graphs_per_class = static_cast<int>(ini::to_int(v));
        else if (k == "nodes_per_graph") s.nodes_per_graph = static_cast<int>(ini::to_int(v));
        else if (k == "feature_dim") s.feature_dim = static_cast<int>(ini::to_int(v));
        else if (k == "p_in") s.p_in = ini::to_double(v);
        else if (k == "p_out") s.p_out = ini::to_double(v);
        else if (k == "separability") s.separability = ini::to_double(v);
        else if (k == "shared_classes") s.shared_classes_across_groups = ini::to_bool(v);
        else if (k == "seed") s.seed = static_cast<u64>(ini::to_int(v));
        else throw ConfigError("[synthetic] unknown key '" + k + "'");
      }
    } else if (sec.name == "scenario") {
      for (const auto& [k, v] : sec.kv) {
        if (k == "setting") cfg.setting = detail::parse_setting(v);
        else if (k == "groups") cfg.groups = detail::parse_groups(v);
        else if (k == "domain_order") {
          for (const std::string& d : ini::split_list(v))
            cfg.domain_order.push_back(static_cast<int>(ini::to_int(d)));
        } else if (k == "n_tasks") cfg.time_tasks = ini::to_int(v);
        else if (k == "split") {
          auto r = detail::parse_double_list(v);
          if (r.size() != 3) throw ConfigError("split needs three ratios");
          cfg.split = {r[0], r[1], r[2]};
        } else if (k == "base_fraction") cfg.base_fraction = ini::to_double(v);
        else if (k == "missing_fraction") cfg.missing_fraction = ini::to_double(v);
        else if (k == "neg_ratio") cfg.neg_ratio = ini::to_double(v);
        else if (k == "test_neg_pool") cfg.test_neg_pool = ini::to_int(v);
        else if (k == "hits_k") cfg.hits_k = static_cast<int>(ini::to_int(v));
        else if (k == "metric") cfg.lp_metric = v;
        else if (k == "seed") cfg.scenario_seed = static_cast<u64>(ini::to_int(v));
        else throw ConfigError("[scenario] unknown key '" + k + "'");
      }
    } else if (sec.name == "model") {
      for (const auto& [k, v] : sec.kv) {
        if (k == "layers") {
          cfg.model.layers = ini::to_int(v);
          saw_layers = true;
        } else if (k == "hidden") {
          cfg.model.hidden = ini::to_int(v);
          saw_hidden = true;
        } else if (k == "dropout") {
          cfg.dropout_grid = detail::parse_double_list(v);
          saw_model_dropout = true;
        } else if (k == "lr") {
          cfg.lr_grid = detail::parse_double_list(v);
        } else if (k == "weight_decay") {
          cfg.wd_grid = detail::parse_double_list(v);
        } else if (k == "max_epochs") cfg.model.max_epochs = ini::to_int(v);
        else if (k == "patience") {
          cfg.model.patience = ini::to_int(v);
          saw_patience = true;
        } else if (k == "stop_factor") {
          cfg.model.stop_factor = ini::to_double(v);
          saw_stop = true;
        } else throw ConfigError("[model] unknown key '" + k + "'");
      }
    } else if (sec.name == "method") {
      MethodGrid mg;
      for (const auto& [k, v] : sec.kv) {
        if (k == "name") mg.base.name = v;
        else if (k == "lambda") mg.lambda_grid = detail::parse_double_list(v);
        else if (k == "temperature") mg.base.temperature = ini::to_double(v);
        else if (k == "memory") mg.base.memory = ini::to_int(v);
        else if (k == "margin") mg.base.margin = ini::to_double(v);
        else throw ConfigError("[method] unknown key '" + k + "'");
      }
      if (mg.lambda_grid.empty()) {
        // per-method defaults: ewc is conventionally much larger
        mg.lambda_grid = {mg.base.name == "ewc" ? 100.0 : 1.0};
      }
      cfg.methods.push_back(std::move(mg));
    } else if (sec.name == "run") {
      for (const auto& [k, v] : sec.kv) {
        if (k == "seeds") {
          cfg.seeds.clear();
          for (const std::string& s : ini::split_list(v))
            cfg.seeds.push_back(static_cast<u64>(ini::to_int(s)));
        } else if (k == "out") cfg.out = v;
        else if (k == "joint") cfg.compute_joint = ini::to_bool(v);
        else if (k == "fwt") cfg.fwt_mode = v;
        else if (k == "threads") cfg.threads = static_cast<int>(ini::to_int(v));
        else throw ConfigError("[run] unknown key '" + k + "'");
      }
    } else if (!sec.name.empty()) {
      throw ConfigError("unknown section [" + sec.name + "]");
    }
  }

  if (!has_dataset_path && !has_synthetic)
    throw ConfigError("config needs a [dataset] path or a [synthetic] block");
  if (has_dataset_path && has_synthetic)
    throw ConfigError("config has both a dataset path and a synthetic block");
  if (cfg.seeds.empty()) throw ConfigError("seeds list must be nonempty");
  if (cfg.methods.empty()) cfg.methods.push_back(MethodGrid{MethodConfig{}, {1.0}});
  if (!has_dataset_path) {
    cfg.level = cfg.synthetic.kind == SyntheticSpec::Kind::nc ? Level::node
                : cfg.synthetic.kind == SyntheticSpec::Kind::lp ? Level::link_prediction
                                                                : Level::graph;
  }

  // level-sensitive defaults (paper protocol) unless explicitly set
  const bool short_patience =
      cfg.level == Level::link_prediction || cfg.level == Level::graph;
  if (!saw_patience && short_patience) cfg.model.patience = 10;
  if (!saw_stop && short_patience) cfg.model.stop_factor = 100;
  if (cfg.level == Level::graph) {
    if (!saw_layers) cfg.model.layers = 4;
    if (!saw_hidden) cfg.model.hidden = 146;
  }
  if (cfg.lr_grid.empty()) cfg.lr_grid = {cfg.model.lr};
  if (cfg.dropout_grid.empty())
    cfg.dropout_grid = {saw_model_dropout ? cfg.model.dropout : 0.25};
  if (cfg.wd_grid.empty()) cfg.wd_grid = {cfg.model.weight_decay};
  if (cfg.lp_metric != "hits" && cfg.lp_metric != "auroc")
    throw ConfigError("[scenario] metric must be 'hits' or 'auroc'");

  // resolved echo for the report
  json e;
  e["dataset"] = {{"path", cfg.dataset_path},
                  {"directed", cfg.directed},
                  {"level", to_string(cfg.level)},
                  {"synthetic", !has_dataset_path}};
  if (!has_dataset_path) {
    e["synthetic"] = {{"kind", static_cast<int>(cfg.synthetic.kind)},
                      {"n_tasks", cfg.synthetic.n_tasks},
                      {"classes_per_task", cfg.synthetic.classes_per_task},
                      {"nodes_per_class", cfg.synthetic.nodes_per_class},
                      {"graphs_per_class", cfg.synthetic.graphs_per_class},
                      {"nodes_per_graph", cfg.synthetic.nodes_per_graph},
                      {"feature_dim", cfg.synthetic.feature_dim},
                      {"p_in", cfg.synthetic.p_in},
                      {"p_out", cfg.synthetic.p_out},
                      {"separability", cfg.synthetic.separability},
                      {"shared_classes", cfg.synthetic.shared_classes_across_groups},
                      {"seed", cfg.synthetic.seed}};
  }
  e["scenario"] = {{"setting", to_string(cfg.setting)},
                   {"split", {cfg.split.train, cfg.split.val, cfg.split.test}},
                   {"base_fraction", cfg.base_fraction},
                   {"missing_fraction", cfg.missing_fraction},
                   {"neg_ratio", cfg.neg_ratio},
                   {"test_neg_pool", cfg.test_neg_pool},
                   {"hits_k", cfg.hits_k},
                   {"metric", cfg.lp_metric},
                   {"n_tasks", cfg.time_tasks},
                   {"seed", cfg.scenario_seed}};
  {
    json g = json::array();
    for (const auto& grp : cfg.groups) g.push_back(grp);
    e["scenario"]["groups"] = g;
    e["scenario"]["domain_order"] = cfg.domain_order;
  }
  e["model"] = {{"layers", cfg.model.layers},   {"hidden", cfg.model.hidden},
                {"lr", cfg.lr_grid},            {"dropout", cfg.dropout_grid},
                {"weight_decay", cfg.wd_grid},  {"max_epochs", cfg.model.max_epochs},
                {"patience", cfg.model.patience}, {"stop_factor", cfg.model.stop_factor}};
  {
    json ms = json::array();
    for (const MethodGrid& m : cfg.methods)
      ms.push_back({{"name", m.base.name},
                    {"lambda", m.lambda_grid},
                    {"temperature", m.base.temperature},
                    {"memory", m.base.memory},
                    {"margin", m.base.margin}});
    e["methods"] = ms;
  }
  e["run"] = {{"seeds", cfg.seeds},
              {"out", cfg.out},
              {"joint", cfg.compute_joint},
              {"fwt", cfg.fwt_mode}};
  cfg.echo = std::move(e);
  return cfg;
}

inline RunConfig parse_run_config_file(const std::filesystem::path& path) {
  return parse_run_config(ini::parse_file(path));
}

}  // namespace grapal
