// synthetic.hpp -- deterministic SBM-style generators for desk-scale test
// data. Communities are correlated with classes: intra-class edge probability
// exceeds inter-class, and features are class means plus noise shrunk by the
// separability factor.

#pragma once

#include "grapal/dataset.hpp"
#include "grapal/graph.hpp"
#include "grapal/types.hpp"

#include <cmath>
#include <vector>

namespace grapal {

struct SyntheticSpec {
  enum class Kind { nc, lp, gc };
  Kind kind = Kind::nc;
  int n_tasks = 3;
  int classes_per_task = 2;
  int nodes_per_class = 50;   // nc/lp
  int graphs_per_class = 12;  // gc
  int nodes_per_graph = 12;   // gc
  int feature_dim = 16;
  double p_in = 0.10;   // intra-class edge probability
  double p_out = 0.01;  // inter-class edge probability
  double separability = 2.0;
  // When true, labels repeat across task groups (class set identical per
  // domain, Domain-IL style) and feature means get a per-group shift.
  bool shared_classes_across_groups = false;
  u64 seed = 1;
};

namespace detail {

inline Mat class_means(int classes, int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat m(classes, dim);
  for (int c = 0; c < classes; ++c)
    for (int j = 0; j < dim; ++j) m(c, j) = gauss(rng);
  return m;
}

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_tasks <= 0 || spec.classes_per_task <= 0 || spec.feature_dim <= 0)
    throw ConfigError("synthetic spec: sizes must be positive");
  Rng rng(mix_seed(spec.seed, 42));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise = spec.separability <= 0 ? 1.0
                       : std::isinf(spec.separability) ? 0.0
                                                       : 1.0 / spec.separability;
  const int communities = spec.n_tasks * spec.classes_per_task;
  const int out_classes =
      spec.shared_classes_across_groups ? spec.classes_per_task : communities;

  Dataset ds;
  ds.num_classes = out_classes;
  ds.label_values.resize(static_cast<size_t>(out_classes));
  for (int c = 0; c < out_classes; ++c) ds.label_values[static_cast<size_t>(c)] = c;

  auto label_of = [&](int community) {
    return spec.shared_classes_across_groups ? community % spec.classes_per_task : community;
  };
  auto group_of = [&](int community) { return community / spec.classes_per_task; };

  if (spec.kind == SyntheticSpec::Kind::gc) {
    ds.level = Level::graph;
    Mat means = detail::class_means(out_classes, spec.feature_dim, rng);
    Mat shifts = detail::class_means(spec.n_tasks, spec.feature_dim, rng);
    i64 gid = 0;
    for (int com = 0; com < communities; ++com) {
      for (int rep = 0; rep < spec.graphs_per_class; ++rep) {
        const i64 n = spec.nodes_per_graph;
        EdgeList el;
        el.num_nodes = n;
        el.directed = false;
        for (i64 u = 0; u < n; ++u)
          for (i64 v = u + 1; v < n; ++v)
            if (unit(rng) < spec.p_in) el.edges.emplace_back(u, v);
        GraphInputs gi;
        gi.features = Mat(n, spec.feature_dim);
        for (i64 v = 0; v < n; ++v)
          for (int j = 0; j < spec.feature_dim; ++j) {
            double mean = means(label_of(com), j);
            if (spec.shared_classes_across_groups) mean += 0.75 * shifts(group_of(com), j);
            gi.features(v, j) = mean + noise * gauss(rng);
          }
        ds.graphs.push_back(std::make_shared<const Graph>(build_graph(el, std::move(gi))));
        ds.instances.push_back(
            Instance{GraphRef{gid++}, label_of(com), group_of(com), group_of(com)});
      }
    }
    return ds;
  }

  // nc / lp share the same node-level SBM.
  ds.level = spec.kind == SyntheticSpec::Kind::nc ? Level::node : Level::link_prediction;
  const i64 n = static_cast<i64>(communities) * spec.nodes_per_class;
  auto community_of = [&](i64 v) { return static_cast<int>(v / spec.nodes_per_class); };

  EdgeList el;
  el.num_nodes = n;
  el.directed = false;
  for (i64 u = 0; u < n; ++u)
    for (i64 v = u + 1; v < n; ++v) {
      double p = community_of(u) == community_of(v) ? spec.p_in : spec.p_out;
      if (unit(rng) < p) {
        el.edges.emplace_back(u, v);
        int dom = std::max(group_of(community_of(u)), group_of(community_of(v)));
        el.domains.push_back(dom);
        el.times.push_back(dom);
      }
    }

  Mat means = detail::class_means(out_classes, spec.feature_dim, rng);
  Mat shifts = detail::class_means(spec.n_tasks, spec.feature_dim, rng);
  GraphInputs gi;
  gi.features = Mat(n, spec.feature_dim);
  gi.node_labels.resize(static_cast<size_t>(n));
  gi.node_domains.resize(static_cast<size_t>(n));
  gi.node_times.resize(static_cast<size_t>(n));
  for (i64 v = 0; v < n; ++v) {
    int com = community_of(v);
    gi.node_labels[static_cast<size_t>(v)] = label_of(com);
    gi.node_domains[static_cast<size_t>(v)] = group_of(com);
    gi.node_times[static_cast<size_t>(v)] = group_of(com);
    for (int j = 0; j < spec.feature_dim; ++j) {
      double mean = means(label_of(com), j);
      if (spec.shared_classes_across_groups) mean += 0.75 * shifts(group_of(com), j);
      gi.features(v, j) = mean + noise * gauss(rng);
    }
  }
  ds.graph = std::make_shared<const Graph>(build_graph(el, std::move(gi)));

  if (spec.kind == SyntheticSpec::Kind::nc) {
    for (i64 v = 0; v < n; ++v) {
      int com = community_of(v);
      ds.instances.push_back(Instance{NodeRef{v}, label_of(com), group_of(com), group_of(com)});
    }
  }
  return ds;
}

}  // namespace grapal
