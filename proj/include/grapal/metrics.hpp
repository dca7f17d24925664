// metrics.hpp -- basic metrics (accuracy, AUROC, HITS@K) and the four
// matrix-derived continual-learning metrics AP / AF / INT / FWT.
//
// All functions are pure; k arguments are 1-based like the matrix indices in
// the written reports.

#pragma once

#include "grapal/common.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grapal {

inline double accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw MetricError("accuracy: length mismatch");
  if (pred.empty()) throw MetricError("accuracy: empty input");
  i64 hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Probability that a random positive outranks a random negative; ties credit
// 0.5 (Mann-Whitney convention). Computed with average ranks.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("auroc: length mismatch");
  i64 npos = 0, nneg = 0;
  for (int l : labels) (l != 0 ? npos : nneg)++;
  if (npos == 0 || nneg == 0) throw MetricError("auroc: needs both classes");
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0;  // average ranks, 1-based
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1);
  return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

// Fraction of positives scoring strictly above the K-th highest negative.
inline double hits_at_k(std::span<const double> pos, std::span<const double> neg, int k) {
  if (k <= 0) throw MetricError("hits@k: k must be positive");
  if (pos.empty()) throw MetricError("hits@k: no positives");
  if (static_cast<size_t>(k) > neg.size()) return 1.0;
  std::vector<double> n(neg.begin(), neg.end());
  std::nth_element(n.begin(), n.begin() + (k - 1), n.end(), std::greater<>());
  double threshold = n[static_cast<size_t>(k - 1)];
  i64 hits = 0;
  for (double p : pos) hits += p > threshold;
  return static_cast<double>(hits) / static_cast<double>(pos.size());
}

// N x N performance matrix; entry (i,j) = performance on task j after
// learning task i (1-based accessors, matching the report layout). Entries
// are written exactly once; absent entries stay explicitly absent.
class PerformanceMatrix {
 public:
  PerformanceMatrix() = default;
  explicit PerformanceMatrix(i64 n, std::string metric = "")
      : n_(n), metric_(std::move(metric)), values_(static_cast<size_t>(n * n), 0.0),
        filled_(static_cast<size_t>(n * n), 0) {}

  i64 size() const { return n_; }
  const std::string& metric_name() const { return metric_; }

  void set(i64 i, i64 j, double v) {
    check(i, j);
    size_t at = idx(i, j);
    if (filled_[at]) throw ProtocolError("matrix entry written twice");
    values_[at] = v;
    filled_[at] = 1;
  }

  bool is_set(i64 i, i64 j) const {
    check(i, j);
    return filled_[idx(i, j)] != 0;
  }

  double at(i64 i, i64 j) const {
    check(i, j);
    if (!filled_[idx(i, j)]) throw MetricError("matrix entry (" + std::to_string(i) + "," +
                                               std::to_string(j) + ") not filled");
    return values_[idx(i, j)];
  }

 private:
  void check(i64 i, i64 j) const {
    if (i < 1 || i > n_ || j < 1 || j > n_) throw IndexError("matrix index out of range");
  }
  size_t idx(i64 i, i64 j) const { return static_cast<size_t>((i - 1) * n_ + (j - 1)); }

  i64 n_ = 0;
  std::string metric_;
  std::vector<double> values_;
  std::vector<char> filled_;
};

// Average performance on the first k tasks after learning task k.
inline double ap(const PerformanceMatrix& m, i64 k) {
  if (k < 1 || k > m.size()) throw MetricError("ap: k out of range");
  double s = 0;
  for (i64 i = 1; i <= k; ++i) s += m.at(k, i);
  return s / static_cast<double>(k);
}

// Average forgetting on the first k-1 tasks after learning task k.
inline double af(const PerformanceMatrix& m, i64 k) {
  if (k < 2 || k > m.size()) throw MetricError("af: valid for 2 <= k <= N");
  double s = 0;
  for (i64 i = 1; i < k; ++i) s += m.at(i, i) - m.at(k, i);
  return s / static_cast<double>(k - 1);
}

// Gap to the Joint model's diagonal, averaged over the first k tasks.
inline double intransigence(const PerformanceMatrix& m, const PerformanceMatrix& joint, i64 k) {
  if (joint.size() != m.size()) throw MetricError("intransigence: joint matrix size mismatch");
  if (k < 1 || k > m.size()) throw MetricError("intransigence: k out of range");
  double s = 0;
  for (i64 i = 1; i <= k; ++i) s += joint.at(i, i) - m.at(i, i);
  return s / static_cast<double>(k);
}

// Gain on each task before training on it, relative to a random model.
inline double fwt(const PerformanceMatrix& m, std::span<const double> r, i64 k) {
  if (k < 2 || k > m.size()) throw MetricError("fwt: valid for 2 <= k <= N");
  if (static_cast<i64>(r.size()) != m.size())
    throw MetricError("fwt: random-baseline vector missing or wrong length");
  double s = 0;
  for (i64 i = 2; i <= k; ++i) s += m.at(i - 1, i) - r[static_cast<size_t>(i - 1)];
  return s / static_cast<double>(k - 1);
}

}  // namespace grapal
