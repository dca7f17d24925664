// autodiff.hpp -- a small reverse-mode tape over dense matrices, covering
// exactly the operations the GCN backbone, heads, and losses need. Values are
// 64-bit; scalars are 1x1 matrices. One backward sweep per tape; gradients
// accumulate in a fixed order so results are bitwise reproducible.

#pragma once

#include "grapal/common.hpp"
#include "grapal/graph.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace grapal {

using ClassMask = std::vector<uint8_t>;  // empty = all classes allowed

inline ClassMask make_mask(std::span<const int> allowed, int num_classes) {
  ClassMask m(static_cast<size_t>(num_classes), 0);
  for (int c : allowed) {
    if (c < 0 || c >= num_classes) throw MaskError("class outside head range");
    m[static_cast<size_t>(c)] = 1;
  }
  return m;
}

class Tape {
 public:
  using ValueId = i64;

  ValueId constant(Mat v) { return push(Op::leaf, npos, npos, std::move(v), false); }
  ValueId param(Mat v) { return push(Op::leaf, npos, npos, std::move(v), true); }

  ValueId spmm(const Csr& a, ValueId x) {
    Node& nx = node(x);
    Mat v = a.multiply(nx.value);
    ValueId id = push(Op::spmm, x, npos, std::move(v), nx.requires_grad);
    node(id).csr = &a;
    return id;
  }

  ValueId matmul(ValueId a, ValueId b) {
    if (node(a).value.cols() != node(b).value.rows())
      throw ShapeError("matmul: inner dimensions differ");
    Mat v = node(a).value * node(b).value;
    return push(Op::matmul, a, b, std::move(v),
                node(a).requires_grad || node(b).requires_grad);
  }

  ValueId add(ValueId a, ValueId b) {
    if (node(a).value.rows() != node(b).value.rows() ||
        node(a).value.cols() != node(b).value.cols())
      throw ShapeError("add: shape mismatch");
    Mat v = node(a).value + node(b).value;
    return push(Op::add, a, b, std::move(v), node(a).requires_grad || node(b).requires_grad);
  }

  ValueId scale(ValueId a, double c) {
    Mat v = c * node(a).value;
    ValueId id = push(Op::scale, a, npos, std::move(v), node(a).requires_grad);
    node(id).scalar = c;
    return id;
  }

  // x + row-broadcast bias (1 x k)
  ValueId add_rowvec(ValueId x, ValueId b) {
    if (node(b).value.rows() != 1 || node(b).value.cols() != node(x).value.cols())
      throw ShapeError("add_rowvec: bias must be 1 x cols(x)");
    Mat v = node(x).value.rowwise() + node(b).value.row(0);
    return push(Op::add_rowvec, x, b, std::move(v),
                node(x).requires_grad || node(b).requires_grad);
  }

  ValueId relu(ValueId a) {
    Mat v = node(a).value.cwiseMax(0.0);
    return push(Op::relu, a, npos, std::move(v), node(a).requires_grad);
  }

  // elementwise product with a constant mask (dropout)
  ValueId mul_mask(ValueId a, Mat mask) {
    if (mask.rows() != node(a).value.rows() || mask.cols() != node(a).value.cols())
      throw ShapeError("mul_mask: shape mismatch");
    Mat v = node(a).value.cwiseProduct(mask);
    ValueId id = push(Op::mul_mask, a, npos, std::move(v), node(a).requires_grad);
    node(id).aux = std::move(mask);
    return id;
  }

  ValueId gather_rows(ValueId a, std::span<const i64> ids) {
    const Mat& src = node(a).value;
    Mat v(static_cast<i64>(ids.size()), src.cols());
    for (size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] < 0 || ids[k] >= src.rows()) throw IndexError("gather_rows: id out of range");
      v.row(static_cast<i64>(k)) = src.row(ids[k]);
    }
    ValueId id = push(Op::gather_rows, a, npos, std::move(v), node(a).requires_grad);
    node(id).ids.assign(ids.begin(), ids.end());
    return id;
  }

  ValueId concat_cols(ValueId a, ValueId b) {
    if (node(a).value.rows() != node(b).value.rows())
      throw ShapeError("concat_cols: row counts differ");
    Mat v(node(a).value.rows(), node(a).value.cols() + node(b).value.cols());
    v << node(a).value, node(b).value;
    return push(Op::concat_cols, a, b, std::move(v),
                node(a).requires_grad || node(b).requires_grad);
  }

  // mean of rows per segment; membership[r] in [0, segments)
  ValueId segment_mean(ValueId a, std::span<const i64> membership, i64 segments) {
    const Mat& src = node(a).value;
    if (static_cast<i64>(membership.size()) != src.rows())
      throw ShapeError("segment_mean: membership size mismatch");
    Mat v = Mat::Zero(segments, src.cols());
    std::vector<double> count(static_cast<size_t>(segments), 0.0);
    for (size_t r = 0; r < membership.size(); ++r) {
      i64 s = membership[r];
      if (s < 0 || s >= segments) throw IndexError("segment_mean: segment out of range");
      v.row(s) += src.row(static_cast<i64>(r));
      count[static_cast<size_t>(s)] += 1.0;
    }
    for (i64 s = 0; s < segments; ++s) {
      if (count[static_cast<size_t>(s)] == 0.0)
        throw ShapeError("segment_mean: empty segment " + std::to_string(s));
      v.row(s) /= count[static_cast<size_t>(s)];
    }
    ValueId id = push(Op::segment_mean, a, npos, std::move(v), node(a).requires_grad);
    node(id).ids.assign(membership.begin(), membership.end());
    return id;
  }

  // Mean negative log-likelihood under a softmax restricted to the allowed
  // classes (disallowed logits act as -inf). Empty mask = all allowed.
  ValueId masked_cross_entropy(ValueId logits, std::span<const int> targets,
                               ClassMask mask = {}) {
    const Mat& l = node(logits).value;
    if (static_cast<i64>(targets.size()) != l.rows())
      throw ShapeError("cross_entropy: target count != rows");
    if (targets.empty()) throw ShapeError("cross_entropy: empty batch");
    if (!mask.empty() && static_cast<i64>(mask.size()) != l.cols())
      throw ShapeError("cross_entropy: mask size != classes");
    double total = 0;
    for (i64 r = 0; r < l.rows(); ++r) {
      int t = targets[static_cast<size_t>(r)];
      if (t < 0 || t >= l.cols() || (!mask.empty() && !mask[static_cast<size_t>(t)]))
        throw MaskError("cross_entropy: target class not allowed");
      total += row_logsumexp(l, r, mask) - l(r, t);
    }
    Mat v(1, 1);
    v(0, 0) = total / static_cast<double>(l.rows());
    ValueId id = push(Op::masked_ce, logits, npos, std::move(v), node(logits).requires_grad);
    node(id).targets.assign(targets.begin(), targets.end());
    node(id).mask = std::move(mask);
    return id;
  }

  // Mean binary cross-entropy with logits; scores must be a single column.
  ValueId binary_cross_entropy(ValueId scores, std::span<const double> labels) {
    const Mat& s = node(scores).value;
    if (s.cols() != 1) throw ShapeError("binary_ce: scores must be n x 1");
    if (static_cast<i64>(labels.size()) != s.rows())
      throw ShapeError("binary_ce: label count != rows");
    if (labels.empty()) throw ShapeError("binary_ce: empty batch");
    double total = 0;
    for (i64 r = 0; r < s.rows(); ++r) {
      double x = s(r, 0), y = labels[static_cast<size_t>(r)];
      total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
    Mat v(1, 1);
    v(0, 0) = total / static_cast<double>(s.rows());
    ValueId id = push(Op::binary_ce, scores, npos, std::move(v), node(scores).requires_grad);
    node(id).binlabels.assign(labels.begin(), labels.end());
    return id;
  }

  // Mean over rows of KL(softmax(old/T) || softmax(new/T)) over the allowed
  // classes. For single-column inputs this is the Bernoulli KL of the two
  // sigmoid distributions at temperature T.
  ValueId kl_to_reference(ValueId new_logits, Mat old_logits, double temperature,
                          ClassMask mask = {}) {
    const Mat& l = node(new_logits).value;
    if (old_logits.rows() != l.rows() || old_logits.cols() != l.cols())
      throw ShapeError("kl: reference shape mismatch");
    if (!mask.empty() && static_cast<i64>(mask.size()) != l.cols())
      throw ShapeError("kl: mask size != classes");
    if (temperature <= 0) throw ShapeError("kl: temperature must be positive");
    double total = 0;
    for (i64 r = 0; r < l.rows(); ++r) {
      if (l.cols() == 1) {
        double p = sigmoid(old_logits(r, 0) / temperature);
        double q = sigmoid(l(r, 0) / temperature);
        total += bernoulli_kl(p, q);
      } else {
        double zp = row_logsumexp_scaled(old_logits, r, mask, temperature);
        double zq = row_logsumexp_scaled(l, r, mask, temperature);
        for (i64 c = 0; c < l.cols(); ++c) {
          if (!mask.empty() && !mask[static_cast<size_t>(c)]) continue;
          double logp = old_logits(r, c) / temperature - zp;
          double logq = l(r, c) / temperature - zq;
          total += std::exp(logp) * (logp - logq);
        }
      }
    }
    Mat v(1, 1);
    v(0, 0) = total / static_cast<double>(l.rows());
    ValueId id = push(Op::kl_ref, new_logits, npos, std::move(v), node(new_logits).requires_grad);
    node(id).aux = std::move(old_logits);
    node(id).scalar = temperature;
    node(id).mask = std::move(mask);
    return id;
  }

  // Sum of squared entries (scalar).
  ValueId sum_squares(ValueId a) {
    Mat v(1, 1);
    v(0, 0) = node(a).value.squaredNorm();
    return push(Op::sum_squares, a, npos, std::move(v), node(a).requires_grad);
  }

  const Mat& value(ValueId id) const { return node(id).value; }
  double scalar_value(ValueId id) const {
    const Mat& v = node(id).value;
    if (v.rows() != 1 || v.cols() != 1) throw ShapeError("not a scalar value");
    return v(0, 0);
  }

  void backward(ValueId root) {
    if (consumed_) throw TapeError("tape already consumed by a backward sweep");
    consumed_ = true;
    Node& r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1)
      throw ShapeError("backward: root must be scalar");
    if (!r.requires_grad) return;  // constant graph; all gradients stay zero
    ensure_grad(root) << 1.0;
    for (i64 id = root; id >= 0; --id) {
      Node& n = node(id);
      if (!n.requires_grad || n.grad.size() == 0) continue;
      pull(id, n);
    }
  }

  bool consumed() const { return consumed_; }

  // Gradient of the swept scalar w.r.t. node `id` (zeros if untouched).
  Mat grad(ValueId id) const {
    if (!consumed_) throw TapeError("backward has not been run");
    const Node& n = node(id);
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

 private:
  static constexpr ValueId npos = -1;

  enum class Op {
    leaf,
    spmm,
    matmul,
    add,
    scale,
    add_rowvec,
    relu,
    mul_mask,
    gather_rows,
    concat_cols,
    segment_mean,
    masked_ce,
    binary_ce,
    kl_ref,
    sum_squares,
  };

  struct Node {
    Op op;
    ValueId a, b;
    Mat value;
    Mat grad;  // lazily sized
    bool requires_grad;
    const Csr* csr = nullptr;
    Mat aux;
    std::vector<i64> ids;
    std::vector<int> targets;
    std::vector<double> binlabels;
    ClassMask mask;
    double scalar = 0;
  };

  ValueId push(Op op, ValueId a, ValueId b, Mat v, bool req) {
    if (consumed_) throw TapeError("tape already consumed; start a new forward");
    nodes_.push_back(Node{op, a, b, std::move(v), Mat{}, req});
    return static_cast<ValueId>(nodes_.size()) - 1;
  }

  Node& node(ValueId id) {
    if (id < 0 || id >= static_cast<ValueId>(nodes_.size()))
      throw IndexError("tape: bad value id");
    return nodes_[static_cast<size_t>(id)];
  }
  const Node& node(ValueId id) const {
    if (id < 0 || id >= static_cast<ValueId>(nodes_.size()))
      throw IndexError("tape: bad value id");
    return nodes_[static_cast<size_t>(id)];
  }

  Eigen::Ref<Mat> ensure_grad(ValueId id) {
    Node& n = node(id);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void add_grad(ValueId id, const Mat& g) {
    if (!node(id).requires_grad) return;
    ensure_grad(id) += g;
  }

  static double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }

  static double bernoulli_kl(double p, double q) {
    auto term = [](double a, double b) { return a > 0 ? a * (std::log(a) - std::log(b)) : 0.0; };
    return term(p, q) + term(1 - p, 1 - q);
  }

  static double row_logsumexp(const Mat& l, i64 r, const ClassMask& mask) {
    return row_logsumexp_scaled(l, r, mask, 1.0);
  }

  static double row_logsumexp_scaled(const Mat& l, i64 r, const ClassMask& mask, double t) {
    double m = -std::numeric_limits<double>::infinity();
    for (i64 c = 0; c < l.cols(); ++c)
      if (mask.empty() || mask[static_cast<size_t>(c)]) m = std::max(m, l(r, c) / t);
    if (!std::isfinite(m)) throw MaskError("all classes masked");
    double z = 0;
    for (i64 c = 0; c < l.cols(); ++c)
      if (mask.empty() || mask[static_cast<size_t>(c)]) z += std::exp(l(r, c) / t - m);
    return m + std::log(z);
  }

  // Restricted softmax row (zeros at masked classes).
  static void masked_softmax_row(const Mat& l, i64 r, const ClassMask& mask, double t,
                                 Eigen::Ref<Eigen::RowVectorXd> out) {
    double z = row_logsumexp_scaled(l, r, mask, t);
    for (i64 c = 0; c < l.cols(); ++c)
      out(c) = (mask.empty() || mask[static_cast<size_t>(c)])
                   ? std::exp(l(r, c) / t - z)
                   : 0.0;
  }

  void pull(ValueId id, Node& n) {
    const Mat& gy = n.grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::spmm: {
        // d(a x)/dx pulled as x_grad += A^T gy, accumulated row-major.
        if (node(n.a).requires_grad) {
          Eigen::Ref<Mat> gx = ensure_grad(n.a);
          const Csr& a = *n.csr;
          for (i64 r = 0; r < a.rows; ++r)
            for (i64 e = a.offsets[r]; e < a.offsets[r + 1]; ++e)
              gx.row(a.indices[e]) += a.values[e] * gy.row(r);
        }
        break;
      }
      case Op::matmul:
        if (node(n.a).requires_grad) add_grad(n.a, gy * node(n.b).value.transpose());
        if (node(n.b).requires_grad) add_grad(n.b, node(n.a).value.transpose() * gy);
        break;
      case Op::add:
        add_grad(n.a, gy);
        add_grad(n.b, gy);
        break;
      case Op::scale:
        add_grad(n.a, n.scalar * gy);
        break;
      case Op::add_rowvec:
        add_grad(n.a, gy);
        if (node(n.b).requires_grad) add_grad(n.b, gy.colwise().sum());
        break;
      case Op::relu:
        add_grad(n.a, (n.value.array() > 0.0).cast<double>().matrix().cwiseProduct(gy));
        break;
      case Op::mul_mask:
        add_grad(n.a, gy.cwiseProduct(n.aux));
        break;
      case Op::gather_rows: {
        if (node(n.a).requires_grad) {
          Eigen::Ref<Mat> gx = ensure_grad(n.a);
          for (size_t k = 0; k < n.ids.size(); ++k)
            gx.row(n.ids[k]) += gy.row(static_cast<i64>(k));
        }
        break;
      }
      case Op::concat_cols:
        if (node(n.a).requires_grad) add_grad(n.a, gy.leftCols(node(n.a).value.cols()));
        if (node(n.b).requires_grad) add_grad(n.b, gy.rightCols(node(n.b).value.cols()));
        break;
      case Op::segment_mean: {
        if (node(n.a).requires_grad) {
          std::vector<double> count(static_cast<size_t>(n.value.rows()), 0.0);
          for (i64 s : n.ids) count[static_cast<size_t>(s)] += 1.0;
          Eigen::Ref<Mat> gx = ensure_grad(n.a);
          for (size_t r = 0; r < n.ids.size(); ++r)
            gx.row(static_cast<i64>(r)) +=
                gy.row(n.ids[r]) / count[static_cast<size_t>(n.ids[r])];
        }
        break;
      }
      case Op::masked_ce: {
        if (!node(n.a).requires_grad) break;
        const Mat& l = node(n.a).value;
        Mat gl(l.rows(), l.cols());
        Eigen::RowVectorXd row(l.cols());
        for (i64 r = 0; r < l.rows(); ++r) {
          masked_softmax_row(l, r, n.mask, 1.0, row);
          row(n.targets[static_cast<size_t>(r)]) -= 1.0;
          gl.row(r) = row;
        }
        add_grad(n.a, gl * (gy(0, 0) / static_cast<double>(l.rows())));
        break;
      }
      case Op::binary_ce: {
        if (!node(n.a).requires_grad) break;
        const Mat& s = node(n.a).value;
        Mat gs(s.rows(), 1);
        for (i64 r = 0; r < s.rows(); ++r)
          gs(r, 0) = sigmoid(s(r, 0)) - n.binlabels[static_cast<size_t>(r)];
        add_grad(n.a, gs * (gy(0, 0) / static_cast<double>(s.rows())));
        break;
      }
      case Op::kl_ref: {
        if (!node(n.a).requires_grad) break;
        const Mat& l = node(n.a).value;
        const double t = n.scalar;
        Mat gl(l.rows(), l.cols());
        if (l.cols() == 1) {
          for (i64 r = 0; r < l.rows(); ++r) {
            double p = sigmoid(n.aux(r, 0) / t);
            double q = sigmoid(l(r, 0) / t);
            gl(r, 0) = (q - p) / t;
          }
        } else {
          Eigen::RowVectorXd p(l.cols()), q(l.cols());
          for (i64 r = 0; r < l.rows(); ++r) {
            masked_softmax_row(n.aux, r, n.mask, t, p);
            masked_softmax_row(l, r, n.mask, t, q);
            gl.row(r) = (q - p) / t;
          }
        }
        add_grad(n.a, gl * (gy(0, 0) / static_cast<double>(l.rows())));
        break;
      }
      case Op::sum_squares:
        add_grad(n.a, 2.0 * gy(0, 0) * node(n.a).value);
        break;
    }
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace grapal
