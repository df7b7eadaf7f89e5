#include "gyronet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace gyro::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

int Var::size() const { return tape->node(id).len; }

Eigen::Map<const Vec> Var::value() const {
  return Eigen::Map<const Vec>(tape->val_ptr(id), size());
}

double Var::scalar() const {
  require(size() == 1, "Var::scalar: not a scalar");
  return *tape->val_ptr(id);
}

void Tape::check_recording() const {
  if (backward_done_)
    throw std::logic_error("Tape: record/backward after backward; reset() first");
}

Var Tape::record(Op op, Var a, Var b, int len, double x0, double x1,
                 int32_t i0, int32_t i1) {
  check_recording();
  Node n;
  n.op = op;
  n.a = a.valid() ? a.id : -1;
  n.b = b.valid() ? b.id : -1;
  n.off = static_cast<int32_t>(vals_.size());
  n.len = len;
  n.x0 = x0;
  n.x1 = x1;
  n.i0 = i0;
  n.i1 = i1;
  vals_.resize(vals_.size() + static_cast<size_t>(len));
  nodes_.push_back(n);
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(std::span<const double> v) {
  Var out = record(Op::Leaf, {}, {}, static_cast<int>(v.size()));
  std::memcpy(mutable_val_ptr(out.id), v.data(), v.size() * sizeof(double));
  return out;
}

Var Tape::constant(std::span<const double> v) {
  Var out = record(Op::Const, {}, {}, static_cast<int>(v.size()));
  std::memcpy(mutable_val_ptr(out.id), v.data(), v.size() * sizeof(double));
  return out;
}

Var Tape::constant(double v) { return constant(std::span<const double>(&v, 1)); }

size_t Tape::count_ops(Op op) const {
  size_t n = 0;
  for (const Node& nd : nodes_)
    if (nd.op == op) ++n;
  return n;
}

void Tape::reset() {
  nodes_.clear();
  vals_.clear();
  adj_.clear();
  backward_done_ = false;
}

namespace {

struct BinShape {
  int len;      // output length
  bool a_scal;  // operand broadcast flags
  bool b_scal;
};

BinShape bin_shape(Var a, Var b, const char* what) {
  const int la = a.size(), lb = b.size();
  if (la == lb) return {la, false, false};
  if (la == 1) return {lb, true, false};
  if (lb == 1) return {la, false, true};
  throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

Tape& same_tape(Var a, Var b, const char* what) {
  require(a.valid() && b.valid(), "primitive: invalid var");
  if (a.tape != b.tape)
    throw std::invalid_argument(std::string(what) + ": vars from different tapes");
  return *a.tape;
}

template <typename F>
Var unary(Op op, Var a, F f) {
  require(a.valid(), "primitive: invalid var");
  Var out = a.tape->record(op, a, {}, a.size());
  const double* x = a.tape->val_ptr(a.id);
  double* y = a.tape->mutable_val_ptr(out.id);
  for (int i = 0; i < a.size(); ++i) y[i] = f(x[i]);
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  const BinShape s = bin_shape(a, b, "add");
  Var out = t.record(Op::Add, a, b, s.len);
  const double* pa = t.val_ptr(a.id);
  const double* pb = t.val_ptr(b.id);
  double* y = t.mutable_val_ptr(out.id);
  for (int i = 0; i < s.len; ++i)
    y[i] = pa[s.a_scal ? 0 : i] + pb[s.b_scal ? 0 : i];
  return out;
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  const BinShape s = bin_shape(a, b, "sub");
  Var out = t.record(Op::Sub, a, b, s.len);
  const double* pa = t.val_ptr(a.id);
  const double* pb = t.val_ptr(b.id);
  double* y = t.mutable_val_ptr(out.id);
  for (int i = 0; i < s.len; ++i)
    y[i] = pa[s.a_scal ? 0 : i] - pb[s.b_scal ? 0 : i];
  return out;
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  const BinShape s = bin_shape(a, b, "mul");
  Var out = t.record(Op::Mul, a, b, s.len);
  const double* pa = t.val_ptr(a.id);
  const double* pb = t.val_ptr(b.id);
  double* y = t.mutable_val_ptr(out.id);
  for (int i = 0; i < s.len; ++i)
    y[i] = pa[s.a_scal ? 0 : i] * pb[s.b_scal ? 0 : i];
  return out;
}

Var div(Var a, Var b) {
  Tape& t = same_tape(a, b, "div");
  const BinShape s = bin_shape(a, b, "div");
  const double* pb = t.val_ptr(b.id);
  for (int i = 0; i < b.size(); ++i)
    if (pb[i] == 0.0) throw std::domain_error("div: division by exact zero");
  Var out = t.record(Op::Div, a, b, s.len);
  const double* pa = t.val_ptr(a.id);
  pb = t.val_ptr(b.id);
  double* y = t.mutable_val_ptr(out.id);
  for (int i = 0; i < s.len; ++i)
    y[i] = pa[s.a_scal ? 0 : i] / pb[s.b_scal ? 0 : i];
  return out;
}

Var neg(Var a) {
  return unary(Op::Neg, a, [](double x) { return -x; });
}

Var scale(Var a, double k) {
  require(a.valid(), "scale: invalid var");
  Var out = a.tape->record(Op::Scale, a, {}, a.size(), k);
  const double* x = a.tape->val_ptr(a.id);
  double* y = a.tape->mutable_val_ptr(out.id);
  for (int i = 0; i < a.size(); ++i) y[i] = k * x[i];
  return out;
}

Var dot(Var a, Var b) {
  Tape& t = same_tape(a, b, "dot");
  require(a.size() == b.size(), "dot: shape mismatch");
  Var out = t.record(Op::Dot, a, b, 1);
  *t.mutable_val_ptr(out.id) =
      Eigen::Map<const Vec>(t.val_ptr(a.id), a.size())
          .dot(Eigen::Map<const Vec>(t.val_ptr(b.id), b.size()));
  return out;
}

Var norm(Var a) {
  require(a.valid(), "norm: invalid var");
  const double n = Eigen::Map<const Vec>(a.tape->val_ptr(a.id), a.size()).norm();
  if (n == 0.0)
    throw std::domain_error("norm: exact zero input (perturb_origin first)");
  Var out = a.tape->record(Op::Norm, a, {}, 1);
  *a.tape->mutable_val_ptr(out.id) = n;
  return out;
}

Var sqrt(Var a) {
  return unary(Op::Sqrt, a, [](double x) { return std::sqrt(x); });
}

Var tanh(Var a) {
  const SafetyConfig& cfg = a.tape->safety();
  return unary(Op::Tanh, a, [&](double x) { return safe_tanh(x, cfg); });
}

Var atanh(Var a) {
  const SafetyConfig& cfg = a.tape->safety();
  return unary(Op::Atanh, a, [&](double x) { return safe_atanh(x, cfg); });
}

Var sinh(Var a) {
  return unary(Op::Sinh, a, [](double x) { return std::sinh(x); });
}

Var asinh(Var a) {
  return unary(Op::Asinh, a, [](double x) { return std::asinh(x); });
}

Var exp(Var a) {
  return unary(Op::Exp, a, [](double x) { return std::exp(x); });
}

Var log(Var a) {
  return unary(Op::Log, a, [](double x) { return std::log(x); });
}

Var sigmoid(Var a) {
  return unary(Op::Sigmoid, a,
               [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var clamp(Var a, double lo, double hi) {
  require(a.valid(), "clamp: invalid var");
  require(lo <= hi, "clamp: lo > hi");
  Var out = a.tape->record(Op::Clamp, a, {}, a.size(), lo, hi);
  const double* x = a.tape->val_ptr(a.id);
  double* y = a.tape->mutable_val_ptr(out.id);
  for (int i = 0; i < a.size(); ++i) y[i] = std::clamp(x[i], lo, hi);
  return out;
}

Var concat(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat");
  Var out = t.record(Op::Concat, a, b, a.size() + b.size());
  double* y = t.mutable_val_ptr(out.id);
  std::memcpy(y, t.val_ptr(a.id), static_cast<size_t>(a.size()) * sizeof(double));
  std::memcpy(y + a.size(), t.val_ptr(b.id),
              static_cast<size_t>(b.size()) * sizeof(double));
  return out;
}

Var matvec(Var m, int rows, int cols, Var x) {
  Tape& t = same_tape(m, x, "matvec");
  require(m.size() == rows * cols, "matvec: matrix size mismatch");
  require(x.size() == cols, "matvec: vector size mismatch");
  Var out = t.record(Op::Matvec, m, x, rows, 0, 0, rows, cols);
  Eigen::Map<const RowMat> mm(t.val_ptr(m.id), rows, cols);
  Eigen::Map<const Vec> xv(t.val_ptr(x.id), cols);
  Eigen::Map<Vec>(t.mutable_val_ptr(out.id), rows) = mm * xv;
  return out;
}

Var sum(Var a) {
  require(a.valid(), "sum: invalid var");
  Var out = a.tape->record(Op::Sum, a, {}, 1);
  *a.tape->mutable_val_ptr(out.id) =
      Eigen::Map<const Vec>(a.tape->val_ptr(a.id), a.size()).sum();
  return out;
}

Var select(Var a, int index) {
  require(a.valid(), "select: invalid var");
  require(index >= 0 && index < a.size(), "select: index out of range");
  Var out = a.tape->record(Op::Select, a, {}, 1, 0, 0, index);
  *a.tape->mutable_val_ptr(out.id) = a.tape->val_ptr(a.id)[index];
  return out;
}

void Tape::backward(Var loss) {
  if (backward_done_)
    throw std::logic_error("Tape::backward: tape already consumed; reset() first");
  require(loss.valid() && loss.tape == this, "backward: foreign var");
  require(node(loss.id).len == 1, "backward: loss must be scalar");

  adj_.assign(vals_.size(), 0.0);
  adj_[static_cast<size_t>(nodes_[static_cast<size_t>(loss.id)].off)] = 1.0;

  for (int32_t id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.op == Op::Leaf || n.op == Op::Const) continue;
    const double* g = adj_.data() + n.off;
    const double* y = vals_.data() + n.off;
    const Node* na = n.a >= 0 ? &nodes_[static_cast<size_t>(n.a)] : nullptr;
    const Node* nb = n.b >= 0 ? &nodes_[static_cast<size_t>(n.b)] : nullptr;
    double* ga = na ? adj_.data() + na->off : nullptr;
    double* gb = nb ? adj_.data() + nb->off : nullptr;
    const double* va = na ? vals_.data() + na->off : nullptr;
    const double* vb = nb ? vals_.data() + nb->off : nullptr;

    switch (n.op) {
      case Op::Add: {
        for (int i = 0; i < n.len; ++i) {
          ga[na->len == 1 ? 0 : i] += g[i];
          gb[nb->len == 1 ? 0 : i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        for (int i = 0; i < n.len; ++i) {
          ga[na->len == 1 ? 0 : i] += g[i];
          gb[nb->len == 1 ? 0 : i] -= g[i];
        }
        break;
      }
      case Op::Mul: {
        for (int i = 0; i < n.len; ++i) {
          const int ia = na->len == 1 ? 0 : i;
          const int ib = nb->len == 1 ? 0 : i;
          ga[ia] += g[i] * vb[ib];
          gb[ib] += g[i] * va[ia];
        }
        break;
      }
      case Op::Div: {
        for (int i = 0; i < n.len; ++i) {
          const int ia = na->len == 1 ? 0 : i;
          const int ib = nb->len == 1 ? 0 : i;
          ga[ia] += g[i] / vb[ib];
          gb[ib] -= g[i] * y[i] / vb[ib];
        }
        break;
      }
      case Op::Neg:
        for (int i = 0; i < n.len; ++i) ga[i] -= g[i];
        break;
      case Op::Scale:
        for (int i = 0; i < n.len; ++i) ga[i] += n.x0 * g[i];
        break;
      case Op::Dot: {
        const double g0 = g[0];
        for (int i = 0; i < na->len; ++i) {
          ga[i] += g0 * vb[i];
          gb[i] += g0 * va[i];
        }
        break;
      }
      case Op::Norm: {
        const double g0 = g[0] / y[0];
        for (int i = 0; i < na->len; ++i) ga[i] += g0 * va[i];
        break;
      }
      case Op::Sqrt:
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * 0.5 / y[i];
        break;
      case Op::Tanh:
        for (int i = 0; i < n.len; ++i)
          if (std::abs(va[i]) <= cfg_.tanh_clamp)
            ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      case Op::Atanh:
        for (int i = 0; i < n.len; ++i)
          if (std::abs(va[i]) <= cfg_.atanh_clamp)
            ga[i] += g[i] / (1.0 - va[i] * va[i]);
        break;
      case Op::Sinh:
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * std::cosh(va[i]);
        break;
      case Op::Asinh:
        for (int i = 0; i < n.len; ++i)
          ga[i] += g[i] / std::sqrt(1.0 + va[i] * va[i]);
        break;
      case Op::Exp:
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * y[i];
        break;
      case Op::Log:
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] / va[i];
        break;
      case Op::Sigmoid:
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Op::Clamp:
        for (int i = 0; i < n.len; ++i)
          if (va[i] >= n.x0 && va[i] <= n.x1) ga[i] += g[i];
        break;
      case Op::Concat: {
        for (int i = 0; i < na->len; ++i) ga[i] += g[i];
        for (int i = 0; i < nb->len; ++i) gb[i] += g[na->len + i];
        break;
      }
      case Op::Matvec: {
        const int rows = n.i0, cols = n.i1;
        Eigen::Map<const RowMat> mm(va, rows, cols);
        Eigen::Map<const Vec> xv(vb, cols);
        Eigen::Map<const Vec> gv(g, rows);
        Eigen::Map<RowMat> gm(ga, rows, cols);
        Eigen::Map<Vec> gx(gb, cols);
        gm.noalias() += gv * xv.transpose();
        gx.noalias() += mm.transpose() * gv;
        break;
      }
      case Op::Sum: {
        const double g0 = g[0];
        for (int i = 0; i < na->len; ++i) ga[i] += g0;
        break;
      }
      case Op::Select:
        ga[n.i0] += g[0];
        break;
      case Op::Leaf:
      case Op::Const:
        break;
    }
  }
  backward_done_ = true;
}

Eigen::Map<const Vec> Tape::grad(Var v) const {
  if (!backward_done_)
    throw std::logic_error("Tape::grad: backward has not run");
  require(v.valid() && v.tape == this, "grad: foreign var");
  const Node& n = node(v.id);
  return Eigen::Map<const Vec>(adj_.data() + n.off, n.len);
}

}  // namespace gyro::ad
