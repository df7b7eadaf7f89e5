#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gyronet/common.hpp"
#include "gyronet/safety.hpp"

namespace gyro::ad {

// Primitive set. Everything differentiable in this project is a composition
// of these; there are no hand-derived vector-Jacobian products elsewhere.
enum class Op : uint8_t {
  Leaf, Const,
  Add, Sub, Mul, Div, Neg, Scale,
  Dot, Norm, Sqrt,
  Tanh, Atanh, Sinh, Asinh, Exp, Log, Sigmoid,
  Clamp, Concat, Matvec, Sum, Select,
};

struct Node {
  Op op;
  int32_t a = -1, b = -1;   // input node ids
  int32_t off = 0, len = 0; // value slice in the arena
  double x0 = 0, x1 = 0;    // scale factor / clamp bounds
  int32_t i0 = 0, i1 = 0;   // matvec rows/cols, select index
};

class Tape;

// Handle to a recorded value. Scalars are vectors of length 1.
struct Var {
  Tape* tape = nullptr;
  int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  int size() const;
  Eigen::Map<const Vec> value() const;
  double scalar() const;
};

// Append-only record of one forward computation. Values are computed eagerly
// into a flat arena; backward() runs exactly one reverse sweep. A tape is
// confined to one thread; distinct tapes may run concurrently.
class Tape {
 public:
  explicit Tape(SafetyConfig cfg = default_safety()) : cfg_(cfg) {}

  Var leaf(std::span<const double> v);
  Var constant(std::span<const double> v);
  Var constant(double v);

  // Seeds the reverse sweep at a scalar loss and fills the adjoint arena.
  // Throws if loss is not scalar or if backward already ran on this record.
  void backward(Var loss);

  // Adjoint slice of any recorded var; valid after backward(), until reset().
  Eigen::Map<const Vec> grad(Var v) const;

  // Clears the record for reuse (keeps allocated capacity).
  void reset();

  size_t node_count() const { return nodes_.size(); }
  const Node& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }
  const SafetyConfig& safety() const { return cfg_; }

  // Number of recorded nodes of one kind; used by construction audits.
  size_t count_ops(Op op) const;

  Var record(Op op, Var a, Var b, int len, double x0 = 0, double x1 = 0,
             int32_t i0 = 0, int32_t i1 = 0);
  const double* val_ptr(int32_t id) const {
    return vals_.data() + nodes_[static_cast<size_t>(id)].off;
  }
  double* mutable_val_ptr(int32_t id) {
    return vals_.data() + nodes_[static_cast<size_t>(id)].off;
  }

 private:
  void check_recording() const;

  SafetyConfig cfg_;
  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> adj_;
  bool backward_done_ = false;
};

// --- primitive builders -------------------------------------------------------
// Binary elementwise ops accept equal sizes or a scalar on either side.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double k);
Var dot(Var a, Var b);
Var norm(Var a);
Var sqrt(Var a);
Var tanh(Var a);   // routes through the safe_tanh clamp
Var atanh(Var a);  // routes through the safe_atanh clamp
Var sinh(Var a);
Var asinh(Var a);
Var exp(Var a);
Var log(Var a);
Var sigmoid(Var a);
Var clamp(Var a, double lo, double hi);
Var concat(Var a, Var b);
Var matvec(Var m, int rows, int cols, Var x);
Var sum(Var a);
Var select(Var a, int index);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace gyro::ad
