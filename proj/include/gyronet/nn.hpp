#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gyronet/diffball.hpp"
#include "gyronet/rng.hpp"
#include "gyronet/tape.hpp"

namespace gyro::nn {

// How a parameter is optimized. Hyperbolic parameters are row-wise ball
// points (each row one point); Euclidean parameters are unconstrained.
enum class ParamKind { Euclidean, HypEmbedding, HypOther };

struct Param {
  std::string name;
  ParamKind kind;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  int size() const { return rows * cols; }
};

class ParamStore {
 public:
  int add(const std::string& name, ParamKind kind, int rows, int cols);
  int index(const std::string& name) const;  // -1 when absent
  Param& at(int i) { return params_[static_cast<size_t>(i)]; }
  const Param& at(int i) const { return params_[static_cast<size_t>(i)]; }
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  int count() const { return static_cast<int>(params_.size()); }

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, int> by_name_;
};

// Per-parameter gradient accumulator, aligned with a ParamStore.
struct GradTable {
  std::vector<std::vector<double>> g;

  void init(const ParamStore& store);
  void zero();
  bool all_finite() const;
  void add_scaled(const GradTable& other, double s);
};

// One forward/backward recording over a parameter store. Parameters bind
// lazily to tape leaves (one leaf per parameter or embedding row, cached);
// after backward, leaf adjoints accumulate back into a GradTable.
class Ctx {
 public:
  Ctx(ParamStore& store, double c, SafetyConfig cfg = default_safety())
      : tape(cfg), store_(&store), c_(c) {}

  ad::Tape tape;

  double c() const { return c_; }
  ParamStore& store() { return *store_; }

  ad::Var bind(const std::string& name);           // whole parameter, flattened
  ad::Var bind_row(const std::string& name, int row);

  // Adds s * (leaf adjoints) into the table; call after tape.backward().
  void accumulate_grads(GradTable& out, double s = 1.0) const;

  void reset();

 private:
  struct Bind {
    int param;
    int row;  // -1 = whole
    ad::Var var;
  };

  ParamStore* store_;
  double c_;
  std::vector<Bind> binds_;
  std::unordered_map<uint64_t, size_t> cache_;
};

// --- layers -------------------------------------------------------------------

enum class Phi { Identity, Tanh, Relu };
Phi phi_from_string(const std::string& s);
std::string to_string(Phi phi);

// Pointwise nonlinearity: the Mobius version exp0(phi(log0(x))) on the ball,
// plain phi in Euclidean mode.
ad::Var apply_nonlinearity(double c, Phi phi, ad::Var x, bool hyperbolic);

// (M (*) x) (+) b with hyperbolic bias b.
ad::Var hyp_linear(double c, ad::Var m, int rows, int cols, ad::Var b, ad::Var x);

// M1 (*) x1 (+) M2 (*) x2 (left-associative), the ball analogue of applying
// one matrix to a concatenated input.
ad::Var concat_matvec(double c, ad::Var m1, ad::Var m2, int rows, int cols1,
                      int cols2, ad::Var x1, ad::Var x2);

// M (*) x (+) y (*) b: attaches the real feature y through a learnable ball
// point b.
ad::Var attach_scalar(double c, ad::Var m, int rows, int cols, ad::Var x,
                      ad::Var y, ad::Var b);

// K hyperbolic MLR logits; the named params are K x n row-wise (rows = offset
// points p_k / normals a'_k).
ad::Var hyp_mlr_logits(Ctx& ctx, const std::string& p_name,
                       const std::string& a_name, ad::Var x);

// Euclidean MLR: <a_k, x> - b_k per class; a is K x n, b is K x 1.
ad::Var eucl_mlr_logits(Ctx& ctx, const std::string& a_name,
                        const std::string& b_name, ad::Var x);

// --- recurrent cells ------------------------------------------------------------

struct RnnCell {
  ad::Var w, u, b;
  int dim_h = 0, dim_x = 0;
  Phi phi = Phi::Identity;
  bool hyperbolic = true;
};

ad::Var rnn_step(double c, const RnnCell& cell, ad::Var h, ad::Var x);

// Test hook: replaces the sigmoid gate outputs with fixed vectors.
struct GateOverride {
  std::optional<Vec> r;
  std::optional<Vec> z;
};

struct GruCell {
  ad::Var wr, ur, br, wz, uz, bz, w, u, b;
  int dim_h = 0, dim_x = 0;
  Phi phi = Phi::Identity;
  bool hyperbolic = true;
};

ad::Var gru_step(double c, const GruCell& cell, ad::Var h, ad::Var x,
                 const GateOverride* ov = nullptr);

// --- sequence encoder -----------------------------------------------------------

struct EncoderParams {
  std::string prefix;  // parameter name prefix, e.g. "enc1"
  bool gru = true;
  bool hyperbolic = true;
  int dim = 0;
  Phi phi = Phi::Identity;
};

RnnCell bind_rnn(Ctx& ctx, const EncoderParams& enc);
GruCell bind_gru(Ctx& ctx, const EncoderParams& enc);

// Folds the cell over embedded tokens. h0 is the perturbed origin in the
// hyperbolic case, zero in the Euclidean case. Throws on empty input or
// out-of-vocabulary tokens.
ad::Var encode_sequence(Ctx& ctx, const EncoderParams& enc,
                        const std::string& emb_name,
                        std::span<const int> tokens,
                        const GateOverride* ov = nullptr);

// --- initialization ---------------------------------------------------------------

// Euclidean matrices ~ U(-s, s) with s = 1/sqrt(fan_in).
void init_linear(Param& p, int fan_in, Rng& rng);
// Ball points uniform in the radius-0.001 sub-ball (row-wise).
void init_ball_rows(Param& p, double c, Rng& rng, double radius = 1e-3);
// MLR normals ~ U(-0.01, 0.01), resampled while any row is exactly zero.
void init_mlr_normals(Param& p, Rng& rng);

}  // namespace gyro::nn
