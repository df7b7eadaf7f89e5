#include "gyronet/nn.hpp"

#include <cmath>
#include <limits>

namespace gyro::nn {

using ad::Var;

int ParamStore::add(const std::string& name, ParamKind kind, int rows, int cols) {
  if (by_name_.count(name))
    throw std::invalid_argument("ParamStore::add: duplicate name " + name);
  if (rows <= 0 || cols <= 0)
    throw std::invalid_argument("ParamStore::add: bad shape for " + name);
  Param p;
  p.name = name;
  p.kind = kind;
  p.rows = rows;
  p.cols = cols;
  p.data.assign(static_cast<size_t>(rows) * cols, 0.0);
  params_.push_back(std::move(p));
  const int idx = static_cast<int>(params_.size()) - 1;
  by_name_[name] = idx;
  return idx;
}

int ParamStore::index(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

Param& ParamStore::get(const std::string& name) {
  const int i = index(name);
  if (i < 0) throw std::invalid_argument("ParamStore: unknown param " + name);
  return params_[static_cast<size_t>(i)];
}

const Param& ParamStore::get(const std::string& name) const {
  const int i = index(name);
  if (i < 0) throw std::invalid_argument("ParamStore: unknown param " + name);
  return params_[static_cast<size_t>(i)];
}

void GradTable::init(const ParamStore& store) {
  g.resize(static_cast<size_t>(store.count()));
  for (int i = 0; i < store.count(); ++i)
    g[static_cast<size_t>(i)].assign(static_cast<size_t>(store.at(i).size()), 0.0);
}

void GradTable::zero() {
  for (auto& v : g) std::fill(v.begin(), v.end(), 0.0);
}

bool GradTable::all_finite() const {
  for (const auto& v : g)
    for (double x : v)
      if (!std::isfinite(x)) return false;
  return true;
}

void GradTable::add_scaled(const GradTable& other, double s) {
  for (size_t i = 0; i < g.size(); ++i)
    for (size_t j = 0; j < g[i].size(); ++j) g[i][j] += s * other.g[i][j];
}

Var Ctx::bind(const std::string& name) { return bind_row(name, -1); }

Var Ctx::bind_row(const std::string& name, int row) {
  const int pi = store_->index(name);
  if (pi < 0) throw std::invalid_argument("Ctx::bind: unknown param " + name);
  const Param& p = store_->at(pi);
  if (row >= p.rows)
    throw std::invalid_argument("Ctx::bind_row: row out of range for " + name);
  const uint64_t key =
      (static_cast<uint64_t>(pi) << 32) ^ static_cast<uint64_t>(row + 1);
  auto it = cache_.find(key);
  if (it != cache_.end()) return binds_[it->second].var;
  Var v;
  if (row < 0) {
    v = tape.leaf(std::span<const double>(p.data.data(), p.data.size()));
  } else {
    v = tape.leaf(std::span<const double>(
        p.data.data() + static_cast<size_t>(row) * p.cols,
        static_cast<size_t>(p.cols)));
  }
  cache_[key] = binds_.size();
  binds_.push_back({pi, row, v});
  return v;
}

void Ctx::accumulate_grads(GradTable& out, double s) const {
  for (const Bind& b : binds_) {
    const auto grad = tape.grad(b.var);
    const size_t off =
        b.row < 0 ? 0
                  : static_cast<size_t>(b.row) * store_->at(b.param).cols;
    auto& dst = out.g[static_cast<size_t>(b.param)];
    for (int i = 0; i < grad.size(); ++i) dst[off + static_cast<size_t>(i)] += s * grad[i];
  }
}

void Ctx::reset() {
  tape.reset();
  binds_.clear();
  cache_.clear();
}

Phi phi_from_string(const std::string& s) {
  if (s == "identity" || s == "id") return Phi::Identity;
  if (s == "tanh") return Phi::Tanh;
  if (s == "relu") return Phi::Relu;
  throw ConfigError("unknown nonlinearity: " + s);
}

std::string to_string(Phi phi) {
  switch (phi) {
    case Phi::Identity: return "identity";
    case Phi::Tanh: return "tanh";
    case Phi::Relu: return "relu";
  }
  return "?";
}

namespace {

Var apply_phi_plain(Phi phi, Var x) {
  switch (phi) {
    case Phi::Identity: return x;
    case Phi::Tanh: return ad::tanh(x);
    case Phi::Relu:
      return ad::clamp(x, 0.0, std::numeric_limits<double>::infinity());
  }
  return x;
}

// (W diag(r)) (*) h realized as the Mobius image of W (r . h) w.r.t. h.
Var gated_matvec(double c, Var w, int rows, int cols, Var r, Var h) {
  Var u = ad::matvec(w, rows, cols, ad::mul(r, h));
  if (c == 0.0) return u;
  bool zero = true;
  const double* p = u.tape->val_ptr(u.id);
  for (int i = 0; i < u.size(); ++i)
    if (p[i] != 0.0) { zero = false; break; }
  if (zero) {
    const Vec z = Vec::Zero(rows);
    return u.tape->constant(std::span<const double>(z.data(), z.size()));
  }
  return diff::mobius_matvec_from(u, diff::guard_origin(h), c);
}

bool value_all(Var v, double x) {
  const double* p = v.tape->val_ptr(v.id);
  for (int i = 0; i < v.size(); ++i)
    if (p[i] != x) return false;
  return true;
}

}  // namespace

Var apply_nonlinearity(double c, Phi phi, Var x, bool hyperbolic) {
  if (phi == Phi::Identity) return x;
  if (!hyperbolic || c == 0.0) return apply_phi_plain(phi, x);
  return diff::exp0(apply_phi_plain(phi, diff::log0(x, c)), c);
}

Var hyp_linear(double c, Var m, int rows, int cols, Var b, Var x) {
  return diff::mobius_add(diff::mobius_matvec(m, rows, cols, x, c), b, c);
}

Var concat_matvec(double c, Var m1, Var m2, int rows, int cols1, int cols2,
                  Var x1, Var x2) {
  Var u1 = diff::mobius_matvec(m1, rows, cols1, x1, c);
  Var u2 = diff::mobius_matvec(m2, rows, cols2, x2, c);
  return diff::mobius_add(u1, u2, c);
}

Var attach_scalar(double c, Var m, int rows, int cols, Var x, Var y, Var b) {
  Var u = diff::mobius_matvec(m, rows, cols, x, c);
  return diff::mobius_add(u, diff::mobius_scalar(y, b, c), c);
}

Var hyp_mlr_logits(Ctx& ctx, const std::string& p_name,
                   const std::string& a_name, Var x) {
  const Param& p = ctx.store().get(p_name);
  const Param& a = ctx.store().get(a_name);
  if (p.rows != a.rows || p.cols != a.cols)
    throw std::invalid_argument("hyp_mlr_logits: inconsistent class params");
  Var logits;
  for (int k = 0; k < p.rows; ++k) {
    Var pk = ctx.bind_row(p_name, k);
    Var ak = ctx.bind_row(a_name, k);
    Var lk = diff::hyp_mlr_logit(pk, ak, x, ctx.c());
    logits = k == 0 ? lk : ad::concat(logits, lk);
  }
  return logits;
}

Var eucl_mlr_logits(Ctx& ctx, const std::string& a_name,
                    const std::string& b_name, Var x) {
  const Param& a = ctx.store().get(a_name);
  Var logits;
  for (int k = 0; k < a.rows; ++k) {
    Var ak = ctx.bind_row(a_name, k);
    Var bk = ctx.bind_row(b_name, k);
    Var lk = ad::sub(ad::dot(ak, x), bk);
    logits = k == 0 ? lk : ad::concat(logits, lk);
  }
  return logits;
}

Var rnn_step(double c, const RnnCell& cell, Var h, Var x) {
  if (cell.hyperbolic && c != 0.0) {
    Var wh = diff::mobius_matvec(cell.w, cell.dim_h, cell.dim_h, h, c);
    Var ux = diff::mobius_matvec(cell.u, cell.dim_h, cell.dim_x, x, c);
    Var s = diff::mobius_add(diff::mobius_add(wh, ux, c), cell.b, c);
    return apply_nonlinearity(c, cell.phi, s, true);
  }
  Var s = ad::add(ad::add(ad::matvec(cell.w, cell.dim_h, cell.dim_h, h),
                          ad::matvec(cell.u, cell.dim_h, cell.dim_x, x)),
                  cell.b);
  return apply_phi_plain(cell.phi, s);
}

Var gru_step(double c, const GruCell& cell, Var h, Var x,
             const GateOverride* ov) {
  ad::Tape& t = *h.tape;
  const bool hyp = cell.hyperbolic && c != 0.0;

  auto gate = [&](Var wg, Var ug, Var bg,
                  const std::optional<Vec>& forced) -> Var {
    if (forced) {
      if (forced->size() != cell.dim_h)
        throw std::invalid_argument("gru_step: forced gate has wrong size");
      return t.constant(std::span<const double>(forced->data(),
                                                static_cast<size_t>(forced->size())));
    }
    if (hyp) {
      Var pre = diff::mobius_add(
          diff::mobius_add(
              diff::mobius_matvec(wg, cell.dim_h, cell.dim_h, h, c),
              diff::mobius_matvec(ug, cell.dim_h, cell.dim_x, x, c),
              c),
          bg, c);
      return ad::sigmoid(diff::log0(pre, c));
    }
    return ad::sigmoid(ad::add(ad::add(ad::matvec(wg, cell.dim_h, cell.dim_h, h),
                                       ad::matvec(ug, cell.dim_h, cell.dim_x, x)),
                               bg));
  };

  Var r = gate(cell.wr, cell.ur, cell.br, ov ? ov->r : std::nullopt);
  Var z = gate(cell.wz, cell.uz, cell.bz, ov ? ov->z : std::nullopt);

  Var h_tilde;
  if (hyp) {
    Var wrh = gated_matvec(c, cell.w, cell.dim_h, cell.dim_h, r, h);
    Var ux = diff::mobius_matvec(cell.u, cell.dim_h, cell.dim_x, x, c);
    Var pre = diff::mobius_add(diff::mobius_add(wrh, ux, c), cell.b, c);
    h_tilde = apply_nonlinearity(c, cell.phi, pre, true);
    // Saturated gates short-circuit exactly, mirroring the algebraic
    // identities h (+) 0 = h and h (+) (-h (+) u) = u.
    if (value_all(z, 0.0)) return h;
    if (value_all(z, 1.0)) return h_tilde;
    Var delta = diff::mobius_add(ad::neg(h), h_tilde, c);
    return diff::mobius_add(h, diff::diag_gate(z, delta, c), c);
  }

  Var pre = ad::add(ad::add(ad::matvec(cell.w, cell.dim_h, cell.dim_h,
                                       ad::mul(r, h)),
                            ad::matvec(cell.u, cell.dim_h, cell.dim_x, x)),
                    cell.b);
  h_tilde = apply_phi_plain(cell.phi, pre);
  Var one = t.constant(1.0);
  return ad::add(ad::mul(ad::sub(one, z), h), ad::mul(z, h_tilde));
}

RnnCell bind_rnn(Ctx& ctx, const EncoderParams& enc) {
  RnnCell cell;
  cell.w = ctx.bind(enc.prefix + "/W");
  cell.u = ctx.bind(enc.prefix + "/U");
  cell.b = ctx.bind(enc.prefix + "/b");
  cell.dim_h = enc.dim;
  cell.dim_x = enc.dim;
  cell.phi = enc.phi;
  cell.hyperbolic = enc.hyperbolic;
  return cell;
}

GruCell bind_gru(Ctx& ctx, const EncoderParams& enc) {
  GruCell cell;
  cell.wr = ctx.bind(enc.prefix + "/Wr");
  cell.ur = ctx.bind(enc.prefix + "/Ur");
  cell.br = ctx.bind(enc.prefix + "/br");
  cell.wz = ctx.bind(enc.prefix + "/Wz");
  cell.uz = ctx.bind(enc.prefix + "/Uz");
  cell.bz = ctx.bind(enc.prefix + "/bz");
  cell.w = ctx.bind(enc.prefix + "/W");
  cell.u = ctx.bind(enc.prefix + "/U");
  cell.b = ctx.bind(enc.prefix + "/b");
  cell.dim_h = enc.dim;
  cell.dim_x = enc.dim;
  cell.phi = enc.phi;
  cell.hyperbolic = enc.hyperbolic;
  return cell;
}

Var encode_sequence(Ctx& ctx, const EncoderParams& enc,
                    const std::string& emb_name, std::span<const int> tokens,
                    const GateOverride* ov) {
  if (tokens.empty())
    throw DataError("encode_sequence: empty token sequence");
  const Param& emb = ctx.store().get(emb_name);
  for (int tok : tokens)
    if (tok < 0 || tok >= emb.rows)
      throw DataError("encode_sequence: token id " + std::to_string(tok) +
                      " outside vocabulary of size " + std::to_string(emb.rows));

  Vec h0 = Vec::Zero(enc.dim);
  if (enc.hyperbolic && ctx.c() != 0.0)
    h0 = perturb_origin(std::move(h0), ctx.tape.safety());
  Var h = ctx.tape.constant(std::span<const double>(h0.data(), h0.size()));

  if (enc.gru) {
    GruCell cell = bind_gru(ctx, enc);
    for (int tok : tokens)
      h = gru_step(ctx.c(), cell, h, ctx.bind_row(emb_name, tok), ov);
  } else {
    RnnCell cell = bind_rnn(ctx, enc);
    for (int tok : tokens)
      h = rnn_step(ctx.c(), cell, h, ctx.bind_row(emb_name, tok));
  }
  return h;
}

void init_linear(Param& p, int fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : p.data) x = rng.uniform(-s, s);
}

void init_ball_rows(Param& p, double c, Rng& rng, double radius) {
  double r = radius;
  if (c > 0.0) r = std::min(r, (1.0 - 1e-5) / std::sqrt(c));
  for (int row = 0; row < p.rows; ++row) {
    const Vec v = rng.ball_uniform(p.cols, r);
    for (int j = 0; j < p.cols; ++j)
      p.data[static_cast<size_t>(row) * p.cols + j] = v[j];
  }
}

void init_mlr_normals(Param& p, Rng& rng) {
  for (int row = 0; row < p.rows; ++row) {
    double* d = p.data.data() + static_cast<size_t>(row) * p.cols;
    bool zero = true;
    while (zero) {
      for (int j = 0; j < p.cols; ++j) d[j] = rng.uniform(-0.01, 0.01);
      zero = true;
      for (int j = 0; j < p.cols; ++j)
        if (d[j] != 0.0) { zero = false; break; }
    }
  }
}

}  // namespace gyro::nn
