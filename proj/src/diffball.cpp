#include "gyronet/diffball.hpp"

#include <cmath>

namespace gyro::diff {

using ad::Var;

namespace {

bool value_is_zero(Var x) {
  const double* p = x.tape->val_ptr(x.id);
  for (int i = 0; i < x.size(); ++i)
    if (p[i] != 0.0) return false;
  return true;
}

Var const_zeros(ad::Tape& t, int n) {
  const Vec z = Vec::Zero(n);
  return t.constant(std::span<const double>(z.data(), static_cast<size_t>(n)));
}

}  // namespace

Var guard_origin(Var x) {
  if (!value_is_zero(x)) return x;
  Vec eps = Vec::Zero(x.size());
  eps[0] = x.tape->safety().origin_eps;
  return add(x, x.tape->constant(std::span<const double>(eps.data(), eps.size())));
}

Var project_ball(Var x, double c) {
  if (c == 0.0) return x;
  const double max_norm = (1.0 - x.tape->safety().ball_eps) / std::sqrt(c);
  const double n = x.value().norm();
  if (n <= max_norm) return x;
  return scale(div(x, norm(x)), max_norm);
}

Var mobius_add(Var x, Var y, double c) {
  if (c == 0.0) return add(x, y);
  ad::Tape& t = *x.tape;
  Var xy = dot(x, y);
  Var xx = dot(x, x);
  Var yy = dot(y, y);
  Var one = t.constant(1.0);
  Var two_c_xy = scale(xy, 2.0 * c);
  Var coef_x = add(add(one, two_c_xy), scale(yy, c));
  Var coef_y = sub(one, scale(xx, c));
  Var den = add(add(one, two_c_xy), scale(mul(xx, yy), c * c));
  Var num = add(mul(coef_x, x), mul(coef_y, y));
  return project_ball(div(num, den), c);
}

Var mobius_scalar(Var r, Var x, double c) {
  if (c == 0.0) return mul(r, x);
  const double sc = std::sqrt(c);
  Var g = guard_origin(x);
  Var s = norm(g);
  Var at = atanh(scale(s, sc));
  Var coef = div(tanh(mul(r, at)), scale(s, sc));
  return project_ball(mul(coef, g), c);
}

Var mobius_scalar(double r, Var x, double c) {
  return mobius_scalar(x.tape->constant(r), x, c);
}

Var exp0(Var v, double c) {
  if (c == 0.0) return v;
  const double sc = std::sqrt(c);
  Var g = guard_origin(v);
  Var s = scale(norm(g), sc);
  Var coef = div(tanh(s), s);
  return project_ball(mul(coef, g), c);
}

Var log0(Var y, double c) {
  if (c == 0.0) return y;
  const double sc = std::sqrt(c);
  Var g = guard_origin(y);
  Var s = scale(norm(g), sc);
  Var coef = div(atanh(s), s);
  return mul(coef, g);
}

Var exp_map(Var x, Var v, double c) {
  if (c == 0.0) return add(x, v);
  ad::Tape& t = *x.tape;
  const double sc = std::sqrt(c);
  Var g = guard_origin(v);
  Var s = norm(g);
  Var lam = div(t.constant(2.0), sub(t.constant(1.0), scale(dot(x, x), c)));
  Var arg = mul(scale(lam, sc / 2.0), s);
  Var step = mul(div(tanh(arg), scale(s, sc)), g);
  return mobius_add(x, step, c);
}

Var log_map(Var x, Var y, double c) {
  if (c == 0.0) return sub(y, x);
  ad::Tape& t = *x.tape;
  const double sc = std::sqrt(c);
  Var w = guard_origin(mobius_add(neg(x), y, c));
  Var s = norm(w);
  Var lam = div(t.constant(2.0), sub(t.constant(1.0), scale(dot(x, x), c)));
  Var coef = scale(div(atanh(scale(s, sc)), mul(lam, s)), 2.0 / sc);
  return mul(coef, w);
}

Var distance(Var x, Var y, double c) {
  ad::Tape& t = *x.tape;
  if (c == 0.0) {
    Var w = sub(y, x);
    if (value_is_zero(w)) return t.constant(0.0);
    return scale(norm(w), 2.0);
  }
  Var w = mobius_add(neg(x), y, c);
  if (value_is_zero(w)) return t.constant(0.0);
  const double sc = std::sqrt(c);
  return scale(atanh(scale(norm(w), sc)), 2.0 / sc);
}

Var distance_sq(Var x, Var y, double c) {
  Var d = distance(x, y, c);
  return mul(d, d);
}

Var mobius_matvec_from(Var u, Var x, double c) {
  const double sc = std::sqrt(c);
  Var su = norm(u);
  Var sx = norm(x);
  Var arg = mul(div(su, sx), atanh(scale(sx, sc)));
  Var coef = div(tanh(arg), scale(su, sc));
  return project_ball(mul(coef, u), c);
}

Var mobius_matvec(Var m, int rows, int cols, Var x, double c) {
  Var u = matvec(m, rows, cols, x);
  if (c == 0.0) return u;
  if (value_is_zero(u)) return const_zeros(*x.tape, rows);
  return mobius_matvec_from(u, guard_origin(x), c);
}

Var diag_gate(Var z, Var v, double c) {
  Var u = mul(z, v);
  if (c == 0.0) return u;
  if (value_is_zero(u)) return const_zeros(*v.tape, v.size());
  return mobius_matvec_from(u, guard_origin(v), c);
}

Var hyp_mlr_logit(Var p, Var a_prime, Var x, double c) {
  ad::Tape& t = *x.tape;
  if (c == 0.0) return scale(dot(sub(x, p), a_prime), 4.0);
  const double sc = std::sqrt(c);
  Var w = mobius_add(neg(p), x, c);
  Var na = norm(a_prime);
  Var num = scale(dot(w, a_prime), 2.0 * sc);
  Var den = mul(sub(t.constant(1.0), scale(dot(w, w), c)), na);
  return mul(scale(na, 2.0 / sc), asinh(div(num, den)));
}

}  // namespace gyro::diff
