#include "gyronet/props.hpp"

#include <cmath>
#include <sstream>

#include "gyronet/ball.hpp"
#include "gyronet/model.hpp"
#include "gyronet/nn.hpp"
#include "gyronet/optim.hpp"
#include "gyronet/rng.hpp"

namespace gyro::props {

namespace {

constexpr int kDim = 5;

BallPoint rand_point(Rng& rng, double radius, double c, int dim = kDim) {
  return BallPoint(rng.ball_uniform(dim, radius / std::sqrt(c == 0.0 ? 1.0 : c)),
                   Curvature(c));
}

PropResult make_result(const std::string& name, const std::string& module,
                       int cases, double max_err, double tol,
                       std::string detail = {}) {
  PropResult r;
  r.name = name;
  r.module = module;
  r.cases = cases;
  r.max_err = max_err;
  r.tol = tol;
  r.pass = max_err < tol;
  r.detail = std::move(detail);
  return r;
}

double rel_diff(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-9);
}

// Eq. (4) distance for c = 1, evaluated in extended precision: the
// independent oracle against the gyro formulation.
double dist_acosh_oracle(const Vec& x, const Vec& y) {
  long double xx = 0, yy = 0, dd = 0;
  for (int i = 0; i < x.size(); ++i) {
    xx += static_cast<long double>(x[i]) * x[i];
    yy += static_cast<long double>(y[i]) * y[i];
    const long double d = static_cast<long double>(x[i]) - y[i];
    dd += d * d;
  }
  const long double arg = 1.0L + 2.0L * dd / ((1.0L - xx) * (1.0L - yy));
  return static_cast<double>(std::acosh(arg));
}

// --- ball-core properties ---------------------------------------------------

PropResult left_cancellation() {
  Rng rng(101);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    BallPoint y = rand_point(rng, 0.9, 1.0);
    BallPoint z = mobius_add(-x, mobius_add(x, y));
    err = std::max(err, (z.coords() - y.coords()).norm());
  }
  return make_result("left_cancellation", "ball-core", n, err, 1e-9);
}

PropResult scalar_distributivity() {
  Rng rng(102);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    const double r1 = rng.uniform(-2, 2), r2 = rng.uniform(-2, 2);
    BallPoint lhs = mobius_scalar(r1 + r2, x);
    BallPoint rhs = mobius_add(mobius_scalar(r1, x), mobius_scalar(r2, x));
    err = std::max(err, (lhs.coords() - rhs.coords()).norm());
  }
  return make_result("scalar_distributivity", "ball-core", n, err, 1e-9);
}

PropResult scalar_associativity() {
  Rng rng(103);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    const double r1 = rng.uniform(-2, 2), r2 = rng.uniform(-2, 2);
    BallPoint lhs = mobius_scalar(r1 * r2, x);
    BallPoint rhs = mobius_scalar(r1, mobius_scalar(r2, x));
    err = std::max(err, (lhs.coords() - rhs.coords()).norm());
  }
  return make_result("scalar_associativity", "ball-core", n, err, 1e-9);
}

PropResult nfold_addition() {
  Rng rng(104);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.7, 1.0);
    BallPoint acc = x;
    for (int k = 2; k <= 5; ++k) {
      acc = mobius_add(acc, x);  // left-associative k-fold sum
      BallPoint direct = mobius_scalar(static_cast<double>(k), x);
      err = std::max(err, (acc.coords() - direct.coords()).norm());
    }
  }
  return make_result("nfold_addition", "ball-core", n, err, 1e-9);
}

PropResult scaling_property() {
  Rng rng(105);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    if (x.norm() < 1e-6) continue;
    double r = rng.uniform(-3, 3);
    if (std::abs(r) < 1e-3) r = 1.0;
    BallPoint rx = mobius_scalar(r, x);
    Vec lhs = mobius_scalar(std::abs(r), x).coords() / rx.norm();
    Vec rhs = x.coords() / x.norm();
    err = std::max(err, (lhs - rhs).norm());
  }
  return make_result("scaling_property", "ball-core", n, err, 1e-9);
}

PropResult scalar_mult_via_maps() {
  Rng rng(106);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    const double r = rng.uniform(-2, 2);
    BallPoint lhs = mobius_scalar(r, x);
    BallPoint rhs = exp0(r * log0(x), x.curvature());
    err = std::max(err, (lhs.coords() - rhs.coords()).norm());
  }
  return make_result("scalar_mult_via_maps", "ball-core", n, err, 1e-9);
}

PropResult distance_oracle() {
  Rng rng(107);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    BallPoint y = rand_point(rng, 0.9, 1.0);
    err = std::max(err, std::abs(distance(x, y) -
                                 dist_acosh_oracle(x.coords(), y.coords())));
  }
  return make_result("distance_oracle_eq4", "ball-core", n, err, 1e-9);
}

PropResult gyroline_element() {
  Rng rng(108);
  double err = 0;
  const int n = 500;
  const double c = 1.0;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, c);
    Vec dx = rng.ball_uniform(kDim, 1.0);
    dx *= 1e-6 / dx.norm();
    BallPoint xdx(x.coords() + dx, x.curvature());
    const double ds = mobius_sub(xdx, x).norm();
    const double expected = dx.norm() / (1.0 - c * x.coords().squaredNorm());
    err = std::max(err, std::abs(ds - expected) / dx.norm());
  }
  return make_result("gyroline_element", "ball-core", n, err, 1e-4);
}

PropResult exp_log_round_trip() {
  Rng rng(109);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    Vec v = rng.ball_uniform(kDim, 1.0);
    BallPoint y = exp_map(x, TangentVector(v, x));
    err = std::max(err, (log_map(x, y).vec - v).norm());

    BallPoint y2 = rand_point(rng, 0.9, 1.0);
    TangentVector l = log_map(x, y2);
    err = std::max(err, (exp_map(x, l).coords() - y2.coords()).norm());
    // metric length of the log equals the distance
    err = std::max(err, std::abs(metric_norm(x, l.vec) - distance(x, y2)));
  }
  return make_result("exp_log_round_trip", "ball-core", n, err, 1e-8);
}

PropResult parallel_transport_isometry() {
  Rng rng(110);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    Vec u = rng.ball_uniform(kDim, 1.0);
    Vec v = rng.ball_uniform(kDim, 1.0);
    TangentVector pu = parallel_transport_from_origin(x, u);
    TangentVector pv = parallel_transport_from_origin(x, v);
    const double g0 = 4.0 * u.dot(v);
    err = std::max(err, std::abs(metric_inner(x, pu.vec, pv.vec) - g0));
  }
  return make_result("parallel_transport_isometry", "ball-core", n, err, 1e-9);
}

PropResult geodesic_endpoint_midpoint() {
  Rng rng(111);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    BallPoint y = rand_point(rng, 0.9, 1.0);
    err = std::max(err, (geodesic(x, y, 0.0).coords() - x.coords()).norm());
    err = std::max(err, (geodesic(x, y, 1.0).coords() - y.coords()).norm());
    BallPoint mid = geodesic(x, y, 0.5);
    const double d = distance(x, y);
    err = std::max(err, std::abs(distance(x, mid) - 0.5 * d));
    err = std::max(err, std::abs(distance(mid, y) - 0.5 * d));
    // gamma(t) = exp_x(t log_x(y))
    const double t = rng.uniform01();
    BallPoint via_exp =
        exp_map(x, TangentVector(t * log_map(x, y).vec, x));
    err = std::max(err, (geodesic(x, y, t).coords() - via_exp.coords()).norm());
  }
  return make_result("geodesic_endpoint_midpoint", "ball-core", n, err, 1e-8);
}

PropResult law_of_sines() {
  Rng rng(112);
  double err = 0;
  int made = 0;
  const double c = 1.0;
  while (made < 100) {
    BallPoint a = rand_point(rng, 0.35, c, 3);
    BallPoint b = rand_point(rng, 0.35, c, 3);
    BallPoint d = rand_point(rng, 0.35, c, 3);
    const double side_a = distance(b, d);  // opposite A
    const double side_b = distance(a, d);
    const double side_c = distance(a, b);
    if (side_a >= 1.5 || side_b >= 1.5 || side_c >= 1.5) continue;
    if (side_a < 1e-2 || side_b < 1e-2 || side_c < 1e-2) continue;
    ++made;
    const double ra = std::sin(gyroangle(a, b, d)) / std::sinh(std::sqrt(c) * side_a);
    const double rb = std::sin(gyroangle(b, a, d)) / std::sinh(std::sqrt(c) * side_b);
    const double rc = std::sin(gyroangle(d, a, b)) / std::sinh(std::sqrt(c) * side_c);
    err = std::max({err, std::abs(ra - rb), std::abs(rb - rc),
                    std::abs(ra - rc)});
  }
  return make_result("law_of_sines", "ball-core", 100, err, 1e-6);
}

PropResult gyroangle_tangent_agreement() {
  Rng rng(113);
  double err = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    BallPoint a = rand_point(rng, 0.8, 1.0);
    BallPoint b = rand_point(rng, 0.8, 1.0);
    BallPoint c = rand_point(rng, 0.8, 1.0);
    if ((b.coords() - a.coords()).norm() < 1e-3 ||
        (c.coords() - a.coords()).norm() < 1e-3)
      continue;
    const Vec u = log_map(a, b).vec;
    const Vec w = log_map(a, c).vec;
    const double cosv =
        std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0);
    err = std::max(err, std::abs(gyroangle(a, b, c) - std::acos(cosv)));
  }
  return make_result("gyroangle_tangent_agreement", "ball-core", n, err, 1e-9);
}

PropResult gyro_chain_rule() {
  Rng rng(114);
  double err = 0;
  const int n = 50;
  const double delta = 1e-6;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.5, 1.0);
    BallPoint y = rand_point(rng, 0.5, 1.0);
    auto h = [&](double t) { return geodesic(x, y, t); };
    auto h_warp = [&](double t) { return geodesic(x, y, t * t); };
    const double t0 = rng.uniform(0.4, 0.9);
    const Vec lhs = gyroderivative_numeric(h_warp, t0, delta);
    const Vec dh = gyroderivative_numeric(h, t0 * t0, delta);
    const Vec rhs =
        mobius_scalar(2.0 * t0, BallPoint(dh, Curvature(1.0))).coords();
    err = std::max(err, rel_diff(lhs, rhs));
  }
  return make_result("gyro_chain_rule", "ball-core", n, err, 1e-3);
}

// Shared by the property suite and acceptance: closed-form hyperplane
// distance vs. a sampled minimum over the hyperplane.
struct HyperplaneBrute {
  double lower_violation = 0.0;  // closed form above any sample (must be ~0)
  double gap = 0.0;              // sampled min above closed form
};

HyperplaneBrute hyperplane_brute_force(Rng& rng, const BallPoint& x,
                                       const Hyperplane& h, int samples) {
  const double c = x.c();
  const double analytic = hyperplane_distance(x, h);
  const Vec a_unit = h.a_prime / h.a_prime.norm();
  const Vec w = mobius_add(-h.p, x).coords();
  Vec proj = w - w.dot(a_unit) * a_unit;
  const int dim = x.dim();

  double sampled_min = std::numeric_limits<double>::infinity();
  auto visit = [&](const Vec& z) {
    BallPoint pt = exp_map(h.p, TangentVector(z, h.p));
    sampled_min = std::min(sampled_min, distance(x, pt));
  };

  // Half the budget scans the ray through the tangent projection of x (the
  // geodesic containing the true foot point), half samples the subspace.
  const int ray = samples / 2;
  if (proj.norm() > 1e-12) {
    const Vec u = proj / proj.norm();
    for (int i = 0; i < ray; ++i) visit((3.0 * i / (ray - 1)) * u);
  }
  for (int i = samples - ray; i > 0; --i) {
    Vec z(dim);
    for (int j = 0; j < dim; ++j) z[j] = rng.normal();
    z -= z.dot(a_unit) * a_unit;
    if (z.norm() < 1e-12) continue;
    visit(rng.uniform(0.0, 3.0) / z.norm() * z);
  }
  (void)c;
  HyperplaneBrute out;
  out.lower_violation = std::max(0.0, analytic - sampled_min);
  out.gap = std::max(0.0, sampled_min - analytic);
  return out;
}

PropResult hyperplane_distance_lower_bound() {
  Rng rng(115);
  double violation = 0.0, worst_gap = 0.0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.8, 1.0);
    BallPoint p = rand_point(rng, 0.6, 1.0);
    Vec a(kDim);
    for (int j = 0; j < kDim; ++j) a[j] = rng.normal();
    Hyperplane h(p, a / a.norm());
    HyperplaneBrute b = hyperplane_brute_force(rng, x, h, 10000);
    violation = std::max(violation, b.lower_violation);
    worst_gap = std::max(worst_gap, b.gap);
  }
  PropResult r = make_result("hyperplane_distance_lower_bound", "ball-core", n,
                             violation, 1e-9);
  std::ostringstream os;
  os << "max sampled-min gap " << worst_gap;
  r.detail = os.str();
  r.pass = r.pass && worst_gap < 1e-3;
  return r;
}

PropResult euclidean_limits_ball() {
  Rng rng(116);
  double err = 0;
  const int n = 300;
  const double c = 1e-8;
  const Curvature curv(c);
  for (int i = 0; i < n; ++i) {
    Vec xv = rng.ball_uniform(kDim, 0.9);
    Vec yv = rng.ball_uniform(kDim, 0.9);
    BallPoint x(xv, curv), y(yv, curv);
    const double r = rng.uniform(-2, 2);
    Mat m(kDim, kDim);
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) m(a, b) = rng.uniform(-1, 1);

    err = std::max(err, rel_diff(mobius_add(x, y).coords(), xv + yv));
    err = std::max(err, rel_diff(mobius_sub(x, y).coords(), xv - yv));
    err = std::max(err, rel_diff(mobius_scalar(r, x).coords(), r * xv));
    err = std::max(err,
                   std::abs(distance(x, y) - 2.0 * (xv - yv).norm()) /
                       std::max(2.0 * (xv - yv).norm(), 1e-9));
    Vec v = rng.ball_uniform(kDim, 0.5);
    err = std::max(err, rel_diff(exp_map(x, TangentVector(v, x)).coords(), xv + v));
    err = std::max(err, rel_diff(log_map(x, y).vec, yv - xv));
    err = std::max(err, rel_diff(exp0(v, curv).coords(), v));
    err = std::max(err, rel_diff(log0(y), yv));
    err = std::max(err, rel_diff(mobius_matvec(m, x).coords(), m * xv));

    BallPoint p(rng.ball_uniform(kDim, 0.5), curv);
    Vec a(kDim);
    for (int j = 0; j < kDim; ++j) a[j] = rng.normal();
    Hyperplane hp(p, a);
    const double lim = 2.0 * std::abs((xv - p.coords()).dot(a)) / a.norm();
    err = std::max(err, std::abs(hyperplane_distance(x, hp) - lim) /
                            std::max(lim, 1e-9));
  }
  return make_result("euclidean_limits_ball_ops", "ball-core", n, err, 1e-5);
}

// --- layers properties --------------------------------------------------------

nn::ParamStore empty_store;

PropResult layer_composition_identity() {
  Rng rng(117);
  double err = 0;
  const int n = 200;
  const double c = 1.0;
  for (int i = 0; i < n; ++i) {
    BallPoint x = rand_point(rng, 0.9, c);
    Mat m1(kDim, kDim), m2(kDim, kDim);
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) {
        m1(a, b) = rng.uniform(-1, 1);
        m2(a, b) = rng.uniform(-1, 1);
      }
    auto f1 = [&](const Vec& v) { return Vec((m1 * v).array().tanh()); };
    auto f2 = [&](const Vec& v) { return Vec((m2 * v).array().tanh()); };
    BallPoint staged = mobius_fn_apply(f2, mobius_fn_apply(f1, x));
    BallPoint fused =
        exp0(f2(f1(log0(x))), x.curvature());
    err = std::max(err, (staged.coords() - fused.coords()).norm());
  }
  return make_result("layer_composition_identity", "layers", n, err, 1e-8);
}

PropResult layer_outputs_in_ball() {
  Rng rng(118);
  double err = 0;
  const int n = 300;
  const double c = 1.0;
  const double limit = 1.0 - 1e-5;
  nn::Ctx ctx(empty_store, c);
  for (int i = 0; i < n; ++i) {
    ctx.reset();
    // near-boundary inputs and large weights push outputs at the projection
    Vec xv = rng.ball_uniform(kDim, 1.0);
    xv *= 0.99999 / std::max(xv.norm(), 1e-12);
    Vec bv = rng.ball_uniform(kDim, 0.9);
    Vec mv(kDim * kDim);
    for (int j = 0; j < kDim * kDim; ++j) mv[j] = rng.uniform(-5, 5);
    ad::Var x = ctx.tape.constant(std::span<const double>(xv.data(), xv.size()));
    ad::Var b = ctx.tape.constant(std::span<const double>(bv.data(), bv.size()));
    ad::Var m = ctx.tape.constant(std::span<const double>(mv.data(), mv.size()));
    ad::Var out = nn::hyp_linear(c, m, kDim, kDim, b, x);
    err = std::max(err, out.value().norm() - limit);
    ad::Var out2 = nn::apply_nonlinearity(c, nn::Phi::Tanh, out, true);
    err = std::max(err, out2.value().norm() - limit);
  }
  return make_result("layer_outputs_in_ball", "layers", n, std::max(err, 0.0),
                     1e-12);
}

PropResult mlr_argmax_rescale_invariance() {
  Rng rng(119);
  int mismatches = 0;
  const int n = 300;
  const double c = 1.0;
  const int k = 4;
  for (int i = 0; i < n; ++i) {
    nn::ParamStore store;
    nn::Param& p = store.at(store.add("mlr/p", nn::ParamKind::HypOther, k, kDim));
    nn::init_ball_rows(p, c, rng, 0.3);
    nn::Param& a = store.at(store.add("mlr/a", nn::ParamKind::Euclidean, k, kDim));
    for (double& v : a.data) v = rng.uniform(-1, 1);
    Vec xv = rng.ball_uniform(kDim, 0.9);

    auto logits_with_scale = [&](double t) {
      nn::ParamStore scaled = store;
      for (double& v : scaled.get("mlr/a").data) v *= t;
      nn::Ctx ctx(scaled, c);
      ad::Var x = ctx.tape.constant(std::span<const double>(xv.data(), xv.size()));
      return Vec(nn::hyp_mlr_logits(ctx, "mlr/p", "mlr/a", x).value());
    };
    const int base = train::argmax_lowest(logits_with_scale(1.0));
    for (double t : {0.5, 2.0, 7.0})
      if (train::argmax_lowest(logits_with_scale(t)) != base) ++mismatches;
  }
  return make_result("mlr_argmax_rescale_invariance", "layers", n,
                     static_cast<double>(mismatches), 0.5);
}

PropResult euclidean_limits_layers() {
  Rng rng(120);
  double err = 0;
  const int n = 100;
  const double c = 1e-8;
  const int d = 4;
  for (int i = 0; i < n; ++i) {
    nn::ParamStore store;
    auto add_mat = [&](const std::string& name) {
      store.add(name, nn::ParamKind::Euclidean, d, d);
      for (double& v : store.get(name).data) v = rng.uniform(-0.8, 0.8);
    };
    auto add_vecp = [&](const std::string& name, nn::ParamKind kind) {
      store.add(name, kind, 1, d);
      Vec b = rng.ball_uniform(d, 0.3);
      for (int j = 0; j < d; ++j) store.get(name).data[static_cast<size_t>(j)] = b[j];
    };
    for (const char* nm : {"W", "U", "Wr", "Ur", "Wz", "Uz", "M1", "M2"})
      add_mat(nm);
    for (const char* nm : {"b", "br", "bz", "bd"})
      add_vecp(nm, nn::ParamKind::HypOther);
    store.add("mlr/p", nn::ParamKind::HypOther, 2, d);
    {
      Vec p0 = rng.ball_uniform(d, 0.3), p1 = rng.ball_uniform(d, 0.3);
      for (int j = 0; j < d; ++j) {
        store.get("mlr/p").data[static_cast<size_t>(j)] = p0[j];
        store.get("mlr/p").data[static_cast<size_t>(d + j)] = p1[j];
      }
    }
    store.add("mlr/a", nn::ParamKind::Euclidean, 2, d);
    for (double& v : store.get("mlr/a").data) v = rng.uniform(-1, 1);

    const Vec hv = rng.ball_uniform(d, 0.4);
    const Vec xv = rng.ball_uniform(d, 0.4);
    const double y_feat = rng.uniform(-0.5, 0.5);

    auto as_mat = [&](const std::string& name) {
      return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                            Eigen::Dynamic, Eigen::RowMajor>>(
          store.get(name).data.data(), d, d);
    };
    auto as_vec = [&](const std::string& name) {
      return Eigen::Map<const Vec>(store.get(name).data.data(), d);
    };

    nn::Ctx ctx(store, c);
    auto cv = [&](const Vec& v) {
      return ctx.tape.constant(std::span<const double>(v.data(), v.size()));
    };
    ad::Var h = cv(hv), x = cv(xv);

    // hyp_linear -> Wx + b
    {
      Vec got = nn::hyp_linear(c, ctx.bind("W"), d, d, ctx.bind("b"), x).value();
      Vec want = as_mat("W") * xv + as_vec("b");
      err = std::max(err, rel_diff(got, want));
    }
    // concat_matvec -> M1 h + M2 x
    {
      Vec got = nn::concat_matvec(c, ctx.bind("M1"), ctx.bind("M2"), d, d, d,
                                  h, x).value();
      Vec want = as_mat("M1") * hv + as_mat("M2") * xv;
      err = std::max(err, rel_diff(got, want));
    }
    // attach_scalar -> M1 x + y b
    {
      ad::Var y = ctx.tape.constant(y_feat);
      Vec got = nn::attach_scalar(c, ctx.bind("M1"), d, d, x, y,
                                  ctx.bind("bd")).value();
      Vec want = as_mat("M1") * xv + y_feat * as_vec("bd");
      err = std::max(err, rel_diff(got, want));
    }
    // MLR logits -> 4<-p_k + x, a_k>
    {
      Vec got = nn::hyp_mlr_logits(ctx, "mlr/p", "mlr/a", x).value();
      for (int kk = 0; kk < 2; ++kk) {
        Eigen::Map<const Vec> pk(store.get("mlr/p").data.data() + kk * d, d);
        Eigen::Map<const Vec> ak(store.get("mlr/a").data.data() + kk * d, d);
        const double want = 4.0 * (xv - pk).dot(ak);
        err = std::max(err, std::abs(got[kk] - want) /
                                std::max(std::abs(want), 1e-9));
      }
    }
    // RNN cell -> tanh(Wh + Ux + b)
    {
      nn::RnnCell cell{ctx.bind("W"), ctx.bind("U"), ctx.bind("b"), d, d,
                       nn::Phi::Tanh, true};
      Vec got = nn::rnn_step(c, cell, h, x).value();
      Vec want = (as_mat("W") * hv + as_mat("U") * xv + as_vec("b")).array().tanh();
      err = std::max(err, rel_diff(got, want));
    }
    // GRU cell -> standard GRU
    {
      nn::GruCell cell{ctx.bind("Wr"), ctx.bind("Ur"), ctx.bind("br"),
                       ctx.bind("Wz"), ctx.bind("Uz"), ctx.bind("bz"),
                       ctx.bind("W"),  ctx.bind("U"),  ctx.bind("b"),
                       d, d, nn::Phi::Identity, true};
      Vec got = nn::gru_step(c, cell, h, x).value();
      auto sig = [](Vec v) {
        for (int j = 0; j < v.size(); ++j) v[j] = 1.0 / (1.0 + std::exp(-v[j]));
        return v;
      };
      Vec r = sig(as_mat("Wr") * hv + as_mat("Ur") * xv + as_vec("br"));
      Vec z = sig(as_mat("Wz") * hv + as_mat("Uz") * xv + as_vec("bz"));
      Vec htilde = as_mat("W") * Vec(r.array() * hv.array()) +
                   as_mat("U") * xv + as_vec("b");
      Vec want = ((1.0 - z.array()) * hv.array() + z.array() * htilde.array());
      err = std::max(err, rel_diff(got, want));
    }
    ctx.reset();
  }
  return make_result("euclidean_limits_layers", "layers", n, err, 1e-4);
}

// --- optim properties ------------------------------------------------------------

PropResult params_stay_in_ball() {
  Rng rng(121);
  double err = 0;
  const int n = 1000;
  const double c = 1.0;
  const double limit = (1.0 - 1e-5) / std::sqrt(c);
  for (int i = 0; i < n; ++i) {
    BallPoint theta = rand_point(rng, 0.999, c);
    Vec g(kDim);
    for (int j = 0; j < kDim; ++j) g[j] = rng.normal() * 50.0;
    const double lr = rng.uniform(1e-4, 10.0);
    BallPoint full = opt::rsgd_step_full(theta, g, lr);
    BallPoint proj = opt::rsgd_step_projected(theta, g, lr);
    err = std::max({err, full.norm() - limit, proj.norm() - limit});
  }
  return make_result("rsgd_params_stay_in_ball", "optim", n, std::max(err, 0.0),
                     1e-12);
}

PropResult rsgd_descent() {
  Rng rng(122);
  int increases = 0;
  const int n = 1000;
  const double c = 1.0;
  for (int i = 0; i < n; ++i) {
    BallPoint theta = rand_point(rng, 0.7, c);
    BallPoint target = rand_point(rng, 0.7, c);
    auto loss = [&](const BallPoint& t) {
      const double d = distance(t, target);
      return d * d;
    };
    // Euclidean gradient of d^2 via the recorded composition.
    nn::Ctx ctx(empty_store, c);
    ad::Var tv = ctx.tape.leaf(
        std::span<const double>(theta.coords().data(), kDim));
    ad::Var yv = ctx.tape.constant(
        std::span<const double>(target.coords().data(), kDim));
    ad::Var l = diff::distance_sq(tv, yv, c);
    ctx.tape.backward(l);
    Vec g = ctx.tape.grad(tv);
    BallPoint next = opt::rsgd_step_full(theta, g, 1e-3);
    if (loss(next) > loss(theta) + 1e-15) ++increases;
  }
  return make_result("rsgd_descent", "optim", n, static_cast<double>(increases),
                     0.01 * n);
}

PropResult riemannian_scaling_factor() {
  Rng rng(123);
  double err = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    BallPoint theta = rand_point(rng, 0.95, 1.0);
    Vec g = Vec::Zero(kDim);
    g[0] = 1.0;
    const double factor = opt::riemannian_grad(theta, g)[0];
    const double lam = conformal_factor(theta);
    err = std::max(err, std::abs(factor * lam * lam - 1.0));
  }
  return make_result("riemannian_scaling_factor", "optim", n, err, 1e-14);
}

}  // namespace

const std::vector<Property>& registry() {
  static const std::vector<Property> props = {
      {"left_cancellation", "ball-core", left_cancellation},
      {"scalar_distributivity", "ball-core", scalar_distributivity},
      {"scalar_associativity", "ball-core", scalar_associativity},
      {"nfold_addition", "ball-core", nfold_addition},
      {"scaling_property", "ball-core", scaling_property},
      {"scalar_mult_via_maps", "ball-core", scalar_mult_via_maps},
      {"distance_oracle_eq4", "ball-core", distance_oracle},
      {"gyroline_element", "ball-core", gyroline_element},
      {"exp_log_round_trip", "ball-core", exp_log_round_trip},
      {"parallel_transport_isometry", "ball-core", parallel_transport_isometry},
      {"geodesic_endpoint_midpoint", "ball-core", geodesic_endpoint_midpoint},
      {"law_of_sines", "ball-core", law_of_sines},
      {"gyroangle_tangent_agreement", "ball-core", gyroangle_tangent_agreement},
      {"gyro_chain_rule", "ball-core", gyro_chain_rule},
      {"hyperplane_distance_lower_bound", "ball-core",
       hyperplane_distance_lower_bound},
      {"euclidean_limits_ball_ops", "ball-core", euclidean_limits_ball},
      {"layer_composition_identity", "layers", layer_composition_identity},
      {"layer_outputs_in_ball", "layers", layer_outputs_in_ball},
      {"mlr_argmax_rescale_invariance", "layers", mlr_argmax_rescale_invariance},
      {"euclidean_limits_layers", "layers", euclidean_limits_layers},
      {"rsgd_params_stay_in_ball", "optim", params_stay_in_ball},
      {"rsgd_descent", "optim", rsgd_descent},
      {"riemannian_scaling_factor", "optim", riemannian_scaling_factor},
  };
  return props;
}

PropResult run_property(const std::string& name) {
  for (const Property& p : registry())
    if (p.name == name) return p.run();
  throw std::invalid_argument("unknown property: " + name);
}

std::vector<PropResult> run_all() {
  std::vector<PropResult> out;
  out.reserve(registry().size());
  for (const Property& p : registry()) out.push_back(p.run());
  return out;
}

std::string results_csv(const std::vector<PropResult>& results) {
  std::ostringstream os;
  os << "name,module,cases,max_err,tol,pass\n";
  for (const PropResult& r : results)
    os << r.name << ',' << r.module << ',' << r.cases << ',' << r.max_err
       << ',' << r.tol << ',' << (r.pass ? 1 : 0) << '\n';
  return os.str();
}

bool all_pass(const std::vector<PropResult>& results) {
  for (const PropResult& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace gyro::props
