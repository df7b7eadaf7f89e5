#include <doctest.h>

#include <cmath>

#include "gyronet/ball.hpp"
#include "gyronet/props.hpp"
#include "support.hpp"

using namespace gyro;
using testsup::rand_point;

namespace {
Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("conformal factor") {
  CHECK(conformal_factor(BallPoint({0.0, 0.0}, 1.0)) == doctest::Approx(2.0));
  CHECK(conformal_factor(BallPoint({3.0, -4.0}, 0.0)) == doctest::Approx(2.0));
  CHECK(conformal_factor(BallPoint({0.5, 0.0}, 1.0)) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("mobius addition identities") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    BallPoint zero(Vec::Zero(5), Curvature(1.0));
    CHECK((mobius_add(x, zero).coords() - x.coords()).norm() == 0.0);
    CHECK(mobius_add(-x, x).norm() < 1e-15);
    CHECK(mobius_add(x, -x).norm() < 1e-15);

    BallPoint y = rand_point(rng, 0.9, 1.0);
    BallPoint back = mobius_add(-x, mobius_add(x, y));
    CHECK((back.coords() - y.coords()).norm() < 1e-9);  // left cancellation
  }
}

TEST_CASE("mobius addition euclidean branch") {
  BallPoint x(vec2(1, 2), Curvature(0.0));
  BallPoint y(vec2(3, 4), Curvature(0.0));
  CHECK((mobius_add(x, y).coords() - vec2(4, 6)).norm() == 0.0);
  CHECK((mobius_sub(BallPoint(vec2(4, 6), Curvature(0.0)), y).coords() -
         vec2(1, 2)).norm() == 0.0);
}

TEST_CASE("mobius addition mismatch errors") {
  BallPoint a({0.1, 0.2}, 1.0);
  BallPoint b({0.1, 0.2, 0.3}, 1.0);
  BallPoint c({0.1, 0.2}, 0.5);
  CHECK_THROWS_AS(mobius_add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(mobius_add(a, c), std::invalid_argument);
}

TEST_CASE("mobius subtraction") {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    CHECK(mobius_sub(x, x).norm() < 1e-15);
    BallPoint zero(Vec::Zero(5), Curvature(1.0));
    CHECK((mobius_sub(x, zero).coords() - x.coords()).norm() == 0.0);
  }
}

TEST_CASE("mobius scalar multiplication") {
  BallPoint x(vec2(0.5, 0.0), Curvature(1.0));
  // tanh(2 atanh(0.5)) = 0.8 by the double-angle identity
  CHECK((mobius_scalar(2.0, x).coords() - vec2(0.8, 0.0)).norm() < 1e-15);
  CHECK((mobius_scalar(1.0, x).coords() - x.coords()).norm() < 1e-15);
  CHECK(mobius_scalar(0.0, x).norm() == 0.0);
  CHECK(mobius_scalar(3.0, BallPoint(vec2(0, 0), Curvature(1.0))).norm() == 0.0);
  BallPoint e(vec2(1.5, -2.0), Curvature(0.0));
  CHECK((mobius_scalar(2.0, e).coords() - vec2(3.0, -4.0)).norm() == 0.0);
}

TEST_CASE("distance") {
  BallPoint o(vec2(0, 0), Curvature(1.0));
  BallPoint h(vec2(0.5, 0.0), Curvature(1.0));
  CHECK(distance(h, h) == 0.0);
  CHECK(distance(o, h) == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  BallPoint a(vec2(0.25, -0.5), Curvature(0.0));
  BallPoint b(vec2(1.25, -0.5), Curvature(0.0));
  CHECK(distance(a, b) == doctest::Approx(2.0).epsilon(1e-15));

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    BallPoint y = rand_point(rng, 0.9, 1.0);
    CHECK(distance(x, y) ==
          doctest::Approx(testsup::dist_acosh_oracle(x.coords(), y.coords()))
              .epsilon(1e-9));
  }
}

TEST_CASE("exp and log maps") {
  BallPoint o(vec2(0, 0), Curvature(1.0));
  const double at = std::atanh(0.5);
  BallPoint y = exp_map(o, TangentVector(vec2(at, 0.0), o));
  CHECK((y.coords() - vec2(0.5, 0.0)).norm() < 1e-15);
  CHECK((log_map(o, BallPoint(vec2(0.5, 0.0), Curvature(1.0))).vec -
         vec2(at, 0.0)).norm() < 1e-15);

  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    CHECK((exp_map(x, TangentVector(Vec::Zero(5), x)).coords() - x.coords())
              .norm() == 0.0);
    CHECK(log_map(x, x).vec.norm() == 0.0);

    Vec v = rng.ball_uniform(5, 1.0);
    BallPoint z = exp_map(x, TangentVector(v, x));
    CHECK((log_map(x, z).vec - v).norm() < 1e-8);

    BallPoint w = rand_point(rng, 0.9, 1.0);
    TangentVector l = log_map(x, w);
    CHECK((exp_map(x, l).coords() - w.coords()).norm() < 1e-8);
    CHECK(metric_norm(x, l.vec) == doctest::Approx(distance(x, w)).epsilon(1e-10));
  }

  BallPoint other({0.1, 0.1}, 1.0);
  CHECK_THROWS_AS(exp_map(o, TangentVector(vec2(0.1, 0.1), other)),
                  std::invalid_argument);
}

TEST_CASE("origin maps") {
  const Curvature c1(1.0);
  CHECK(exp0(vec2(0, 0), c1).norm() == 0.0);
  CHECK(log0(BallPoint(vec2(0, 0), c1)).norm() == 0.0);
  CHECK((exp0(vec2(0.3, -0.2), Curvature(0.0)).coords() - vec2(0.3, -0.2))
            .norm() == 0.0);
  // atanh(0.8) = ln 3
  CHECK((log0(BallPoint(vec2(0.8, 0.0), c1)) - vec2(std::log(3.0), 0.0)).norm() <
        1e-14);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Vec v = rng.ball_uniform(4, 1.5);
    CHECK((log0(exp0(v, c1)) - v).norm() < 1e-9);
  }
}

TEST_CASE("parallel transport from origin") {
  BallPoint o(vec2(0, 0), Curvature(1.0));
  CHECK((parallel_transport_from_origin(o, vec2(0.3, 0.7)).vec -
         vec2(0.3, 0.7)).norm() == 0.0);
  BallPoint x(vec2(0.5, 0.0), Curvature(1.0));
  CHECK((parallel_transport_from_origin(x, vec2(1.0, 0.0)).vec -
         vec2(0.75, 0.0)).norm() < 1e-15);

  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    BallPoint p = rand_point(rng, 0.9, 1.0);
    Vec u = rng.ball_uniform(5, 1.0), v = rng.ball_uniform(5, 1.0);
    TangentVector pu = parallel_transport_from_origin(p, u);
    TangentVector pv = parallel_transport_from_origin(p, v);
    CHECK(metric_inner(p, pu.vec, pv.vec) ==
          doctest::Approx(4.0 * u.dot(v)).epsilon(1e-12));
  }
}

TEST_CASE("geodesic") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    BallPoint y = rand_point(rng, 0.9, 1.0);
    CHECK((geodesic(x, y, 0.0).coords() - x.coords()).norm() < 1e-12);
    CHECK((geodesic(x, y, 1.0).coords() - y.coords()).norm() < 1e-9);
    const double t = rng.uniform01();
    BallPoint via = exp_map(x, TangentVector(t * log_map(x, y).vec, x));
    CHECK((geodesic(x, y, t).coords() - via.coords()).norm() < 1e-9);
    BallPoint mid = geodesic(x, y, 0.5);
    const double d = distance(x, y);
    CHECK(distance(x, mid) == doctest::Approx(0.5 * d).epsilon(1e-9));
    CHECK(distance(mid, y) == doctest::Approx(0.5 * d).epsilon(1e-9));
  }
}

TEST_CASE("unit-speed geodesic") {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    BallPoint x = rand_point(rng, 0.7, 1.0);
    Vec dir = rng.ball_uniform(5, 1.0);
    dir /= dir.norm() * conformal_factor(x);  // g_x-unit
    TangentVector v(dir, x);
    CHECK((unit_speed_geodesic(x, v, 0.0).coords() - x.coords()).norm() == 0.0);
    for (double t : {0.1, 0.5, 1.0})
      CHECK(distance(x, unit_speed_geodesic(x, v, t)) ==
            doctest::Approx(t).epsilon(1e-10));
    CHECK_THROWS_AS(unit_speed_geodesic(x, TangentVector(2.0 * dir, x), 1.0),
                    std::invalid_argument);
  }
  // c -> 0: reduces to x + t v for a g0-unit v (Euclidean speed 1/2)
  const double c_small = 1e-8;
  BallPoint x(vec2(0.2, -0.1), Curvature(c_small));
  Vec dir = vec2(1.0, 2.0);
  dir /= dir.norm() * conformal_factor(x);
  for (double t : {0.3, 0.9}) {
    Vec got = unit_speed_geodesic(x, TangentVector(dir, x), t).coords();
    Vec want = x.coords() + t * dir;
    CHECK((got - want).norm() / want.norm() < 1e-5);
  }
}

TEST_CASE("gyroangle") {
  BallPoint a(vec2(0, 0), Curvature(1.0));
  BallPoint b(vec2(0.5, 0.0), Curvature(1.0));
  BallPoint c(vec2(0.0, 0.3), Curvature(1.0));
  CHECK(gyroangle(a, b, b) == doctest::Approx(0.0));
  CHECK(gyroangle(a, b, c) == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK_THROWS_AS(gyroangle(a, a, c), std::invalid_argument);

  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    BallPoint p = rand_point(rng, 0.8, 1.0);
    BallPoint q = rand_point(rng, 0.8, 1.0);
    BallPoint r = rand_point(rng, 0.8, 1.0);
    if ((q.coords() - p.coords()).norm() < 1e-3 ||
        (r.coords() - p.coords()).norm() < 1e-3)
      continue;
    const Vec u = log_map(p, q).vec, w = log_map(p, r).vec;
    const double cosv = std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0);
    CHECK(gyroangle(p, q, r) == doctest::Approx(std::acos(cosv)).epsilon(1e-9));
  }
}

TEST_CASE("hyperplane distance and membership") {
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    BallPoint p = rand_point(rng, 0.6, 1.0);
    Vec a = rng.ball_uniform(5, 1.0);
    a /= a.norm();
    Hyperplane h(p, a);

    CHECK(hyperplane_contains(p, h, 1e-12));
    Vec z = rng.ball_uniform(5, 0.8);
    z -= z.dot(a) * a;  // z orthogonal to a
    BallPoint on = exp_map(p, TangentVector(z, p));
    CHECK(hyperplane_distance(on, h) < 1e-12);
    CHECK(hyperplane_contains(on, h, 1e-9));
    BallPoint off = exp_map(p, TangentVector(0.5 * a, p));
    CHECK_FALSE(hyperplane_contains(off, h, 1e-6));
  }

  // c -> 0 limit at p = 0: 2|<x, a>|/|a|
  const Curvature cs(1e-8);
  BallPoint p0(vec2(0, 0), cs);
  Vec a = vec2(2.0, -1.0);
  BallPoint x(vec2(0.3, 0.4), cs);
  const double lim = 2.0 * std::abs(x.coords().dot(a)) / a.norm();
  CHECK(hyperplane_distance(x, Hyperplane(p0, a)) ==
        doctest::Approx(lim).epsilon(1e-5));

  CHECK_THROWS_AS(
      hyperplane_distance(x, Hyperplane(p0, vec2(0, 0))),
      std::invalid_argument);
}

TEST_CASE("mobius matrix-vector multiplication") {
  Rng rng(11);
  Mat eye = Mat::Identity(5, 5);
  for (int i = 0; i < 50; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    CHECK((mobius_matvec(eye, x).coords() - x.coords()).norm() < 1e-15);

    // orthogonal matrices act as plain rotations
    Mat q = Eigen::HouseholderQR<Mat>(Mat::NullaryExpr(5, 5, [&](int, int) {
                                        return rng.normal();
                                      }))
                .householderQ();
    CHECK((mobius_matvec(q, x).coords() - q * x.coords()).norm() < 1e-12);

    // matrix associativity
    Mat m1 = Mat::NullaryExpr(5, 5, [&](int, int) { return rng.uniform(-1, 1); });
    Mat m2 = Mat::NullaryExpr(5, 5, [&](int, int) { return rng.uniform(-1, 1); });
    BallPoint lhs = mobius_matvec(Mat(m1 * m2), x);
    BallPoint rhs = mobius_matvec(m1, mobius_matvec(m2, x));
    CHECK((lhs.coords() - rhs.coords()).norm() < 1e-8);
  }
  BallPoint x(vec2(0.3, 0.4), Curvature(1.0));
  CHECK(mobius_matvec(Mat::Zero(3, 2), x).norm() == 0.0);
  BallPoint e(vec2(0.3, 0.4), Curvature(0.0));
  Mat m(2, 2);
  m << 1, 2, 3, 4;
  CHECK((mobius_matvec(m, e).coords() - m * e.coords()).norm() == 0.0);
  CHECK_THROWS_AS(mobius_matvec(Mat::Zero(2, 3), x), std::invalid_argument);
}

TEST_CASE("mobius version of a function") {
  Rng rng(12);
  auto relu = [](const Vec& v) { return Vec(v.cwiseMax(0.0)); };
  for (int i = 0; i < 50; ++i) {
    BallPoint x = rand_point(rng, 0.9, 1.0);
    auto ident = [](const Vec& v) { return v; };
    CHECK((mobius_fn_apply(ident, x).coords() - x.coords()).norm() < 1e-15);

    // morphism property for affine maps
    Mat m1 = Mat::NullaryExpr(5, 5, [&](int, int) { return rng.uniform(-1, 1); });
    Mat m2 = Mat::NullaryExpr(5, 5, [&](int, int) { return rng.uniform(-1, 1); });
    Vec b1 = rng.ball_uniform(5, 0.5), b2 = rng.ball_uniform(5, 0.5);
    auto f = [&](const Vec& v) { return Vec(m1 * v + b1); };
    auto g = [&](const Vec& v) { return Vec(m2 * v + b2); };
    auto fg = [&](const Vec& v) { return f(g(v)); };
    BallPoint staged = mobius_fn_apply(f, mobius_fn_apply(g, x));
    BallPoint fused = mobius_fn_apply(fg, x);
    CHECK((staged.coords() - fused.coords()).norm() < 1e-9);

    // direction preserving for positively homogeneous maps
    Vec pos = rng.ball_uniform(5, 0.7).cwiseAbs();
    BallPoint xp(pos, Curvature(1.0));
    Vec out = mobius_fn_apply(relu, xp).coords();
    CHECK((out / out.norm() - pos / pos.norm()).norm() < 1e-12);
  }
}

TEST_CASE("numerical gyroderivative") {
  Rng rng(13);
  BallPoint x = rand_point(rng, 0.5, 1.0);
  BallPoint y = rand_point(rng, 0.5, 1.0);
  auto constant = [&](double) { return x; };
  CHECK(gyroderivative_numeric(constant, 0.3).norm() < 1e-6);

  auto h = [&](double t) { return geodesic(x, y, t); };
  Vec d0 = gyroderivative_numeric(h, 0.0);
  Vec dir = mobius_add(-x, y).coords();
  CHECK((d0 / d0.norm() - dir / dir.norm()).norm() < 1e-6);
}

TEST_CASE("safety layer") {
  const SafetyConfig cfg;
  Vec inside = vec2(0.25, 0.25);
  CHECK((project_to_ball(inside, 1.0) - inside).norm() == 0.0);
  Vec big = vec2(2.0, 0.0);
  CHECK(project_to_ball(big, 1.0).norm() ==
        doctest::Approx(1.0 - 1e-5).epsilon(1e-12));
  Vec nan = vec2(std::nan(""), 0.0);
  CHECK_THROWS_AS(project_to_ball(nan, 1.0), std::invalid_argument);

  Vec z = perturb_origin(vec2(0, 0));
  CHECK(z[0] == 1e-15);
  CHECK(z[1] == 0.0);
  CHECK((perturb_origin(inside) - inside).norm() == 0.0);

  CHECK(safe_tanh(0.0) == 0.0);
  CHECK(safe_tanh(100.0) == std::tanh(15.0));
  CHECK(safe_atanh(1.0) == std::atanh(1.0 - 1e-5));
  CHECK_THROWS_AS(SafetyConfig{.atanh_clamp = 1.5}.validate(), ConfigError);
}

TEST_CASE("type invariants") {
  CHECK_THROWS_AS(Curvature(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(BallPoint({1.5, 0.0}, 1.0), std::invalid_argument);
  CHECK_NOTHROW(BallPoint({1.5, 0.0}, 0.0));
  CHECK_THROWS_AS(Hyperplane(BallPoint({0.1, 0.1}, 1.0), Vec::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("ball-core property registry entries pass") {
  for (const auto& prop : gyro::props::registry()) {
    if (prop.module != "ball-core") continue;
    if (prop.name == "hyperplane_distance_lower_bound") continue;  // slow; acceptance runs it
    auto res = prop.run();
    INFO(prop.name, " max_err=", res.max_err, " tol=", res.tol);
    CHECK(res.pass);
  }
}

TEST_CASE("corrupted addition breaks left cancellation") {
  // mutation check: a sign flip in the numerator must be caught
  auto corrupted_add = [](const Vec& x, const Vec& y) {
    const double c = 1.0;
    const double xy = x.dot(y), xx = x.squaredNorm(), yy = y.squaredNorm();
    const double den = 1.0 + 2.0 * c * xy + c * c * xx * yy;
    return Vec(((1.0 - 2.0 * c * xy + c * yy) * x + (1.0 - c * xx) * y) / den);
  };
  Rng rng(14);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Vec x = rng.ball_uniform(5, 0.9), y = rng.ball_uniform(5, 0.9);
    Vec sum = corrupted_add(x, y);
    if (sum.norm() >= 1.0) continue;
    worst = std::max(worst, (corrupted_add(-x, sum) - y).norm());
  }
  CHECK(worst > 1e-6);
}
