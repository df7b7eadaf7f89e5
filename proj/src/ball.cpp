#include "gyronet/ball.hpp"

#include <cmath>

namespace gyro {

namespace {

void require_same_space(const BallPoint& x, const BallPoint& y,
                        const char* where) {
  if (x.dim() != y.dim())
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
  if (x.c() != y.c())
    throw std::invalid_argument(std::string(where) + ": curvature mismatch");
}

// Raw Mobius addition; inputs assumed valid, output not yet projected.
Vec mobius_add_raw(const Vec& x, const Vec& y, double c) {
  if (c == 0.0) return x + y;
  const double xy = x.dot(y);
  const double xx = x.squaredNorm();
  const double yy = y.squaredNorm();
  const double den = 1.0 + 2.0 * c * xy + c * c * xx * yy;
  return ((1.0 + 2.0 * c * xy + c * yy) * x + (1.0 - c * xx) * y) / den;
}

Vec mobius_scalar_raw(double r, const Vec& x, double c,
                      const SafetyConfig& cfg) {
  if (c == 0.0) return r * x;
  const double nrm = x.norm();
  if (nrm == 0.0) return Vec::Zero(x.size());
  const double sc = std::sqrt(c);
  return (safe_tanh(r * safe_atanh(sc * nrm, cfg), cfg) / (sc * nrm)) * x;
}

}  // namespace

Curvature::Curvature(double value) : c(value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw std::invalid_argument("Curvature: c must be finite and >= 0");
}

double Curvature::sqrt_c() const { return std::sqrt(c); }

BallPoint::BallPoint(Vec coords, Curvature curv)
    : coords_(std::move(coords)), curv_(curv) {
  if (coords_.size() == 0)
    throw std::invalid_argument("BallPoint: empty coordinate vector");
  if (!coords_.allFinite())
    throw std::invalid_argument("BallPoint: non-finite coordinates");
  if (curv_.c > 0.0 && curv_.c * coords_.squaredNorm() >= 1.0)
    throw std::invalid_argument("BallPoint: c*|x|^2 < 1 violated");
}

BallPoint::BallPoint(std::initializer_list<double> coords, double c)
    : BallPoint(Vec(Eigen::Map<const Vec>(coords.begin(),
                                          static_cast<long>(coords.size()))),
                Curvature(c)) {}

BallPoint BallPoint::operator-() const { return BallPoint(-coords_, curv_); }

TangentVector::TangentVector(Vec v, BallPoint b)
    : vec(std::move(v)), base(std::move(b)) {
  if (vec.size() != base.coords().size())
    throw std::invalid_argument("TangentVector: dimension mismatch with base");
}

Hyperplane::Hyperplane(BallPoint point, Vec normal_param)
    : p(std::move(point)), a_prime(std::move(normal_param)) {
  if (a_prime.size() != p.coords().size())
    throw std::invalid_argument("Hyperplane: dimension mismatch");
}

double conformal_factor(const BallPoint& x) {
  return 2.0 / (1.0 - x.c() * x.coords().squaredNorm());
}

double metric_inner(const BallPoint& x, const Vec& u, const Vec& v) {
  const double lam = conformal_factor(x);
  return lam * lam * u.dot(v);
}

double metric_norm(const BallPoint& x, const Vec& u) {
  return conformal_factor(x) * u.norm();
}

BallPoint mobius_add(const BallPoint& x, const BallPoint& y,
                     const SafetyConfig& cfg) {
  require_same_space(x, y, "mobius_add");
  Vec out = mobius_add_raw(x.coords(), y.coords(), x.c());
  return BallPoint(project_to_ball(std::move(out), x.c(), cfg), x.curvature());
}

BallPoint mobius_sub(const BallPoint& x, const BallPoint& y,
                     const SafetyConfig& cfg) {
  return mobius_add(x, -y, cfg);
}

BallPoint mobius_scalar(double r, const BallPoint& x, const SafetyConfig& cfg) {
  Vec out = mobius_scalar_raw(r, x.coords(), x.c(), cfg);
  return BallPoint(project_to_ball(std::move(out), x.c(), cfg), x.curvature());
}

double distance(const BallPoint& x, const BallPoint& y,
                const SafetyConfig& cfg) {
  require_same_space(x, y, "distance");
  const double c = x.c();
  if (c == 0.0) return 2.0 * (x.coords() - y.coords()).norm();
  const Vec w = mobius_add_raw(-x.coords(), y.coords(), c);
  const double sc = std::sqrt(c);
  return (2.0 / sc) * safe_atanh(sc * w.norm(), cfg);
}

BallPoint exp_map(const BallPoint& x, const TangentVector& v,
                  const SafetyConfig& cfg) {
  if (v.base.coords() != x.coords() || v.base.c() != x.c())
    throw std::invalid_argument("exp_map: tangent vector based at another point");
  const double c = x.c();
  if (c == 0.0)
    return BallPoint(x.coords() + v.vec, x.curvature());
  const double nrm = v.vec.norm();
  if (nrm == 0.0) return x;
  const double sc = std::sqrt(c);
  const double lam = conformal_factor(x);
  const Vec step = (safe_tanh(sc * lam * nrm / 2.0, cfg) / (sc * nrm)) * v.vec;
  Vec out = mobius_add_raw(x.coords(), step, c);
  return BallPoint(project_to_ball(std::move(out), c, cfg), x.curvature());
}

TangentVector log_map(const BallPoint& x, const BallPoint& y,
                      const SafetyConfig& cfg) {
  require_same_space(x, y, "log_map");
  const double c = x.c();
  if (c == 0.0) return TangentVector(y.coords() - x.coords(), x);
  const Vec w = mobius_add_raw(-x.coords(), y.coords(), c);
  const double nrm = w.norm();
  if (nrm == 0.0) return TangentVector(Vec::Zero(x.dim()), x);
  const double sc = std::sqrt(c);
  const double lam = conformal_factor(x);
  return TangentVector((2.0 / (sc * lam) * safe_atanh(sc * nrm, cfg) / nrm) * w,
                       x);
}

BallPoint exp0(const Vec& v, Curvature curv, const SafetyConfig& cfg) {
  if (curv.euclidean()) return BallPoint(v, curv);
  const double nrm = v.norm();
  if (nrm == 0.0) return BallPoint(Vec::Zero(v.size()), curv);
  const double sc = curv.sqrt_c();
  Vec out = (safe_tanh(sc * nrm, cfg) / (sc * nrm)) * v;
  return BallPoint(project_to_ball(std::move(out), curv.c, cfg), curv);
}

Vec log0(const BallPoint& y, const SafetyConfig& cfg) {
  if (y.c() == 0.0) return y.coords();
  const double nrm = y.norm();
  if (nrm == 0.0) return Vec::Zero(y.dim());
  const double sc = std::sqrt(y.c());
  return (safe_atanh(sc * nrm, cfg) / (sc * nrm)) * y.coords();
}

TangentVector parallel_transport_from_origin(const BallPoint& x, const Vec& v) {
  if (v.size() != x.dim())
    throw std::invalid_argument("parallel_transport_from_origin: dim mismatch");
  return TangentVector((1.0 - x.c() * x.coords().squaredNorm()) * v, x);
}

BallPoint geodesic(const BallPoint& x, const BallPoint& y, double t,
                   const SafetyConfig& cfg) {
  require_same_space(x, y, "geodesic");
  const double c = x.c();
  if (c == 0.0)
    return BallPoint(x.coords() + t * (y.coords() - x.coords()), x.curvature());
  const Vec w = mobius_add_raw(-x.coords(), y.coords(), c);
  const Vec step = mobius_scalar_raw(t, w, c, cfg);
  Vec out = mobius_add_raw(x.coords(), step, c);
  return BallPoint(project_to_ball(std::move(out), c, cfg), x.curvature());
}

BallPoint unit_speed_geodesic(const BallPoint& x, const TangentVector& v,
                              double t, const SafetyConfig& cfg) {
  if (v.base.coords() != x.coords() || v.base.c() != x.c())
    throw std::invalid_argument(
        "unit_speed_geodesic: tangent vector based at another point");
  const double speed = metric_inner(x, v.vec, v.vec);
  if (std::abs(speed - 1.0) > 1e-9)
    throw std::invalid_argument("unit_speed_geodesic: g_x(v, v) != 1");
  const double c = x.c();
  if (c == 0.0)
    return BallPoint(x.coords() + t * v.vec, x.curvature());
  const double sc = std::sqrt(c);
  const Vec step = (safe_tanh(sc * t / 2.0, cfg) / (sc * v.vec.norm())) * v.vec;
  Vec out = mobius_add_raw(x.coords(), step, c);
  return BallPoint(project_to_ball(std::move(out), c, cfg), x.curvature());
}

double gyroangle(const BallPoint& a, const BallPoint& b, const BallPoint& c,
                 const SafetyConfig& cfg) {
  require_same_space(a, b, "gyroangle");
  require_same_space(a, c, "gyroangle");
  const Vec u = a.c() == 0.0 ? Vec(b.coords() - a.coords())
                             : mobius_add_raw(-a.coords(), b.coords(), a.c());
  const Vec w = a.c() == 0.0 ? Vec(c.coords() - a.coords())
                             : mobius_add_raw(-a.coords(), c.coords(), a.c());
  const double nu = u.norm();
  const double nw = w.norm();
  if (nu == 0.0 || nw == 0.0)
    throw std::invalid_argument("gyroangle: vertex coincides with A");
  (void)cfg;
  const double cosv = std::clamp(u.dot(w) / (nu * nw), -1.0, 1.0);
  return std::acos(cosv);
}

double hyperplane_distance(const BallPoint& x, const Hyperplane& h,
                           const SafetyConfig& cfg) {
  require_same_space(x, h.p, "hyperplane_distance");
  const double na = h.a_prime.norm();
  if (na == 0.0)
    throw std::invalid_argument("hyperplane_distance: zero normal");
  const double c = x.c();
  if (c == 0.0) {
    return 2.0 * std::abs((x.coords() - h.p.coords()).dot(h.a_prime)) / na;
  }
  const Vec w = mobius_add_raw(-h.p.coords(), x.coords(), c);
  const double sc = std::sqrt(c);
  const double num = 2.0 * sc * std::abs(w.dot(h.a_prime));
  const double den = (1.0 - c * w.squaredNorm()) * na;
  (void)cfg;
  return std::asinh(num / den) / sc;
}

bool hyperplane_contains(const BallPoint& x, const Hyperplane& h, double tol,
                         const SafetyConfig& cfg) {
  require_same_space(x, h.p, "hyperplane_contains");
  (void)cfg;
  const double c = x.c();
  const Vec w = c == 0.0 ? Vec(x.coords() - h.p.coords())
                         : mobius_add_raw(-h.p.coords(), x.coords(), c);
  return std::abs(w.dot(h.a_prime)) <= tol;
}

BallPoint mobius_matvec(const Mat& m, const BallPoint& x,
                        const SafetyConfig& cfg) {
  if (m.cols() != x.dim())
    throw std::invalid_argument("mobius_matvec: shape mismatch");
  const double c = x.c();
  Vec mx = m * x.coords();
  if (c == 0.0)
    return BallPoint(std::move(mx), x.curvature());
  const double nmx = mx.norm();
  const double nx = x.norm();
  if (nmx == 0.0 || nx == 0.0)
    return BallPoint(Vec::Zero(m.rows()), x.curvature());
  const double sc = std::sqrt(c);
  Vec out = (safe_tanh((nmx / nx) * safe_atanh(sc * nx, cfg), cfg) / (sc * nmx)) * mx;
  return BallPoint(project_to_ball(std::move(out), c, cfg), x.curvature());
}

BallPoint mobius_fn_apply(const std::function<Vec(const Vec&)>& f,
                          const BallPoint& x, const SafetyConfig& cfg) {
  return exp0(f(log0(x, cfg)), x.curvature(), cfg);
}

Vec gyroderivative_numeric(const std::function<BallPoint(double)>& h, double t,
                           double delta, const SafetyConfig& cfg) {
  if (!(delta > 0.0))
    throw std::invalid_argument("gyroderivative_numeric: delta must be > 0");
  const BallPoint ht = h(t);
  const BallPoint htd = h(t + delta);
  return mobius_scalar(1.0 / delta, mobius_add(-ht, htd, cfg), cfg).coords();
}

}  // namespace gyro
