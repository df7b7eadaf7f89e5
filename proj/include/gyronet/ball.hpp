#pragma once

#include <functional>

#include "gyronet/common.hpp"
#include "gyronet/safety.hpp"

namespace gyro {

// Curvature magnitude c >= 0: the space has sectional curvature -c. c = 0
// selects the exact Euclidean formulas (never a numerical limit), c > 0 the
// open ball of radius 1/sqrt(c).
struct Curvature {
  double c = 1.0;

  explicit Curvature(double value = 1.0);
  double sqrt_c() const;
  bool euclidean() const { return c == 0.0; }
};

// A point of the curvature-c ball: c * |coords|^2 < 1 strictly. Construction
// validates the invariant; use project_to_ball to repair raw vectors first.
class BallPoint {
 public:
  BallPoint(Vec coords, Curvature curv);
  BallPoint(std::initializer_list<double> coords, double c);

  const Vec& coords() const { return coords_; }
  double c() const { return curv_.c; }
  Curvature curvature() const { return curv_; }
  int dim() const { return static_cast<int>(coords_.size()); }
  double norm() const { return coords_.norm(); }

  BallPoint operator-() const;
  bool same_space(const BallPoint& o) const {
    return dim() == o.dim() && c() == o.c();
  }

 private:
  Vec coords_;
  Curvature curv_;
};

// A tangent vector attached to its basepoint.
struct TangentVector {
  Vec vec;
  BallPoint base;

  TangentVector(Vec v, BallPoint b);
  int dim() const { return static_cast<int>(vec.size()); }
};

// One class of hyperbolic MLR: offset point p and the tangent-space-at-origin
// normal parameter a' (optimized as a Euclidean vector). The effective normal
// at p is a = (lambda_0 / lambda_p) a', a positive multiple of a'.
struct Hyperplane {
  BallPoint p;
  Vec a_prime;

  Hyperplane(BallPoint point, Vec normal_param);
};

// --- Metric -----------------------------------------------------------------

// lambda_x^c = 2 / (1 - c|x|^2).
double conformal_factor(const BallPoint& x);

// Riemannian inner product g_x(u, v) = lambda_x^2 <u, v>.
double metric_inner(const BallPoint& x, const Vec& u, const Vec& v);
double metric_norm(const BallPoint& x, const Vec& u);

// --- Gyrovector operations ---------------------------------------------------

BallPoint mobius_add(const BallPoint& x, const BallPoint& y,
                     const SafetyConfig& cfg = default_safety());
BallPoint mobius_sub(const BallPoint& x, const BallPoint& y,
                     const SafetyConfig& cfg = default_safety());
BallPoint mobius_scalar(double r, const BallPoint& x,
                        const SafetyConfig& cfg = default_safety());
double distance(const BallPoint& x, const BallPoint& y,
                const SafetyConfig& cfg = default_safety());

// --- Riemannian maps ----------------------------------------------------------

BallPoint exp_map(const BallPoint& x, const TangentVector& v,
                  const SafetyConfig& cfg = default_safety());
TangentVector log_map(const BallPoint& x, const BallPoint& y,
                      const SafetyConfig& cfg = default_safety());
BallPoint exp0(const Vec& v, Curvature curv,
               const SafetyConfig& cfg = default_safety());
Vec log0(const BallPoint& y, const SafetyConfig& cfg = default_safety());

// P_{0->x}(v) = (lambda_0 / lambda_x) v = (1 - c|x|^2) v; a linear isometry
// onto the tangent space at x.
TangentVector parallel_transport_from_origin(const BallPoint& x, const Vec& v);

// gamma_{x->y}(t) = x (+) ((-x (+) y) (*) t); gamma(0) = x, gamma(1) = y.
BallPoint geodesic(const BallPoint& x, const BallPoint& y, double t,
                   const SafetyConfig& cfg = default_safety());

// Unit-speed geodesic from x with direction v, g_x(v, v) = 1 (verified to
// 1e-9; throws otherwise). d(gamma(0), gamma(t)) = t.
BallPoint unit_speed_geodesic(const BallPoint& x, const TangentVector& v,
                              double t,
                              const SafetyConfig& cfg = default_safety());

// --- Hyperbolic trigonometry --------------------------------------------------

// Gyroangle at vertex A of triangle BAC, in [0, pi]. At A = 0 this is the
// plain Euclidean angle between B and C. Throws if B or C coincides with A.
double gyroangle(const BallPoint& a, const BallPoint& b, const BallPoint& c,
                 const SafetyConfig& cfg = default_safety());

// --- Hyperplanes ---------------------------------------------------------------

// Closed-form distance from x to the hyperplane {w : <-p (+) w, a> = 0}.
double hyperplane_distance(const BallPoint& x, const Hyperplane& h,
                           const SafetyConfig& cfg = default_safety());
bool hyperplane_contains(const BallPoint& x, const Hyperplane& h, double tol,
                         const SafetyConfig& cfg = default_safety());

// --- Mobius versions of Euclidean maps ----------------------------------------

// M (*) x; exactly Mx when c = 0 or M is orthogonal, 0 when Mx = 0.
BallPoint mobius_matvec(const Mat& m, const BallPoint& x,
                        const SafetyConfig& cfg = default_safety());

// f^{(*)c}(x) = exp0(f(log0(x))).
BallPoint mobius_fn_apply(const std::function<Vec(const Vec&)>& f,
                          const BallPoint& x,
                          const SafetyConfig& cfg = default_safety());

// --- Numerical gyroderivative ---------------------------------------------------

// (1/delta) (*) (-h(t) (+) h(t + delta)); test utility for the gyro chain
// rule, not a training primitive.
Vec gyroderivative_numeric(const std::function<BallPoint(double)>& h, double t,
                           double delta = 1e-6,
                           const SafetyConfig& cfg = default_safety());

}  // namespace gyro
