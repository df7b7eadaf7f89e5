#pragma once

#include <cmath>

#include "gyronet/ball.hpp"
#include "gyronet/rng.hpp"

namespace testsup {

// Independent distance oracle: the acosh form for c = 1, evaluated in
// extended precision. Must stay independent of the gyro-form implementation.
inline double dist_acosh_oracle(const gyro::Vec& x, const gyro::Vec& y) {
  long double xx = 0, yy = 0, dd = 0;
  for (int i = 0; i < x.size(); ++i) {
    xx += static_cast<long double>(x[i]) * x[i];
    yy += static_cast<long double>(y[i]) * y[i];
    const long double d = static_cast<long double>(x[i]) - y[i];
    dd += d * d;
  }
  return static_cast<double>(
      std::acosh(1.0L + 2.0L * dd / ((1.0L - xx) * (1.0L - yy))));
}

inline gyro::BallPoint rand_point(gyro::Rng& rng, double radius, double c,
                                  int dim = 5) {
  const double scale = c == 0.0 ? 1.0 : 1.0 / std::sqrt(c);
  return gyro::BallPoint(rng.ball_uniform(dim, radius * scale),
                         gyro::Curvature(c));
}

}  // namespace testsup
