#include "gyronet/safety.hpp"

#include <algorithm>
#include <cmath>

namespace gyro {

void SafetyConfig::validate() const {
  if (!(ball_eps > 0) || !(origin_eps > 0) || !(tanh_clamp > 0) ||
      !(atanh_clamp > 0) || !(atanh_clamp < 1)) {
    throw ConfigError("SafetyConfig: fields must be positive, atanh_clamp < 1");
  }
}

double safe_tanh(double z, const SafetyConfig& cfg) {
  return std::tanh(std::clamp(z, -cfg.tanh_clamp, cfg.tanh_clamp));
}

double safe_atanh(double z, const SafetyConfig& cfg) {
  return std::atanh(std::clamp(z, -cfg.atanh_clamp, cfg.atanh_clamp));
}

Vec project_to_ball(Vec x, double c, const SafetyConfig& cfg) {
  if (!x.allFinite()) throw std::invalid_argument("project_to_ball: non-finite input");
  if (c == 0.0) return x;
  const double max_norm = (1.0 - cfg.ball_eps) / std::sqrt(c);
  const double nrm = x.norm();
  if (nrm > max_norm) x *= max_norm / nrm;
  return x;
}

Vec perturb_origin(Vec x, const SafetyConfig& cfg) {
  if (x.size() > 0 && x.isZero(0.0)) x[0] = cfg.origin_eps;
  return x;
}

}  // namespace gyro
