#pragma once

#include "gyronet/common.hpp"

namespace gyro {

// Numerical guard rails for ball arithmetic. Results of ball operations are
// kept at Euclidean norm <= (1 - ball_eps)/sqrt(c); vectors that are exactly
// zero are nudged by origin_eps before entering operations whose gradient is
// singular at the origin; tanh/atanh arguments are clamped.
struct SafetyConfig {
  double ball_eps = 1e-5;
  double origin_eps = 1e-15;
  double tanh_clamp = 15.0;
  double atanh_clamp = 1.0 - 1e-5;

  void validate() const;  // throws ConfigError on nonsense values
};

inline const SafetyConfig& default_safety() {
  static const SafetyConfig cfg{};
  return cfg;
}

double safe_tanh(double z, const SafetyConfig& cfg = default_safety());
double safe_atanh(double z, const SafetyConfig& cfg = default_safety());

// Rescales x onto radius (1 - ball_eps)/sqrt(c) when it lies outside; interior
// points pass through unchanged (bit-for-bit). c = 0 never rescales.
// Throws on non-finite input.
Vec project_to_ball(Vec x, double c, const SafetyConfig& cfg = default_safety());

// Input guard for origin-singular operations: an exactly-zero vector gets
// origin_eps added to its first coordinate; anything else passes through.
Vec perturb_origin(Vec x, const SafetyConfig& cfg = default_safety());

}  // namespace gyro
