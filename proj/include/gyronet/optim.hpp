#pragma once

#include <span>
#include <vector>

#include "gyronet/ball.hpp"
#include "gyronet/nn.hpp"

namespace gyro::opt {

// Riemannian gradient on the ball: the Euclidean gradient rescaled by the
// inverse metric, ((1 - c|theta|^2)^2 / 4) g = g / lambda_theta^2.
Vec riemannian_grad(const BallPoint& theta, const Vec& g_eucl);

// theta <- exp_theta(-lr * riemannian_grad), then safety projection.
BallPoint rsgd_step_full(const BallPoint& theta, const Vec& g_eucl, double lr,
                         const SafetyConfig& cfg = default_safety());

// theta <- project(theta - lr * riemannian_grad).
BallPoint rsgd_step_projected(const BallPoint& theta, const Vec& g_eucl,
                              double lr,
                              const SafetyConfig& cfg = default_safety());

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m, v;
  int64_t t = 0;
};

// Standard bias-corrected Adam update, in place.
void adam_step(AdamState& state, std::span<double> theta,
               std::span<const double> g, double lr,
               const AdamConfig& cfg = AdamConfig{});

struct OptimizerConfig {
  double lr_eucl = 1e-3;   // Adam, Euclidean parameters
  double lr_emb = 0.1;     // RSGD, hyperbolic embeddings
  double lr_hyp = 0.01;    // RSGD, other hyperbolic parameters
  bool projected = false;  // projected RSGD instead of full
  bool plain_sgd_eucl = false;  // SGD instead of Adam (Table-2 protocol)
  AdamConfig adam;
};

// Applies one update over a parameter store. A step with any non-finite
// gradient entry is skipped entirely and counted, never clipped.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, double c,
            const SafetyConfig& safety = default_safety());

  // Returns false when the step was skipped.
  bool step(nn::ParamStore& store, const nn::GradTable& grads);

  int64_t skipped_steps() const { return skipped_; }

 private:
  OptimizerConfig cfg_;
  double c_;
  SafetyConfig safety_;
  std::vector<AdamState> adam_states_;
  int64_t skipped_ = 0;
};

}  // namespace gyro::opt
