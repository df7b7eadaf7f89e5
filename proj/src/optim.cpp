#include "gyronet/optim.hpp"

#include <cmath>

namespace gyro::opt {

Vec riemannian_grad(const BallPoint& theta, const Vec& g_eucl) {
  if (g_eucl.size() != theta.dim())
    throw std::invalid_argument("riemannian_grad: dimension mismatch");
  const double f = 1.0 - theta.c() * theta.coords().squaredNorm();
  return (f * f / 4.0) * g_eucl;
}

BallPoint rsgd_step_full(const BallPoint& theta, const Vec& g_eucl, double lr,
                         const SafetyConfig& cfg) {
  if (!g_eucl.allFinite())
    throw std::invalid_argument("rsgd_step_full: non-finite gradient");
  const Vec step = -lr * riemannian_grad(theta, g_eucl);
  return exp_map(theta, TangentVector(step, theta), cfg);
}

BallPoint rsgd_step_projected(const BallPoint& theta, const Vec& g_eucl,
                              double lr, const SafetyConfig& cfg) {
  if (!g_eucl.allFinite())
    throw std::invalid_argument("rsgd_step_projected: non-finite gradient");
  Vec moved = theta.coords() - lr * riemannian_grad(theta, g_eucl);
  return BallPoint(project_to_ball(std::move(moved), theta.c(), cfg),
                   theta.curvature());
}

void adam_step(AdamState& state, std::span<double> theta,
               std::span<const double> g, double lr, const AdamConfig& cfg) {
  const int n = static_cast<int>(theta.size());
  if (static_cast<int>(g.size()) != n)
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (state.t == 0) {
    state.m = Vec::Zero(n);
    state.v = Vec::Zero(n);
  }
  state.t += 1;
  const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (int i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / b1t;
    const double vhat = state.v[i] / b2t;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Optimizer::Optimizer(OptimizerConfig cfg, double c, const SafetyConfig& safety)
    : cfg_(cfg), c_(c), safety_(safety) {}

bool Optimizer::step(nn::ParamStore& store, const nn::GradTable& grads) {
  if (!grads.all_finite()) {
    ++skipped_;
    return false;
  }
  if (adam_states_.size() < static_cast<size_t>(store.count()))
    adam_states_.resize(static_cast<size_t>(store.count()));

  for (int pi = 0; pi < store.count(); ++pi) {
    nn::Param& p = store.at(pi);
    const std::vector<double>& g = grads.g[static_cast<size_t>(pi)];
    switch (p.kind) {
      case nn::ParamKind::Euclidean: {
        if (cfg_.plain_sgd_eucl) {
          for (size_t i = 0; i < p.data.size(); ++i)
            p.data[i] -= cfg_.lr_eucl * g[i];
        } else {
          adam_step(adam_states_[static_cast<size_t>(pi)],
                    std::span<double>(p.data.data(), p.data.size()),
                    std::span<const double>(g.data(), g.size()), cfg_.lr_eucl,
                    cfg_.adam);
        }
        break;
      }
      case nn::ParamKind::HypEmbedding:
      case nn::ParamKind::HypOther: {
        const double lr =
            p.kind == nn::ParamKind::HypEmbedding ? cfg_.lr_emb : cfg_.lr_hyp;
        for (int row = 0; row < p.rows; ++row) {
          double* d = p.data.data() + static_cast<size_t>(row) * p.cols;
          Eigen::Map<const Vec> grow(g.data() + static_cast<size_t>(row) * p.cols,
                                     p.cols);
          if (grow.isZero(0.0)) continue;  // untouched embedding rows
          BallPoint theta(Eigen::Map<const Vec>(d, p.cols), Curvature(c_));
          BallPoint next = cfg_.projected
                               ? rsgd_step_projected(theta, grow, lr, safety_)
                               : rsgd_step_full(theta, grow, lr, safety_);
          Eigen::Map<Vec>(d, p.cols) = next.coords();
        }
        break;
      }
    }
  }
  return true;
}

}  // namespace gyro::opt
