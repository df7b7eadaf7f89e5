#pragma once

#include "gyronet/data.hpp"
#include "gyronet/nn.hpp"

namespace gyro::train {

// The paper's three rows per cell: fully Euclidean; hyperbolic encoder+FFNN
// with Euclidean MLR; fully hyperbolic.
enum class Geometry { Euclidean, Hybrid, Hyperbolic };
Geometry geometry_from_string(const std::string& s);
std::string to_string(Geometry g);

enum class CellKind { Rnn, Gru };
CellKind cell_from_string(const std::string& s);
std::string to_string(CellKind k);

struct ModelConfig {
  Geometry geometry = Geometry::Hyperbolic;
  CellKind cell = CellKind::Gru;
  int dim = 5;
  double c = 1.0;
  int vocab = 100;
  nn::Phi cell_phi = nn::Phi::Identity;
  nn::Phi ffnn_phi = nn::Phi::Identity;
  uint64_t init_seed = 1;

  bool encoder_hyperbolic() const { return geometry != Geometry::Euclidean; }
  bool mlr_hyperbolic() const { return geometry == Geometry::Hyperbolic; }
};

// Sets the nonlinearities the experiments default to: identity/identity for
// the hyperbolic rows, tanh cell + relu FFNN for the Euclidean baseline.
void apply_default_phis(ModelConfig& cfg);

// Two distinct sentence encoders feeding [h1, h2, d(h1,h2)^2] through a
// one-layer FFNN into a 2-class MLR; geometry transitions use log0/exp0.
class EntailmentModel {
 public:
  explicit EntailmentModel(const ModelConfig& cfg);

  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }
  const ModelConfig& config() const { return cfg_; }

  nn::Ctx make_ctx(const SafetyConfig& safety = default_safety()) {
    return nn::Ctx(store_, cfg_.c, safety);
  }

  struct Forward {
    ad::Var logits;       // length 2
    double norm1 = 0.0;   // premise embedding norm
    double norm2 = 0.0;   // hypothesis embedding norm
  };
  Forward forward(nn::Ctx& ctx, const data::SentencePair& ex) const;

  struct LossOut {
    ad::Var loss;
    double loss_value = 0.0;
    int predicted = 0;
    Forward fwd;
  };
  LossOut loss(nn::Ctx& ctx, const data::SentencePair& ex) const;

 private:
  ModelConfig cfg_;
  nn::ParamStore store_;
};

// Cross-entropy of softmax(logits) against the class index, recorded in a
// numerically stable form (constant max-shift).
ad::Var cross_entropy(ad::Tape& tape, ad::Var logits, int label);

// Argmax with ties resolved to the lowest class index.
int argmax_lowest(const Eigen::Map<const Vec>& v);
int argmax_lowest(const Vec& v);

}  // namespace gyro::train
