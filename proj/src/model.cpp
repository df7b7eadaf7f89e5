#include "gyronet/model.hpp"

#include <cmath>

namespace gyro::train {

using ad::Var;

Geometry geometry_from_string(const std::string& s) {
  if (s == "euclidean") return Geometry::Euclidean;
  if (s == "hybrid") return Geometry::Hybrid;
  if (s == "hyperbolic") return Geometry::Hyperbolic;
  throw ConfigError("unknown geometry: " + s +
                    " (expected euclidean|hybrid|hyperbolic)");
}

std::string to_string(Geometry g) {
  switch (g) {
    case Geometry::Euclidean: return "euclidean";
    case Geometry::Hybrid: return "hybrid";
    case Geometry::Hyperbolic: return "hyperbolic";
  }
  return "?";
}

CellKind cell_from_string(const std::string& s) {
  if (s == "rnn") return CellKind::Rnn;
  if (s == "gru") return CellKind::Gru;
  throw ConfigError("unknown cell: " + s + " (expected rnn|gru)");
}

std::string to_string(CellKind k) {
  return k == CellKind::Rnn ? "rnn" : "gru";
}

void apply_default_phis(ModelConfig& cfg) {
  if (cfg.encoder_hyperbolic()) {
    cfg.cell_phi = nn::Phi::Identity;
    cfg.ffnn_phi = nn::Phi::Identity;
  } else {
    cfg.cell_phi = nn::Phi::Tanh;
    cfg.ffnn_phi = nn::Phi::Relu;
  }
}

namespace {

void add_encoder_params(nn::ParamStore& store, const std::string& prefix,
                        const ModelConfig& cfg, Rng& rng) {
  const int d = cfg.dim;
  const bool hyp = cfg.encoder_hyperbolic();
  const nn::ParamKind bias_kind =
      hyp ? nn::ParamKind::HypOther : nn::ParamKind::Euclidean;
  auto add_mat = [&](const std::string& name) {
    nn::Param& p = store.at(store.add(name, nn::ParamKind::Euclidean, d, d));
    nn::init_linear(p, d, rng);
  };
  auto add_bias = [&](const std::string& name) {
    nn::Param& p = store.at(store.add(name, bias_kind, 1, d));
    if (hyp) nn::init_ball_rows(p, cfg.c, rng);
    // Euclidean biases start at zero.
  };
  if (cfg.cell == CellKind::Gru) {
    add_mat(prefix + "/Wr");
    add_mat(prefix + "/Ur");
    add_bias(prefix + "/br");
    add_mat(prefix + "/Wz");
    add_mat(prefix + "/Uz");
    add_bias(prefix + "/bz");
  }
  add_mat(prefix + "/W");
  add_mat(prefix + "/U");
  add_bias(prefix + "/b");
}

}  // namespace

EntailmentModel::EntailmentModel(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.dim <= 0 || cfg.vocab <= 0)
    throw ConfigError("EntailmentModel: dim and vocab must be positive");
  Rng rng(Rng::mix(cfg.init_seed, 0x6d6f64656cULL));
  const int d = cfg.dim;
  const bool enc_hyp = cfg.encoder_hyperbolic();

  nn::Param& emb = store_.at(store_.add(
      "emb", enc_hyp ? nn::ParamKind::HypEmbedding : nn::ParamKind::Euclidean,
      cfg.vocab, d));
  nn::init_ball_rows(emb, enc_hyp ? cfg.c : 0.0, rng);

  add_encoder_params(store_, "enc1", cfg, rng);
  add_encoder_params(store_, "enc2", cfg, rng);

  if (enc_hyp) {
    nn::Param& m1 = store_.at(store_.add("ffnn/M1", nn::ParamKind::Euclidean, d, d));
    nn::init_linear(m1, d, rng);
    nn::Param& m2 = store_.at(store_.add("ffnn/M2", nn::ParamKind::Euclidean, d, d));
    nn::init_linear(m2, d, rng);
    nn::Param& bd = store_.at(store_.add("ffnn/bd", nn::ParamKind::HypOther, 1, d));
    nn::init_ball_rows(bd, cfg.c, rng);
    nn::Param& b = store_.at(store_.add("ffnn/b", nn::ParamKind::HypOther, 1, d));
    nn::init_ball_rows(b, cfg.c, rng);
  } else {
    nn::Param& w = store_.at(
        store_.add("ffnn/W", nn::ParamKind::Euclidean, d, 2 * d + 1));
    nn::init_linear(w, 2 * d + 1, rng);
    store_.add("ffnn/b", nn::ParamKind::Euclidean, 1, d);
  }

  if (cfg.mlr_hyperbolic()) {
    nn::Param& p = store_.at(store_.add("mlr/p", nn::ParamKind::HypOther, 2, d));
    nn::init_ball_rows(p, cfg.c, rng);
    nn::Param& a = store_.at(store_.add("mlr/a", nn::ParamKind::Euclidean, 2, d));
    nn::init_mlr_normals(a, rng);
  } else {
    nn::Param& a = store_.at(store_.add("mlr/a", nn::ParamKind::Euclidean, 2, d));
    nn::init_mlr_normals(a, rng);
    store_.add("mlr/b", nn::ParamKind::Euclidean, 2, 1);
  }
}

EntailmentModel::Forward EntailmentModel::forward(
    nn::Ctx& ctx, const data::SentencePair& ex) const {
  const int d = cfg_.dim;
  const bool enc_hyp = cfg_.encoder_hyperbolic();

  nn::EncoderParams e1{"enc1", cfg_.cell == CellKind::Gru, enc_hyp, d,
                       cfg_.cell_phi};
  nn::EncoderParams e2{"enc2", cfg_.cell == CellKind::Gru, enc_hyp, d,
                       cfg_.cell_phi};
  Var h1 = nn::encode_sequence(ctx, e1, "emb",
                               std::span<const int>(ex.tokens1));
  Var h2 = nn::encode_sequence(ctx, e2, "emb",
                               std::span<const int>(ex.tokens2));

  Forward out;
  out.norm1 = h1.value().norm();
  out.norm2 = h2.value().norm();

  Var feat;  // FFNN output, in encoder geometry
  if (enc_hyp) {
    Var d2 = diff::distance_sq(h1, h2, cfg_.c);
    Var u = nn::concat_matvec(cfg_.c, ctx.bind("ffnn/M1"), ctx.bind("ffnn/M2"),
                              d, d, d, h1, h2);
    u = diff::mobius_add(
        u, diff::mobius_scalar(d2, ctx.bind("ffnn/bd"), cfg_.c), cfg_.c);
    u = diff::mobius_add(u, ctx.bind("ffnn/b"), cfg_.c);
    feat = nn::apply_nonlinearity(cfg_.c, cfg_.ffnn_phi, u, true);
  } else {
    Var delta = ad::sub(h1, h2);
    Var d2 = ad::dot(delta, delta);
    Var cat = ad::concat(ad::concat(h1, h2), d2);
    Var u = ad::add(ad::matvec(ctx.bind("ffnn/W"), d, 2 * d + 1, cat),
                    ctx.bind("ffnn/b"));
    feat = nn::apply_nonlinearity(cfg_.c, cfg_.ffnn_phi, u, false);
  }

  switch (cfg_.geometry) {
    case Geometry::Hyperbolic:
      out.logits = nn::hyp_mlr_logits(ctx, "mlr/p", "mlr/a", feat);
      break;
    case Geometry::Hybrid:
      out.logits =
          nn::eucl_mlr_logits(ctx, "mlr/a", "mlr/b", diff::log0(feat, cfg_.c));
      break;
    case Geometry::Euclidean:
      out.logits = nn::eucl_mlr_logits(ctx, "mlr/a", "mlr/b", feat);
      break;
  }
  return out;
}

EntailmentModel::LossOut EntailmentModel::loss(nn::Ctx& ctx,
                                               const data::SentencePair& ex) const {
  LossOut out;
  out.fwd = forward(ctx, ex);
  out.loss = cross_entropy(ctx.tape, out.fwd.logits, ex.label);
  out.loss_value = out.loss.scalar();
  out.predicted = argmax_lowest(out.fwd.logits.value());
  return out;
}

Var cross_entropy(ad::Tape& tape, Var logits, int label) {
  if (label < 0 || label >= logits.size())
    throw std::invalid_argument("cross_entropy: label out of range");
  const double m = logits.value().maxCoeff();
  Var shifted = ad::sub(logits, tape.constant(m));
  Var lse = ad::add(ad::log(ad::sum(ad::exp(shifted))), tape.constant(m));
  return ad::sub(lse, ad::select(logits, label));
}

int argmax_lowest(const Eigen::Map<const Vec>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int argmax_lowest(const Vec& v) {
  return argmax_lowest(Eigen::Map<const Vec>(v.data(), v.size()));
}

}  // namespace gyro::train
