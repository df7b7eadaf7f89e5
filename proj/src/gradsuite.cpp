#include "gyronet/gradsuite.hpp"

#include <cmath>
#include <sstream>

#include "gyronet/gradcheck.hpp"
#include "gyronet/model.hpp"
#include "gyronet/rng.hpp"
#include "gyronet/train.hpp"

namespace gyro::gradsuite {

namespace {

constexpr double kH = 1e-6;
constexpr double kC = 1.0;
constexpr int kDim = 5;

using ad::Var;

void append_rows(EntryResult& res, const std::string& name, int point,
                 const ad::GradCheckReport& rep, bool with_csv) {
  res.max_rel_err = std::max(res.max_rel_err, rep.max_rel_err);
  if (!with_csv) return;
  std::ostringstream os;
  for (const auto& row : rep.rows)
    os << name << ',' << point << ',' << row.coordinate << ','
       << fmt17(row.analytic) << ',' << fmt17(row.numeric) << ','
       << fmt17(row.rel_err) << '\n';
  res.csv_rows += os.str();
}

// An entry checking `build` (leaves -> scalar) at `points` random draws.
Entry leaf_entry(const std::string& name, double tol,
                 std::function<std::vector<Vec>(Rng&)> draw,
                 ad::MultiVarFn build) {
  return Entry{
      name, tol,
      [name, tol, draw, build](int points, uint64_t seed, bool with_csv) {
        EntryResult res;
        res.name = name;
        res.tol = tol;
        res.points = points;
        for (int i = 0; i < points; ++i) {
          Rng rng(Rng::mix(seed, static_cast<uint64_t>(i) + 1));
          const std::vector<Vec> pts = draw(rng);
          append_rows(res, name, i, ad::gradcheck(build, pts, kH, tol),
                      with_csv);
        }
        res.pass = res.max_rel_err < tol;
        return res;
      }};
}

Vec rand_ball(Rng& rng, int dim, double radius) {
  return rng.ball_uniform(dim, radius);
}

Vec rand_mat(Rng& rng, int rows, int cols, double s) {
  return rng.uniform_vec(rows * cols, -s, s);
}

// scalarize a vector output against a fixed direction
Var against(ad::Tape& t, Var v, const Vec& w) {
  return ad::dot(v, t.constant(std::span<const double>(w.data(), w.size())));
}

Vec fixed_weight(int n) {
  Rng rng(987654321);
  Vec w = rng.uniform_vec(n, -1.0, 1.0);
  return w;
}

// --- full-model entries: perturb the parameter store directly ----------------

EntryResult model_entry_run(const std::string& name, double tol,
                            train::Geometry geom, train::CellKind cell,
                            int points, uint64_t seed, bool with_csv) {
  EntryResult res;
  res.name = name;
  res.tol = tol;
  res.points = points;
  const int dim = 4, vocab = 8;
  for (int pt = 0; pt < points; ++pt) {
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(pt) + 7));
    train::ModelConfig mc;
    mc.geometry = geom;
    mc.cell = cell;
    mc.dim = dim;
    mc.c = kC;
    mc.vocab = vocab;
    train::apply_default_phis(mc);
    mc.init_seed = rng.next_u64();
    train::EntailmentModel model(mc);
    // Random small-but-not-tiny parameter values keep gradients measurable.
    for (int pi = 0; pi < model.store().count(); ++pi) {
      nn::Param& p = model.store().at(pi);
      if (p.kind == nn::ParamKind::Euclidean) {
        for (double& v : p.data) v = rng.uniform(-0.6, 0.6);
      } else {
        for (int row = 0; row < p.rows; ++row) {
          Vec b = rand_ball(rng, p.cols, 0.3);
          for (int j = 0; j < p.cols; ++j)
            p.data[static_cast<size_t>(row) * p.cols + j] = b[j];
        }
      }
    }
    data::SentencePair ex;
    const int l1 = rng.range_int(2, 4);
    for (int i = 0; i < l1; ++i)
      ex.tokens1.push_back(rng.range_int(0, vocab - 1));
    const int l2 = rng.range_int(1, l1);
    for (int i = 0; i < l2; ++i)
      ex.tokens2.push_back(rng.range_int(0, vocab - 1));
    ex.label = rng.range_int(0, 1);

    auto loss_value = [&]() {
      nn::Ctx ctx(model.store(), mc.c);
      return model.loss(ctx, ex).loss_value;
    };

    nn::GradTable analytic;
    analytic.init(model.store());
    {
      nn::Ctx ctx(model.store(), mc.c);
      auto out = model.loss(ctx, ex);
      ctx.tape.backward(out.loss);
      ctx.accumulate_grads(analytic, 1.0);
    }

    std::ostringstream rows;
    int coord = 0;
    for (int pi = 0; pi < model.store().count(); ++pi) {
      nn::Param& p = model.store().at(pi);
      for (size_t j = 0; j < p.data.size(); ++j, ++coord) {
        const double orig = p.data[j];
        p.data[j] = orig + kH;
        const double fp = loss_value();
        p.data[j] = orig - kH;
        const double fm = loss_value();
        p.data[j] = orig;
        const double numeric = (fp - fm) / (2.0 * kH);
        const double a = analytic.g[static_cast<size_t>(pi)][j];
        const double rel = std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), 1e-3});
        res.max_rel_err = std::max(res.max_rel_err, rel);
        if (with_csv)
          rows << name << ',' << pt << ',' << coord << ',' << fmt17(a) << ','
               << fmt17(numeric) << ',' << fmt17(rel) << '\n';
      }
    }
    if (with_csv) res.csv_rows += rows.str();
  }
  res.pass = res.max_rel_err < tol;
  return res;
}

Entry model_entry(const std::string& name, double tol, train::Geometry geom,
                  train::CellKind cell) {
  return Entry{name, tol,
               [name, tol, geom, cell](int points, uint64_t seed, bool csv) {
                 return model_entry_run(name, tol, geom, cell, points, seed,
                                        csv);
               }};
}

std::vector<Entry> build_registry() {
  std::vector<Entry> v;
  const Vec w5 = fixed_weight(kDim);
  const Vec w1 = fixed_weight(1);

  v.push_back(leaf_entry(
      "mobius_add", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_ball(r, kDim, 0.7), rand_ball(r, kDim, 0.7)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::mobius_add(l[0], l[1], kC), w5);
      }));
  v.push_back(leaf_entry(
      "mobius_scalar", 1e-5,
      [](Rng& r) {
        Vec s(1);
        s[0] = r.uniform(-2, 2);
        return std::vector<Vec>{s, rand_ball(r, kDim, 0.7)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::mobius_scalar(l[0], l[1], kC), w5);
      }));
  v.push_back(leaf_entry(
      "distance_sq", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_ball(r, kDim, 0.7), rand_ball(r, kDim, 0.7)};
      },
      [](ad::Tape&, std::span<const Var> l) {
        return diff::distance_sq(l[0], l[1], kC);
      }));
  v.push_back(leaf_entry(
      "exp0", 1e-5,
      [](Rng& r) { return std::vector<Vec>{rand_ball(r, kDim, 1.2)}; },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::exp0(l[0], kC), w5);
      }));
  v.push_back(leaf_entry(
      "log0", 1e-5,
      [](Rng& r) { return std::vector<Vec>{rand_ball(r, kDim, 0.7)}; },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::log0(l[0], kC), w5);
      }));
  v.push_back(leaf_entry(
      "exp_map", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_ball(r, kDim, 0.7), rand_ball(r, kDim, 0.8)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::exp_map(l[0], l[1], kC), w5);
      }));
  v.push_back(leaf_entry(
      "log_map", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_ball(r, kDim, 0.7), rand_ball(r, kDim, 0.7)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::log_map(l[0], l[1], kC), w5);
      }));
  v.push_back(leaf_entry(
      "mobius_matvec", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_mat(r, kDim, kDim, 0.8),
                                rand_ball(r, kDim, 0.7)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, diff::mobius_matvec(l[0], kDim, kDim, l[1], kC), w5);
      }));
  v.push_back(leaf_entry(
      "hyp_mlr_logit", 1e-5,
      [](Rng& r) {
        Vec a = r.uniform_vec(kDim, -1.0, 1.0);
        return std::vector<Vec>{rand_ball(r, kDim, 0.5), a,
                                rand_ball(r, kDim, 0.7)};
      },
      [](ad::Tape&, std::span<const Var> l) {
        return diff::hyp_mlr_logit(l[0], l[1], l[2], kC);
      }));
  v.push_back(leaf_entry(
      "hyp_linear", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_mat(r, kDim, kDim, 0.8),
                                rand_ball(r, kDim, 0.3),
                                rand_ball(r, kDim, 0.7)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, nn::hyp_linear(kC, l[0], kDim, kDim, l[1], l[2]), w5);
      }));
  v.push_back(leaf_entry(
      "apply_nonlinearity_tanh", 1e-5,
      [](Rng& r) { return std::vector<Vec>{rand_ball(r, kDim, 0.7)}; },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, nn::apply_nonlinearity(kC, nn::Phi::Tanh, l[0], true),
                       w5);
      }));
  v.push_back(leaf_entry(
      "concat_matvec", 1e-5,
      [](Rng& r) {
        return std::vector<Vec>{rand_mat(r, kDim, kDim, 0.8),
                                rand_mat(r, kDim, kDim, 0.8),
                                rand_ball(r, kDim, 0.7),
                                rand_ball(r, kDim, 0.7)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(
            t, nn::concat_matvec(kC, l[0], l[1], kDim, kDim, kDim, l[2], l[3]),
            w5);
      }));
  v.push_back(leaf_entry(
      "attach_scalar", 1e-5,
      [](Rng& r) {
        Vec y(1);
        y[0] = r.uniform(-1, 1);
        return std::vector<Vec>{rand_mat(r, kDim, kDim, 0.8),
                                rand_ball(r, kDim, 0.7), y,
                                rand_ball(r, kDim, 0.3)};
      },
      [w5](ad::Tape& t, std::span<const Var> l) {
        return against(t, nn::attach_scalar(kC, l[0], kDim, kDim, l[1], l[2], l[3]),
                       w5);
      }));
  v.push_back(leaf_entry(
      "eucl_mlr", 1e-5,
      [](Rng& r) {
        Vec b(1);
        b[0] = r.uniform(-1, 1);
        return std::vector<Vec>{r.uniform_vec(kDim, -1, 1), b,
                                r.uniform_vec(kDim, -1, 1)};
      },
      [](ad::Tape&, std::span<const Var> l) {
        return ad::sub(ad::dot(l[0], l[2]), l[1]);
      }));

  auto rnn_draw = [](Rng& r) {
    return std::vector<Vec>{rand_mat(r, kDim, kDim, 0.8),
                            rand_mat(r, kDim, kDim, 0.8),
                            rand_ball(r, kDim, 0.3),
                            rand_ball(r, kDim, 0.5),
                            rand_ball(r, kDim, 0.5)};
  };
  auto rnn_build = [w5](bool hyp) {
    return [w5, hyp](ad::Tape& t, std::span<const Var> l) {
      nn::RnnCell cell{l[0], l[1], l[2], kDim, kDim,
                       hyp ? nn::Phi::Identity : nn::Phi::Tanh, hyp};
      return against(t, nn::rnn_step(hyp ? kC : 0.0, cell, l[3], l[4]), w5);
    };
  };
  v.push_back(leaf_entry("hyp_rnn_cell", 1e-5, rnn_draw, rnn_build(true)));
  v.push_back(leaf_entry("eucl_rnn_cell", 1e-5, rnn_draw, rnn_build(false)));

  auto gru_draw = [](Rng& r) {
    std::vector<Vec> l;
    for (int i = 0; i < 6; ++i) l.push_back(rand_mat(r, kDim, kDim, 0.8));
    for (int i = 0; i < 3; ++i) l.push_back(rand_ball(r, kDim, 0.3));
    l.push_back(rand_ball(r, kDim, 0.5));
    l.push_back(rand_ball(r, kDim, 0.5));
    return l;
  };
  auto gru_build = [w5](bool hyp) {
    return [w5, hyp](ad::Tape& t, std::span<const Var> l) {
      nn::GruCell cell{l[0], l[1], l[6], l[2], l[3], l[7], l[4], l[5], l[8],
                       kDim, kDim, nn::Phi::Identity, hyp};
      return against(t, nn::gru_step(hyp ? kC : 0.0, cell, l[9], l[10]), w5);
    };
  };
  v.push_back(leaf_entry("hyp_gru_cell", 1e-4, gru_draw, gru_build(true)));
  v.push_back(leaf_entry("eucl_gru_cell", 1e-5, gru_draw, gru_build(false)));

  v.push_back(model_entry("entail_loss_hyperbolic_rnn", 1e-5,
                          train::Geometry::Hyperbolic, train::CellKind::Rnn));
  v.push_back(model_entry("entail_loss_hybrid_rnn", 1e-5,
                          train::Geometry::Hybrid, train::CellKind::Rnn));
  v.push_back(model_entry("entail_loss_euclidean_rnn", 1e-5,
                          train::Geometry::Euclidean, train::CellKind::Rnn));
  v.push_back(model_entry("entail_loss_hyperbolic_gru", 1e-4,
                          train::Geometry::Hyperbolic, train::CellKind::Gru));
  v.push_back(model_entry("entail_loss_hybrid_gru", 1e-4,
                          train::Geometry::Hybrid, train::CellKind::Gru));
  v.push_back(model_entry("entail_loss_euclidean_gru", 1e-4,
                          train::Geometry::Euclidean, train::CellKind::Gru));
  return v;
}

}  // namespace

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = build_registry();
  return entries;
}

EntryResult run_entry(const std::string& name, int points, uint64_t seed,
                      bool with_csv) {
  for (const Entry& e : registry())
    if (e.name == name) return e.run(points, seed, with_csv);
  throw std::invalid_argument("unknown gradcheck entry: " + name);
}

std::vector<EntryResult> run_all(int points, uint64_t seed, bool with_csv) {
  std::vector<EntryResult> out;
  for (const Entry& e : registry())
    out.push_back(e.run(points, seed, with_csv));
  return out;
}

std::string results_csv(const std::vector<EntryResult>& results) {
  std::ostringstream os;
  os << "entry,point,coordinate,analytic,numeric,rel_err\n";
  for (const EntryResult& r : results) os << r.csv_rows;
  return os.str();
}

bool all_pass(const std::vector<EntryResult>& results) {
  for (const EntryResult& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace gyro::gradsuite
