#include "gyronet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

namespace gyro::train {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Runs fn(worker, begin, end) over [0, n) split contiguously across workers.
// Results must not depend on the split: callers write per-index slots and
// reduce in index order afterwards.
template <typename Fn>
void parallel_chunks(int n, int workers, const Fn& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  const int base = n / workers, extra = n % workers;
  int begin = 0;
  for (int w = 0; w < workers; ++w) {
    const int len = base + (w < extra ? 1 : 0);
    const int b = begin, e = begin + len;
    begin = e;
    pool.emplace_back([&, w, b, e]() {
      try {
        fn(w, b, e);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

struct F1Counter {
  int64_t tp = 0, fp = 0, fn = 0, correct = 0, total = 0;

  void record(int predicted, int label) {
    ++total;
    if (predicted == label) ++correct;
    if (predicted == 1 && label == 1) ++tp;
    if (predicted == 1 && label == 0) ++fp;
    if (predicted == 0 && label == 1) ++fn;
  }
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  }
  double f1() const {
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  }
};

struct ExampleOut {
  double loss = 0.0;
  int predicted = 0;
  double norm1 = 0.0;
  double norm2 = 0.0;
};

std::string kind_to_string(nn::ParamKind k) {
  switch (k) {
    case nn::ParamKind::Euclidean: return "euclidean";
    case nn::ParamKind::HypEmbedding: return "hyp_embedding";
    case nn::ParamKind::HypOther: return "hyp_other";
  }
  return "?";
}

nn::ParamKind kind_from_string(const std::string& s) {
  if (s == "euclidean") return nn::ParamKind::Euclidean;
  if (s == "hyp_embedding") return nn::ParamKind::HypEmbedding;
  if (s == "hyp_other") return nn::ParamKind::HypOther;
  throw DataError("checkpoint: unknown parameter kind " + s);
}

}  // namespace

std::map<std::string, std::string> load_config_file(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot read config file " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not key=value: " + line);
    std::string key = line.substr(0, pos);
    std::string val = line.substr(pos + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
      while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    };
    trim(key);
    trim(val);
    kv[key] = val;
  }
  return kv;
}

ExperimentConfig config_from_kv(std::map<std::string, std::string> kv) {
  ExperimentConfig cfg;
  auto take = [&kv](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_double = [&](const std::string& key, double dflt) {
    auto v = take(key);
    if (!v) return dflt;
    try {
      return std::stod(*v);
    } catch (...) {
      throw ConfigError("bad numeric value for " + key + ": " + *v);
    }
  };
  auto take_int = [&](const std::string& key, int dflt) {
    auto v = take(key);
    if (!v) return dflt;
    try {
      return std::stoi(*v);
    } catch (...) {
      throw ConfigError("bad integer value for " + key + ": " + *v);
    }
  };

  if (auto v = take("model.geometry")) cfg.model.geometry = geometry_from_string(*v);
  if (auto v = take("model.cell")) cfg.model.cell = cell_from_string(*v);
  cfg.model.dim = take_int("model.dim", 5);
  cfg.model.c = take_double("model.c", 1.0);
  cfg.model.vocab = take_int("model.vocab", 100);
  apply_default_phis(cfg.model);
  if (auto v = take("model.cell_phi")) cfg.model.cell_phi = nn::phi_from_string(*v);
  if (auto v = take("model.ffnn_phi")) cfg.model.ffnn_phi = nn::phi_from_string(*v);

  cfg.batch = take_int("train.batch", 64);
  cfg.epochs = take_int("train.epochs", 30);
  cfg.runs = take_int("train.runs", 3);
  if (auto v = take("seed")) {
    try {
      cfg.seed = std::stoull(*v);
    } catch (...) {
      throw ConfigError("bad seed: " + *v);
    }
  }
  if (auto v = take("data.dir")) cfg.data_dir = *v;

  if (auto v = take("optimizer.hyperbolic")) {
    if (*v == "rsgd_full")
      cfg.optim.projected = false;
    else if (*v == "rsgd_projected")
      cfg.optim.projected = true;
    else
      throw ConfigError("optimizer.hyperbolic must be rsgd_full|rsgd_projected");
  }
  cfg.optim.lr_eucl = take_double("lr.euclidean", 0.001);
  cfg.optim.lr_emb = take_double("lr.embedding", 0.1);
  cfg.optim.lr_hyp = take_double("lr.hyperbolic", 0.01);

  cfg.safety.ball_eps = take_double("safety.ball_eps", 1e-5);
  cfg.safety.origin_eps = take_double("safety.origin_eps", 1e-15);
  cfg.safety.tanh_clamp = take_double("safety.tanh_clamp", 15.0);
  cfg.safety.atanh_clamp = take_double("safety.atanh_clamp", 1.0 - 1e-5);
  cfg.safety.validate();

  cfg.threads = take_int("threads", 0);

  if (!kv.empty()) throw ConfigError("unknown config key: " + kv.begin()->first);
  if (cfg.model.dim <= 0 || cfg.batch <= 0 || cfg.epochs < 0 || cfg.runs < 1)
    throw ConfigError("dims/batch must be positive, epochs >= 0, runs >= 1");
  cfg.model.init_seed = cfg.seed;
  return cfg;
}

std::map<std::string, std::string> config_echo(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["model.geometry"] = to_string(cfg.model.geometry);
  kv["model.cell"] = to_string(cfg.model.cell);
  kv["model.dim"] = std::to_string(cfg.model.dim);
  kv["model.c"] = fmt17(cfg.model.c);
  kv["model.vocab"] = std::to_string(cfg.model.vocab);
  kv["model.cell_phi"] = nn::to_string(cfg.model.cell_phi);
  kv["model.ffnn_phi"] = nn::to_string(cfg.model.ffnn_phi);
  kv["train.batch"] = std::to_string(cfg.batch);
  kv["train.epochs"] = std::to_string(cfg.epochs);
  kv["train.runs"] = std::to_string(cfg.runs);
  kv["seed"] = std::to_string(cfg.seed);
  kv["data.dir"] = cfg.data_dir;
  kv["optimizer.hyperbolic"] =
      cfg.optim.projected ? "rsgd_projected" : "rsgd_full";
  kv["lr.euclidean"] = fmt17(cfg.optim.lr_eucl);
  kv["lr.embedding"] = fmt17(cfg.optim.lr_emb);
  kv["lr.hyperbolic"] = fmt17(cfg.optim.lr_hyp);
  kv["safety.ball_eps"] = fmt17(cfg.safety.ball_eps);
  kv["safety.origin_eps"] = fmt17(cfg.safety.origin_eps);
  kv["safety.tanh_clamp"] = fmt17(cfg.safety.tanh_clamp);
  kv["safety.atanh_clamp"] = fmt17(cfg.safety.atanh_clamp);
  return kv;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GYRONET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

const char* kMetricsCsvHeader =
    "epoch,split,loss,accuracy,f1,norm1,norm2,skipped_steps";

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.epoch << ',' << r.split << ',' << fmt17(r.loss) << ','
     << fmt17(r.accuracy) << ',' << fmt17(r.f1) << ',' << fmt17(r.norm1) << ','
     << fmt17(r.norm2) << ',' << r.skipped_steps;
  return os.str();
}

void save_checkpoint(const fs::path& file, const Checkpoint& ck) {
  std::ofstream os(file);
  if (!os) throw DataError("save_checkpoint: cannot write " + file.string());
  os << "gyronet-checkpoint 1\n[config]\n";
  for (const auto& [k, v] : ck.config_echo) os << k << '=' << v << '\n';
  os << "[meta]\nepoch=" << ck.epoch
     << "\nval_accuracy=" << fmt17(ck.val_accuracy) << "\n[params]\n";
  for (const nn::Param& p : ck.params) {
    os << p.name << ' ' << kind_to_string(p.kind) << ' ' << p.rows << ' '
       << p.cols;
    for (double v : p.data) os << ' ' << fmt17(v);
    os << '\n';
  }
}

Checkpoint load_checkpoint(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw DataError("load_checkpoint: cannot read " + file.string());
  std::string line;
  if (!std::getline(is, line) || line != "gyronet-checkpoint 1")
    throw DataError("load_checkpoint: bad magic in " + file.string());
  Checkpoint ck;
  enum { None, Config, Meta, Params } section = None;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line == "[config]") { section = Config; continue; }
    if (line == "[meta]") { section = Meta; continue; }
    if (line == "[params]") { section = Params; continue; }
    switch (section) {
      case Config: {
        const auto pos = line.find('=');
        if (pos == std::string::npos)
          throw DataError("load_checkpoint: bad config line: " + line);
        ck.config_echo[line.substr(0, pos)] = line.substr(pos + 1);
        break;
      }
      case Meta: {
        const auto pos = line.find('=');
        if (pos == std::string::npos)
          throw DataError("load_checkpoint: bad meta line: " + line);
        const std::string key = line.substr(0, pos);
        const std::string val = line.substr(pos + 1);
        if (key == "epoch") ck.epoch = std::stoi(val);
        else if (key == "val_accuracy") ck.val_accuracy = std::stod(val);
        break;
      }
      case Params: {
        std::istringstream ls(line);
        nn::Param p;
        std::string kind;
        if (!(ls >> p.name >> kind >> p.rows >> p.cols))
          throw DataError("load_checkpoint: bad param line: " + line);
        p.kind = kind_from_string(kind);
        p.data.reserve(static_cast<size_t>(p.rows) * p.cols);
        double v;
        while (ls >> v) p.data.push_back(v);
        if (static_cast<int>(p.data.size()) != p.rows * p.cols)
          throw DataError("load_checkpoint: value count mismatch for " + p.name);
        for (double x : p.data)
          if (!std::isfinite(x))
            throw DataError("load_checkpoint: non-finite value in " + p.name);
        ck.params.push_back(std::move(p));
        break;
      }
      case None:
        throw DataError("load_checkpoint: content before a section: " + line);
    }
  }
  return ck;
}

Checkpoint snapshot(const nn::ParamStore& store,
                    const std::map<std::string, std::string>& echo, int epoch,
                    double val_accuracy) {
  Checkpoint ck;
  ck.config_echo = echo;
  ck.epoch = epoch;
  ck.val_accuracy = val_accuracy;
  for (int i = 0; i < store.count(); ++i) ck.params.push_back(store.at(i));
  return ck;
}

void restore_params(nn::ParamStore& store, const Checkpoint& ck) {
  for (const nn::Param& p : ck.params) {
    const int idx = store.index(p.name);
    if (idx < 0)
      throw DataError("restore_params: model has no parameter " + p.name);
    nn::Param& dst = store.at(idx);
    if (dst.rows != p.rows || dst.cols != p.cols)
      throw DataError("restore_params: shape mismatch for " + p.name);
    dst.data = p.data;
  }
}

namespace {

// Forward/backward over one batch with per-example gradient tables; the
// reduction into `total` runs in example-index order, so results do not
// depend on the worker count.
void batch_pass(EntailmentModel& model,
                const std::vector<data::SentencePair>& pairs,
                const std::vector<int>& order, size_t begin, size_t end,
                int threads, const SafetyConfig& safety,
                std::vector<nn::GradTable>& slots,
                std::vector<ExampleOut>& outs, nn::GradTable& total) {
  const int n = static_cast<int>(end - begin);
  parallel_chunks(n, threads, [&](int, int lo, int hi) {
    nn::Ctx ctx(model.store(), model.config().c, safety);
    for (int s = lo; s < hi; ++s) {
      ctx.reset();
      const data::SentencePair& ex =
          pairs[static_cast<size_t>(order[begin + static_cast<size_t>(s)])];
      auto out = model.loss(ctx, ex);
      ctx.tape.backward(out.loss);
      slots[static_cast<size_t>(s)].zero();
      ctx.accumulate_grads(slots[static_cast<size_t>(s)], 1.0);
      outs[static_cast<size_t>(s)] =
          {out.loss_value, out.predicted, out.fwd.norm1, out.fwd.norm2};
    }
  });
  total.zero();
  const double w = 1.0 / n;
  for (int s = 0; s < n; ++s) total.add_scaled(slots[static_cast<size_t>(s)], w);
}

}  // namespace

MetricsRecord evaluate_split(EntailmentModel& model,
                             const std::vector<data::SentencePair>& pairs,
                             const std::string& split_name, int epoch,
                             int threads, const SafetyConfig& safety) {
  const int n = static_cast<int>(pairs.size());
  std::vector<ExampleOut> outs(static_cast<size_t>(n));
  parallel_chunks(n, threads, [&](int, int lo, int hi) {
    nn::Ctx ctx(model.store(), model.config().c, safety);
    for (int i = lo; i < hi; ++i) {
      ctx.reset();
      auto out = model.loss(ctx, pairs[static_cast<size_t>(i)]);
      outs[static_cast<size_t>(i)] =
          {out.loss_value, out.predicted, out.fwd.norm1, out.fwd.norm2};
    }
  });

  MetricsRecord rec;
  rec.epoch = epoch;
  rec.split = split_name;
  F1Counter f1;
  double loss_sum = 0.0, n1 = 0.0, n2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const ExampleOut& o = outs[static_cast<size_t>(i)];
    loss_sum += o.loss;
    n1 += o.norm1;
    n2 += o.norm2;
    f1.record(o.predicted, pairs[static_cast<size_t>(i)].label);
  }
  if (n > 0) {
    rec.loss = loss_sum / n;
    rec.norm1 = n1 / n;
    rec.norm2 = n2 / n;
  }
  rec.accuracy = f1.accuracy();
  rec.f1 = f1.f1();
  return rec;
}

TrainResult run_training(const ExperimentConfig& cfg, const fs::path& out_dir,
                         std::ostream* log) {
  if (cfg.data_dir.empty()) throw ConfigError("run_training: data.dir not set");
  const fs::path dir(cfg.data_dir);
  const auto manifest = data::read_manifest(dir / "manifest.txt");
  if (auto it = manifest.find("vocab_size"); it != manifest.end()) {
    const int v = std::stoi(it->second);
    if (v != cfg.model.vocab)
      throw ConfigError("model.vocab=" + std::to_string(cfg.model.vocab) +
                        " does not match dataset vocab_size=" + it->second);
  }
  auto train_pairs = data::load_pairs(dir / "train.tsv");
  auto valid_pairs = data::load_pairs(dir / "valid.tsv");
  if (train_pairs.empty()) throw DataError("run_training: empty training split");

  ModelConfig mc = cfg.model;
  mc.init_seed = Rng::mix(cfg.seed, 0x696e6974ULL);
  EntailmentModel model(mc);
  opt::Optimizer optimizer(cfg.optim, mc.c, cfg.safety);
  const int threads = resolve_threads(cfg.threads);
  const auto echo = config_echo(cfg);

  std::ofstream metrics;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    metrics.open(out_dir / "metrics.csv");
    if (!metrics)
      throw DataError("run_training: cannot write metrics.csv in " +
                      out_dir.string());
    metrics << kMetricsCsvHeader << '\n';
  }

  TrainResult result;
  auto emit = [&](const MetricsRecord& r) {
    result.history.push_back(r);
    if (metrics.is_open()) metrics << metrics_csv_row(r) << '\n';
    if (log)
      *log << "epoch " << r.epoch << ' ' << r.split << " loss=" << r.loss
           << " acc=" << r.accuracy << " f1=" << r.f1 << " norm1=" << r.norm1
           << " skipped=" << r.skipped_steps << " wall=" << r.wall_seconds
           << "s\n";
  };

  MetricsRecord val0 =
      evaluate_split(model, valid_pairs, "valid", 0, threads, cfg.safety);
  emit(val0);
  double best_acc = val0.accuracy;
  result.best = snapshot(model.store(), echo, 0, best_acc);

  Rng shuffle_rng(Rng::mix(cfg.seed, 0x73687566ULL));
  std::vector<int> order(train_pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  const int batch = cfg.batch;
  std::vector<nn::GradTable> slots(static_cast<size_t>(batch));
  for (auto& t : slots) t.init(model.store());
  nn::GradTable total;
  total.init(model.store());
  std::vector<ExampleOut> outs(static_cast<size_t>(batch));

  int64_t skipped_before = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double t0 = now_seconds();
    shuffle_rng.shuffle(order);
    F1Counter f1;
    double loss_sum = 0.0, n1 = 0.0, n2 = 0.0;
    int64_t batches = 0;

    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(batch)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(batch));
      batch_pass(model, train_pairs, order, begin, end, threads, cfg.safety,
                 slots, outs, total);
      for (size_t s = 0; s < end - begin; ++s) {
        const ExampleOut& o = outs[s];
        loss_sum += o.loss;
        n1 += o.norm1;
        n2 += o.norm2;
        f1.record(o.predicted,
                  train_pairs[static_cast<size_t>(order[begin + s])].label);
      }
      optimizer.step(model.store(), total);
      ++batches;
    }

    const int64_t skipped_epoch = optimizer.skipped_steps() - skipped_before;
    skipped_before = optimizer.skipped_steps();
    if (batches > 0 && skipped_epoch == batches)
      throw std::runtime_error(
          "run_training: every optimizer step of epoch " +
          std::to_string(epoch) +
          " was skipped (non-finite gradients); check learning rates");

    MetricsRecord tr;
    tr.epoch = epoch;
    tr.split = "train";
    const auto n = static_cast<double>(order.size());
    tr.loss = loss_sum / n;
    tr.accuracy = f1.accuracy();
    tr.f1 = f1.f1();
    tr.norm1 = n1 / n;
    tr.norm2 = n2 / n;
    tr.skipped_steps = skipped_epoch;
    tr.wall_seconds = now_seconds() - t0;
    emit(tr);

    MetricsRecord va =
        evaluate_split(model, valid_pairs, "valid", epoch, threads, cfg.safety);
    va.skipped_steps = skipped_epoch;
    va.wall_seconds = now_seconds() - t0;
    emit(va);

    if (va.accuracy > best_acc) {
      best_acc = va.accuracy;
      result.best = snapshot(model.store(), echo, epoch, best_acc);
    }
  }

  if (!out_dir.empty()) save_checkpoint(out_dir / "checkpoint.txt", result.best);
  return result;
}

BestOfResult best_of_runs(const ExperimentConfig& cfg, const fs::path& out_dir,
                          std::ostream* log) {
  if (cfg.runs < 1) throw ConfigError("best_of_runs: runs must be >= 1");
  BestOfResult best;
  best.best_run = -1;
  std::vector<Checkpoint> checkpoints;
  for (int run = 0; run < cfg.runs; ++run) {
    ExperimentConfig rc = cfg;
    rc.seed = cfg.seed + static_cast<uint64_t>(run);
    const fs::path run_dir =
        out_dir.empty() ? fs::path() : out_dir / ("run" + std::to_string(run));
    if (log) *log << "-- run " << run << " (seed " << rc.seed << ")\n";
    TrainResult res = run_training(rc, run_dir, log);
    best.run_val_accuracies.push_back(res.best.val_accuracy);
    checkpoints.push_back(std::move(res.best));
    if (best.best_run < 0 ||
        checkpoints.back().val_accuracy > best.best_val_accuracy) {
      best.best_run = run;
      best.best_val_accuracy = checkpoints.back().val_accuracy;
    }
  }

  // Re-evaluate the winning checkpoint on the test split.
  const Checkpoint& winner = checkpoints[static_cast<size_t>(best.best_run)];
  ExperimentConfig wc = cfg;
  wc.seed = cfg.seed + static_cast<uint64_t>(best.best_run);
  ModelConfig mc = wc.model;
  mc.init_seed = Rng::mix(wc.seed, 0x696e6974ULL);
  EntailmentModel model(mc);
  restore_params(model.store(), winner);
  auto test_pairs = data::load_pairs(fs::path(cfg.data_dir) / "test.tsv");
  best.test = evaluate_split(model, test_pairs, "test", winner.epoch,
                             resolve_threads(cfg.threads), cfg.safety);
  if (!out_dir.empty())
    save_checkpoint(out_dir / "best_checkpoint.txt", winner);
  if (log)
    *log << "best run " << best.best_run
         << " val_acc=" << best.best_val_accuracy
         << " test_acc=" << best.test.accuracy << " test_f1=" << best.test.f1
         << "\n";
  return best;
}

MlrVariant mlr_variant_from_string(const std::string& s) {
  if (s == "hyperbolic") return MlrVariant::Hyperbolic;
  if (s == "euclidean_direct") return MlrVariant::EuclideanDirect;
  if (s == "log0_euclidean") return MlrVariant::Log0Euclidean;
  throw ConfigError("unknown MLR variant: " + s);
}

std::string to_string(MlrVariant v) {
  switch (v) {
    case MlrVariant::Hyperbolic: return "hyperbolic";
    case MlrVariant::EuclideanDirect: return "euclidean_direct";
    case MlrVariant::Log0Euclidean: return "log0_euclidean";
  }
  return "?";
}

MlrResult compare_mlr_run(const std::vector<data::LabeledPoint>& points,
                          double c, const data::SubtreeSplit& split,
                          MlrVariant variant, const MlrRunConfig& cfg,
                          std::ostream* log) {
  if (points.empty()) throw DataError("compare_mlr_run: no points");
  const int dim = static_cast<int>(points[0].coords.size());

  // log0_euclidean maps every embedding into the tangent space at 0 first.
  std::vector<Vec> feats(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    if (variant == MlrVariant::Log0Euclidean && c > 0.0)
      feats[i] = log0(BallPoint(points[i].coords, Curvature(c)), cfg.safety);
    else
      feats[i] = points[i].coords;
  }

  std::vector<int> pos, negs;
  for (int idx : split.train)
    (points[static_cast<size_t>(idx)].label == 1 ? pos : negs).push_back(idx);
  if (pos.empty())
    throw DataError("compare_mlr_run: no positive examples in training split");
  if (negs.empty())
    throw DataError("compare_mlr_run: no negative examples in training split");

  const bool hyp = variant == MlrVariant::Hyperbolic;
  nn::ParamStore store;
  Rng init_rng(Rng::mix(cfg.seed, static_cast<uint64_t>(variant) + 0x6d6cULL));
  if (hyp) {
    nn::Param& p = store.at(store.add("mlr/p", nn::ParamKind::HypOther, 2, dim));
    nn::init_ball_rows(p, c, init_rng);
    nn::Param& a = store.at(store.add("mlr/a", nn::ParamKind::Euclidean, 2, dim));
    nn::init_mlr_normals(a, init_rng);
  } else {
    nn::Param& a = store.at(store.add("mlr/a", nn::ParamKind::Euclidean, 2, dim));
    nn::init_mlr_normals(a, init_rng);
    store.add("mlr/b", nn::ParamKind::Euclidean, 2, 1);
  }

  opt::OptimizerConfig oc;
  oc.lr_eucl = cfg.lr;
  oc.lr_hyp = cfg.lr;
  oc.lr_emb = cfg.lr;
  // The hyperbolic variant trains all of its parameters with plain
  // (Riemannian) SGD; the Euclidean variants use Adam.
  oc.plain_sgd_eucl = hyp;
  opt::Optimizer optimizer(oc, hyp ? c : 0.0, cfg.safety);

  auto logits_for = [&](nn::Ctx& ctx, const Vec& x) {
    ad::Var xv = ctx.tape.constant(std::span<const double>(x.data(), x.size()));
    if (hyp) return nn::hyp_mlr_logits(ctx, "mlr/p", "mlr/a", xv);
    return nn::eucl_mlr_logits(ctx, "mlr/a", "mlr/b", xv);
  };

  Rng batch_rng(Rng::mix(cfg.seed, static_cast<uint64_t>(variant) + 0x6274ULL));
  const int steps_per_epoch = static_cast<int>(
      (split.train.size() + static_cast<size_t>(cfg.batch) - 1) /
      static_cast<size_t>(cfg.batch));
  const int half = cfg.batch / 2;

  nn::GradTable grad, total;
  grad.init(store);
  total.init(store);
  nn::Ctx ctx(store, hyp ? c : 0.0, cfg.safety);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int step = 0; step < steps_per_epoch; ++step) {
      total.zero();
      // balanced minibatch: half positives, half negatives, resampled
      std::vector<int> batch_ids;
      for (int i = 0; i < half; ++i)
        batch_ids.push_back(pos[batch_rng.below(pos.size())]);
      for (int i = 0; i < half; ++i)
        batch_ids.push_back(negs[batch_rng.below(negs.size())]);
      for (int idx : batch_ids) {
        ctx.reset();
        ad::Var logits = logits_for(ctx, feats[static_cast<size_t>(idx)]);
        ad::Var loss = cross_entropy(ctx.tape, logits,
                                     points[static_cast<size_t>(idx)].label);
        ctx.tape.backward(loss);
        grad.zero();
        ctx.accumulate_grads(grad, 1.0);
        total.add_scaled(grad, 1.0 / batch_ids.size());
      }
      optimizer.step(store, total);
    }
  }

  F1Counter f1;
  for (int idx : split.test) {
    ctx.reset();
    ad::Var logits = logits_for(ctx, feats[static_cast<size_t>(idx)]);
    f1.record(argmax_lowest(logits.value()), points[static_cast<size_t>(idx)].label);
  }
  MlrResult res;
  res.variant = variant;
  res.f1 = f1.f1();
  res.accuracy = f1.accuracy();
  if (log)
    *log << "compare-mlr " << to_string(variant) << " dim=" << dim
         << " test_f1=" << res.f1 << " test_acc=" << res.accuracy << "\n";
  return res;
}

}  // namespace gyro::train
