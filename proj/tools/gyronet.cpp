// gyronet CLI: dataset generation, training, evaluation and the property /
// gradient-check runners. Exit codes: 0 ok, 1 check failure, 2 config error,
// 3 data error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gyronet/data.hpp"
#include "gyronet/gradsuite.hpp"
#include "gyronet/props.hpp"
#include "gyronet/train.hpp"

namespace fs = std::filesystem;
using namespace gyro;

namespace {

// Collects trailing "--key value" pairs as config overrides.
std::map<std::string, std::string> parse_overrides(
    const std::vector<std::string>& extras) {
  std::map<std::string, std::string> kv;
  for (size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0)
      throw ConfigError("unexpected argument: " + tok);
    std::string key = tok.substr(2);
    std::string val;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      val = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size())
        throw ConfigError("override " + tok + " is missing a value");
      val = extras[++i];
    }
    kv[key] = val;
  }
  return kv;
}

train::ExperimentConfig build_config(const std::string& config_path,
                                     const std::vector<std::string>& extras,
                                     const std::string& seed_flag,
                                     const std::string& data_flag) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = train::load_config_file(config_path);
  for (auto& [k, v] : parse_overrides(extras)) kv[k] = v;
  if (!seed_flag.empty()) kv["seed"] = seed_flag;
  if (!data_flag.empty()) kv["data.dir"] = data_flag;
  return train::config_from_kv(kv);
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << content;
}

int cmd_gen_data(const std::string& task, const std::string& out,
                 uint64_t seed, double z, int n_train, int n_valid, int n_test,
                 int vocab, int max_len, int n, int dim, double c,
                 double margin) {
  if (task == "prefix") {
    data::PrefixSpec spec;
    spec.z_percent = z;
    spec.n_train = n_train;
    spec.n_valid = n_valid;
    spec.n_test = n_test;
    spec.vocab = vocab;
    spec.max_len = max_len;
    spec.seed = seed;
    data::gen_prefix_dataset(spec, out);
    std::cout << "wrote PREFIX-" << z << "% dataset (" << n_train << "/"
              << n_valid << "/" << n_test << " pairs) to " << out << "\n";
    return 0;
  }
  if (task == "ballpoints") {
    data::BallpointSpec spec;
    spec.n = n;
    spec.dim = dim;
    spec.c = c;
    spec.margin = margin;
    spec.seed = seed;
    data::BallpointData bd = data::gen_separable_ballpoints(spec);
    fs::create_directories(out);
    data::save_embeddings(fs::path(out) / "embeddings.tsv", bd.points, bd.c);
    std::ostringstream truth;
    truth << "p";
    for (int i = 0; i < bd.truth_p.size(); ++i) truth << ' ' << fmt17(bd.truth_p[i]);
    truth << "\na";
    for (int i = 0; i < bd.truth_a.size(); ++i) truth << ' ' << fmt17(bd.truth_a[i]);
    truth << '\n';
    write_file(fs::path(out) / "truth.txt", truth.str());
    std::cout << "wrote " << bd.points.size() << " separable ball points to "
              << out << "\n";
    return 0;
  }
  throw ConfigError("gen-data: unknown task " + task +
                    " (expected prefix|ballpoints)");
}

int cmd_train(const train::ExperimentConfig& cfg, const std::string& out) {
  train::TrainResult res = train::run_training(cfg, out, &std::cout);
  std::cout << "best validation accuracy " << res.best.val_accuracy
            << " at epoch " << res.best.epoch << "\n";
  return 0;
}

int cmd_best_of(const train::ExperimentConfig& cfg, const std::string& out) {
  train::BestOfResult res = train::best_of_runs(cfg, out, &std::cout);
  std::cout << "selected run " << res.best_run << ": test accuracy "
            << res.test.accuracy << ", test F1 " << res.test.f1 << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& split, const std::string& out) {
  train::Checkpoint ck = train::load_checkpoint(checkpoint);
  train::ExperimentConfig cfg = train::config_from_kv(ck.config_echo);
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  train::ModelConfig mc = cfg.model;
  mc.init_seed = Rng::mix(cfg.seed, 0x696e6974ULL);
  train::EntailmentModel model(mc);
  train::restore_params(model.store(), ck);
  auto pairs = data::load_pairs(fs::path(cfg.data_dir) / (split + ".tsv"));
  train::MetricsRecord rec = train::evaluate_split(
      model, pairs, split, ck.epoch, train::resolve_threads(cfg.threads),
      cfg.safety);
  std::cout << train::kMetricsCsvHeader << '\n'
            << train::metrics_csv_row(rec) << '\n';
  if (!out.empty())
    write_file(out, std::string(train::kMetricsCsvHeader) + "\n" +
                        train::metrics_csv_row(rec) + "\n");
  return 0;
}

int cmd_compare_mlr(const std::string& embeddings, const std::string& variant,
                    uint64_t seed, const std::string& out) {
  double c = 1.0;
  auto points = data::load_embeddings(embeddings, &c);
  std::set<std::string> positive_ids;
  for (const auto& p : points)
    if (p.label == 1) positive_ids.insert(p.id);
  data::SubtreeSplit split =
      data::split_subtree_task(points, positive_ids, 0.8, Rng::mix(seed, 0x7370ULL));

  std::vector<train::MlrVariant> variants;
  if (variant == "all")
    variants = {train::MlrVariant::Hyperbolic,
                train::MlrVariant::EuclideanDirect,
                train::MlrVariant::Log0Euclidean};
  else
    variants = {train::mlr_variant_from_string(variant)};

  std::ostringstream csv;
  csv << "variant,f1,accuracy\n";
  for (train::MlrVariant v : variants) {
    train::MlrRunConfig rc;
    rc.seed = seed;
    train::MlrResult res =
        train::compare_mlr_run(points, c, split, v, rc, &std::cout);
    csv << train::to_string(v) << ',' << fmt17(res.f1) << ','
        << fmt17(res.accuracy) << '\n';
  }
  std::cout << csv.str();
  if (!out.empty()) write_file(out, csv.str());
  return 0;
}

int cmd_gradcheck(int points, uint64_t seed, const std::string& out) {
  auto results = gradsuite::run_all(points, seed, !out.empty());
  for (const auto& r : results)
    std::cout << (r.pass ? "pass " : "FAIL ") << r.name
              << " max_rel_err=" << r.max_rel_err << " tol=" << r.tol << "\n";
  if (!out.empty()) write_file(out, gradsuite::results_csv(results));
  return gradsuite::all_pass(results) ? 0 : 1;
}

int cmd_props(const std::string& out) {
  auto results = props::run_all();
  for (const auto& r : results)
    std::cout << (r.pass ? "pass " : "FAIL ") << r.name
              << " max_err=" << r.max_err << " tol=" << r.tol
              << (r.detail.empty() ? "" : " (" + r.detail + ")") << "\n";
  if (!out.empty()) write_file(out, props::results_csv(results));
  return props::all_pass(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gyronet: hyperbolic deep learning on the Poincare ball"};
  app.require_subcommand(1);

  std::string config_path, out, seed_flag, data_flag;
  uint64_t seed = 1;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate synthetic datasets");
  std::string task = "prefix";
  double z = 10.0, c = 1.0, margin = 0.05;
  int n_train = 50000, n_valid = 5000, n_test = 5000, vocab = 100, max_len = 20;
  int n = 2000, dim = 5;
  gen->add_option("--task", task, "prefix|ballpoints");
  gen->add_option("--z", z, "PREFIX noise percentage");
  gen->add_option("--n-train", n_train);
  gen->add_option("--n-valid", n_valid);
  gen->add_option("--n-test", n_test);
  gen->add_option("--vocab", vocab);
  gen->add_option("--max-len", max_len);
  gen->add_option("--n", n, "ballpoints: number of points");
  gen->add_option("--dim", dim, "ballpoints: dimension");
  gen->add_option("--c", c, "ballpoints: curvature");
  gen->add_option("--margin", margin, "ballpoints: hyperplane margin");
  gen->add_option("--seed", seed);
  gen->add_option("--out", out, "output directory")->required();

  // train / best-of
  auto* tr = app.add_subcommand("train", "train one entailment model");
  tr->add_option("--config", config_path, "flat key=value config file");
  tr->add_option("--seed", seed_flag, "seed override");
  tr->add_option("--data", data_flag, "dataset directory override");
  tr->add_option("--out", out, "output directory for metrics/checkpoint");
  tr->allow_extras();

  auto* bo = app.add_subcommand(
      "best-of", "run N seeds, report test metrics of the best validation");
  bo->add_option("--config", config_path);
  bo->add_option("--seed", seed_flag);
  bo->add_option("--data", data_flag);
  bo->add_option("--out", out);
  bo->allow_extras();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string checkpoint, split = "test";
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--data", data_flag, "dataset directory");
  ev->add_option("--split", split, "train|valid|test");
  ev->add_option("--out", out, "metrics CSV path");

  // compare-mlr
  auto* cm = app.add_subcommand(
      "compare-mlr", "three-variant MLR comparison on an embedding file");
  std::string embeddings, variant = "all";
  cm->add_option("--embeddings", embeddings)->required();
  cm->add_option("--variant", variant,
                 "all|hyperbolic|euclidean_direct|log0_euclidean");
  cm->add_option("--seed", seed);
  cm->add_option("--out", out, "result CSV path");

  // gradcheck / props
  auto* gc = app.add_subcommand("gradcheck", "run the gradient-check suite");
  int points = 20;
  gc->add_option("--points", points, "random points per entry");
  gc->add_option("--seed", seed);
  gc->add_option("--out", out, "per-coordinate CSV report path");

  auto* pr = app.add_subcommand("props", "run the property suite");
  pr->add_option("--out", out, "CSV report path");

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen_data(task, out, seed, z, n_train, n_valid, n_test, vocab,
                          max_len, n, dim, c, margin);
    if (tr->parsed())
      return cmd_train(build_config(config_path, tr->remaining(), seed_flag,
                                    data_flag),
                       out);
    if (bo->parsed())
      return cmd_best_of(build_config(config_path, bo->remaining(), seed_flag,
                                      data_flag),
                         out);
    if (ev->parsed()) return cmd_eval(checkpoint, data_flag, split, out);
    if (cm->parsed()) return cmd_compare_mlr(embeddings, variant, seed, out);
    if (gc->parsed()) return cmd_gradcheck(points, seed, out);
    if (pr->parsed()) return cmd_props(out);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
