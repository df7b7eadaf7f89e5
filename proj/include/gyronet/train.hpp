#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>

#include "gyronet/data.hpp"
#include "gyronet/model.hpp"
#include "gyronet/optim.hpp"

namespace gyro::train {

struct ExperimentConfig {
  ModelConfig model;
  int batch = 64;
  int epochs = 30;
  int runs = 3;
  uint64_t seed = 1;
  std::string data_dir;
  opt::OptimizerConfig optim;
  SafetyConfig safety;
  int threads = 0;  // 0: use GYRONET_THREADS, else hardware concurrency
};

// Flat key=value config document; '#' starts a comment line.
std::map<std::string, std::string> load_config_file(
    const std::filesystem::path& file);

// Builds a config from keys plus CLI overrides, validating names and the
// allowed geometry/cell combinations. Unknown keys raise ConfigError.
ExperimentConfig config_from_kv(std::map<std::string, std::string> kv);

// The flat echo stored in checkpoints and written next to metrics.
std::map<std::string, std::string> config_echo(const ExperimentConfig& cfg);

int resolve_threads(int requested);

struct MetricsRecord {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double norm1 = 0.0;
  double norm2 = 0.0;
  int64_t skipped_steps = 0;
  double wall_seconds = 0.0;  // logged to stdout only, never to the CSV
};

extern const char* kMetricsCsvHeader;
std::string metrics_csv_row(const MetricsRecord& r);

struct Checkpoint {
  std::map<std::string, std::string> config_echo;
  int epoch = 0;
  double val_accuracy = 0.0;
  std::vector<nn::Param> params;
};

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& file);
Checkpoint snapshot(const nn::ParamStore& store,
                    const std::map<std::string, std::string>& echo, int epoch,
                    double val_accuracy);
void restore_params(nn::ParamStore& store, const Checkpoint& ck);

struct TrainResult {
  std::vector<MetricsRecord> history;
  Checkpoint best;
};

// Minibatch training with per-epoch validation; writes metrics.csv and
// checkpoint.txt under out_dir when it is non-empty. Deterministic under
// (config, seed) regardless of thread count.
TrainResult run_training(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir,
                         std::ostream* log = nullptr);

MetricsRecord evaluate_split(EntailmentModel& model,
                             const std::vector<data::SentencePair>& pairs,
                             const std::string& split_name, int epoch,
                             int threads,
                             const SafetyConfig& safety = default_safety());

struct BestOfResult {
  int best_run = 0;
  double best_val_accuracy = 0.0;
  MetricsRecord test;
  std::vector<double> run_val_accuracies;
};

// Runs `runs` trainings with seeds seed+i and returns the test metrics of
// the run with the best validation accuracy (ties: lowest run index).
BestOfResult best_of_runs(const ExperimentConfig& cfg,
                          const std::filesystem::path& out_dir,
                          std::ostream* log = nullptr);

// --- MLR comparison (pre-trained embeddings task) -------------------------------

enum class MlrVariant { Hyperbolic, EuclideanDirect, Log0Euclidean };
MlrVariant mlr_variant_from_string(const std::string& s);
std::string to_string(MlrVariant v);

struct MlrRunConfig {
  int epochs = 30;
  int batch = 16;  // balanced: batch/2 positives + batch/2 negatives
  double lr = 1e-3;
  uint64_t seed = 1;
  SafetyConfig safety;
};

struct MlrResult {
  MlrVariant variant;
  double f1 = 0.0;
  double accuracy = 0.0;
};

MlrResult compare_mlr_run(const std::vector<data::LabeledPoint>& points,
                          double c, const data::SubtreeSplit& split,
                          MlrVariant variant, const MlrRunConfig& cfg,
                          std::ostream* log = nullptr);

}  // namespace gyro::train
