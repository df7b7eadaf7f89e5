#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gyronet/ball.hpp"
#include "gyronet/rng.hpp"

namespace gyro::data {

// One entailment example: decide whether tokens2 is a noisy prefix of
// tokens1 (label 1) or a random sentence of the same length (label 0).
struct SentencePair {
  std::vector<int> tokens1;
  std::vector<int> tokens2;
  int label = 0;
};

struct PrefixSpec {
  double z_percent = 10.0;  // fraction of prefix positions corrupted
  int n_train = 50000;      // pair counts per split (must be even)
  int n_valid = 5000;
  int n_test = 5000;
  int vocab = 100;
  int max_len = 20;
  uint64_t seed = 1;
};

// Writes train.tsv / valid.tsv / test.tsv plus manifest.txt into out_dir.
// Rows are "<label 0|1>\t<ids>\t<ids>" with space-joined token ids; one
// positive and one negative pair per generated first sentence.
void gen_prefix_dataset(const PrefixSpec& spec,
                        const std::filesystem::path& out_dir);

std::vector<SentencePair> load_pairs(const std::filesystem::path& file);

std::map<std::string, std::string> read_manifest(
    const std::filesystem::path& file);

// --- labeled ball points ---------------------------------------------------------

struct LabeledPoint {
  std::string id;
  Vec coords;
  int label = 0;
};

struct BallpointSpec {
  int n = 2000;
  int dim = 5;
  double c = 1.0;
  double margin = 0.05;
  uint64_t seed = 1;
};

struct BallpointData {
  std::vector<LabeledPoint> points;
  double c = 1.0;
  Vec truth_p;        // generating hyperplane offset
  Vec truth_a;        // generating hyperplane normal
};

// Samples points uniformly in the radius-0.9 sub-ball, labels them by the
// sign of <-p (+) x, a> for a random hyperplane (p, a), and discards points
// closer to it than `margin`. Throws DataError when the margin leaves too
// few acceptable points.
BallpointData gen_separable_ballpoints(const BallpointSpec& spec);

// Embedding file: header "dim=<n> c=<float>", then rows
// "<id>\t<label 0|1>\t<f1> ... <fn>" at 17 significant digits.
void save_embeddings(const std::filesystem::path& file,
                     const std::vector<LabeledPoint>& points, double c);
std::vector<LabeledPoint> load_embeddings(const std::filesystem::path& file,
                                          double* c_out);

struct SubtreeSplit {
  std::vector<int> train;  // indices into the point list
  std::vector<int> test;
};

// 80/20 split applied independently to the positive set (ids in
// positive_ids) and to the remaining points. Deterministic under seed.
SubtreeSplit split_subtree_task(const std::vector<LabeledPoint>& points,
                                const std::set<std::string>& positive_ids,
                                double train_frac, uint64_t seed);

}  // namespace gyro::data
