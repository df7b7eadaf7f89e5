#include "gyronet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gyro::data {

namespace fs = std::filesystem;

namespace {

std::vector<int> random_sentence(Rng& rng, int len, int vocab) {
  std::vector<int> s(static_cast<size_t>(len));
  for (int& t : s) t = static_cast<int>(rng.below(static_cast<uint64_t>(vocab)));
  return s;
}

// round-half-up so that Z=50 on a length-1 prefix still corrupts one token
int replacement_count(double z_percent, int prefix_len) {
  return static_cast<int>(std::floor(z_percent / 100.0 * prefix_len + 0.5));
}

void write_pair(std::ostream& os, const SentencePair& p) {
  os << p.label << '\t';
  for (size_t i = 0; i < p.tokens1.size(); ++i) {
    if (i) os << ' ';
    os << p.tokens1[i];
  }
  os << '\t';
  for (size_t i = 0; i < p.tokens2.size(); ++i) {
    if (i) os << ' ';
    os << p.tokens2[i];
  }
  os << '\n';
}

void gen_split(const PrefixSpec& spec, int n_pairs, uint64_t seed,
               const fs::path& file) {
  if (n_pairs <= 0 || n_pairs % 2 != 0)
    throw DataError("gen_prefix_dataset: split size must be positive and even");
  std::ofstream os(file);
  if (!os) throw DataError("gen_prefix_dataset: cannot write " + file.string());
  Rng rng(seed);

  for (int i = 0; i < n_pairs / 2; ++i) {
    const int len = rng.range_int(1, spec.max_len);
    const std::vector<int> sent1 = random_sentence(rng, len, spec.vocab);
    const int prefix_len = rng.range_int(1, len);

    SentencePair pos;
    pos.label = 1;
    pos.tokens1 = sent1;
    pos.tokens2.assign(sent1.begin(), sent1.begin() + prefix_len);
    const int k = replacement_count(spec.z_percent, prefix_len);
    std::vector<int> positions(static_cast<size_t>(prefix_len));
    for (int j = 0; j < prefix_len; ++j) positions[static_cast<size_t>(j)] = j;
    rng.shuffle(positions);
    for (int j = 0; j < k; ++j) {
      const int pos_idx = positions[static_cast<size_t>(j)];
      const int orig = pos.tokens2[static_cast<size_t>(pos_idx)];
      // draw from vocab minus the original token: corruption rate exactly Z%
      int repl = static_cast<int>(rng.below(static_cast<uint64_t>(spec.vocab - 1)));
      if (repl >= orig) ++repl;
      pos.tokens2[static_cast<size_t>(pos_idx)] = repl;
    }

    SentencePair negp;
    negp.label = 0;
    negp.tokens1 = sent1;
    negp.tokens2 = random_sentence(rng, prefix_len, spec.vocab);

    write_pair(os, pos);
    write_pair(os, negp);
  }
}

}  // namespace

void gen_prefix_dataset(const PrefixSpec& spec, const fs::path& out_dir) {
  if (!(spec.z_percent >= 0.0) || spec.z_percent >= 100.0)
    throw DataError("gen_prefix_dataset: Z must be in [0, 100)");
  if (spec.vocab < 2 || spec.max_len < 1)
    throw DataError("gen_prefix_dataset: vocab >= 2 and max_len >= 1 required");
  fs::create_directories(out_dir);
  gen_split(spec, spec.n_train, Rng::mix(spec.seed, 0), out_dir / "train.tsv");
  gen_split(spec, spec.n_valid, Rng::mix(spec.seed, 1), out_dir / "valid.tsv");
  gen_split(spec, spec.n_test, Rng::mix(spec.seed, 2), out_dir / "test.tsv");

  std::ofstream os(out_dir / "manifest.txt");
  if (!os) throw DataError("gen_prefix_dataset: cannot write manifest");
  os << "format_version: 1\n"
     << "task: prefix\n"
     << "z_percent: " << fmt17(spec.z_percent) << '\n'
     << "vocab_size: " << spec.vocab << '\n'
     << "max_len: " << spec.max_len << '\n'
     << "n_train: " << spec.n_train << '\n'
     << "n_valid: " << spec.n_valid << '\n'
     << "n_test: " << spec.n_test << '\n'
     << "seed: " << spec.seed << '\n'
     << "replacement_excludes_original: true\n";
}

std::vector<SentencePair> load_pairs(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw DataError("load_pairs: cannot read " + file.string());
  std::vector<SentencePair> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label_s, t1, t2;
    if (!std::getline(ls, label_s, '\t') || !std::getline(ls, t1, '\t') ||
        !std::getline(ls, t2))
      throw DataError("load_pairs: malformed line " + std::to_string(line_no) +
                      " in " + file.string());
    SentencePair p;
    if (label_s == "0")
      p.label = 0;
    else if (label_s == "1")
      p.label = 1;
    else
      throw DataError("load_pairs: bad label at line " + std::to_string(line_no));
    auto parse_ids = [&](const std::string& s, std::vector<int>& dst) {
      std::istringstream ts(s);
      int v;
      while (ts >> v) dst.push_back(v);
      if (dst.empty())
        throw DataError("load_pairs: empty sentence at line " +
                        std::to_string(line_no));
    };
    parse_ids(t1, p.tokens1);
    parse_ids(t2, p.tokens2);
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, std::string> read_manifest(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw DataError("read_manifest: cannot read " + file.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto pos = line.find(':');
    if (pos == std::string::npos) continue;
    std::string key = line.substr(0, pos);
    std::string val = line.substr(pos + 1);
    while (!val.empty() && val.front() == ' ') val.erase(val.begin());
    out[key] = val;
  }
  return out;
}

BallpointData gen_separable_ballpoints(const BallpointSpec& spec) {
  if (!(spec.margin > 0.0))
    throw DataError("gen_separable_ballpoints: margin must be > 0");
  if (spec.n <= 0 || spec.dim <= 0 || !(spec.c > 0.0))
    throw DataError("gen_separable_ballpoints: bad n/dim/c");
  Rng rng(spec.seed);
  const Curvature curv(spec.c);
  const double sub_radius = 0.9 / std::sqrt(spec.c);

  BallpointData out;
  out.c = spec.c;
  out.truth_p = rng.ball_uniform(spec.dim, 0.5 / std::sqrt(spec.c));
  Vec a(spec.dim);
  do {
    for (int i = 0; i < spec.dim; ++i) a[i] = rng.normal();
  } while (a.norm() == 0.0);
  out.truth_a = a / a.norm();

  const BallPoint p(out.truth_p, curv);
  const Hyperplane h(p, out.truth_a);

  const long long max_tries = static_cast<long long>(spec.n) * 1000;
  long long tries = 0;
  while (static_cast<int>(out.points.size()) < spec.n) {
    if (++tries > max_tries)
      throw DataError(
          "gen_separable_ballpoints: margin too large, sampling exhausted");
    const Vec x = rng.ball_uniform(spec.dim, sub_radius);
    const BallPoint bp(x, curv);
    if (hyperplane_distance(bp, h) < spec.margin) continue;
    const Vec w = mobius_add(-p, bp).coords();
    LabeledPoint lp;
    lp.coords = x;
    lp.label = w.dot(out.truth_a) > 0.0 ? 1 : 0;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%06zu", out.points.size());
    lp.id = buf;
    out.points.push_back(std::move(lp));
  }
  return out;
}

void save_embeddings(const fs::path& file,
                     const std::vector<LabeledPoint>& points, double c) {
  std::ofstream os(file);
  if (!os) throw DataError("save_embeddings: cannot write " + file.string());
  const int dim = points.empty() ? 0 : static_cast<int>(points[0].coords.size());
  os << "dim=" << dim << " c=" << fmt17(c) << '\n';
  for (const LabeledPoint& p : points) {
    os << p.id << '\t' << p.label << '\t';
    for (int i = 0; i < p.coords.size(); ++i) {
      if (i) os << ' ';
      os << fmt17(p.coords[i]);
    }
    os << '\n';
  }
}

std::vector<LabeledPoint> load_embeddings(const fs::path& file, double* c_out) {
  std::ifstream is(file);
  if (!is) throw DataError("load_embeddings: cannot read " + file.string());
  std::string line;
  if (!std::getline(is, line))
    throw DataError("load_embeddings: missing header in " + file.string());
  int dim = -1;
  double c = -1.0;
  if (std::sscanf(line.c_str(), "dim=%d c=%lf", &dim, &c) != 2 || dim < 0 ||
      c < 0.0)
    throw DataError("load_embeddings: bad header line: " + line);
  if (c_out) *c_out = c;

  std::vector<LabeledPoint> out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    LabeledPoint p;
    std::string label_s, rest;
    if (!std::getline(ls, p.id, '\t') || !std::getline(ls, label_s, '\t') ||
        !std::getline(ls, rest))
      throw DataError("load_embeddings: malformed line " +
                      std::to_string(line_no));
    if (label_s == "0")
      p.label = 0;
    else if (label_s == "1")
      p.label = 1;
    else
      throw DataError("load_embeddings: bad label at line " +
                      std::to_string(line_no));
    std::istringstream cs(rest);
    std::vector<double> vals;
    double v;
    while (cs >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != dim)
      throw DataError("load_embeddings: line " + std::to_string(line_no) +
                      " has " + std::to_string(vals.size()) +
                      " coordinates, expected " + std::to_string(dim));
    p.coords = Eigen::Map<const Vec>(vals.data(), dim);
    if (c > 0.0 && c * p.coords.squaredNorm() >= 1.0)
      throw DataError("load_embeddings: line " + std::to_string(line_no) +
                      " violates the ball invariant");
    out.push_back(std::move(p));
  }
  return out;
}

SubtreeSplit split_subtree_task(const std::vector<LabeledPoint>& points,
                                const std::set<std::string>& positive_ids,
                                double train_frac, uint64_t seed) {
  std::vector<int> pos, negs;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (positive_ids.count(points[static_cast<size_t>(i)].id))
      pos.push_back(i);
    else
      negs.push_back(i);
  }
  if (pos.empty()) throw DataError("split_subtree_task: empty positive set");

  Rng rng(seed);
  SubtreeSplit split;
  auto take = [&](std::vector<int>& ids) {
    rng.shuffle(ids);
    const size_t n_train =
        static_cast<size_t>(std::llround(train_frac * static_cast<double>(ids.size())));
    for (size_t i = 0; i < ids.size(); ++i)
      (i < n_train ? split.train : split.test).push_back(ids[i]);
  };
  take(pos);
  take(negs);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace gyro::data
