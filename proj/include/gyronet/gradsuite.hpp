#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gyro::gradsuite {

struct EntryResult {
  std::string name;
  int points = 0;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string csv_rows;  // entry,point,coordinate,analytic,numeric,rel_err
};

struct Entry {
  std::string name;
  double tol;
  std::function<EntryResult(int points, uint64_t seed, bool with_csv)> run;
};

// Central-difference checks (h = 1e-6) for every differentiable ball
// operation, every layer, and the full entailment loss in each geometry.
const std::vector<Entry>& registry();

EntryResult run_entry(const std::string& name, int points, uint64_t seed,
                      bool with_csv = false);
std::vector<EntryResult> run_all(int points, uint64_t seed,
                                 bool with_csv = false);

std::string results_csv(const std::vector<EntryResult>& results);
bool all_pass(const std::vector<EntryResult>& results);

}  // namespace gyro::gradsuite
