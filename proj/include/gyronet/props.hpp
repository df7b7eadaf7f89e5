#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gyro::props {

struct PropResult {
  std::string name;
  std::string module;
  int cases = 0;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string detail;
};

struct Property {
  std::string name;
  std::string module;  // ball-core | layers | optim
  std::function<PropResult()> run;
};

// Every Invariants & Properties entry of the ball-core, layers and optim
// modules, with fixed seeds and the stated tolerances.
const std::vector<Property>& registry();

PropResult run_property(const std::string& name);
std::vector<PropResult> run_all();

std::string results_csv(const std::vector<PropResult>& results);
bool all_pass(const std::vector<PropResult>& results);

}  // namespace gyro::props
