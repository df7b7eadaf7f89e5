#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace gyro {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown for malformed configs / CLI usage; mapped to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for unreadable or invalid data files; mapped to exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Formats a double with 17 significant digits (round-trip safe for IEEE 754
// binary64). Used by every on-disk text format.
std::string fmt17(double v);

}  // namespace gyro
