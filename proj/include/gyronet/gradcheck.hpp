#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gyronet/tape.hpp"

namespace gyro::ad {

struct GradCheckRow {
  int coordinate;
  double analytic;
  double numeric;
  double rel_err;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double max_rel_err = 0.0;
  double tol = 0.0;

  bool pass() const { return max_rel_err < tol; }
  std::string to_csv() const;  // coordinate,analytic,numeric,rel_err
};

// Builds a scalar loss from one input leaf.
using VarFn = std::function<Var(Tape&, Var)>;

// Builds a scalar loss from several input leaves (parameters, inputs, ...).
using MultiVarFn = std::function<Var(Tape&, std::span<const Var>)>;

// Central-difference check of the reverse-mode gradient: perturbs every
// coordinate of every leaf by +-h and compares. rel_err uses
// |a - n| / max(|a|, |n|, 1e-3); coordinates are numbered across leaves in
// order.
GradCheckReport gradcheck(const MultiVarFn& f, const std::vector<Vec>& points,
                          double h = 1e-6, double tol = 1e-5,
                          const SafetyConfig& cfg = default_safety());

GradCheckReport gradcheck(const VarFn& f, const Vec& point, double h = 1e-6,
                          double tol = 1e-5,
                          const SafetyConfig& cfg = default_safety());

}  // namespace gyro::ad
