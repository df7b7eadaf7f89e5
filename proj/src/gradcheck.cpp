#include "gyronet/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace gyro::ad {

namespace {

double eval_at(const MultiVarFn& f, const std::vector<Vec>& points,
               const SafetyConfig& cfg) {
  Tape tape(cfg);
  std::vector<Var> leaves;
  leaves.reserve(points.size());
  for (const Vec& p : points)
    leaves.push_back(tape.leaf(std::span<const double>(p.data(), p.size())));
  return f(tape, leaves).scalar();
}

}  // namespace

std::string GradCheckReport::to_csv() const {
  std::ostringstream os;
  os << "coordinate,analytic,numeric,rel_err\n";
  for (const GradCheckRow& r : rows)
    os << r.coordinate << ',' << fmt17(r.analytic) << ',' << fmt17(r.numeric)
       << ',' << fmt17(r.rel_err) << '\n';
  return os.str();
}

GradCheckReport gradcheck(const MultiVarFn& f, const std::vector<Vec>& points,
                          double h, double tol, const SafetyConfig& cfg) {
  GradCheckReport report;
  report.tol = tol;

  Tape tape(cfg);
  std::vector<Var> leaves;
  leaves.reserve(points.size());
  for (const Vec& p : points)
    leaves.push_back(tape.leaf(std::span<const double>(p.data(), p.size())));
  Var loss = f(tape, leaves);
  tape.backward(loss);
  std::vector<Vec> analytic;
  analytic.reserve(leaves.size());
  for (Var v : leaves) analytic.push_back(tape.grad(v));

  int coord = 0;
  for (size_t li = 0; li < points.size(); ++li) {
    for (int i = 0; i < points[li].size(); ++i, ++coord) {
      std::vector<Vec> plus = points;
      std::vector<Vec> minus = points;
      plus[li][i] += h;
      minus[li][i] -= h;
      const double numeric =
          (eval_at(f, plus, cfg) - eval_at(f, minus, cfg)) / (2.0 * h);
      const double a = analytic[li][i];
      const double rel =
          std::abs(a - numeric) /
          std::max({std::abs(a), std::abs(numeric), 1e-3});
      report.rows.push_back({coord, a, numeric, rel});
      report.max_rel_err = std::max(report.max_rel_err, rel);
    }
  }
  return report;
}

GradCheckReport gradcheck(const VarFn& f, const Vec& point, double h,
                          double tol, const SafetyConfig& cfg) {
  return gradcheck(
      [&f](Tape& t, std::span<const Var> leaves) { return f(t, leaves[0]); },
      {point}, h, tol, cfg);
}

}  // namespace gyro::ad
