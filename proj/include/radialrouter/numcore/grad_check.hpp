#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "radialrouter/numcore/tape.hpp"

namespace radialrouter::num {

struct GradCheckEntry {
  std::string name;
  double max_error = 0.0;  // relative, with an absolute floor in the denominator
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  bool passed = false;
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;
  std::string diagnostics;

  double max_error() const {
    double e = 0.0;
    for (const auto& x : entries) e = std::max(e, x.max_error);
    return e;
  }
};

/// |a - n| / max(|a|, |n|, floor). The floor makes vanishing gradients fall
/// back to an absolute comparison.
inline double gradient_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares reverse-mode gradients of a scalar function against central
/// finite differences for every element of every listed parameter. The
/// numeric estimate is Richardson-extrapolated from steps h and h/2.
///
/// `f` must build its graph on the tape it receives and be deterministic.
inline GradCheckReport grad_check(const std::function<Tensor(Tape&)>& f,
                                  const std::vector<NamedTensor>& params, double step = 1e-5,
                                  double tol = 1e-4) {
  if (!(step > 0.0 && step <= 1e-3)) {
    throw ConfigError("grad_check: step must lie in (0, 1e-3]");
  }
  GradCheckReport report;
  report.tolerance = tol;

  for (const auto& p : params) p.tensor.zero_grad();
  Tape tape;
  const Tensor loss = f(tape);
  if (!std::isfinite(loss.item())) {
    report.diagnostics = "non-finite loss " + std::to_string(loss.item()) + " at base point";
    return report;
  }
  tape.backward(loss);

  report.passed = true;
  for (const auto& p : params) {
    GradCheckEntry entry;
    entry.name = p.name;
    Tensor t = p.tensor;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      auto central = [&](double h) {
        values[i] = saved + h;
        Tape plus_tape(false);
        const double plus = f(plus_tape).item();
        values[i] = saved - h;
        Tape minus_tape(false);
        const double minus = f(minus_tape).item();
        values[i] = saved;
        return (plus - minus) / (2.0 * h);
      };
      const double coarse = central(step);
      const double fine = central(0.5 * step);
      if (!std::isfinite(coarse) || !std::isfinite(fine)) {
        std::ostringstream os;
        os << "non-finite loss perturbing " << p.name << "[" << i << "]";
        report.diagnostics = os.str();
        report.passed = false;
        continue;
      }
      const double numeric = (4.0 * fine - coarse) / 3.0;
      const double err = gradient_error(analytic[i], numeric);
      if (i == 0 || err > entry.max_error) {
        entry.max_error = err;
        entry.worst_index = i;
        entry.analytic = analytic[i];
        entry.numeric = numeric;
      }
    }
    if (entry.max_error > tol) {
      report.passed = false;
      std::ostringstream os;
      os << p.name << "[" << entry.worst_index << "]: analytic " << entry.analytic << " vs numeric "
         << entry.numeric << " (err " << entry.max_error << ")\n";
      report.diagnostics += os.str();
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace radialrouter::num
