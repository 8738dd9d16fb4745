#pragma once

// Central finite differences over double-precision scalar functions.
// Used together with reference_ops.hpp to check analytic gradients.

#include <cmath>
#include <functional>
#include <vector>

namespace refops {

inline constexpr double kFdStep = 1e-3;

/// d f / d x[i] for every i, by central differences at step h.
inline std::vector<double> finite_diff(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = kFdStep) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Relative error with an absolute floor so exact zeros compare cleanly.
inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace refops
