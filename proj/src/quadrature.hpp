#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace okpz::detail {

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> nodes(n), weights(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return {nodes, weights};
}

/// Composite Gauss–Legendre integral of f over [a, b].
template <class F>
double integrate_gl(F&& f, double a, double b, int panels, int order = 16) {
  static thread_local auto rule = gauss_legendre(16);
  if (order != 16) rule = gauss_legendre(order);
  const auto& [nodes, weights] = rule;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + 0.5 * h * nodes[i]);
    total += 0.5 * h * acc;
  }
  if (order != 16) rule = gauss_legendre(16);
  return total;
}

}  // namespace okpz::detail
