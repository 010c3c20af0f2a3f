#include "okpz/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "quadrature.hpp"

namespace okpz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTruncation = 1e-10;

double sinc(double u) { return std::abs(u) < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u; }
double sinhc(double u) { return std::abs(u) < 1e-8 ? 1.0 + u * u / 6.0 : std::sinh(u) / u; }

// Unscaled Prüfer angle θ(1; λ) of the shooting solution, continuous and
// increasing in λ, with θ(0) ∈ (0, π).
double pruefer_angle_at_one(double a, double lambda) {
  if (lambda > 0.0) {
    // modified angle with scale ω is exactly linear in x
    const double omega = std::sqrt(lambda);
    const double theta_s = std::atan2(omega, a) + omega;
    const double turns = std::floor(theta_s / kPi);
    const double r = theta_s - turns * kPi;
    return turns * kPi + std::atan2(std::sin(r), omega * std::cos(r));
  }
  // λ ≤ 0: y and y' scaled by e^{-κ} to avoid overflow; at most one zero
  const double kappa = std::sqrt(-lambda);
  const double e2 = std::exp(-2.0 * kappa);
  const double ch = 0.5 * (1.0 + e2);
  const double sh_over_k = kappa > 1e-8 ? 0.5 * (1.0 - e2) / kappa : std::exp(-kappa);
  const double y1 = ch + a * sh_over_k;
  const double dy1 = -lambda * sh_over_k + a * ch;
  if (y1 >= 0.0) return std::atan2(y1, dy1);
  return kPi + std::atan2(-y1, -dy1);
}

}  // namespace

double shoot(double a, double lambda, double x) {
  if (lambda > 0.0) {
    const double omega = std::sqrt(lambda);
    return std::cos(omega * x) + a * x * sinc(omega * x);
  }
  if (lambda < 0.0) {
    const double kappa = std::sqrt(-lambda);
    return std::cosh(kappa * x) + a * x * sinhc(kappa * x);
  }
  return 1.0 + a * x;
}

double shoot_derivative(double a, double lambda, double x) {
  if (lambda > 0.0) {
    const double omega = std::sqrt(lambda);
    return -lambda * x * sinc(omega * x) + a * std::cos(omega * x);
  }
  if (lambda < 0.0) {
    const double kappa = std::sqrt(-lambda);
    return -lambda * x * sinhc(kappa * x) + a * std::cosh(kappa * x);
  }
  return a;
}

int EigenSystem::count_below(const BoundaryParams& params, double lambda) {
  const double theta = pruefer_angle_at_one(params.a, lambda);
  const double beta = std::atan2(1.0, params.b);
  const double n = std::ceil((theta - beta) / kPi);
  return n > 0.0 ? static_cast<int>(n) : 0;
}

EigenSystem EigenSystem::compute(const BoundaryParams& params, int n_modes) {
  params.validate();
  if (n_modes < 1) throw Error("eigensystem needs at least one mode");
  EigenSystem sys;
  sys.params_ = params;
  sys.modes_.reserve(static_cast<std::size_t>(n_modes));

  double lo = -1.0;
  while (count_below(params, lo) > 0) {
    lo *= 2.0;
    if (lo < -1e12) throw Error("eigenvalue search: no lower bracket for the ground state");
  }
  for (int k = 0; k < n_modes; ++k) {
    double hi = std::max(lo + 1.0, (k + 1.5) * (k + 1.5) * kPi * kPi);
    int expansions = 0;
    while (count_below(params, hi) <= k) {
      hi = 2.0 * std::abs(hi) + 1.0;
      if (++expansions > 200) {
        std::ostringstream msg;
        msg << "eigenvalue search failed for mode " << k << ": bracket [" << lo << ", " << hi
            << "] never exceeded it";
        throw Error(msg.str());
      }
    }
    double a = lo;
    double b = hi;
    for (int iter = 0; iter < 400; ++iter) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (count_below(params, mid) <= k) {
        a = mid;
      } else {
        b = mid;
      }
    }
    if (!(count_below(params, a) <= k && count_below(params, b) > k)) {
      std::ostringstream msg;
      msg << "eigenvalue bisection for mode " << k << " lost its bracket [" << a << ", " << b << "]";
      throw Error(msg.str());
    }
    const double lambda = 0.5 * (a + b);
    const double freq = std::sqrt(std::abs(lambda));
    const int panels = std::max(4, static_cast<int>(std::ceil(2.0 * freq)));
    const double norm2 = detail::integrate_gl(
        [&](double x) {
          const double v = shoot(params.a, lambda, x);
          return v * v;
        },
        0.0, 1.0, panels);
    sys.modes_.push_back({lambda, 1.0 / std::sqrt(norm2)});
    lo = b;
  }
  return sys;
}

double EigenSystem::phi(std::size_t k, double x) const {
  return modes_[k].scale * shoot(params_.a, modes_[k].lambda, x);
}

double EigenSystem::dphi(std::size_t k, double x) const {
  return modes_[k].scale * shoot_derivative(params_.a, modes_[k].lambda, x);
}

std::vector<double> EigenSystem::sample(std::size_t k, int m) const {
  std::vector<double> out(static_cast<std::size_t>(m) + 1);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = phi(k, static_cast<double>(j) / m);
  return out;
}

namespace {

void check_truncation(const EigenSystem& sys, double t) {
  if (!(t > 0.0)) throw Error("kernel time must be positive");
  if (std::exp(-sys.lambda(sys.size() - 1) * t) >= kTruncation) {
    std::ostringstream msg;
    msg << "increase n_modes or t: truncation term exp(-lambda_K t) = "
        << std::exp(-sys.lambda(sys.size() - 1) * t) << " at t = " << t << " with "
        << sys.size() << " modes";
    throw Error(msg.str());
  }
}

}  // namespace

double kernel_eval(const EigenSystem& sys, double t, double x, double y) {
  check_truncation(sys, t);
  double acc = 0.0;
  for (std::size_t k = 0; k < sys.size(); ++k) {
    acc += std::exp(-sys.lambda(k) * t) * (sys.phi(k, x) * sys.phi(k, y));
  }
  return acc;
}

std::vector<double> kernel_matrix(const EigenSystem& sys, double t, int m) {
  check_truncation(sys, t);
  const std::size_t n = static_cast<std::size_t>(m) + 1;
  std::vector<std::vector<double>> phis(sys.size());
  std::vector<double> decay(sys.size());
  for (std::size_t k = 0; k < sys.size(); ++k) {
    phis[k] = sys.sample(k, m);
    decay[k] = std::exp(-sys.lambda(k) * t);
  }
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < sys.size(); ++k) acc += decay[k] * (phis[k][i] * phis[k][j]);
      out[i * n + j] = acc;
    }
  }
  return out;
}

int modes_for_time(double t) {
  if (!(t > 0.0)) throw Error("kernel time must be positive");
  return std::max(8, static_cast<int>(std::ceil(std::sqrt(25.0 / t) / kPi)) + 3);
}

KernelFactReport kernel_fact_checks(const EigenSystem& sys, std::span<const double> t_grid,
                                    int m) {
  if (t_grid.empty()) throw Error("kernel checks need a nonempty time grid");
  const std::size_t n = static_cast<std::size_t>(m) + 1;
  const double dx = 1.0 / m;
  const double a = sys.params().a;
  const double b = sys.params().b;

  // kernel and its time derivative (= ∂_z² of the kernel) on the grid
  auto time_derivative = [&](double t) {
    std::vector<double> out(n * n, 0.0);
    for (std::size_t k = 0; k < sys.size(); ++k) {
      const auto phi = sys.sample(k, m);
      const double c = -sys.lambda(k) * std::exp(-sys.lambda(k) * t);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += c * phi[i] * phi[j];
    }
    return out;
  };

  KernelFactReport report;
  report.positivity_min = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> mats;
  std::vector<std::vector<double>> dts;
  for (double t : t_grid) {
    mats.push_back(kernel_matrix(sys, t, m));
    dts.push_back(time_derivative(t));
    const auto& k = mats.back();
    for (std::size_t i = 0; i < n; ++i) {
      double mass = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = k[i * n + j];
        report.positivity_min = std::min(report.positivity_min, v);
        report.symmetry_defect = std::max(report.symmetry_defect, std::abs(v - k[j * n + i]));
        const double dist = std::abs(static_cast<double>(i) - static_cast<double>(j)) * dx;
        report.growth_constant_c = std::max(report.growth_constant_c, v * (dist + std::sqrt(t)));
        mass += ((j == 0 || j == n - 1) ? 0.5 * dx : dx) * v;
      }
      report.mass_defect = std::max(report.mass_defect, std::abs(mass - 1.0));
    }
  }

  // p_t∘p_s by corrected trapezoid: ∫f = T(f) − dx²/12 [f']_0^1 + dx⁴/720 [f''']_0^1,
  // with f(z) = p_t(x,z)p_s(z,y); Robin data give f' and f''' at the ends.
  for (std::size_t u = 0; u < t_grid.size(); ++u) {
    for (std::size_t v = u; v < t_grid.size(); ++v) {
      const double total = t_grid[u] + t_grid[v];
      const auto target = kernel_matrix(sys, total, m);
      const auto& p = mats[u];
      const auto& q = mats[v];
      const auto& pt = dts[u];
      const auto& qt = dts[v];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t z = 0; z < n; ++z) {
            const double w = (z == 0 || z == n - 1) ? 0.5 * dx : dx;
            acc += w * p[i * n + z] * q[z * n + j];
          }
          const std::size_t e = n - 1;
          const double f1_0 = 2.0 * a * p[i * n] * q[j];
          const double f1_1 = 2.0 * b * p[i * n + e] * q[e * n + j];
          const double f3_0 = 4.0 * a * (pt[i * n] * q[j] + p[i * n] * qt[j]);
          const double f3_1 = 4.0 * b * (pt[i * n + e] * q[e * n + j] + p[i * n + e] * qt[e * n + j]);
          acc += -dx * dx / 12.0 * (f1_1 - f1_0) + std::pow(dx, 4) / 720.0 * (f3_1 - f3_0);
          report.semigroup_defect =
              std::max(report.semigroup_defect, std::abs(acc - target[i * n + j]));
        }
      }
    }
  }
  return report;
}

}  // namespace okpz
