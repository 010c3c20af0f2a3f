#include <omp.h>

#include <cmath>
#include <numbers>

#include "okpz/kernel.hpp"
#include "okpz/rng.hpp"

namespace okpz {

namespace {

// Free rate-2 Gaussian density at displacement z over time t.
double free_density(double t, double z) {
  return std::exp(-z * z / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

// Image points of y under the reflections generating the Neumann kernel,
// paired with their free weights from x.
struct Images {
  std::vector<double> points;
  std::vector<double> weights;
  double total = 0.0;
};

Images images(double t, double x, double y) {
  Images out;
  const int reach = 2 + static_cast<int>(std::ceil(6.0 * std::sqrt(t)));
  for (int k = -reach; k <= reach; ++k) {
    for (double base : {y, -y}) {
      const double p = base + 2.0 * k;
      const double w = free_density(t, p - x);
      out.points.push_back(p);
      out.weights.push_back(w);
      out.total += w;
    }
  }
  return out;
}

double fold(double w) {
  double r = std::fmod(w, 2.0);
  if (r < 0.0) r += 2.0;
  return r <= 1.0 ? r : 2.0 - r;
}

// Local time at level c of a rate-2 bridge a → b over time h.
double piece_local_time(double a, double b, double c, double h, CounterStream& rng) {
  const double da = std::abs(a - c);
  const double db = std::abs(b - c);
  const double d2 = (a - b) * (a - b);
  const double hit = std::exp(-((da + db) * (da + db) - d2) / (4.0 * h));
  const double u = rng.uniform();
  if (u >= hit) return 0.0;
  return std::max(0.0, std::sqrt(d2 - 4.0 * h * std::log(u)) - da - db);
}

BridgeSample sample_with(const Images& img, double t, double x, int n_steps,
                         CounterStream& rng) {
  if (n_steps < 1) throw Error("bridge needs at least one step");
  double u = rng.uniform() * img.total;
  std::size_t pick = 0;
  while (pick + 1 < img.points.size() && u > img.weights[pick]) u -= img.weights[pick++];
  const double target = img.points[pick];

  BridgeSample out;
  out.path.resize(static_cast<std::size_t>(n_steps) + 1);
  const double h = t / n_steps;
  double w = x;
  out.path[0] = fold(w);
  for (int k = 0; k < n_steps; ++k) {
    const double r = n_steps - k;
    const double next = k + 1 == n_steps
                            ? target
                            : w + (target - w) / r + std::sqrt(2.0 * h * (r - 1.0) / r) * rng.normal();
    const auto lo = static_cast<long>(std::floor(std::min(w, next)));
    const auto hi = static_cast<long>(std::ceil(std::max(w, next)));
    for (long c = lo; c <= hi; ++c) {
      const double l = piece_local_time(w, next, static_cast<double>(c), h, rng);
      if (c % 2 == 0) {
        out.l0 += l;
      } else {
        out.l1 += l;
      }
    }
    w = next;
    out.path[static_cast<std::size_t>(k) + 1] = fold(w);
  }
  return out;
}

void check_mc_args(const BoundaryParams& params, double t, double x, double y,
                   std::int64_t n_paths, int n_steps) {
  params.validate();
  if (!(t > 0.0)) throw Error("kernel time must be positive");
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) throw Error("kernel points must lie in [0,1]");
  if (n_paths < 100) throw Error("Monte Carlo needs at least 100 paths");
  if (n_steps < 1) throw Error("bridge needs at least one step");
}

double path_weight(const BoundaryParams& params, const Images& img, double t, double x,
                   int n_steps, std::uint64_t seed, std::int64_t i) {
  CounterStream rng(seed, static_cast<std::uint64_t>(i), StreamTag::bridge);
  const auto s = sample_with(img, t, x, n_steps, rng);
  return std::exp(-params.a * s.l0 + params.b * s.l1);
}

McEstimate finish(const std::vector<double>& values, double neumann) {
  // ordered reduction so the parallel and serial paths agree bitwise
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {neumann * mean, neumann * sd / std::sqrt(n)};
}

}  // namespace

BridgeSample sample_reflected_bridge(double t, double x, double y, int n_steps,
                                     std::uint64_t seed, std::uint64_t path_index) {
  if (!(t > 0.0)) throw Error("bridge time must be positive");
  CounterStream rng(seed, path_index, StreamTag::bridge);
  return sample_with(images(t, x, y), t, x, n_steps, rng);
}

McEstimate kernel_mc(const BoundaryParams& params, double t, double x, double y,
                     std::int64_t n_paths, int n_steps, std::uint64_t seed) {
  check_mc_args(params, t, x, y, n_paths, n_steps);
  const auto img = images(t, x, y);
  std::vector<double> values(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n_paths; ++i) {
    values[static_cast<std::size_t>(i)] = path_weight(params, img, t, x, n_steps, seed, i);
  }
  return finish(values, img.total);
}

McEstimate kernel_mc_serial(const BoundaryParams& params, double t, double x, double y,
                            std::int64_t n_paths, int n_steps, std::uint64_t seed) {
  check_mc_args(params, t, x, y, n_paths, n_steps);
  const auto img = images(t, x, y);
  std::vector<double> values(static_cast<std::size_t>(n_paths));
  for (std::int64_t i = 0; i < n_paths; ++i) {
    values[static_cast<std::size_t>(i)] = path_weight(params, img, t, x, n_steps, seed, i);
  }
  return finish(values, img.total);
}

}  // namespace okpz
