#include "okpz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace okpz {

void MetricConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 0.5)) throw Error("kappa must lie in (0, 1/2)");
}

namespace {

struct Point {
  double x;
  double v;
};

void check_pair(const QuotientPoint& mu, const QuotientPoint& nu) {
  if (mu.size() != nu.size()) throw Error("quotient points have different lengths");
  if (mu.size() < 2) throw Error("quotient points need at least two nodes");
}

double interpolate(const std::vector<Point>& pts, double x) {
  auto it = std::lower_bound(pts.begin(), pts.end(), x,
                             [](const Point& p, double value) { return p.x < value; });
  if (it == pts.begin()) return it->v;
  if (it == pts.end()) return pts.back().v;
  const Point& b = *it;
  const Point& a = *(it - 1);
  if (b.x == a.x) return std::max(a.v, b.v);
  return a.v + (b.v - a.v) * (x - a.x) / (b.x - a.x);
}

// Sliding max over a window of half-width L, then restriction to [−s, s].
std::vector<Point> slide_and_clip(const std::vector<Point>& pts, double L, double s) {
  std::size_t top = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].v > pts[top].v) top = i;
  std::vector<Point> wide;
  wide.reserve(pts.size() + 1);
  for (std::size_t i = 0; i <= top; ++i) wide.push_back({pts[i].x - L, pts[i].v});
  for (std::size_t i = top; i < pts.size(); ++i) wide.push_back({pts[i].x + L, pts[i].v});

  std::vector<Point> out;
  out.reserve(wide.size() + 2);
  out.push_back({-s, interpolate(wide, -s)});
  for (const auto& p : wide) {
    if (p.x > -s && p.x < s && p.x > out.back().x) out.push_back(p);
  }
  out.push_back({s, interpolate(wide, s)});
  return out;
}

}  // namespace

double d_x_at(const QuotientPoint& mu, const QuotientPoint& nu, double s) {
  check_pair(mu, nu);
  if (!(s >= 0.0 && s <= 1.0)) throw Error("budget split must lie in [0, 1]");
  if (s == 0.0) return 0.0;
  const std::size_t n = mu.size();
  const double L = (1.0 - s) / static_cast<double>(n - 1);
  const double c_last = mu[n - 1] - nu[n - 1];
  std::vector<Point> value{{-s, -c_last * s}, {s, c_last * s}};
  for (std::size_t j = n - 1; j-- > 0;) {
    value = slide_and_clip(value, L, s);
    const double c = mu[j] - nu[j];
    for (auto& p : value) p.v += c * p.x;
  }
  double best = value.front().v;
  for (const auto& p : value) best = std::max(best, p.v);
  return best;
}

double d_x(const QuotientPoint& mu, const QuotientPoint& nu) {
  check_pair(mu, nu);
  // the optimum is concave in s: it is the value of a linear objective over
  // slices of one convex polytope
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0, hi = 1.0;
  double a = hi - ratio * (hi - lo);
  double b = lo + ratio * (hi - lo);
  double fa = d_x_at(mu, nu, a);
  double fb = d_x_at(mu, nu, b);
  for (int iter = 0; iter < 100; ++iter) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = d_x_at(mu, nu, b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - ratio * (hi - lo);
      fa = d_x_at(mu, nu, a);
    }
  }
  return std::max({fa, fb, d_x_at(mu, nu, 0.5 * (lo + hi)), 0.0});
}

double d_x_bar(const QuotientPoint& mu, const QuotientPoint& nu) {
  check_pair(mu, nu);
  double acc = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) acc += std::abs(mu[j] - nu[j]);
  return acc;
}

double d_x_bar(const SpatialField& f, const SpatialField& g) {
  if (!(f.grid() == g.grid())) throw Error("fields live on different grids");
  if (!f.all_nonnegative() || !g.all_nonnegative()) throw Error("d_x_bar needs nonnegative fields");
  return d_x_bar(quotient(f), quotient(g));
}

double d_y(const SpatialField& f, const SpatialField& g, const MetricConfig& cfg) {
  cfg.validate();
  if (!(f.grid() == g.grid())) throw Error("fields live on different grids");
  if (!f.all_positive() || !g.all_positive()) throw Error("d_y needs strictly positive fields");
  const auto& grid = f.grid();
  const std::size_t n = f.size();
  std::vector<double> u(n);
  for (std::size_t j = 0; j < n; ++j) u[j] = std::log(f[j]) - std::log(g[j]);
  const double mean = integrate(grid, u);
  double sup = 0.0;
  for (auto& v : u) {
    v -= mean;
    sup = std::max(sup, std::abs(v));
  }
  double holder = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = grid.x(j) - grid.x(i);
      holder = std::max(holder, std::abs(u[i] - u[j]) / std::pow(dist, cfg.kappa));
    }
  }
  return sup + holder;
}

}  // namespace okpz
