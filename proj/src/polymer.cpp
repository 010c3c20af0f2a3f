#include "okpz/polymer.hpp"

#include <omp.h>

#include <cmath>

#include "okpz/rng.hpp"

namespace okpz {

std::vector<Propagator> step_propagators(const GridSpec& grid, const BoundaryParams& params,
                                         double s, double t, const NoisePlan& plan) {
  if (!(t > s)) throw Error("step propagators need s < t");
  const DiscreteGenerator gen(grid, params);
  const NoiseFactors noise(grid, plan);
  const std::size_t n = grid.nodes();
  // dense (I − dt·D)^{-1} with columns scaled by 1/w_j
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) inv[j * n + j] = 1.0 / grid.weight(j);
  gen.solve_columns(inv.data(), n, 0, n);

  const std::int64_t first = grid.step_index(s);
  const std::int64_t count = grid.steps_in(t - s);
  std::vector<Propagator> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<double> f(n);
  for (std::int64_t k = 0; k < count; ++k) {
    noise.factors(first + k, f);
    Propagator p{grid, params, (first + k) * grid.dt(), (first + k + 1) * grid.dt(), inv};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p.z[i * n + j] *= f[j];
    out.push_back(std::move(p));
  }
  return out;
}

PolymerSampler::PolymerSampler(std::span<const Propagator> props, std::span<const double> f)
    : props_(props) {
  if (props.empty()) throw Error("polymer needs at least one propagator");
  const std::size_t n = props[0].nodes();
  if (f.size() != n) throw Error("polymer weight has the wrong length");
  for (double v : f)
    if (!(v > 0.0)) throw Error("polymer weight must be strictly positive");
  z_.emplace_back(f.begin(), f.end());
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (k > 0 && std::abs(props[k].s - props[k - 1].t) > 1e-9) {
      throw Error("polymer propagators are not consecutive");
    }
    z_.push_back(props[k].apply(z_.back()));
  }
}

PolymerPath PolymerSampler::sample(std::size_t x_node, std::uint64_t seed,
                                   std::uint64_t index) const {
  const std::size_t K = props_.size();
  const std::size_t n = props_[0].nodes();
  if (x_node >= n) throw Error("polymer endpoint is not a grid node");
  CounterStream rng(seed, index, StreamTag::polymer);
  PolymerPath path;
  const double t_end = props_.back().t;
  std::size_t i = x_node;
  path.times.push_back(0.0);
  path.nodes.push_back(i);
  path.positions.push_back(props_[0].grid.x(i));
  for (std::size_t k = K; k-- > 0;) {
    const Propagator& p = props_[k];
    const auto& zk = z_[k];
    const double target = rng.uniform() * z_[k + 1][i];
    double acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < n; ++j) {
      acc += p(i, j) * p.grid.weight(j) * zk[j];
      if (target <= acc) break;
    }
    i = j;
    path.times.push_back(t_end - p.s);
    path.nodes.push_back(i);
    path.positions.push_back(p.grid.x(i));
  }
  return path;
}

std::vector<double> PolymerSampler::exact_marginal(std::size_t x_node, std::size_t k) const {
  const std::size_t K = props_.size();
  const std::size_t n = props_[0].nodes();
  if (k > K) throw Error("mesh index out of range");
  const auto& grid = props_[0].grid;
  // r(j) = z_{t_k, t}(j → x)
  std::vector<double> r(n, 0.0);
  r[x_node] = 1.0 / grid.weight(x_node);
  for (std::size_t step = K; step-- > k;) {
    const Propagator& p = props_[step];
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = r[i] * grid.weight(i);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) next[j] += a * p(i, j);
    }
    r = std::move(next);
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = r[j] * grid.weight(j) * z_[k][j] / z_[K][x_node];
  return out;
}

PolymerPath sample_polymer(std::span<const Propagator> props, std::size_t x_node,
                           std::span<const double> f, std::uint64_t seed, std::uint64_t index) {
  return PolymerSampler(props, f).sample(x_node, seed, index);
}

TiltResult tilt_expectation(const GridSpec& grid, const BoundaryParams& params,
                            const NoisePlan& plan, double t, double x, const SpatialField& f,
                            const DriftField& h, std::int64_t n_paths, std::uint64_t seed) {
  if (n_paths < 2) throw Error("tilt estimate needs at least two paths");
  if (!f.all_positive()) throw Error("polymer weight must be strictly positive");
  const std::size_t node = grid.nearest_node(x);
  const auto z0 = solve(grid, params, f, 0.0, t, plan);
  const auto zh = solve(grid, params, f, 0.0, t, plan, &h);

  const auto props = step_propagators(grid, params, 0.0, t, plan);
  const PolymerSampler sampler(props, f.values());
  const std::size_t K = props.size();
  const std::size_t n = grid.nodes();
  // drift table h(t_k, x_j) at the step start times
  std::vector<double> table(K * n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < n; ++j) table[k * n + j] = h.h(props[k].s, grid.x(j));

  std::vector<double> values(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n_paths; ++r) {
    const auto path = sampler.sample(node, seed, static_cast<std::uint64_t>(r));
    // path.nodes[K − k] sits at physical time t_k
    double integral = 0.0;
    for (std::size_t k = 0; k < K; ++k) integral += grid.dt() * table[k * n + path.nodes[K - k]];
    values[static_cast<std::size_t>(r)] = std::exp(integral);
  }

  TiltResult out;
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    out.v_max = std::max(out.v_max, v);
  }
  const double mean = sum / static_cast<double>(n_paths);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  out.v_mc = mean;
  out.std_error = std::sqrt(ss / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths));
  out.v_exact = zh[node] / z0[node];
  return out;
}

}  // namespace okpz
