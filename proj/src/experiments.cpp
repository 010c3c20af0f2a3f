#include "okpz/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "okpz/solver.hpp"

namespace okpz {

SyncMetric parse_sync_metric(const std::string& name) {
  if (name == "dx") return SyncMetric::dx;
  if (name == "dxbar") return SyncMetric::dxbar;
  if (name == "dy") return SyncMetric::dy;
  throw Error("unknown metric '" + name + "' (expected dx, dxbar or dy)");
}

std::vector<InitPair> default_init_pairs() {
  return {{InitialMeasure::delta(0.0), InitialMeasure::delta(1.0)},
          {InitialMeasure::delta(0.5), InitialMeasure::uniform()}};
}

ExpFit fit_exponential(std::span<const SyncRow> rows, double floor) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.mean > 10.0 * r.std_error && r.mean > floor) {
      xs.push_back(r.n);
      ys.push_back(std::log(r.mean));
    }
  }
  ExpFit fit;
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) return fit;
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.intercept = my - slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

namespace {

double pair_distance(const SpatialField& a, const SpatialField& b, const SyncConfig& cfg) {
  switch (cfg.metric) {
    case SyncMetric::dx:
      return d_x(quotient(a), quotient(b));
    case SyncMetric::dxbar:
      return d_x_bar(a, b);
    case SyncMetric::dy:
      return d_y(a, b, cfg.metric_cfg);
  }
  return 0.0;
}

NoisePlan plan_for(const SyncConfig& cfg, int s) {
  if (cfg.noise_off) return NoisePlan::none();
  return {cfg.seed + static_cast<std::uint64_t>(s), cfg.mollifier, false};
}

// All fields of one seed share each step's noise factors; the block holds one
// field per column.
std::vector<double> sync_one_seed(const GridSpec& grid, const BoundaryParams& params,
                                  std::span<const InitPair> pairs, const SyncConfig& cfg, int s) {
  const DiscreteGenerator gen(grid, params);
  const NoiseFactors noise(grid, plan_for(cfg, s));
  const std::size_t n = grid.nodes();
  const std::size_t cols = 2 * pairs.size();
  std::vector<double> block(n * cols);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto a = pairs[p].first.to_field(grid);
    const auto b = pairs[p].second.to_field(grid);
    for (std::size_t i = 0; i < n; ++i) {
      block[i * cols + 2 * p] = a[i];
      block[i * cols + 2 * p + 1] = b[i];
    }
  }
  const std::int64_t per_unit = grid.steps_in(1.0);
  std::vector<double> f(n);
  std::vector<double> out;
  for (int unit = 1; unit <= cfg.n_max; ++unit) {
    for (std::int64_t k = 0; k < per_unit; ++k) {
      noise.factors((unit - 1) * per_unit + k, f);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < cols; ++c) block[i * cols + c] *= f[i];
      gen.solve_columns(block.data(), cols, 0, cols);
    }
    // renormalize each column to unit integral
    for (std::size_t c = 0; c < cols; ++c) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += grid.weight(i) * block[i * cols + c];
      for (std::size_t i = 0; i < n; ++i) block[i * cols + c] /= mass;
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = block[i * cols + 2 * p];
        b[i] = block[i * cols + 2 * p + 1];
      }
      worst = std::max(worst, pair_distance(SpatialField(grid, std::move(a)),
                                            SpatialField(grid, std::move(b)), cfg));
    }
    out.push_back(worst);
  }
  return out;
}

}  // namespace

SyncResult synchronization(const GridSpec& grid, const BoundaryParams& params,
                           std::span<const InitPair> pairs, const SyncConfig& cfg) {
  if (pairs.empty()) throw Error("synchronization needs at least one initial pair");
  if (cfg.n_max < 1 || cfg.n_seeds < 1) throw Error("synchronization needs n_max, seeds >= 1");
  if (cfg.metric == SyncMetric::dy) cfg.metric_cfg.validate();
  SyncResult result;
  result.per_seed.assign(static_cast<std::size_t>(cfg.n_seeds), {});
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < cfg.n_seeds; ++s) {
    result.per_seed[static_cast<std::size_t>(s)] = sync_one_seed(grid, params, pairs, cfg, s);
  }
  for (int n = 1; n <= cfg.n_max; ++n) {
    SyncRow row;
    row.n = n;
    double sum = 0.0;
    for (const auto& seed_row : result.per_seed) {
      const double v = seed_row[static_cast<std::size_t>(n - 1)];
      sum += v;
      row.max = std::max(row.max, v);
    }
    const double k = cfg.n_seeds;
    row.mean = sum / k;
    if (cfg.n_seeds > 1) {
      double ss = 0.0;
      for (const auto& seed_row : result.per_seed) {
        const double d = seed_row[static_cast<std::size_t>(n - 1)] - row.mean;
        ss += d * d;
      }
      row.std_error = std::sqrt(ss / (k - 1.0) / k);
    }
    result.rows.push_back(row);
  }
  result.fit = fit_exponential(result.rows, cfg.fit_floor);
  return result;
}

double functional_cos(const QuotientPoint& p) {
  const double m = static_cast<double>(p.size() - 1);
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) acc += std::cos(std::numbers::pi * j / m) * p[j];
  return acc;
}

double functional_dx_uniform(const QuotientPoint& p) {
  return d_x(p, QuotientPoint::uniform(p.size()));
}

LongRun long_run(const GridSpec& grid, const BoundaryParams& params, const InitialMeasure& init,
                 int n_units, const NoisePlan& plan) {
  if (n_units < 2) throw Error("long run needs at least two unit times");
  LongRun run;
  auto z = init.to_field(grid);
  const double mass0 = z.integral();
  double log_mass = std::log(mass0);
  for (auto& v : z.values()) v /= mass0;
  double prev_log0 = 0.0;
  for (int n = 1; n <= n_units; ++n) {
    z = solve(grid, params, z, n - 1.0, static_cast<double>(n), plan);
    const double mass = z.integral();
    for (auto& v : z.values()) v /= mass;
    log_mass += std::log(mass);
    const double log0 = std::log(z[0]);
    if (n > 1) run.log_increments.push_back(std::log(mass) + log0 - prev_log0);
    prev_log0 = log0;
    run.samples.push_back(quotient(z));
  }
  run.log_rate = (log_mass + prev_log0) / n_units;
  return run;
}

BatchMean batch_mean(std::span<const double> series, int n_batches) {
  if (n_batches < 2 || series.size() < static_cast<std::size_t>(n_batches)) {
    throw Error("batch means need at least as many samples as batches");
  }
  const std::size_t len = series.size() / static_cast<std::size_t>(n_batches);
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += series[b * len + i];
    means.push_back(acc / static_cast<double>(len));
  }
  BatchMean out;
  out.batches = n_batches;
  double total = 0.0;
  for (double v : means) total += v;
  out.mean = total / n_batches;
  double ss = 0.0;
  for (double v : means) ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / (n_batches - 1.0) / n_batches);
  return out;
}

ErgodicResult ergodic_average(const LongRun& run, const QuotientFunctional& f, int burn_in,
                              int n_batches) {
  if (burn_in < 0 || static_cast<std::size_t>(burn_in) >= run.samples.size()) {
    throw Error("burn-in leaves no samples");
  }
  std::vector<double> values;
  for (std::size_t k = static_cast<std::size_t>(burn_in); k < run.samples.size(); ++k)
    values.push_back(f(run.samples[k]));
  ErgodicResult out;
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    acc += values[k];
    out.running.push_back(acc / static_cast<double>(k + 1));
  }
  out.summary = batch_mean(values, n_batches);
  return out;
}

GrowthResult growth_rate(const LongRun& run, int burn_in, int n_batches) {
  if (burn_in < 0 || static_cast<std::size_t>(burn_in) >= run.log_increments.size()) {
    throw Error("burn-in leaves no increments");
  }
  GrowthResult out;
  out.rate = run.log_rate;
  out.increments = batch_mean(
      std::span<const double>(run.log_increments).subspan(static_cast<std::size_t>(burn_in)),
      n_batches);
  return out;
}

GrowthResult growth_rate(const GridSpec& grid, const BoundaryParams& params,
                         const InitialMeasure& init, int n_units, const NoisePlan& plan,
                         int burn_in) {
  if (n_units < 50) throw Error("growth rate needs at least 50 unit times");
  return growth_rate(long_run(grid, params, init, n_units, plan), burn_in);
}

std::vector<TiltRow> tilt_support_experiment(const GridSpec& grid, const BoundaryParams& params,
                                             std::span<const double> phi0,
                                             std::span<const int> n_list, int n_seeds,
                                             std::uint64_t seed, const InitialMeasure& init) {
  if (phi0.size() != grid.nodes()) throw Error("phi0 has the wrong length");
  if (n_list.empty() || n_seeds < 1) throw Error("tilt experiment needs n values and seeds");
  std::vector<int> ns(n_list.begin(), n_list.end());
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (ns[k] < 1 || (k > 0 && ns[k] <= ns[k - 1])) {
      throw Error("tilt n values must be positive and increasing");
    }
    grid.steps_in(1.0 / ns[k]);
  }
  double sup = 0.0;
  for (double v : phi0) sup = std::max(sup, std::abs(v));
  std::vector<double> dist(static_cast<std::size_t>(n_seeds) * ns.size());

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_seeds; ++s) {
    const NoisePlan plan = NoisePlan::white(seed + static_cast<std::uint64_t>(s));
    std::vector<SpatialField> snaps;
    auto z = init.to_field(grid);
    double t = 0.0;
    for (int n : ns) {
      const double tau = 1.0 - 1.0 / n;
      if (tau > t) {
        z = solve(grid, params, z, t, tau, plan);
        t = tau;
      }
      snaps.push_back(z);
    }
    const auto z1 = solve(grid, params, z, t, 1.0, plan);
    std::vector<double> target(grid.nodes());
    for (std::size_t j = 0; j < target.size(); ++j) target[j] = z1[j] * std::exp(phi0[j]);
    const auto target_q = quotient(SpatialField(grid, std::move(target)));
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const int n = ns[k];
      const double tau = 1.0 - 1.0 / n;
      const auto drift = DriftField::bounded(
          [&grid, phi0, n](double, double x) { return n * phi0[grid.nearest_node(x)]; },
          n * sup);
      const auto zh = tau > 0.0 ? solve(grid, params, snaps[k], tau, 1.0, plan, &drift)
                                : solve(grid, params, snaps[k], 0.0, 1.0, plan, &drift);
      dist[static_cast<std::size_t>(s) * ns.size() + k] = d_x(quotient(zh), target_q);
    }
  }

  std::vector<TiltRow> rows;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    TiltRow row;
    row.n = ns[k];
    double sum = 0.0;
    for (int s = 0; s < n_seeds; ++s) sum += dist[static_cast<std::size_t>(s) * ns.size() + k];
    row.mean = sum / n_seeds;
    if (n_seeds > 1) {
      double ss = 0.0;
      for (int s = 0; s < n_seeds; ++s) {
        const double d = dist[static_cast<std::size_t>(s) * ns.size() + k] - row.mean;
        ss += d * d;
      }
      row.std_error = std::sqrt(ss / (n_seeds - 1.0) / n_seeds);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace okpz
