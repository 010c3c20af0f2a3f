#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "okpz/domain.hpp"
#include "okpz/metrics.hpp"

namespace okpz {

enum class SyncMetric { dx, dxbar, dy };

SyncMetric parse_sync_metric(const std::string& name);

struct InitPair {
  InitialMeasure first;
  InitialMeasure second;
};

/// The witness pairs (δ_0, δ_1) and (δ_{1/2}, uniform).
std::vector<InitPair> default_init_pairs();

struct SyncConfig {
  int n_max = 12;
  int n_seeds = 200;
  std::uint64_t seed = 1;
  SyncMetric metric = SyncMetric::dx;
  MetricConfig metric_cfg;
  bool noise_off = false;
  std::optional<MollifierSpec> mollifier;
  /// Means below this are treated as numerically zero and left out of the fit.
  double fit_floor = 1e-11;
};

struct SyncRow {
  int n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double max = 0.0;
};

struct ExpFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

struct SyncResult {
  std::vector<SyncRow> rows;
  ExpFit fit;
  /// per_seed[s][n−1]: max over pairs of the distance at time n for seed s.
  std::vector<std::vector<double>> per_seed;
};

/// Least-squares fit of log(mean) = intercept − rate·n over rows with
/// mean > 10·stderr and mean > floor.
ExpFit fit_exponential(std::span<const SyncRow> rows, double floor);

/// Shared-noise pairs evolved forward n_max unit times; the distance of each
/// pair is recorded at every integer time. Seeds run in parallel; aggregation
/// is in seed order.
SyncResult synchronization(const GridSpec& grid, const BoundaryParams& params,
                           std::span<const InitPair> pairs, const SyncConfig& cfg);

using QuotientFunctional = std::function<double(const QuotientPoint&)>;

/// Σ_j cos(πx_j) p_j.
double functional_cos(const QuotientPoint& p);
/// d_x(p, uniform).
double functional_dx_uniform(const QuotientPoint& p);

/// One long trajectory sampled at unit times, renormalized each unit.
struct LongRun {
  /// quotient of z(n, ·) for n = 1..n_units
  std::vector<QuotientPoint> samples;
  /// log z(n+1, 0) − log z(n, 0) for n = 1..n_units−1
  std::vector<double> log_increments;
  /// (1/N)·log z(N, 0) including the first unit
  double log_rate = 0.0;
};

LongRun long_run(const GridSpec& grid, const BoundaryParams& params, const InitialMeasure& init,
                 int n_units, const NoisePlan& plan);

/// Mean and batch-means standard error of a series.
struct BatchMean {
  double mean = 0.0;
  double std_error = 0.0;
  int batches = 0;
};

BatchMean batch_mean(std::span<const double> series, int n_batches = 20);

struct ErgodicResult {
  /// running[k]: average of F over the first k+1 post-burn-in samples
  std::vector<double> running;
  BatchMean summary;
};

ErgodicResult ergodic_average(const LongRun& run, const QuotientFunctional& f, int burn_in = 10,
                              int n_batches = 20);

struct GrowthResult {
  /// (1/N)·log z(N, 0) over the whole run
  double rate = 0.0;
  /// post-burn-in increments
  BatchMean increments;
};

GrowthResult growth_rate(const LongRun& run, int burn_in = 10, int n_batches = 20);
GrowthResult growth_rate(const GridSpec& grid, const BoundaryParams& params,
                         const InitialMeasure& init, int n_units, const NoisePlan& plan,
                         int burn_in = 10);

struct TiltRow {
  int n = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

/// For each n: mean over seeds of d_x([z^{h_n}(1,·)], [z⁰(1,·)·e^{φ₀}]) with
/// h_n(t,x) = n·1{t ≥ 1 − 1/n}·φ₀(x).
std::vector<TiltRow> tilt_support_experiment(const GridSpec& grid, const BoundaryParams& params,
                                             std::span<const double> phi0,
                                             std::span<const int> n_list, int n_seeds,
                                             std::uint64_t seed,
                                             const InitialMeasure& init = InitialMeasure::uniform());

}  // namespace okpz
