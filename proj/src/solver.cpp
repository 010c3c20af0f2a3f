#include "okpz/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace okpz {

DiscreteGenerator::DiscreteGenerator(const GridSpec& grid, const BoundaryParams& params)
    : grid_(grid), params_(params) {
  params.validate();
  const std::size_t n = grid.nodes();
  const double dx = grid.dx();
  const double inv = 1.0 / (dx * dx);
  sub_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  super_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    sub_[i] = inv;
    diag_[i] = -2.0 * inv;
    super_[i] = inv;
  }
  diag_[0] = (-2.0 - 2.0 * dx * params.a) * inv;
  super_[0] = 2.0 * inv;
  sub_[n - 1] = 2.0 * inv;
  diag_[n - 1] = (-2.0 + 2.0 * dx * params.b) * inv;

  if (!is_m_matrix()) {
    std::ostringstream msg;
    msg << "I - dt*D is not an M-matrix for m = " << grid.m() << ", dt = " << grid.dt()
        << ", A = " << params.a << ", B = " << params.b;
    throw Error(msg.str());
  }

  const double dt = grid.dt();
  lower_.assign(n, 0.0);
  inv_pivot_.assign(n, 0.0);
  upper_ratio_.assign(n, 0.0);
  double prev_ratio = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i > 0 ? -dt * sub_[i] : 0.0;
    const double b = 1.0 - dt * diag_[i];
    const double c = i + 1 < n ? -dt * super_[i] : 0.0;
    const double pivot = b - a * prev_ratio;
    lower_[i] = a;
    inv_pivot_[i] = 1.0 / pivot;
    upper_ratio_[i] = c / pivot;
    prev_ratio = upper_ratio_[i];
  }
}

bool DiscreteGenerator::is_m_matrix() const {
  const double dt = grid_.dt();
  const std::size_t n = grid_.nodes();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -dt * sub_[i];
    const double b = 1.0 - dt * diag_[i];
    const double c = -dt * super_[i];
    if (!(b > 0.0) || a > 0.0 || c > 0.0 || !(b > std::abs(a) + std::abs(c))) return false;
  }
  return true;
}

std::vector<double> DiscreteGenerator::apply(std::span<const double> z) const {
  const std::size_t n = grid_.nodes();
  if (z.size() != n) throw Error("generator applied to a vector of the wrong length");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag_[i] * z[i];
    if (i > 0) v += sub_[i] * z[i - 1];
    if (i + 1 < n) v += super_[i] * z[i + 1];
    out[i] = v;
  }
  return out;
}

std::vector<double> DiscreteGenerator::dense() const {
  const std::size_t n = grid_.nodes();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i * n + i] = diag_[i];
    if (i > 0) out[i * n + i - 1] = sub_[i];
    if (i + 1 < n) out[i * n + i + 1] = super_[i];
  }
  return out;
}

void DiscreteGenerator::solve_in_place(std::span<double> rhs) const {
  const std::size_t n = grid_.nodes();
  if (rhs.size() != n) throw Error("tridiagonal solve on a vector of the wrong length");
  rhs[0] = rhs[0] * inv_pivot_[0];
  for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inv_pivot_[i];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = rhs[i] - upper_ratio_[i] * rhs[i + 1];
}

void DiscreteGenerator::solve_columns(double* block, std::size_t cols, std::size_t c0,
                                      std::size_t c1) const {
  const std::size_t n = grid_.nodes();
  {
    double* row = block;
    const double p = inv_pivot_[0];
    for (std::size_t c = c0; c < c1; ++c) row[c] = row[c] * p;
  }
  for (std::size_t i = 1; i < n; ++i) {
    double* row = block + i * cols;
    const double* prev = row - cols;
    const double l = lower_[i];
    const double p = inv_pivot_[i];
    for (std::size_t c = c0; c < c1; ++c) row[c] = (row[c] - l * prev[c]) * p;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    double* row = block + i * cols;
    const double* next = row + cols;
    const double u = upper_ratio_[i];
    for (std::size_t c = c0; c < c1; ++c) row[c] = row[c] - u * next[c];
  }
}

DriftField DriftField::constant(double c) {
  if (!std::isfinite(c)) throw Error("drift must be finite");
  return {[c](double, double) { return c; }, std::abs(c)};
}

DriftField DriftField::bounded(std::function<double(double, double)> h, double sup_norm) {
  if (!h) throw Error("drift function is empty");
  if (!(sup_norm >= 0.0) || !std::isfinite(sup_norm)) throw Error("drift bound must be finite");
  return {std::move(h), sup_norm};
}

NoiseFactors::NoiseFactors(const GridSpec& grid, NoisePlan plan)
    : grid_(grid), source_(std::move(plan), grid) {
  const std::size_t n = grid.nodes();
  scale_.resize(n);
  shift_.resize(n);
  const double var = source_.variance();
  for (std::size_t j = 0; j < n; ++j) {
    const double w = grid.weight(j);
    scale_[j] = std::sqrt(grid.dt() / w);
    shift_[j] = grid.dt() * var / (2.0 * w);
  }
}

void NoiseFactors::factors(std::int64_t step_index, std::span<double> out) const {
  if (source_.plan().off) {
    std::fill(out.begin(), out.end(), 1.0);
    return;
  }
  source_.slice(step_index, out);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::exp(scale_[j] * out[j] - shift_[j]);
}

namespace {

void check_positive(const SpatialField& field) {
  if (!field.all_nonnegative()) throw Error("solver input must be nonnegative");
}

void apply_drift(std::span<double> z, const GridSpec& grid, const DriftField& drift, double t) {
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double h = drift.h(t, grid.x(j));
    if (!std::isfinite(h) || std::abs(h) > drift.sup_norm * (1.0 + 1e-12) + 1e-300) {
      throw Error("drift exceeds its declared bound");
    }
    z[j] *= std::exp(grid.dt() * h);
  }
}

}  // namespace

SpatialField step(const SpatialField& field, std::span<const double> noise_slice,
                  const DiscreteGenerator& gen, double noise_variance) {
  check_positive(field);
  const auto& grid = gen.grid();
  if (!(field.grid() == grid)) throw Error("field and generator grids differ");
  if (noise_slice.size() != grid.nodes()) throw Error("noise slice must have m+1 entries");
  std::vector<double> z(field.values().begin(), field.values().end());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double w = grid.weight(j);
    z[j] *= std::exp(std::sqrt(grid.dt() / w) * noise_slice[j] -
                     grid.dt() * noise_variance / (2.0 * w));
  }
  gen.solve_in_place(z);
  return SpatialField(grid, std::move(z));
}

SpatialField heat_step(const SpatialField& field, const DiscreteGenerator& gen) {
  check_positive(field);
  std::vector<double> z(field.values().begin(), field.values().end());
  gen.solve_in_place(z);
  return SpatialField(gen.grid(), std::move(z));
}

SpatialField solve(const GridSpec& grid, const BoundaryParams& params, const SpatialField& init,
                   double t0, double t1, const NoisePlan& plan, const DriftField* drift) {
  if (!(t1 > t0)) throw Error("solve needs t1 > t0");
  if (!(init.grid() == grid)) throw Error("initial field lives on a different grid");
  check_positive(init);
  const std::int64_t first = grid.step_index(t0);
  const std::int64_t count = grid.steps_in(t1 - t0);
  const DiscreteGenerator gen(grid, params);
  const NoiseFactors noise(grid, plan);
  std::vector<double> z(init.values().begin(), init.values().end());
  std::vector<double> f(grid.nodes());
  for (std::int64_t k = 0; k < count; ++k) {
    noise.factors(first + k, f);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] *= f[j];
    if (drift) apply_drift(z, grid, *drift, static_cast<double>(first + k) * grid.dt());
    gen.solve_in_place(z);
  }
  return SpatialField(grid, std::move(z));
}

SpatialField solve(const GridSpec& grid, const BoundaryParams& params,
                   const InitialMeasure& init, double t0, double t1, const NoisePlan& plan,
                   const DriftField* drift) {
  return solve(grid, params, init.to_field(grid), t0, t1, plan, drift);
}

MomentTable moment_probe(const GridSpec& grid, const BoundaryParams& params,
                         std::span<const double> t_list, double x, int n_samples,
                         std::uint64_t seed, bool noise_off) {
  if (t_list.empty() || n_samples < 2) throw Error("moment probe needs times and samples");
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    if (!(t_list[k] > 0.0) || (k > 0 && !(t_list[k] > t_list[k - 1]))) {
      throw Error("moment probe times must be positive and increasing");
    }
  }
  const std::size_t n_t = t_list.size();
  const std::size_t node = grid.nearest_node(x);
  // per sample, per time: z(t,x)², min^{-2}, max², min
  std::vector<double> vals(static_cast<std::size_t>(n_samples) * n_t * 4);
  const auto init = InitialMeasure::delta(x).to_field(grid);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_samples; ++s) {
    const NoisePlan plan = noise_off ? NoisePlan::none() : NoisePlan::white(seed + s);
    SpatialField z = init;
    double t_prev = 0.0;
    for (std::size_t k = 0; k < n_t; ++k) {
      z = solve(grid, params, z, t_prev, t_list[k], plan);
      t_prev = t_list[k];
      const auto v = z.values();
      const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      double* out = &vals[(static_cast<std::size_t>(s) * n_t + k) * 4];
      out[0] = v[node] * v[node];
      out[1] = 1.0 / (*mn * *mn);
      out[2] = *mx * *mx;
      out[3] = *mn;
    }
  }
  MomentTable table;
  for (std::size_t k = 0; k < n_t; ++k) {
    MomentRow row;
    row.t = t_list[k];
    row.min_value = std::numeric_limits<double>::infinity();
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const double* v = &vals[(static_cast<std::size_t>(s) * n_t + k) * 4];
      sum += v[0];
      sum2 += v[0] * v[0];
      row.inverse_min_moment += v[1];
      row.max_square_moment += v[2];
      row.min_value = std::min(row.min_value, v[3]);
    }
    const double n = n_samples;
    row.second_moment = sum / n;
    row.second_moment_stderr =
        std::sqrt(std::max(0.0, sum2 / n - row.second_moment * row.second_moment) / (n - 1.0));
    row.inverse_min_moment /= n;
    row.max_square_moment /= n;
    table.rows.push_back(row);
  }
  table.fitted_c = table.rows[0].t * table.rows[0].second_moment;
  table.bound_holds = true;
  for (const auto& row : table.rows) {
    if (row.t * row.second_moment > table.fitted_c + 3.0 * row.t * row.second_moment_stderr) {
      table.bound_holds = false;
    }
  }
  return table;
}

}  // namespace okpz
