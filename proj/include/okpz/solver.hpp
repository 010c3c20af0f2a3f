#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "okpz/domain.hpp"

namespace okpz {

/// Robin Laplacian on the node grid with ghost-node boundary rows, together
/// with a factorization of the implicit operator I − dt·D.
///
/// Rows: interior (1, −2, 1)/dx²; row 0 (−2 − 2dx·A, 2)/dx²; row m
/// (2, −2 + 2dx·B)/dx². W·D is symmetric for the trapezoid weights W.
class DiscreteGenerator {
 public:
  DiscreteGenerator(const GridSpec& grid, const BoundaryParams& params);

  const GridSpec& grid() const { return grid_; }
  const BoundaryParams& params() const { return params_; }

  /// Tridiagonal bands of D (sub[0] and super[m] are unused zeros).
  std::span<const double> sub() const { return sub_; }
  std::span<const double> diag() const { return diag_; }
  std::span<const double> super() const { return super_; }

  std::vector<double> apply(std::span<const double> z) const;
  /// Dense row-major D, for tests.
  std::vector<double> dense() const;

  /// Whether I − dt·D has positive diagonal, nonpositive off-diagonals and
  /// strict row dominance.
  bool is_m_matrix() const;

  /// Overwrites rhs with (I − dt·D)^{-1} rhs.
  void solve_in_place(std::span<double> rhs) const;
  /// Same for the columns [c0, c1) of a row-major (m+1) × cols block.
  void solve_columns(double* block, std::size_t cols, std::size_t c0, std::size_t c1) const;

 private:
  GridSpec grid_;
  BoundaryParams params_;
  std::vector<double> sub_, diag_, super_;
  // Thomas factors of I − dt·D
  std::vector<double> lower_, inv_pivot_, upper_ratio_;
};

/// Bounded space-time drift h(t, x) added to the equation as z·h.
struct DriftField {
  std::function<double(double t, double x)> h;
  double sup_norm = 0.0;

  static DriftField constant(double c);
  /// h given by a function with a declared bound (checked on evaluation).
  static DriftField bounded(std::function<double(double, double)> h, double sup_norm);
};

/// Per-step multiplicative factors exp(√(dt/w_j)·η_j − dt·σ²/(2w_j)), all ones
/// when the plan is off.
class NoiseFactors {
 public:
  NoiseFactors(const GridSpec& grid, NoisePlan plan);

  const GridSpec& grid() const { return grid_; }
  const NoiseSource& source() const { return source_; }
  void factors(std::int64_t step_index, std::span<double> out) const;

 private:
  GridSpec grid_;
  NoiseSource source_;
  std::vector<double> scale_;
  std::vector<double> shift_;
};

/// One scheme step: (I − dt·D)^{-1}(z ⊙ exp(√(dt/w)·η − dt·σ²/(2w))).
SpatialField step(const SpatialField& field, std::span<const double> noise_slice,
                  const DiscreteGenerator& gen, double noise_variance = 1.0);
/// Noise-off step: (I − dt·D)^{-1} z.
SpatialField heat_step(const SpatialField& field, const DiscreteGenerator& gen);

/// Evolves the measure from t0 to t1 (both on the dt lattice, t0 ≥ 0). The
/// noise slice of each step is the one of its global step index, so runs over
/// adjacent intervals see the same noise as one run over their union.
SpatialField solve(const GridSpec& grid, const BoundaryParams& params,
                   const InitialMeasure& init, double t0, double t1, const NoisePlan& plan,
                   const DriftField* drift = nullptr);
SpatialField solve(const GridSpec& grid, const BoundaryParams& params,
                   const SpatialField& init, double t0, double t1, const NoisePlan& plan,
                   const DriftField* drift = nullptr);

/// Discrete z_{s,t}: Z(i,j) is the value at node i and time t of the solution
/// started from e_j/w_j at time s. Stored row-major.
struct Propagator {
  GridSpec grid;
  BoundaryParams params;
  double s = 0.0;
  double t = 0.0;
  std::vector<double> z;

  std::size_t nodes() const { return grid.nodes(); }
  double operator()(std::size_t i, std::size_t j) const { return z[i * grid.nodes() + j]; }

  /// Applies to a field: (Z·W·f)_i, i.e. the solution at t from f at s.
  std::vector<double> apply(std::span<const double> f) const;
  double min_entry() const;
};

/// Columns are processed in parallel blocks; the result is bit-identical to
/// propagator_serial.
Propagator propagator(const GridSpec& grid, const BoundaryParams& params, double s, double t,
                      const NoisePlan& plan);
Propagator propagator_serial(const GridSpec& grid, const BoundaryParams& params, double s,
                             double t, const NoisePlan& plan);

/// later ∘ earlier = later·W·earlier; requires earlier.t == later.s.
Propagator compose(const Propagator& later, const Propagator& earlier);

/// Consecutive propagators over [s, s+1], [s+1, s+2], ..., count of them.
std::vector<Propagator> unit_propagators(const GridSpec& grid, const BoundaryParams& params,
                                         double s, int count, const NoisePlan& plan);

/// Binary format: "OKPZPROP", m (u64), s, t (f64), then row-major f64 entries.
void write_propagator(std::ostream& out, const Propagator& p);
Propagator read_propagator(std::istream& in, const BoundaryParams& params, double dt);

struct MomentRow {
  double t = 0.0;
  double second_moment = 0.0;  // E[z(t,x)²]
  double second_moment_stderr = 0.0;
  double inverse_min_moment = 0.0;  // E[min_y z(t,y)^{-2}]
  double max_square_moment = 0.0;   // E[max_y z(t,y)²]
  double min_value = 0.0;           // smallest entry seen over all samples
};

struct MomentTable {
  std::vector<MomentRow> rows;
  /// C = t₀·E[z(t₀,x)²] at the smallest t.
  double fitted_c = 0.0;
  /// Whether t·E[z(t,x)²] ≤ C + 3·t·stderr at every larger t.
  bool bound_holds = false;
};

/// Moments of the solution from δ_x over n_samples white-noise seeds.
MomentTable moment_probe(const GridSpec& grid, const BoundaryParams& params,
                         std::span<const double> t_list, double x, int n_samples,
                         std::uint64_t seed, bool noise_off = false);

}  // namespace okpz
