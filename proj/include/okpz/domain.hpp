#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace okpz {

/// All recoverable failures (bad parameters, violated preconditions) surface
/// as this exception; the CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Robin parameters: ∂z(t,0) = a·z(t,0), ∂z(t,1) = b·z(t,1).
struct BoundaryParams {
  double a = 0.0;
  double b = 0.0;

  /// Throws on non-finite values (the Dirichlet limits are not supported).
  void validate() const;
  /// Boundary slopes of the KPZ height h = log z.
  double kpz_left() const { return a + 0.5; }
  double kpz_right() const { return b - 0.5; }
};

/// Uniform node grid x_j = j/m, j = 0..m, plus the time step.
///
/// Node weights are the trapezoid weights (dx inside, dx/2 at both ends); every
/// spatial integral in the library is taken against them.
class GridSpec {
 public:
  GridSpec(int m, double dt, double t_horizon, const BoundaryParams& params);

  int m() const { return m_; }
  std::size_t nodes() const { return static_cast<std::size_t>(m_) + 1; }
  double dx() const { return 1.0 / m_; }
  double dt() const { return dt_; }
  double t_horizon() const { return t_horizon_; }
  double x(std::size_t j) const { return static_cast<double>(j) / m_; }
  double weight(std::size_t j) const {
    return (j == 0 || j == static_cast<std::size_t>(m_)) ? 0.5 / m_ : 1.0 / m_;
  }
  std::vector<double> weights() const;

  /// Nearest node to x ∈ [0,1], ties toward the lower index.
  std::size_t nearest_node(double x) const;
  /// Number of dt steps in a duration; throws unless it is an integer.
  std::int64_t steps_in(double duration) const;
  /// Index of the step starting at time t (t must lie on the lattice).
  std::int64_t step_index(double t) const;

  /// Largest dt that keeps (I − dt·D) an M-matrix under the library's bound.
  static double max_dt(int m, const BoundaryParams& params);

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int m_;
  double dt_;
  double t_horizon_;
};

/// Trapezoid integral of node values.
double integrate(const GridSpec& grid, std::span<const double> values);

/// Node-sampled profile on a grid.
class SpatialField {
 public:
  SpatialField(GridSpec grid, std::vector<double> values);
  static SpatialField constant(const GridSpec& grid, double value);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }
  std::size_t size() const { return values_.size(); }

  bool all_positive() const;
  bool all_nonnegative() const;
  double integral() const { return integrate(grid_, values_); }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

struct Atom {
  double x = 0.0;
  double mass = 1.0;
};

/// Finite nonnegative measure: atoms plus an optional node density.
struct InitialMeasure {
  std::vector<Atom> atoms;
  std::optional<std::vector<double>> density;

  static InitialMeasure delta(double x, double mass = 1.0);
  static InitialMeasure uniform();
  static InitialMeasure from_density(std::vector<double> density);

  /// "delta:<x>", "uniform", or "file:<path>" (field CSV with header x,value).
  static InitialMeasure parse(const std::string& spec);

  void validate(const GridSpec& grid) const;
  double total_mass(const GridSpec& grid) const;
  /// Node representation: atoms become e_j / w_j at their nearest node.
  SpatialField to_field(const GridSpec& grid) const;
};

enum class MollifierKind { fejer, gaussian_periodic };

/// Periodic spatial smoothing of the noise. For `fejer` the bandwidth is the
/// Fourier cutoff K (multipliers 1 − |k|/(K+1)); for `gaussian_periodic` it is
/// the kernel width in units of [0,1].
struct MollifierSpec {
  MollifierKind kind = MollifierKind::fejer;
  double bandwidth = 1.0;

  void validate() const;
};

struct NoisePlan {
  std::uint64_t seed = 0;
  std::optional<MollifierSpec> mollifier;
  /// Deterministic mode: every noise exponent is zero.
  bool off = false;

  static NoisePlan white(std::uint64_t seed) { return {seed, std::nullopt, false}; }
  static NoisePlan none() { return {0, std::nullopt, true}; }
};

/// A point of the quotient space: node masses summing to one.
class QuotientPoint {
 public:
  explicit QuotientPoint(std::vector<double> p);

  /// Lebesgue measure on [0,1] on an n-node grid (the trapezoid masses).
  static QuotientPoint uniform(std::size_t nodes);

  std::span<const double> p() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t j) const { return p_[j]; }

 private:
  std::vector<double> p_;
};

QuotientPoint quotient(const InitialMeasure& mu, const GridSpec& grid);
QuotientPoint quotient(const SpatialField& field);

/// Counter-based noise slices for one plan on one grid. Stateless after
/// construction; `slice` may be called concurrently for different steps.
class NoiseSource {
 public:
  NoiseSource(NoisePlan plan, const GridSpec& grid);

  const NoisePlan& plan() const { return plan_; }
  /// Writes the slice for `step_index` into out (size m+1).
  void slice(std::int64_t step_index, std::span<double> out) const;
  std::vector<double> slice(std::int64_t step_index) const;
  /// Per-node variance of a slice: 1 for white noise, (φ∗φ)(0) mollified.
  double variance() const { return variance_; }
  std::span<const double> mollifier_weights() const { return weights_; }

 private:
  NoisePlan plan_;
  std::size_t nodes_;
  std::vector<double> weights_;
  double variance_ = 1.0;
};

std::vector<double> make_noise_slice(const NoisePlan& plan, std::int64_t step_index,
                                     const GridSpec& grid);

}  // namespace okpz
