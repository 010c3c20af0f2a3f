#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "okpz/domain.hpp"

namespace okpz {

/// Spectral data of −φ'' = λφ, φ'(0) = Aφ(0), φ'(1) = Bφ(1).
///
/// Mode k is stored as (λ_k, c_k) with φ_k = c_k·y(·; λ_k), where y is the
/// shooting solution y(0) = 1, y'(0) = A. Eigenvalues are located by bisection
/// on the exact eigenvalue-counting function obtained from the Prüfer angle,
/// so no root is skipped on either the oscillatory or the hyperbolic branch.
class EigenSystem {
 public:
  struct Mode {
    double lambda;
    double scale;
  };

  static EigenSystem compute(const BoundaryParams& params, int n_modes);

  const BoundaryParams& params() const { return params_; }
  std::span<const Mode> modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  double lambda(std::size_t k) const { return modes_[k].lambda; }

  double phi(std::size_t k, double x) const;
  double dphi(std::size_t k, double x) const;
  /// φ_k sampled at the nodes of an m-cell grid.
  std::vector<double> sample(std::size_t k, int m) const;

  /// Number of eigenvalues strictly below λ.
  static int count_below(const BoundaryParams& params, double lambda);

 private:
  BoundaryParams params_;
  std::vector<Mode> modes_;
};

/// Shooting solution y(x; λ) with y(0) = 1, y'(0) = a, and its derivative.
double shoot(double a, double lambda, double x);
double shoot_derivative(double a, double lambda, double x);

/// Σ_k e^{−λ_k t} φ_k(x) φ_k(y). Throws when e^{−λ_last·t} ≥ 1e-10.
double kernel_eval(const EigenSystem& sys, double t, double x, double y);

/// Kernel matrix K(i,j) = p_t(x_i, x_j) on an m-cell grid, row-major.
std::vector<double> kernel_matrix(const EigenSystem& sys, double t, int m);

/// Smallest mode count whose truncation term e^{−λ_K t} is below 1e-10 for
/// the Neumann spectrum; used to size helper eigensystems.
int modes_for_time(double t);

/// One reflected rate-2 Brownian bridge with its boundary local times.
struct BridgeSample {
  std::vector<double> path;
  double l0 = 0.0;
  double l1 = 0.0;
};

/// Samples a reflected bridge x → y on [0, t] at n_steps+1 equally spaced
/// times. The bridge is a folded free bridge to a randomly chosen image of y;
/// local times at 0 and 1 are the free path's local times at the even and odd
/// integers, drawn exactly per piece given the skeleton.
BridgeSample sample_reflected_bridge(double t, double x, double y, int n_steps,
                                     std::uint64_t seed, std::uint64_t path_index);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Feynman–Kac estimate p_t^{neu}(x,y)·E[exp(−A·L_0 + B·L_1)] over reflected
/// bridges. Path i uses its own counter stream, so the result does not depend
/// on the thread count.
McEstimate kernel_mc(const BoundaryParams& params, double t, double x, double y,
                     std::int64_t n_paths, int n_steps, std::uint64_t seed);
McEstimate kernel_mc_serial(const BoundaryParams& params, double t, double x, double y,
                            std::int64_t n_paths, int n_steps, std::uint64_t seed);

struct KernelFactReport {
  double positivity_min = 0.0;
  double semigroup_defect = 0.0;
  double growth_constant_c = 0.0;
  double symmetry_defect = 0.0;
  /// max_x |∫ p_t(x,y) dy − 1| over the t grid; meaningful for A = B = 0.
  double mass_defect = 0.0;
};

/// Positivity, semigroup defect ‖p_{t+s} − p_t∘p_s‖_∞ over pairs from t_grid,
/// and the envelope constant C = max p_t(x,y)(|x−y| + √t), on an m-cell grid.
/// Compositions use the trapezoid rule with its endpoint correction, whose
/// boundary derivatives are known exactly from the Robin conditions.
KernelFactReport kernel_fact_checks(const EigenSystem& sys, std::span<const double> t_grid,
                                    int m);

}  // namespace okpz
