#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "okpz/domain.hpp"
#include "okpz/solver.hpp"

namespace okpz {

/// Probability kernel on the node grid: k(i, j) > 0 is a density in y against
/// the trapezoid weights, so Σ_j w_j k(i, j) = 1 for every row.
class CPK {
 public:
  CPK(int m, std::vector<double> k);

  int m() const { return m_; }
  std::size_t nodes() const { return static_cast<std::size_t>(m_) + 1; }
  double operator()(std::size_t i, std::size_t j) const { return k_[i * nodes() + j]; }
  std::span<const double> values() const { return k_; }
  double weight(std::size_t j) const {
    return (j == 0 || j == nodes() - 1) ? 0.5 / m_ : 1.0 / m_;
  }
  double min_entry() const;
  /// max_i |Σ_j w_j k(i,j) − 1|.
  double row_sum_defect() const;

  static CPK uniform(int m);

 private:
  int m_;
  std::vector<double> k_;
};

/// (p1·p2)(x, z) = Σ_y p1(x, y) w_y p2(y, z).
CPK cpk_product(const CPK& p1, const CPK& p2);

/// Entry N−1 holds sup over row pairs of Σ_y w_y |q_N(x,y) − q_N(x',y)|, where
/// q_N = p_1 ⋯ p_N is the prefix product.
std::vector<double> tv_profile(std::span<const CPK> cpks);

/// Number of kernels among the first n with min entry strictly above delta.
int doeblin_count(std::span<const CPK> cpks, double delta, std::size_t n);

/// Seeded positive kernel with log-normal entries of random spread.
CPK random_cpk(int m, std::uint64_t seed, std::uint64_t index);

struct CouplingConfig {
  double delta = 0.5;

  void validate() const;
};

struct CoupledPaths {
  std::vector<std::size_t> s;
  std::vector<std::size_t> t;
  /// First index n with s[n] == t[n], or −1 if the paths never met.
  long meet_step = -1;
};

/// Two chains driven by the kernels in order. Once equal they move together;
/// otherwise a kernel with min entry > δ flips a δ-coin that either sends both
/// to one w-weighted uniform node or moves them independently under the
/// residual (p − δ)/(1 − δ); other kernels move them independently.
CoupledPaths doeblin_coupled_chains(std::span<const CPK> cpks, std::size_t x0, std::size_t y0,
                                    const CouplingConfig& cfg, std::uint64_t seed,
                                    std::uint64_t run);

/// Kernels p_n^f, n = 0..N−1, from N consecutive unit propagators over
/// [T−N, T] (props[k] covers [T−N+k, T−N+k+1]) and a terminal weight f:
/// p_n(x,y) = z_step(x→y)·Z_n(y)/Z_{n+1}(x) with Z_n(y) = ∫ z_{T−n,T}(y→a) f(a) da.
std::vector<CPK> cpk_from_propagators(std::span<const Propagator> props,
                                      std::span<const double> f);

/// max |q_N − z_{T−N,T}(x→y)f(y)/Z_N(x)| where q_N = p_{N−1} ⋯ p_0.
double product_identity_defect(std::span<const Propagator> props, std::span<const double> f);

struct CouplingEventStats {
  /// omega[n]: the event for kernel n (n = 0 is never flagged; its event
  /// involves noise after the terminal time).
  std::vector<bool> omega;
  /// J_N(δ³) for the f ≡ 1 kernels.
  int doeblin_count = 0;
  /// Flagged n where some battery f gave min p_n^f ≤ δ³.
  int bound_violations = 0;
  int flagged = 0;
};

/// Flags the events "unit kernels z_step(n), z_step(n−1) and their composition
/// have every entry in (δ, 1/δ)" and checks the δ³ lower bound on the p_n^f of
/// n_f random positive f.
CouplingEventStats omega_event_check(std::span<const Propagator> props, double delta, int n_f,
                                     std::uint64_t seed);

}  // namespace okpz
