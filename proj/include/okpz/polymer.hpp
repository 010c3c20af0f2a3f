#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "okpz/domain.hpp"
#include "okpz/solver.hpp"

namespace okpz {

/// Polymer path in forward polymer time: times[0] = 0 at the endpoint
/// (physical time t), times.back() = t at physical time 0.
struct PolymerPath {
  std::vector<double> times;
  std::vector<std::size_t> nodes;
  std::vector<double> positions;
};

/// One propagator per dt step over [s, t]; the product of these reproduces
/// the solver's steps exactly in exact arithmetic.
std::vector<Propagator> step_propagators(const GridSpec& grid, const BoundaryParams& params,
                                         double s, double t, const NoisePlan& plan);

/// Samples the discrete polymer measure ending at node x at the last mesh
/// time, with weight f at the first. From node i at mesh time t_{k+1} the
/// path moves to node j at t_k with probability
/// P_k(i,j)·w_j·Z_k(j)/Z_{k+1}(i), where Z_k is the solution at t_k from f.
class PolymerSampler {
 public:
  PolymerSampler(std::span<const Propagator> props, std::span<const double> f);

  std::size_t mesh_size() const { return props_.size() + 1; }
  /// Z at the last mesh time.
  std::span<const double> partition() const { return z_.back(); }

  PolymerPath sample(std::size_t x_node, std::uint64_t seed, std::uint64_t index) const;
  /// Exact law of the node at mesh time t_k given the endpoint x_node.
  std::vector<double> exact_marginal(std::size_t x_node, std::size_t k) const;

 private:
  std::span<const Propagator> props_;
  std::vector<std::vector<double>> z_;
};

PolymerPath sample_polymer(std::span<const Propagator> props, std::size_t x_node,
                           std::span<const double> f, std::uint64_t seed, std::uint64_t index);

struct TiltResult {
  double v_mc = 0.0;
  double v_exact = 0.0;
  double std_error = 0.0;
  /// Largest single-path tilt seen, for the bound exp(t·sup|h|).
  double v_max = 0.0;
};

/// Polymer estimate of E[exp(Σ_k dt·h(t_k, X(t_k)))] over the left-endpoint
/// physical step times, against the solver ratio z^h(t,x)/z⁰(t,x) from f at 0.
TiltResult tilt_expectation(const GridSpec& grid, const BoundaryParams& params,
                            const NoisePlan& plan, double t, double x, const SpatialField& f,
                            const DriftField& h, std::int64_t n_paths, std::uint64_t seed);

}  // namespace okpz
