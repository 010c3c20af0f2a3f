#pragma once

#include <span>

#include "okpz/domain.hpp"

namespace okpz {

struct MetricConfig {
  double kappa = 0.4;

  void validate() const;
};

/// Dual distance over the discrete C¹ ball: the max of Σ g_j(p_j − q_j) over
/// |g_j| ≤ s, |g_{j+1} − g_j| ≤ (1 − s)·dx, jointly over s ∈ [0, 1].
double d_x(const QuotientPoint& mu, const QuotientPoint& nu);

/// The inner maximum for one fixed budget split s. Exact: dynamic programming
/// over concave piecewise-linear value functions.
double d_x_at(const QuotientPoint& mu, const QuotientPoint& nu, double s);

/// L¹ distance of the normalized node masses, in [0, 2].
double d_x_bar(const QuotientPoint& mu, const QuotientPoint& nu);
double d_x_bar(const SpatialField& f, const SpatialField& g);

/// Sup-norm plus κ-Hölder seminorm (over all node pairs) of
/// u = log f − log g − ∫(log f − log g).
double d_y(const SpatialField& f, const SpatialField& g, const MetricConfig& cfg);

}  // namespace okpz
