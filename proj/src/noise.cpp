#include <cmath>
#include <numbers>

#include "okpz/domain.hpp"
#include "okpz/rng.hpp"

namespace okpz {

namespace {

// Periodic convolution weights on n nodes; weights sum to one so every Fourier
// multiplier has modulus at most one (an L² contraction).
std::vector<double> periodic_weights(const MollifierSpec& spec, std::size_t n) {
  std::vector<double> w(n, 0.0);
  const double nd = static_cast<double>(n);
  if (spec.kind == MollifierKind::fejer) {
    const double cutoff = spec.bandwidth + 1.0;
    const auto kmax = static_cast<long>(n / 2);
    const long kmin = -static_cast<long>((n - 1) / 2);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (long k = kmin; k <= kmax; ++k) {
        const double sigma = std::max(0.0, 1.0 - std::abs(static_cast<double>(k)) / cutoff);
        acc += sigma * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) * k / nd);
      }
      w[j] = acc / nd;
    }
  } else {
    // width in units of [0,1]; grid spacing is 1/(n-1)
    const double sigma_nodes = spec.bandwidth * static_cast<double>(n - 1);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int wrap = -3; wrap <= 3; ++wrap) {
        const double d = static_cast<double>(j) + wrap * nd;
        acc += std::exp(-0.5 * d * d / (sigma_nodes * sigma_nodes));
      }
      w[j] = acc;
      total += acc;
    }
    for (double& v : w) v /= total;
  }
  return w;
}

}  // namespace

NoiseSource::NoiseSource(NoisePlan plan, const GridSpec& grid)
    : plan_(std::move(plan)), nodes_(grid.nodes()) {
  if (plan_.mollifier) {
    plan_.mollifier->validate();
    weights_ = periodic_weights(*plan_.mollifier, nodes_);
    variance_ = 0.0;
    for (double v : weights_) variance_ += v * v;
  }
}

void NoiseSource::slice(std::int64_t step_index, std::span<double> out) const {
  if (step_index < 0) throw Error("noise step index must be nonnegative");
  if (out.size() != nodes_) throw Error("noise slice buffer has the wrong size");
  if (plan_.off) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const auto key = philox_key(plan_.seed);
  const auto step = static_cast<std::uint64_t>(step_index);
  const auto step_lo = static_cast<std::uint32_t>(step);
  const auto step_hi = static_cast<std::uint32_t>(step >> 32);
  const auto tag = static_cast<std::uint32_t>(StreamTag::noise);

  auto fill_white = [&](std::span<double> dst) {
    for (std::size_t pair = 0; 2 * pair < nodes_; ++pair) {
      const auto u = uniform_pair({step_lo, step_hi, static_cast<std::uint32_t>(pair), tag}, key);
      const auto z = box_muller(u[0], u[1]);
      dst[2 * pair] = z[0];
      if (2 * pair + 1 < nodes_) dst[2 * pair + 1] = z[1];
    }
  };

  if (!plan_.mollifier) {
    fill_white(out);
    return;
  }
  std::vector<double> white(nodes_);
  fill_white(white);
  for (std::size_t i = 0; i < nodes_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes_; ++j) {
      acc += weights_[(i + nodes_ - j) % nodes_] * white[j];
    }
    out[i] = acc;
  }
}

std::vector<double> NoiseSource::slice(std::int64_t step_index) const {
  std::vector<double> out(nodes_);
  slice(step_index, out);
  return out;
}

std::vector<double> make_noise_slice(const NoisePlan& plan, std::int64_t step_index,
                                     const GridSpec& grid) {
  return NoiseSource(plan, grid).slice(step_index);
}

}  // namespace okpz
