#include <omp.h>

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include "okpz/solver.hpp"

namespace okpz {

namespace {

struct Plan {
  std::int64_t first;
  std::int64_t count;
  std::vector<double> factors;  // count × nodes
};

Plan plan_steps(const GridSpec& grid, double s, double t, const NoisePlan& noise) {
  if (!(t > s)) throw Error("propagator needs s < t");
  Plan p{grid.step_index(s), grid.steps_in(t - s), {}};
  const std::size_t n = grid.nodes();
  const NoiseFactors nf(grid, noise);
  p.factors.resize(static_cast<std::size_t>(p.count) * n);
  for (std::int64_t k = 0; k < p.count; ++k) {
    nf.factors(p.first + k, std::span<double>(p.factors.data() + k * n, n));
  }
  return p;
}

void init_block(std::vector<double>& z, const GridSpec& grid) {
  const std::size_t n = grid.nodes();
  z.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) z[j * n + j] = 1.0 / grid.weight(j);
}

void run_columns(std::vector<double>& z, const Plan& plan, const DiscreteGenerator& gen,
                 std::size_t c0, std::size_t c1) {
  const std::size_t n = gen.grid().nodes();
  for (std::int64_t k = 0; k < plan.count; ++k) {
    const double* f = plan.factors.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) {
      double* row = z.data() + i * n;
      const double fi = f[i];
      for (std::size_t c = c0; c < c1; ++c) row[c] *= fi;
    }
    gen.solve_columns(z.data(), n, c0, c1);
  }
}

}  // namespace

std::vector<double> Propagator::apply(std::span<const double> f) const {
  const std::size_t n = nodes();
  if (f.size() != n) throw Error("propagator applied to a field of the wrong length");
  std::vector<double> wf(n);
  for (std::size_t j = 0; j < n; ++j) wf[j] = grid.weight(j) * f[j];
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += z[i * n + j] * wf[j];
    out[i] = acc;
  }
  return out;
}

double Propagator::min_entry() const { return *std::min_element(z.begin(), z.end()); }

Propagator propagator(const GridSpec& grid, const BoundaryParams& params, double s, double t,
                      const NoisePlan& plan) {
  const DiscreteGenerator gen(grid, params);
  const Plan steps = plan_steps(grid, s, t, plan);
  Propagator out{grid, params, s, t, {}};
  init_block(out.z, grid);
  const std::size_t n = grid.nodes();
  constexpr std::size_t kBlock = 16;
  const auto blocks = static_cast<std::int64_t>((n + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::size_t c0 = static_cast<std::size_t>(b) * kBlock;
    run_columns(out.z, steps, gen, c0, std::min(n, c0 + kBlock));
  }
  return out;
}

Propagator propagator_serial(const GridSpec& grid, const BoundaryParams& params, double s,
                             double t, const NoisePlan& plan) {
  const DiscreteGenerator gen(grid, params);
  const Plan steps = plan_steps(grid, s, t, plan);
  Propagator out{grid, params, s, t, {}};
  init_block(out.z, grid);
  run_columns(out.z, steps, gen, 0, grid.nodes());
  return out;
}

Propagator compose(const Propagator& later, const Propagator& earlier) {
  if (!(later.grid == earlier.grid)) throw Error("propagators live on different grids");
  if (later.params.a != earlier.params.a || later.params.b != earlier.params.b) {
    throw Error("propagators have different boundary parameters");
  }
  if (std::abs(later.s - earlier.t) > 1e-9 * std::max(1.0, std::abs(later.s))) {
    throw Error("propagators are not composable: earlier ends at " + std::to_string(earlier.t) +
                ", later starts at " + std::to_string(later.s));
  }
  const std::size_t n = later.nodes();
  const auto w = later.grid.weights();
  Propagator out{later.grid, later.params, earlier.s, later.t, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.z.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = later.z[i * n + k] * w[k];
      const double* src = earlier.z.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += a * src[j];
    }
  }
  return out;
}

std::vector<Propagator> unit_propagators(const GridSpec& grid, const BoundaryParams& params,
                                         double s, int count, const NoisePlan& plan) {
  std::vector<Propagator> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(propagator(grid, params, s + k, s + k + 1, plan));
  return out;
}

void write_propagator(std::ostream& out, const Propagator& p) {
  char header[32] = {};
  std::memcpy(header, "OKPZPROP", 8);
  const std::uint64_t m = static_cast<std::uint64_t>(p.grid.m());
  std::memcpy(header + 8, &m, 8);
  std::memcpy(header + 16, &p.s, 8);
  std::memcpy(header + 24, &p.t, 8);
  out.write(header, 32);
  out.write(reinterpret_cast<const char*>(p.z.data()),
            static_cast<std::streamsize>(p.z.size() * sizeof(double)));
  if (!out) throw Error("failed to write propagator");
}

Propagator read_propagator(std::istream& in, const BoundaryParams& params, double dt) {
  char header[32];
  if (!in.read(header, 32) || std::memcmp(header, "OKPZPROP", 8) != 0) {
    throw Error("not a propagator dump (bad magic)");
  }
  std::uint64_t m = 0;
  double s = 0.0, t = 0.0;
  std::memcpy(&m, header + 8, 8);
  std::memcpy(&s, header + 16, 8);
  std::memcpy(&t, header + 24, 8);
  GridSpec grid(static_cast<int>(m), dt, std::max(t, dt), params);
  Propagator p{grid, params, s, t, std::vector<double>(grid.nodes() * grid.nodes())};
  if (!in.read(reinterpret_cast<char*>(p.z.data()),
               static_cast<std::streamsize>(p.z.size() * sizeof(double)))) {
    throw Error("propagator dump is truncated");
  }
  return p;
}

}  // namespace okpz
