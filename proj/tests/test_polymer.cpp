#include <doctest.h>

#include <cmath>
#include <numbers>

#include "okpz/kernel.hpp"
#include "okpz/polymer.hpp"
#include "oracles.hpp"

using namespace okpz;

namespace {

std::vector<long> tally(const PolymerSampler& s, std::size_t x, std::size_t pos, int n,
                        std::uint64_t seed) {
  std::vector<long> c(s.partition().size(), 0);
  for (int r = 0; r < n; ++r) ++c[s.sample(x, seed, static_cast<std::uint64_t>(r)).nodes[pos]];
  return c;
}

}  // namespace

TEST_CASE("paths have the right shape") {
  const BoundaryParams p{1.0, 0.5};
  const GridSpec grid(8, 5e-3, 1.0, p);
  const auto props = step_propagators(grid, p, 0.0, 0.1, NoisePlan::white(3));
  REQUIRE(props.size() == 20);
  const std::vector<double> f(grid.nodes(), 1.0);
  const auto path = sample_polymer(props, 4, f, 1, 0);
  REQUIRE(path.nodes.size() == 21);
  CHECK(path.nodes.front() == 4);
  CHECK(path.times.front() == 0.0);
  CHECK(path.times.back() == doctest::Approx(0.1));
  for (std::size_t k = 0; k < path.nodes.size(); ++k) CHECK(path.positions[k] == grid.x(path.nodes[k]));
  const PolymerSampler sampler(props, f);
  const auto again = sampler.sample(4, 1, 0);
  CHECK(again.nodes == path.nodes);
  double total = 0.0;
  for (double v : sampler.exact_marginal(4, 7)) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("noise-off polymer is the reflected heat kernel") {
  const GridSpec grid(32, 4e-4, 1.0, {});
  const double t = 0.2;
  const auto props = step_propagators(grid, {}, 0.0, t, NoisePlan::none());
  const PolymerSampler sampler(props, std::vector<double>(grid.nodes(), 1.0));
  const std::size_t x = grid.nearest_node(0.3);
  const auto marg = sampler.exact_marginal(x, 0);
  const auto sys = EigenSystem::compute({}, 40);
  double l1 = 0.0;
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    l1 += std::abs(marg[j] - kernel_eval(sys, t, grid.x(x), grid.x(j)) * grid.weight(j));
  }
  CHECK(l1 < 5e-3);
  const auto counts = tally(sampler, x, props.size(), 20000, 5);
  CHECK(oracle::chi_square(counts, marg).passes());
}

TEST_CASE("sampled marginals match the exact law under noise") {
  const BoundaryParams p{-1.0, 2.0};
  const GridSpec grid(16, 1e-3, 1.0, p);
  const auto props = step_propagators(grid, p, 0.0, 0.3, NoisePlan::white(17));
  std::vector<double> f(grid.nodes());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::exp(std::cos(3.0 * grid.x(j)));
  const PolymerSampler sampler(props, f);
  const std::size_t K = props.size();
  for (std::size_t k : {std::size_t{0}, K / 2}) {
    const auto counts = tally(sampler, 5, K - k, 20000, 8 + k);
    CHECK(oracle::chi_square(counts, sampler.exact_marginal(5, k)).passes());
  }
}

TEST_CASE("coarser mesh gives the same law at shared times") {
  const BoundaryParams p{0.5, 0.5};
  const GridSpec grid(8, 5e-3, 1.0, p);
  const auto fine = step_propagators(grid, p, 0.0, 0.2, NoisePlan::white(6));
  std::vector<Propagator> coarse;
  for (std::size_t k = 0; k + 1 < fine.size(); k += 2) coarse.push_back(compose(fine[k + 1], fine[k]));
  const std::vector<double> f(grid.nodes(), 1.0);
  const PolymerSampler a(fine, f), b(coarse, f);
  for (std::size_t k = 0; k <= coarse.size(); k += 5) {
    const auto ma = a.exact_marginal(3, 2 * k);
    const auto mb = b.exact_marginal(3, k);
    for (std::size_t j = 0; j < ma.size(); ++j) CHECK(std::abs(ma[j] - mb[j]) < 1e-12);
  }
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    CHECK(a.partition()[j] == doctest::Approx(b.partition()[j]).epsilon(1e-12));
  }
}

TEST_CASE("tilted expectations") {
  const BoundaryParams p{1.0, 1.0};
  const GridSpec grid(16, 1e-3, 1.0, p);
  const auto plan = NoisePlan::white(23);
  const auto f = SpatialField::constant(grid, 1.0);
  const double t = 0.2;

  const auto zero = tilt_expectation(grid, p, plan, t, 0.5, f, DriftField::constant(0.0), 200, 1);
  CHECK(zero.v_mc == 1.0);
  CHECK(zero.v_exact == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(zero.std_error == 0.0);

  const auto flat = tilt_expectation(grid, p, plan, t, 0.5, f, DriftField::constant(-1.3), 200, 1);
  CHECK(flat.v_mc == doctest::Approx(std::exp(-1.3 * t)).epsilon(1e-12));
  CHECK(flat.v_exact == doctest::Approx(std::exp(-1.3 * t)).epsilon(1e-12));

  const auto h = DriftField::bounded(
      [](double, double x) { return 3.0 * std::cos(std::numbers::pi * x); }, 3.0);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto r = tilt_expectation(grid, p, NoisePlan::white(50 + s), t, 0.3, f, h, 4000, 9);
    CHECK(std::abs(r.v_mc - r.v_exact) < 3.0 * r.std_error);
    CHECK(r.v_max <= std::exp(3.0 * t));
  }
  CHECK_THROWS_AS(tilt_expectation(grid, p, plan, t, 0.5, f, h, 1, 1), Error);
}
