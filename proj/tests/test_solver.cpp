#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "okpz/kernel.hpp"
#include "okpz/rng.hpp"
#include "okpz/solver.hpp"
#include "oracles.hpp"

using namespace okpz;

namespace {

SpatialField random_field(const GridSpec& grid, std::uint64_t seed) {
  CounterStream rs(seed, 0, StreamTag::test);
  std::vector<double> v(grid.nodes());
  for (auto& x : v) x = 0.1 + rs.uniform();
  return SpatialField(grid, std::move(v));
}

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(a[i]));
  }
  return diff / scale;
}

}  // namespace

TEST_CASE("discrete generator") {
  const BoundaryParams p{1.5, -0.7};
  const GridSpec grid(16, 1e-3, 1.0, p);
  const DiscreteGenerator gen(grid, p);
  CHECK(gen.is_m_matrix());
  const auto d = gen.dense();
  const std::size_t n = grid.nodes();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double lhs = grid.weight(i) * d[i * n + j];
      const double rhs = grid.weight(j) * d[j * n + i];
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
  // constants are annihilated in the interior and see the boundary slopes at the ends
  const std::vector<double> one(n, 1.0);
  const auto d1 = gen.apply(one);
  CHECK(d1[0] == doctest::Approx(-2.0 * p.a * grid.m()));
  CHECK(d1[n - 1] == doctest::Approx(2.0 * p.b * grid.m()));
  CHECK(std::abs(d1[5]) < 1e-9);

  auto rhs = random_field(grid, 4);
  auto x = std::vector<double>(rhs.values().begin(), rhs.values().end());
  gen.solve_in_place(x);
  const auto dx = gen.apply(x);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(x[i] - grid.dt() * dx[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
  }
}

TEST_CASE("step") {
  const BoundaryParams neu{};
  const GridSpec grid(16, 1e-3, 1.0, neu);
  const DiscreteGenerator gen(grid, neu);

  SUBCASE("zero noise keeps constants fixed") {
    const std::vector<double> zero(grid.nodes(), 0.0);
    auto f = SpatialField::constant(grid, 2.5);
    for (int k = 0; k < 10; ++k) f = heat_step(f, gen);
    for (double v : f.values()) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
    // the exponent at η = 0 is −dt/(2w), so step() itself is not the heat step
    CHECK(step(SpatialField::constant(grid, 1.0), zero, gen)[3] < 1.0);
  }

  SUBCASE("linear in the field") {
    const auto slice = make_noise_slice(NoisePlan::white(3), 17, grid);
    const auto f = random_field(grid, 1), g = random_field(grid, 2);
    std::vector<double> mix(grid.nodes());
    for (std::size_t j = 0; j < mix.size(); ++j) mix[j] = 0.3 * f[j] + 1.7 * g[j];
    const auto lhs = step(SpatialField(grid, mix), slice, gen);
    const auto sf = step(f, slice, gen), sg = step(g, slice, gen);
    std::vector<double> rhs(grid.nodes());
    for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = 0.3 * sf[j] + 1.7 * sg[j];
    CHECK(max_rel_diff(lhs.values(), rhs) < 1e-12);
  }

  SUBCASE("conditional mean is the heat step") {
    const GridSpec small(8, 5e-3, 1.0, neu);
    const DiscreteGenerator g8(small, neu);
    const auto f = random_field(small, 5);
    const auto plan = NoisePlan::white(21);
    const int n = 100000;
    std::vector<double> sum(small.nodes(), 0.0), sq(small.nodes(), 0.0);
    for (int k = 0; k < n; ++k) {
      const auto out = step(f, make_noise_slice(plan, k, small), g8);
      for (std::size_t j = 0; j < sum.size(); ++j) {
        sum[j] += out[j];
        sq[j] += out[j] * out[j];
      }
    }
    const auto want = heat_step(f, g8);
    for (std::size_t j = 0; j < sum.size(); ++j) {
      const double mean = sum[j] / n;
      const double se = std::sqrt((sq[j] / n - mean * mean) / (n - 1));
      CHECK(std::abs(mean - want[j]) < 3.0 * se);
    }
  }
}

TEST_CASE("solve") {
  const BoundaryParams p{1.0, 1.0};

  SUBCASE("constant drift is a scalar factor") {
    const GridSpec grid(16, 1e-3, 1.0, p);
    const auto plan = NoisePlan::white(8);
    const auto drift = DriftField::constant(0.7);
    const auto with = solve(grid, p, InitialMeasure::delta(0.3), 0.1, 0.4, plan, &drift);
    const auto without = solve(grid, p, InitialMeasure::delta(0.3), 0.1, 0.4, plan);
    for (std::size_t j = 0; j < grid.nodes(); ++j) {
      CHECK(with[j] == doctest::Approx(std::exp(0.7 * 0.3) * without[j]).epsilon(1e-12));
    }
  }

  SUBCASE("bounded drift is checked") {
    const GridSpec grid(16, 1e-3, 1.0, p);
    const auto bad = DriftField::bounded([](double, double) { return 2.0; }, 1.0);
    CHECK_THROWS_AS(solve(grid, p, InitialMeasure::uniform(), 0.0, 0.01, NoisePlan::none(), &bad),
                    Error);
  }

  SUBCASE("uniform is stationary without noise under Neumann conditions") {
    const GridSpec grid(32, 4e-4, 1.0, {});
    const auto z = solve(grid, {}, InitialMeasure::uniform(), 0.0, 0.5, NoisePlan::none());
    for (double v : z.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("linear in the initial measure") {
    const GridSpec grid(16, 1e-3, 1.0, p);
    const auto plan = NoisePlan::white(31);
    const auto f = random_field(grid, 6), g = random_field(grid, 7);
    std::vector<double> mix(grid.nodes());
    for (std::size_t j = 0; j < mix.size(); ++j) mix[j] = 2.0 * f[j] + 0.5 * g[j];
    const auto lhs = solve(grid, p, SpatialField(grid, mix), 0.0, 0.3, plan);
    const auto zf = solve(grid, p, f, 0.0, 0.3, plan);
    const auto zg = solve(grid, p, g, 0.0, 0.3, plan);
    std::vector<double> rhs(grid.nodes());
    for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = 2.0 * zf[j] + 0.5 * zg[j];
    CHECK(max_rel_diff(lhs.values(), rhs) < 1e-12);
  }

  SUBCASE("adjacent intervals see the same noise") {
    const GridSpec grid(16, 1e-3, 1.0, p);
    const auto plan = NoisePlan::white(2);
    const auto direct = solve(grid, p, InitialMeasure::delta(0.5), 0.0, 0.2, plan);
    const auto mid = solve(grid, p, InitialMeasure::delta(0.5), 0.0, 0.1, plan);
    const auto two = solve(grid, p, mid, 0.1, 0.2, plan);
    CHECK(max_rel_diff(direct.values(), two.values()) < 1e-14);
  }

  SUBCASE("noise-off delta matches the kernel column") {
    const GridSpec grid(64, 1e-4, 1.0, p);
    const auto z = solve(grid, p, InitialMeasure::delta(0.5), 0.0, 0.25, NoisePlan::none());
    const auto sys = EigenSystem::compute(p, 40);
    double defect = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
      defect = std::max(defect, std::abs(z[i] - kernel_eval(sys, 0.25, grid.x(i), 0.5)));
    }
    CHECK(defect < 5e-3);
  }

  SUBCASE("positive for every seed") {
    const GridSpec grid(16, 1e-3, 1.0, {-2.0, 3.0});
    for (std::uint64_t s = 0; s < 50; ++s) {
      CHECK(solve(grid, {-2.0, 3.0}, InitialMeasure::delta(0.0), 0.0, 1.0, NoisePlan::white(s))
                .all_positive());
    }
  }

  SUBCASE("off-lattice interval") {
    const GridSpec grid(16, 1e-3, 1.0, p);
    CHECK_THROWS_AS(solve(grid, p, InitialMeasure::uniform(), 0.0, 0.0105, NoisePlan::none()),
                    Error);
  }
}

TEST_CASE("propagators") {
  const BoundaryParams p{0.5, 1.5};
  const GridSpec grid(16, 1e-3, 1.0, p);
  const auto plan = NoisePlan::white(12);

  const auto whole = propagator(grid, p, 0.0, 0.2, plan);
  const auto first = propagator(grid, p, 0.0, 0.1, plan);
  const auto second = propagator(grid, p, 0.1, 0.2, plan);
  const auto joined = compose(second, first);
  CHECK(max_rel_diff(whole.z, joined.z) < 1e-12);
  CHECK(whole.min_entry() > 0.0);

  SUBCASE("columns are solutions from discrete deltas") {
    for (std::size_t j : {std::size_t{0}, std::size_t{7}, std::size_t{16}}) {
      const auto z = solve(grid, p, InitialMeasure::delta(grid.x(j)), 0.0, 0.2, plan);
      for (std::size_t i = 0; i < grid.nodes(); ++i) {
        CHECK(whole(i, j) == doctest::Approx(z[i]).epsilon(1e-13));
      }
    }
    const auto f = random_field(grid, 9);
    const auto applied = whole.apply(f.values());
    const auto solved = solve(grid, p, f, 0.0, 0.2, plan);
    CHECK(max_rel_diff(applied, solved.values()) < 1e-12);
  }

  SUBCASE("parallel and serial agree bitwise") {
    const auto serial = propagator_serial(grid, p, 0.0, 0.2, plan);
    CHECK(serial.z == whole.z);
  }

  SUBCASE("unit propagators chain") {
    const GridSpec g(8, 5e-3, 3.0, p);
    const auto units = unit_propagators(g, p, 1.0, 2, plan);
    REQUIRE(units.size() == 2);
    CHECK(units[0].s == 1.0);
    CHECK(units[1].t == 3.0);
    const auto direct = propagator(g, p, 1.0, 3.0, plan);
    CHECK(max_rel_diff(direct.z, compose(units[1], units[0]).z) < 1e-12);
  }

  SUBCASE("binary round trip") {
    std::stringstream buf;
    write_propagator(buf, whole);
    const auto back = read_propagator(buf, p, grid.dt());
    CHECK(back.s == whole.s);
    CHECK(back.t == whole.t);
    CHECK(back.grid.m() == grid.m());
    CHECK(back.z == whole.z);
    std::stringstream junk("NOTAPROP");
    CHECK_THROWS_AS(read_propagator(junk, p, grid.dt()), Error);
  }

  CHECK_THROWS_AS(compose(first, second), Error);
}

TEST_CASE("time reversal in distribution") {
  // z_{0,t}(x,y) against z_{0,t}(y,x) on disjoint seed sets
  const BoundaryParams p{1.0, -0.5};
  const GridSpec grid(16, 1e-3, 1.0, p);
  const double x = 0.25, y = 0.75;
  std::vector<double> fwd, bwd;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto a = solve(grid, p, InitialMeasure::delta(x), 0.0, 0.2, NoisePlan::white(1000 + s));
    fwd.push_back(a[grid.nearest_node(y)]);
    const auto b = solve(grid, p, InitialMeasure::delta(y), 0.0, 0.2, NoisePlan::white(5000 + s));
    bwd.push_back(b[grid.nearest_node(x)]);
  }
  const auto [d, critical] = oracle::ks_two_sample(fwd, bwd);
  CHECK(d < critical);
}

TEST_CASE("moment probe") {
  const GridSpec grid(32, 4e-4, 1.0, {});
  const double ts[] = {0.1, 0.2, 0.4, 0.8};

  SUBCASE("noise off is degenerate") {
    const auto table = moment_probe(grid, {}, ts, 0.5, 4, 1, true);
    for (const auto& row : table.rows) {
      const auto z = solve(grid, {}, InitialMeasure::delta(0.5), 0.0, row.t, NoisePlan::none());
      CHECK(row.second_moment == doctest::Approx(z[16] * z[16]).epsilon(1e-12));
      CHECK(row.second_moment_stderr == 0.0);
    }
  }

  SUBCASE("noise raises the second moment and never the sign") {
    const double t1[] = {1.0};
    const auto table = moment_probe(grid, {}, t1, 0.5, 1000, 77);
    CHECK(table.rows[0].min_value > 0.0);
    const auto z = solve(grid, {}, InitialMeasure::delta(0.5), 0.0, 1.0, NoisePlan::none());
    CHECK(table.rows[0].second_moment > z[16] * z[16] - 3.0 * table.rows[0].second_moment_stderr);
    CHECK(std::isfinite(table.rows[0].inverse_min_moment));
    CHECK(table.rows[0].max_square_moment >= table.rows[0].second_moment);
  }
}

TEST_CASE("mollified noise approaches white noise") {
  const GridSpec grid(32, 4e-4, 1.0, {});
  const int n = 200;
  auto stats = [&](std::optional<MollifierSpec> moll) {
    std::vector<double> logs;
    for (int s = 0; s < n; ++s) {
      NoisePlan plan = NoisePlan::white(300 + s);
      plan.mollifier = moll;
      const auto z = solve(grid, {}, InitialMeasure::uniform(), 0.0, 1.0, plan);
      logs.push_back(std::log(z[16]));
    }
    double mean = 0.0;
    for (double v : logs) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : logs) var += (v - mean) * (v - mean);
    var /= n - 1;
    return std::pair{mean, var};
  };
  std::vector<std::pair<double, double>> rows;
  for (double k : {2.0, 8.0, 32.0}) rows.push_back(stats(MollifierSpec{MollifierKind::fejer, k}));
  rows.push_back(stats(std::nullopt));
  // stderr of a sample variance is about var·√(2/(n−1))
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double se = rows[i + 1].second * std::sqrt(2.0 / (n - 1));
    CHECK(rows[i].second <= rows[i + 1].second + 2.0 * se);
  }
  const double gap_low = std::abs(rows[0].second - rows.back().second);
  const double gap_high = std::abs(rows[2].second - rows.back().second);
  CHECK(gap_high < gap_low);
}
