#include <doctest.h>

#include <cmath>
#include <numeric>

#include "okpz/domain.hpp"
#include "okpz/rng.hpp"

using namespace okpz;

TEST_CASE("philox known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                             K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                             K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("grid spec rejects unstable or coarse grids") {
  const BoundaryParams p{1.0, 2.0};
  CHECK_NOTHROW(GridSpec(16, GridSpec::max_dt(16, p), 1.0, p));
  CHECK_THROWS_AS(GridSpec(16, 1.01 * GridSpec::max_dt(16, p), 1.0, p), Error);
  CHECK_THROWS_AS(GridSpec(4, 1e-5, 1.0, p), Error);
  CHECK_THROWS_AS(GridSpec(16, -1.0, 1.0, p), Error);
  CHECK_THROWS_AS((BoundaryParams{INFINITY, 0.0}.validate()), Error);

  const GridSpec g(10, 1e-3, 1.0, {});
  CHECK(g.steps_in(0.25) == 250);
  CHECK_THROWS_AS(g.steps_in(0.00025), Error);
  CHECK(g.nearest_node(0.05) == 0);  // tie goes to the lower node
  CHECK(g.nearest_node(0.051) == 1);
  const auto w = g.weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("noise slices are deterministic and standard normal") {
  const GridSpec g(16, 1e-3, 1.0, {});
  const auto plan = NoisePlan::white(42);
  CHECK(make_noise_slice(plan, 7, g) == make_noise_slice(plan, 7, g));
  CHECK(make_noise_slice(plan, 7, g) != make_noise_slice(plan, 8, g));
  CHECK(make_noise_slice(plan, 7, g) != make_noise_slice(NoisePlan::white(43), 7, g));
  CHECK_THROWS_AS(make_noise_slice(plan, -1, g), Error);
  for (double v : make_noise_slice(NoisePlan::none(), 3, g)) CHECK(v == 0.0);

  const NoiseSource src(plan, g);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> buf(g.nodes());
  for (int k = 0; k < n; ++k) {
    src.slice(k, buf);
    sum += buf[5];
    sum2 += buf[5] * buf[5];
  }
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(n));
  // variance of the sample variance of N(0,1) is 2/n
  CHECK(std::abs(sum2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("mollified noise is an L2 contraction") {
  const GridSpec g(32, 1e-4, 1.0, {});
  for (const auto& spec : {MollifierSpec{MollifierKind::fejer, 32.0},
                           MollifierSpec{MollifierKind::fejer, 4.0},
                           MollifierSpec{MollifierKind::gaussian_periodic, 0.05}}) {
    const NoiseSource src({1, spec, false}, g);
    const auto w = src.mollifier_weights();
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
    CHECK(src.variance() < 1.0);
    // empirical per-node variance matches Σw²
    double sum2 = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
      const auto s = src.slice(k);
      sum2 += s[3] * s[3];
    }
    CHECK(std::abs(sum2 / n - src.variance()) < 4.0 * src.variance() * std::sqrt(2.0 / n));
  }
  CHECK_THROWS_AS((MollifierSpec{MollifierKind::fejer, 0.0}.validate()), Error);
}

TEST_CASE("quotient removes scale") {
  const GridSpec g(16, 1e-3, 1.0, {});
  const auto uni = quotient(InitialMeasure::uniform(), g);
  const auto ref = QuotientPoint::uniform(g.nodes());
  for (std::size_t j = 0; j < g.nodes(); ++j) CHECK(uni[j] == doctest::Approx(ref[j]).epsilon(1e-15));

  std::vector<double> dens(g.nodes());
  for (std::size_t j = 0; j < dens.size(); ++j) dens[j] = 1.0 + g.x(j) * g.x(j);
  const auto q1 = quotient(InitialMeasure::from_density(dens), g);
  for (double c : {7.0, 0.125, 3.3e5}) {
    auto scaled = dens;
    for (auto& v : scaled) v *= c;
    const auto q2 = quotient(InitialMeasure::from_density(scaled), g);
    for (std::size_t j = 0; j < dens.size(); ++j) {
      if (c == 0.125) {
        CHECK(q2[j] == q1[j]);  // power-of-two scaling is exact
      } else {
        CHECK(std::abs(q2[j] - q1[j]) <= 2e-16 * q1[j] + 1e-300);
      }
    }
  }
}

TEST_CASE("atoms land on the nearest node") {
  const GridSpec g(8, 1e-3, 1.0, {});
  const auto q = quotient(InitialMeasure::delta(0.5), g);
  CHECK(q[4] == 1.0);
  const auto f = InitialMeasure::delta(0.0, 2.0).to_field(g);
  CHECK(f[0] == 2.0 / g.weight(0));
  CHECK(f.integral() == doctest::Approx(2.0));
  CHECK_THROWS_AS(InitialMeasure::delta(1.5).validate(g), Error);
}

TEST_CASE("zero measure has no class") {
  const GridSpec g(8, 1e-3, 1.0, {});
  try {
    quotient(InitialMeasure::from_density(std::vector<double>(9, 0.0)), g);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("zero measure has no equivalence class") != std::string::npos);
  }
  CHECK_THROWS_AS(QuotientPoint({0.5, 0.6}), Error);
  CHECK_THROWS_AS(QuotientPoint({1.5, -0.5}), Error);
}

TEST_CASE("initial measure parsing") {
  CHECK(InitialMeasure::parse("delta:0.25").atoms.at(0).x == 0.25);
  CHECK(InitialMeasure::parse("uniform").atoms.empty());
  CHECK_THROWS_AS(InitialMeasure::parse("gauss"), Error);
  CHECK_THROWS_AS(InitialMeasure::parse("file:/nonexistent.csv"), Error);
}
