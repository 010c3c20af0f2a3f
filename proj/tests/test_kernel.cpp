#include <doctest.h>

#include <cmath>
#include <numbers>

#include "okpz/kernel.hpp"
#include "oracles.hpp"

using namespace okpz;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("neumann spectrum is the cosine series") {
  const auto sys = EigenSystem::compute({0.0, 0.0}, 12);
  for (std::size_t k = 0; k < sys.size(); ++k) {
    CHECK(sys.lambda(k) == doctest::Approx(k * k * kPi * kPi).epsilon(1e-10).scale(1.0));
    for (double x : {0.0, 0.13, 0.5, 0.91, 1.0}) {
      const double want = k == 0 ? 1.0 : std::sqrt(2.0) * std::cos(k * kPi * x);
      CHECK(std::abs(sys.phi(k, x) - want) < 1e-9);
    }
  }
}

TEST_CASE("eigenvalues match a dense scan of the characteristic function") {
  for (const auto& p : {BoundaryParams{0.0, 2.0}, BoundaryParams{1.0, 1.0},
                        BoundaryParams{-1.0, 2.0}, BoundaryParams{-3.0, 0.5},
                        BoundaryParams{5.0, -4.0}, BoundaryParams{-2.0, -2.0}}) {
    const auto sys = EigenSystem::compute(p, 15);
    const auto roots = oracle::scan_eigenvalues(p.a, p.b, -60.0, sys.lambda(14) + 1.0, 400000);
    REQUIRE(roots.size() == sys.size());
    for (std::size_t k = 0; k < sys.size(); ++k) {
      CHECK(std::abs(sys.lambda(k) - roots[k]) < 1e-8 * std::max(1.0, std::abs(roots[k])));
    }
  }
}

TEST_CASE("ground state sign follows the Rayleigh quotient") {
  // λ = (∫φ'² + Aφ(0)² − Bφ(1)²)/∫φ²; the constant trial function gives A − B
  const auto sys = EigenSystem::compute({0.0, 2.0}, 3);
  CHECK(sys.lambda(0) < 0.0);
  CHECK(sys.lambda(0) <= 0.0 - 2.0);
  CHECK(EigenSystem::compute({1.0, 0.0}, 1).lambda(0) > 0.0);
}

TEST_CASE("eigenfunctions satisfy the equation, boundary conditions and orthonormality") {
  for (const auto& p : {BoundaryParams{1.0, 1.0}, BoundaryParams{-1.0, 2.0},
                        BoundaryParams{3.0, -2.0}}) {
    const auto sys = EigenSystem::compute(p, 12);
    for (std::size_t k = 0; k < sys.size(); ++k) {
      const double lam = sys.lambda(k);
      CHECK(std::abs(sys.dphi(k, 0.0) - p.a * sys.phi(k, 0.0)) < 1e-6);
      CHECK(std::abs(sys.dphi(k, 1.0) - p.b * sys.phi(k, 1.0)) < 1e-6);
      // one-sided differences; their truncation error is O(h·λ)
      const double h = 1e-7;
      const double fd0 = (sys.phi(k, h) - sys.phi(k, 0.0)) / h;
      const double fd1 = (sys.phi(k, 1.0) - sys.phi(k, 1.0 - h)) / h;
      const double fd_tol = 1e-6 + h * (std::abs(lam) + 1.0) * 3.0;
      CHECK(std::abs(fd0 - p.a * sys.phi(k, 0.0)) < fd_tol);
      CHECK(std::abs(fd1 - p.b * sys.phi(k, 1.0)) < fd_tol);
      // interior residual by central differences, tolerance scaled by the
      // h²/12·φ'''' truncation and by roundoff
      const double hc = 1e-3;
      for (double x : {0.2, 0.5, 0.77}) {
        const double d2 =
            (sys.phi(k, x + hc) - 2.0 * sys.phi(k, x) + sys.phi(k, x - hc)) / (hc * hc);
        const double tol = 1e-8 + hc * hc / 12.0 * lam * lam * 3.0 + 1e-16 / (hc * hc) * 10.0;
        CHECK(std::abs(d2 + lam * sys.phi(k, x)) < tol);
      }
      for (std::size_t l = 0; l <= k; ++l) {
        const double ip = oracle::simpson(
            [&](double x) { return sys.phi(k, x) * sys.phi(l, x); }, 0.0, 1.0, 20000);
        CHECK(std::abs(ip - (k == l ? 1.0 : 0.0)) < 1e-8);
      }
    }
  }
}

TEST_CASE("kernel evaluation") {
  const auto neu = EigenSystem::compute({}, 8);
  CHECK(std::abs(kernel_eval(neu, 10.0, 0.2, 0.9) - 1.0) < 1e-8);
  const auto sys = EigenSystem::compute({1.0, 1.0}, 40);
  CHECK(kernel_eval(sys, 0.05, 0.1, 0.7) == kernel_eval(sys, 0.05, 0.7, 0.1));
  try {
    kernel_eval(sys, 1e-4, 0.5, 0.5);
    FAIL("expected truncation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("increase n_modes or t") != std::string::npos);
  }
  // far from the right wall the kernel is the half-line Robin kernel
  const auto left = EigenSystem::compute({2.0, 0.0}, 60);
  CHECK(kernel_eval(left, 0.05, 0.1, 0.1) ==
        doctest::Approx(oracle::half_line_robin(2.0, 0.05, 0.1, 0.1)).epsilon(1e-6));
  CHECK(modes_for_time(0.01) >= 16);
}

TEST_CASE("boundary flux sets the sign of mass change") {
  const double x = 0.4;
  for (const auto& p : {BoundaryParams{0.0, 1.0}, BoundaryParams{1.0, -1.0}, BoundaryParams{}}) {
    const auto sys = EigenSystem::compute(p, 60);
    auto mass = [&](double t) {
      return oracle::simpson([&](double y) { return kernel_eval(sys, t, x, y); }, 0.0, 1.0, 2000);
    };
    const double t = 0.1, h = 1e-5;
    const double rate = (mass(t + h) - mass(t - h)) / (2.0 * h);
    const double flux = p.b * kernel_eval(sys, t, x, 1.0) - p.a * kernel_eval(sys, t, x, 0.0);
    CHECK(std::abs(rate - flux) < 1e-4 * std::abs(flux) + 1e-8);
    if (p.b > 0.0) CHECK(mass(0.3) > mass(0.1));
    if (p.a > 0.0 && p.b < 0.0) CHECK(mass(0.3) < mass(0.1));
  }
}

TEST_CASE("reflected bridges") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto s = sample_reflected_bridge(0.3, 0.2, 0.9, 64, 7, i);
    CHECK(s.path.size() == 65);
    CHECK(s.path.front() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(s.path.back() == doctest::Approx(0.9).epsilon(1e-12));
    for (double v : s.path) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(s.l0 >= 0.0);
    CHECK(s.l1 >= 0.0);
  }
}

TEST_CASE("Feynman-Kac estimates") {
  const auto neu = EigenSystem::compute({}, 40);
  SUBCASE("zero parameters give the Neumann kernel with no spread") {
    const auto est = kernel_mc({}, 0.1, 0.3, 0.6, 1000, 20, 3);
    CHECK(est.std_error == 0.0);
    CHECK(est.estimate == doctest::Approx(kernel_eval(neu, 0.1, 0.3, 0.6)).epsilon(1e-10));
  }
  SUBCASE("short time on the diagonal is the free Gaussian") {
    const auto est = kernel_mc({}, 0.01, 0.5, 0.5, 1000, 10, 3);
    CHECK(est.estimate == doctest::Approx(1.0 / std::sqrt(4.0 * kPi * 0.01)).epsilon(1e-6));
  }
  SUBCASE("half-line Robin closed form") {
    const auto est = kernel_mc({2.0, 0.0}, 0.05, 0.1, 0.1, 100000, 100, 11);
    const double want = oracle::half_line_robin(2.0, 0.05, 0.1, 0.1);
    CHECK(std::abs(est.estimate - want) < 3.0 * est.std_error);
  }
  SUBCASE("eigen expansion") {
    const auto sys = EigenSystem::compute({1.0, 1.0}, 40);
    const auto est = kernel_mc({1.0, 1.0}, 0.25, 0.5, 0.5, 100000, 100, 12);
    CHECK(std::abs(est.estimate - kernel_eval(sys, 0.25, 0.5, 0.5)) < 3.0 * est.std_error);
  }
  SUBCASE("parallel and serial agree bitwise") {
    const auto a = kernel_mc({1.0, -0.5}, 0.2, 0.3, 0.8, 5000, 50, 9);
    const auto b = kernel_mc_serial({1.0, -0.5}, 0.2, 0.3, 0.8, 5000, 50, 9);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
  }
  CHECK_THROWS_AS(kernel_mc({}, 0.1, 0.5, 0.5, 10, 10, 1), Error);
}

TEST_CASE("kernel fact checks") {
  const double ts[] = {0.1};
  const auto neu = kernel_fact_checks(EigenSystem::compute({}, 64), ts, 64);
  CHECK(neu.semigroup_defect < 1e-8);
  CHECK(neu.mass_defect < 1e-8);
  CHECK(neu.symmetry_defect == 0.0);

  const double t2[] = {0.05};
  const auto robin = kernel_fact_checks(EigenSystem::compute({1.0, 1.0}, 64), t2, 64);
  CHECK(robin.positivity_min > 0.0);
  CHECK(robin.semigroup_defect < 1e-6);
}
