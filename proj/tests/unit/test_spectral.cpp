#include "openqosc/errors.hpp"
#include "openqosc/spectral.hpp"
#include "simpson.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace openqosc;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("ohmic density values") {
  const SpectralDensity spec = OhmicFamily{1.0, 0.1, 1.0};
  CHECK(evaluate_density(spec, 1.0) == Approx(2 * kPi * 0.1 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(evaluate_density(spec, 1.0) == Approx(0.23115).epsilon(1e-4));
  CHECK(evaluate_density(spec, 0.0) == 0.0);
  CHECK(evaluate_density(spec, 100.0) < 1e-40);
  CHECK_THROWS_AS(evaluate_density(spec, -1.0), DomainError);

  const SpectralDensity sub = OhmicFamily{0.5, 0.2, 2.0};
  const double w = 0.7;
  CHECK(evaluate_density(sub, w) == Approx(2 * kPi * 0.2 * w * std::pow(w / 2.0, -0.5) * std::exp(-w / 2.0)));
}

TEST_CASE("density is non-negative") {
  const SpectralDensity specs[] = {OhmicFamily{0.5, 0.3, 1.0}, OhmicFamily{2.0, 0.1, 3.0},
                                   Lorentzian{1.0, 0.1, 0.5}, Tabulated{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}}};
  for (const auto& spec : specs)
    for (double w = 0.0; w < 30.0; w += 0.137) CHECK(evaluate_density(spec, w) >= 0.0);
}

TEST_CASE("family invariants") {
  CHECK_THROWS_AS(validate(OhmicFamily{0.0, 0.1, 1.0}), DomainError);
  CHECK_THROWS_AS(validate(OhmicFamily{1.0, -0.1, 1.0}), DomainError);
  CHECK_THROWS_AS(validate(OhmicFamily{1.0, 0.1, 0.0}), DomainError);
  CHECK_THROWS_AS(validate(Lorentzian{1.0, 0.0, 0.1}), DomainError);
  CHECK_THROWS_AS(validate(Lorentzian{0.0, 0.1, 0.1}), DomainError);
  CHECK_THROWS_AS(validate(Lorentzian{1.0, 0.1, -0.1}), DomainError);
  CHECK_THROWS_AS(validate(Tabulated{{0.0, 1.0, 1.0}, {0.0, 1.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(validate(Tabulated{{0.0, 1.0}, {0.0, -1.0}}), DomainError);
  CHECK_NOTHROW(validate(Tabulated{{0.0, 1.0}, {0.0, 1.0}}));
}

TEST_CASE("lorentzian and tabulated evaluation") {
  const SpectralDensity l = Lorentzian{1.0, 0.01, 0.02};
  CHECK(evaluate_density(l, 1.0) == Approx(0.02));
  CHECK(evaluate_density(l, 1.01) == Approx(0.01));
  const SpectralDensity t = Tabulated{{1.0, 2.0, 4.0}, {0.0, 2.0, 1.0}};
  CHECK(evaluate_density(t, 0.5) == 0.0);
  CHECK(evaluate_density(t, 1.5) == Approx(1.0));
  CHECK(evaluate_density(t, 3.0) == Approx(1.5));
  CHECK(evaluate_density(t, 5.0) == 0.0);
}

TEST_CASE("midpoint discretization of four modes") {
  const SpectralDensity spec = OhmicFamily{1.0, 0.1, 1.0};
  GridConfig grid;
  grid.n_modes = 4;
  grid.omega_min = 0.0;
  grid.omega_max = 2.0;
  const DiscretizedBath bath = discretize(spec, grid);
  REQUIRE(bath.modes() == 4);
  const double expected[] = {0.25, 0.75, 1.25, 1.75};
  for (int k = 0; k < 4; ++k) {
    CHECK(bath.omegas[k] == Approx(expected[k]).epsilon(1e-15));
    CHECK(bath.couplings(0, k) * bath.couplings(0, k) ==
          Approx(evaluate_density(spec, expected[k]) * 0.5 / (2 * kPi)).epsilon(1e-14));
  }
  REQUIRE(bath.uniform_spacing);
  CHECK(*bath.uniform_spacing == Approx(0.5));
}

TEST_CASE("zero coupling and invalid grids") {
  GridConfig grid;
  grid.n_modes = 16;
  const DiscretizedBath bath = discretize(OhmicFamily{1.0, 0.0, 1.0}, grid);
  CHECK(bath.couplings.cwiseAbs().maxCoeff() == 0.0);
  grid.n_modes = 0;
  CHECK_THROWS_AS(discretize(OhmicFamily{}, grid), ConfigError);
  grid.n_modes = 4;
  grid.omega_max = 0.0;
  CHECK_THROWS_AS(discretize(OhmicFamily{}, grid), ConfigError);
}

TEST_CASE("coupling sum converges to the density integral") {
  const SpectralDensity spec = OhmicFamily{1.0, 0.1, 1.0};
  const double reference =
      reference::simpson([&](double w) { return evaluate_density(spec, w); }, 0.0, 10.0, 20000) / (2 * kPi);
  double previous = 0.0;
  for (std::size_t n : {32u, 64u, 128u, 256u}) {
    GridConfig grid;
    grid.n_modes = n;
    const double sum = discretize(spec, grid).couplings.squaredNorm();
    const double err = std::abs(sum - reference);
    if (previous > 0.0) CHECK(std::log2(previous / err) >= 1.9);
    previous = err;
  }
  GridConfig gl;
  gl.n_modes = 64;
  gl.scheme = GridScheme::GaussLegendre;
  const DiscretizedBath bath = discretize(spec, gl);
  CHECK(bath.couplings.squaredNorm() == Approx(reference).epsilon(1e-10));
  CHECK_FALSE(bath.uniform_spacing);
  for (Eigen::Index k = 1; k < bath.modes(); ++k) CHECK(bath.omegas[k] > bath.omegas[k - 1]);
}

TEST_CASE("discrete stability sum converges to the integral above omega_min") {
  const SpectralDensity spec = OhmicFamily{1.0, 0.2, 1.0};
  const auto continuum = stability_integral(spec, 1.0, 0.0);
  REQUIRE(continuum.value);
  double previous = 0.0;
  for (std::size_t n : {64u, 128u, 256u, 512u}) {
    GridConfig grid;
    grid.n_modes = n;
    grid.omega_max = 40.0;
    const double err = std::abs(discrete_stability_sum(discretize(spec, grid), 1.0) - *continuum.value);
    if (previous > 0.0) CHECK(previous / err >= 3.5);
    previous = err;
  }
}

TEST_CASE("stability integral at the critical couplings") {
  const auto ohmic = stability_integral(OhmicFamily{1.0, 0.25, 1.0}, 1.0, 0.0);
  REQUIRE(ohmic.value);
  CHECK(std::abs(*ohmic.value - 1.0) <= 1e-6);
  const auto sub = stability_integral(OhmicFamily{0.5, 1.0 / (4.0 * std::sqrt(kPi)), 1.0}, 1.0, 0.0);
  REQUIRE(sub.value);
  CHECK(std::abs(*sub.value - 1.0) <= 1e-6);
  const auto zero = stability_integral(OhmicFamily{1.0, 0.0, 1.0}, 1.0, 0.0);
  REQUIRE(zero.value);
  CHECK(*zero.value == 0.0);
  CHECK_THROWS_AS(stability_integral(OhmicFamily{}, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(stability_integral(OhmicFamily{}, 1.0, -1.0), DomainError);
}

TEST_CASE("stability integral against a slow reference") {
  const SpectralDensity sub = OhmicFamily{0.5, 0.1, 1.0};
  const double ref_sub = 4.0 / (2 * kPi) *
                         reference::simpson_sqrt_substituted(
                             [&](double w) { return evaluate_density(sub, w) / w; }, 60.0, 200000);
  CHECK(stability_integral(sub, 1.0, 0.0).value.value() == Approx(ref_sub).epsilon(1e-8));

  const SpectralDensity l = Lorentzian{1.0, 0.05, 0.3};
  const double floor = 0.1;
  const double ref_l = 4.0 / (2 * kPi * 1.3) *
                       reference::simpson([&](double w) { return evaluate_density(l, w) / w; }, floor, 2000.0, 4000000);
  const auto est = stability_integral(l, 1.3, floor);
  REQUIRE(est.value);
  CHECK(*est.value == Approx(ref_l).epsilon(1e-6));
}

TEST_CASE("divergence detection") {
  CHECK(stability_integral(Lorentzian{1.0, 0.01, 0.01}, 1.0, 0.0).divergent());
  CHECK(stability_integral(Lorentzian{1.0, 0.01, 1e-8}, 1.0, 0.0).divergent());
  CHECK(stability_integral(Lorentzian{3.0, 0.2, 5.0}, 2.0, 0.0).divergent());
  CHECK_FALSE(stability_integral(Lorentzian{1.0, 0.01, 0.0}, 1.0, 0.0).divergent());
  CHECK_FALSE(stability_integral(OhmicFamily{0.2, 0.1, 1.0}, 1.0, 0.0).divergent());
  CHECK(stability_integral(Tabulated{{0.0, 1.0}, {1.0, 0.0}}, 1.0, 0.0).divergent());
  CHECK_FALSE(stability_integral(Tabulated{{0.0, 1.0}, {0.0, 1.0}}, 1.0, 0.0).divergent());
}

TEST_CASE("critical coupling closed form") {
  CHECK(critical_coupling(1.0, 1.0, 1.0) == 0.25);
  CHECK(critical_coupling(0.5, 1.0, 1.0) == Approx(1.0 / (4.0 * std::sqrt(kPi))).epsilon(1e-14));
  CHECK(critical_coupling(0.5, 1.0, 1.0) == Approx(0.14105).epsilon(1e-4));
  CHECK(critical_coupling(3.0, 2.0, 1.5) == Approx(1.5 / (4.0 * 2.0 * 2.0)));
  CHECK_THROWS_AS(critical_coupling(0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(critical_coupling(-1.0, 1.0, 1.0), DomainError);
  for (double s : {0.5, 1.0, 2.0}) {
    const double eta = critical_coupling(s, 1.0, 1.0);
    const auto est = stability_integral(OhmicFamily{s, eta, 1.0}, 1.0, 0.0);
    REQUIRE(est.value);
    CHECK(std::abs(*est.value - 1.0) <= 1e-6);
    const SpectralDensity spec = OhmicFamily{s, eta, 1.0};
    const double ref = 4.0 / (2 * kPi) *
                       reference::simpson_sqrt_substituted([&](double w) { return evaluate_density(spec, w) / w; },
                                                           60.0, 200000);
    CHECK(ref == Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("replicated coupling rows") {
  GridConfig grid;
  grid.n_modes = 8;
  const DiscretizedBath bath = discretize(OhmicFamily{}, grid).replicated(3);
  CHECK(bath.system_rows() == 3);
  CHECK(bath.couplings.row(2) == bath.couplings.row(0));
}
