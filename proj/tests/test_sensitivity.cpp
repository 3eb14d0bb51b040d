#include <doctest.h>

#include <cmath>

#include "bracket/error.hpp"
#include "bracket/estimands.hpp"
#include "bracket/sensitivity.hpp"
#include "support.hpp"

using namespace bracket;
using namespace testing_support;

TEST_CASE("centering") {
  const auto d2 = load_fixture("d2.csv");
  CHECK(centering_anchor(d2) == 1.0);
  const auto c = centered_y1(d2);
  std::vector<double> o_untreated;
  for (std::size_t i = 0; i < d2.size(); ++i)
    if (d2.group(i) == Group::Observational && d2.treatment(i) == 0) o_untreated.push_back(c[i]);
  CHECK(o_untreated == std::vector<double>{0.0, 2.0});

  const auto zero_anchor = from_rows({row(Group::Experimental, 0, -1), row(Group::Experimental, 0, 1),
                                      row(Group::Observational, 0, 3, 0.0), row(Group::Observational, 1, 4, 0.0)});
  const auto same = centered_y1(zero_anchor);
  for (std::size_t i = 0; i < zero_anchor.size(); ++i) CHECK(same[i] == zero_anchor.y1(i));

  const auto constant = from_rows({row(Group::Experimental, 0, 2), row(Group::Experimental, 1, 2),
                                   row(Group::Observational, 0, 2, 0.0), row(Group::Observational, 1, 2, 0.0)});
  for (double v : centered_y1(constant)) CHECK(v == 0.0);

  CHECK_THROWS_AS(centering_anchor(from_rows({row(Group::Observational, 0, 1, 1.0)})), DataError);
}

TEST_CASE("delta on fixtures") {
  const auto phi = PhiSpec::linear();
  const auto d0 = load_fixture("d0.csv");
  const auto d2 = load_fixture("d2.csv");
  for (double rho : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    CHECK(delta(d0, phi, rho) == 0.0);
    CHECK(adjusted_ecb(d0, phi, rho) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(delta(d2, phi, rho) == doctest::Approx(2.0 * (1.0 - rho)).epsilon(1e-12));
  }
  CHECK(delta(d2, phi, 0.5) == 1.0);
  CHECK(adjusted_ecb(d2, phi, 1.0) == estimate_ecb(d2));
  CHECK(adjusted_ecb(d2, phi, 0.5) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("sensitivity curve on D2") {
  const auto c = sensitivity_curve(load_fixture("d2.csv"), PhiSpec::linear(), 0.5, 1.0, 6, 2.5);
  REQUIRE(c.rho.size() == 6);
  const double expected[] = {2.5, 2.7, 2.9, 3.1, 3.3, 3.5};
  for (std::size_t k = 0; k < 6; ++k) CHECK(c.adjusted[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  CHECK(c.rho.front() == 0.5);
  CHECK(c.rho.back() == 1.0);
  CHECK(c.adjusted.back() == estimate_ecb(load_fixture("d2.csv")));
  REQUIRE(c.rho_star);
  CHECK(*c.rho_star == 0.5);

  const auto ends = sensitivity_curve(load_fixture("d2.csv"), PhiSpec::linear(), 0.2, 0.8, 2);
  CHECK(ends.rho == std::vector<double>{0.2, 0.8});
  CHECK_FALSE(ends.rho_star);

  CHECK_THROWS_AS(sensitivity_curve(load_fixture("d2.csv"), PhiSpec::linear(), 1.0, 1.0, 5), UsageError);
  CHECK_THROWS_AS(sensitivity_curve(load_fixture("d2.csv"), PhiSpec::linear(), 0.0, 1.0, 1), UsageError);
}

TEST_CASE("rho star") {
  const auto d2 = load_fixture("d2.csv");
  CHECK(solve_rho_star(d2, PhiSpec::linear(), 2.5) == 0.5);
  CHECK(solve_rho_star(d2, PhiSpec::linear(), 3.5) == 1.0);
  CHECK_THROWS_AS(solve_rho_star(load_fixture("d0.csv"), PhiSpec::linear(), 2.0), NumericalError);

  // The unattainable target is reported on the curve rather than thrown.
  const auto c = sensitivity_curve(load_fixture("d0.csv"), PhiSpec::linear(), 0.5, 1.0, 3, 2.0);
  CHECK_FALSE(c.rho_star);
  CHECK_FALSE(c.rho_star_note.empty());
}

TEST_CASE("bisection for a custom family") {
  const auto d2 = load_fixture("d2.csv");
  // Same map as the linear family, but forced down the bisection path.
  const auto phi = PhiSpec::custom([](double y, double rho) { return rho * y; });
  const double r = solve_rho_star(d2, phi, 2.5, {0.0, 1.0});
  CHECK(std::abs(adjusted_ecb(d2, phi, r) - 2.5) <= kRootTolerance);
  CHECK(r == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS_WITH_AS(solve_rho_star(d2, phi, 10.0, {0.0, 1.0}), "target not bracketed", NumericalError);

  // Nonlinear deviation: shrink only positive deviations.
  const auto kinked = PhiSpec::custom([](double y, double rho) { return y > 0 ? rho * y : y; });
  const double rk = solve_rho_star(d2, kinked, 3.0, {0.0, 1.0});
  CHECK(std::abs(adjusted_ecb(d2, kinked, rk) - 3.0) <= kRootTolerance);
}

TEST_CASE("tabulated family interpolates and refuses to extrapolate") {
  const auto d2 = load_fixture("d2.csv");
  // h(y) = y on the knots reproduces the linear family.
  const auto tab = PhiSpec::tabulated({-5.0, 0.0, 5.0}, {-5.0, 0.0, 5.0});
  for (double rho : {0.5, 0.8}) CHECK(delta(d2, tab, rho) == doctest::Approx(delta(d2, PhiSpec::linear(), rho)));
  const auto narrow = PhiSpec::tabulated({0.0, 1.0}, {0.0, 1.0});
  CHECK_THROWS_AS(delta(d2, narrow, 0.5), DataError);
  CHECK_THROWS_AS(PhiSpec::tabulated({1.0, 0.0}, {0.0, 0.0}), UsageError);
}

TEST_CASE("property: linear delta is zero at one, affine, and matches the closed form") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_dataset(rng);
    const SensitivityModel model(d, PhiSpec::linear());
    CHECK(model.delta(1.0) == 0.0);
    CHECK(model.adjusted(1.0) == estimate_ecb(d));
    const double r1 = u(rng), r2 = u(rng), lambda = u(rng) / 1.5;
    const double mix = model.delta(lambda * r1 + (1 - lambda) * r2);
    CHECK(std::abs(mix - (lambda * model.delta(r1) + (1 - lambda) * model.delta(r2))) <= 1e-12 * (1 + std::abs(mix)));
    CHECK(model.delta(r1) == doctest::Approx(delta_linear_closed_form(d, r1)).epsilon(1e-12));
    CHECK(model.delta(r1) == delta(d, PhiSpec::linear(), r1));
    CHECK(model.linear_slope() == doctest::Approx(model.delta(2.0)));
  }
}
