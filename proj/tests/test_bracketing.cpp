#include <doctest.h>

#include <algorithm>

#include "bracket/bracketing.hpp"
#include "support.hpp"

using namespace bracket;
using namespace testing_support;

namespace {

bool has_flag(const BracketReport& r, const std::string& needle) {
  return std::any_of(r.flags.begin(), r.flags.end(),
                     [&](const std::string& f) { return f.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("D2 bracket") {
  const auto r = bracket_report(load_fixture("d2.csv"));
  REQUIRE(r.direction);
  CHECK(*r.direction == BracketDirection::I);
  CHECK(*r.lower == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(*r.upper == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(r.psi_ok);
  CHECK(r.identity_residual <= kIdentityTolerance);
  CHECK(r.flags.empty());
}

TEST_CASE("D0 bracket is degenerate") {
  const auto r = bracket_report(load_fixture("d0.csv"));
  REQUIRE(r.lower);
  CHECK(*r.lower == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*r.upper == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.dominance.tie);
}

TEST_CASE("mirrored D2 flips the direction and swaps the bounds") {
  const auto r = bracket_report(mirrored(load_fixture("d2.csv")));
  REQUIRE(r.direction);
  CHECK(*r.direction == BracketDirection::II);
  CHECK(*r.lower == doctest::Approx(-3.5).epsilon(1e-12));
  CHECK(*r.upper == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(r.flags.empty());
}

TEST_CASE("inconclusive dominance leaves the bracket open") {
  const auto d = from_rows({row(Group::Observational, 0, 0, 1.0), row(Group::Observational, 0, 3, 2.0),
                            row(Group::Observational, 1, 1, 4.0), row(Group::Experimental, 0, 1),
                            row(Group::Experimental, 0, 2), row(Group::Experimental, 1, 0)});
  const auto r = bracket_report(d);
  CHECK_FALSE(r.lower.has_value());
  CHECK_FALSE(r.upper.has_value());
  CHECK_FALSE(r.direction.has_value());
  CHECK(has_flag(r, "dominance inconclusive"));
}

TEST_CASE("contradicting order is flagged, with an inconsistency flag beyond the SE multiple") {
  // O-untreated y1 lie above E-untreated y1 (direction I), yet a steep
  // control slope makes LU exceed ECB.
  std::vector<ObservationRow> rows;
  for (int k = 0; k < 20; ++k) {
    const double y = 0.1 * k;
    rows.push_back(row(Group::Observational, 0, y, 3.0 * y));
    rows.push_back(row(Group::Observational, 1, y, 1.0));
    rows.push_back(row(Group::Experimental, 0, y - 5.0));
    rows.push_back(row(Group::Experimental, 1, y));
  }
  const auto d = from_rows(rows);
  BracketConfig config;
  BootstrapSpec bs;
  bs.replicates = 200;
  bs.seed = 1;
  config.bootstrap = bs;
  const auto r = bracket_report(d, config);
  REQUIRE(r.direction);
  CHECK(*r.direction == BracketDirection::I);
  CHECK(*r.lower > *r.upper);
  CHECK(has_flag(r, "contradicts"));
  CHECK_FALSE(r.psi_ok);
  REQUIRE(r.se_difference);
  CHECK(has_flag(r, "inconsistency"));
}

TEST_CASE("property: identity residual stays tiny on random datasets") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = bracket_report(random_dataset(rng));
    CHECK(r.identity_residual <= kIdentityTolerance);
    if (r.direction == BracketDirection::I) {
      CHECK(*r.lower == r.estimates.theta_lu);
      CHECK(*r.upper == r.estimates.theta_ecb);
    } else if (r.direction == BracketDirection::II) {
      CHECK(*r.lower == r.estimates.theta_ecb);
      CHECK(*r.upper == r.estimates.theta_lu);
    }
  }
}
