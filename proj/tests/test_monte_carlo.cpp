#include <doctest.h>

#include <cmath>

#include <omp.h>

#include "bracket/error.hpp"
#include "bracket/monte_carlo.hpp"

using namespace bracket;

namespace {

bool same_records(const McReport& a, const McReport& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto &x = a.records[i], &y = b.records[i];
    if (x.ok != y.ok || x.att != y.att || x.naive != y.naive || x.lu != y.lu || x.ecb != y.ecb ||
        x.verdict != y.verdict || x.se != y.se || x.experimental != y.experimental)
      return false;
  }
  return true;
}

double bias_in_ses(const McReport& r, const std::string& estimand) {
  const auto& s = r.estimands.at(estimand);
  return s.mean_bias / s.mc_se;
}

McReport run(const std::string& name, std::size_t n, std::size_t reps, std::uint64_t seed) {
  McConfig c;
  c.reps = reps;
  c.seed = seed;
  return monte_carlo(preset(name, n), c);
}

}  // namespace

TEST_CASE("parallel Monte Carlo matches the serial reference for any worker count") {
  McConfig c;
  c.reps = 12;
  c.seed = 99;
  c.bootstrap_replicates = 20;
  c.mask_experimental_y2 = false;
  c.sensitivity_rho = 0.8;
  const auto spec = preset("submartingale_rho08", 800);
  const auto reference = monte_carlo_serial(spec, c);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 3, 8}) {
    omp_set_num_threads(threads);
    CHECK(same_records(reference, monte_carlo(spec, c)));
  }
  omp_set_num_threads(saved);
  CHECK(same_records(reference, monte_carlo_serial(spec, c)));
}

TEST_CASE("report fractions lie in [0,1] and add up") {
  McConfig c;
  c.reps = 20;
  c.seed = 3;
  c.bootstrap_replicates = 30;
  c.mask_experimental_y2 = false;
  const auto r = monte_carlo(preset("roy_twfe_invariant", 1000), c);
  for (double f : {r.bracketing_held, r.dominance_i, r.dominance_ii, r.inconclusive, *r.lalonde_lu_retained,
                   *r.lalonde_ecb_rejected, *r.bracketing_held_se}) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK(r.dominance_i + r.dominance_ii + r.inconclusive == doctest::Approx(1.0));
  for (const auto& [name, s] : r.estimands) {
    CAPTURE(name);
    REQUIRE(s.coverage);
    CHECK(*s.coverage >= 0.0);
    CHECK(*s.coverage <= 1.0);
    CHECK(s.rmse >= std::abs(s.mean_bias));
  }
}

TEST_CASE("argument checks and failure handling") {
  McConfig c;
  c.reps = 1;
  CHECK_THROWS_AS(monte_carlo(preset("ldv_lu_true", 100), c), UsageError);
  c.reps = 5;
  auto spec = preset("ashenfelter_beta0", 200);
  std::get<AshenfelterParams>(spec.params).c = -INFINITY;
  try {
    monte_carlo(spec, c);
    FAIL("expected an abort");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("5 of 5 reps failed") != std::string::npos);
  }
}

TEST_CASE("a minority of failed reps is recorded and excluded") {
  // Tiny groups make some reps lose a cell.
  McConfig c;
  c.reps = 200;
  c.seed = 4;
  c.max_failure_rate = 0.5;
  auto spec = preset("ldv_lu_true", 6);
  const auto r = monte_carlo(spec, c);
  CHECK(r.failures > 0);
  CHECK(r.failures < r.reps);
  CHECK(r.estimands.at("lu").n == r.reps - r.failures);
  for (const auto& rec : r.records)
    if (!rec.ok) CHECK_FALSE(rec.failure.empty());
}

TEST_CASE("Ashenfelter: LU consistent without foresight, biased with it") {
  const auto beta0 = run("ashenfelter_beta0", 20000, 100, 21);
  CHECK(std::abs(bias_in_ses(beta0, "lu")) <= 3.0);
  const auto beta05 = run("ashenfelter_beta05", 20000, 100, 22);
  CHECK(std::abs(bias_in_ses(beta05, "lu")) >= 10.0);
}

TEST_CASE("martingale design: ECB bias vanishes only at rho_bar = 1") {
  const auto one = run("submartingale_ecb_true", 20000, 100, 23);
  CHECK(std::abs(bias_in_ses(one, "ecb")) <= 3.0);
  const auto shrink = run("submartingale_rho08", 20000, 100, 24);
  CHECK(std::abs(bias_in_ses(shrink, "ecb")) >= 10.0);
}

TEST_CASE("imperfect foresight: invertible short-term map keeps LU consistent") {
  const auto inv = run("if_invertible", 20000, 100, 25);
  CHECK(std::abs(bias_in_ses(inv, "lu")) <= 3.0);
  const auto non = run("if_noninvertible", 20000, 100, 26);
  CHECK(non.estimands.at("lu").mean_bias == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("Roy design with equal factor loadings keeps ECB consistent") {
  const auto r = run("roy_twfe_invariant", 20000, 100, 27);
  CHECK(std::abs(bias_in_ses(r, "ecb")) <= 3.0);
}

TEST_CASE("bracketing holds up to bootstrap noise when dominance direction I is found") {
  McConfig c;
  c.reps = 40;
  c.seed = 28;
  c.bootstrap_replicates = 60;
  const auto r = monte_carlo(preset("ldv_lu_true", 50000), c);
  CHECK(r.dominance_i >= 0.95);
  REQUIRE(r.bracketing_held_se);
  CHECK(*r.bracketing_held_se >= 0.99);
}

TEST_CASE("coverage of the consistent estimator's interval") {
  McConfig c;
  c.reps = 200;
  c.seed = 29;
  c.bootstrap_replicates = 200;
  const auto r = monte_carlo(preset("ldv_lu_true", 2000), c);
  const double cov = *r.estimands.at("lu").coverage;
  CHECK(cov >= 0.90);
  CHECK(cov <= 0.99);
}

TEST_CASE("summary CSV lists every estimand") {
  McConfig c;
  c.reps = 4;
  c.seed = 1;
  const auto r = monte_carlo(preset("ldv_lu_true", 300), c);
  std::ostringstream out;
  write_summary_csv(out, r);
  const auto text = out.str();
  CHECK(text.rfind("estimand,n,mean,mean_bias,sd,rmse,mc_se,coverage\n", 0) == 0);
  for (const char* name : {"naive", "lu", "ecb"}) CHECK(text.find(std::string("\n") + name + ",") != std::string::npos);
}
