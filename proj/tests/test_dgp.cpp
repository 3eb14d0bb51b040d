#include <doctest.h>

#include <cmath>

#include "bracket/dgp.hpp"
#include "bracket/error.hpp"
#include "bracket/estimands.hpp"
#include "support.hpp"

using namespace bracket;

namespace {

bool same_units(const SimulatedPanel& a, const SimulatedPanel& b) {
  if (a.units.size() != b.units.size()) return false;
  for (std::size_t i = 0; i < a.units.size(); ++i) {
    const auto &u = a.units[i], &v = b.units[i];
    if (u.group != v.group || u.treatment != v.treatment || u.y1_0 != v.y1_0 || u.y1_1 != v.y1_1 ||
        u.y2_0 != v.y2_0 || u.y2_1 != v.y2_1 || u.alpha != v.alpha || u.eps1 != v.eps1 || u.eps2 != v.eps2 ||
        u.nu != v.nu)
      return false;
  }
  return true;
}

double observational_treat_share(const SimulatedPanel& p) {
  double n = 0, t = 0;
  for (const auto& u : p.units)
    if (u.group == Group::Observational) {
      n += 1;
      t += u.treatment;
    }
  return t / n;
}

}  // namespace

TEST_CASE("every preset generates a valid panel with moderate treatment share") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto p = generate(preset(name, 20000), 1);
    CHECK(p.units.size() == 40000);
    const double share = observational_treat_share(p);
    CHECK(share >= 0.2);
    CHECK(share <= 0.8);
    CHECK(validate(to_observed(p, true)).overlap_ok);
  }
  CHECK_THROWS_AS(preset("nope"), UsageError);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto spec = preset("roy_twfe_invariant", 2000);
  CHECK(same_units(generate(spec, 5), generate(spec, 5)));
  CHECK_FALSE(same_units(generate(spec, 5), generate(spec, 6)));
}

TEST_CASE("invalid parameters fail before sampling") {
  auto bad_beta = preset("ashenfelter_beta0", 10);
  std::get<AshenfelterParams>(bad_beta.params).beta = 1.5;
  CHECK_THROWS_AS(generate(bad_beta, 1), UsageError);

  auto bad_rho = preset("submartingale_rho08", 10);
  std::get<SubMartingaleParams>(bad_rho.params).rho_bar = 1.2;
  CHECK_THROWS_AS(generate(bad_rho, 1), UsageError);
  std::get<SubMartingaleParams>(bad_rho.params).rho_bar = 0.0;
  CHECK_THROWS_AS(generate(bad_rho, 1), UsageError);

  auto bad_sd = preset("ldv_lu_true", 10);
  std::get<LdvParams>(bad_sd.params).e = Shock::normal(0.0, -1.0);
  CHECK_THROWS_AS(generate(bad_sd, 1), UsageError);

  auto bad_uniform = preset("ldv_lu_true", 10);
  std::get<LdvParams>(bad_uniform.params).nu = Shock::uniform(1.0, 0.0);
  CHECK_THROWS_AS(generate(bad_uniform, 1), UsageError);

  auto bad_n = preset("ldv_lu_true", 10);
  bad_n.n_observational = 0;
  CHECK_THROWS_AS(generate(bad_n, 1), UsageError);

  auto bad_p = preset("ldv_lu_true", 10);
  bad_p.experimental_treat_prob = 1.0;
  CHECK_THROWS_AS(generate(bad_p, 1), UsageError);

  auto bad_effect = preset("ldv_lu_true", 10);
  bad_effect.effects.sd2 = -0.1;
  CHECK_THROWS_AS(generate(bad_effect, 1), UsageError);
}

TEST_CASE("realised outcomes switch on treatment") {
  for (const auto& name : preset_names()) {
    const auto p = generate(preset(name, 500), 3);
    for (const auto& u : p.units) {
      CHECK(u.y1() == (1 - u.treatment) * u.y1_0 + u.treatment * u.y1_1);
      CHECK(u.y2() == (1 - u.treatment) * u.y2_0 + u.treatment * u.y2_1);
    }
  }
}

TEST_CASE("experimental assignment is a fair coin and groups do not differ in latents") {
  const auto p = generate(preset("ldv_lu_true", 50000), 7);
  double treated = 0, n_e = 0, alpha_e = 0, alpha_o = 0;
  for (const auto& u : p.units) {
    if (u.group == Group::Experimental) {
      treated += u.treatment;
      n_e += 1;
      alpha_e += u.alpha;
    } else {
      alpha_o += u.alpha;
    }
  }
  CHECK(std::abs(treated / n_e - 0.5) < 4 * std::sqrt(0.25 / n_e));
  // alpha ~ N(0,1): 4 SEs of the difference of two means.
  CHECK(std::abs(alpha_e / n_e - alpha_o / 50000.0) < 4 * std::sqrt(2.0 / 50000.0));
}

TEST_CASE("Ashenfelter selection") {
  SUBCASE("beta = 0 selects on the short-term outcome alone") {
    const auto p = generate(preset("ashenfelter_beta0", 5000), 2);
    for (const auto& u : p.units)
      if (u.group == Group::Observational) CHECK(u.treatment == (u.y1_0 <= 0.0 ? 1 : 0));
  }
  SUBCASE("c = -inf leaves everyone untreated and fails overlap") {
    auto spec = preset("ashenfelter_beta0", 500);
    std::get<AshenfelterParams>(spec.params).c = -INFINITY;
    const auto p = generate(spec, 2);
    CHECK(observational_treat_share(p) == 0.0);
    CHECK_FALSE(validate(to_observed(p, true)).overlap_ok);
    CHECK_THROWS_AS(true_att(p), DataError);
  }
}

TEST_CASE("Roy selection thresholds the weighted gains") {
  const auto spec = preset("roy_twfe_invariant", 5000);
  const auto& roy = std::get<RoyParams>(spec.params);
  const auto p = generate(spec, 4);
  std::size_t mismatches = 0;
  for (const auto& u : p.units) {
    if (u.group != Group::Observational) continue;
    const double index = roy.weight1 * (u.y1_1 - u.y1_0) + roy.weight2 * (u.y2_1 - u.y2_0);
    // Recovering a gain as a difference of outcomes can round across the cutoff.
    if (std::abs(index - roy.kappa) > 1e-12) mismatches += u.treatment != (index > roy.kappa ? 1 : 0);
    CHECK(u.y2_0 - u.y1_0 == doctest::Approx(roy.lambda02 - roy.lambda01 + u.eps2 - u.eps1));
  }
  CHECK(mismatches == 0);
}

TEST_CASE("non-invertible design realises the two-branch construction") {
  const auto p = generate(preset("if_noninvertible", 2000), 8);
  for (const auto& u : p.units) {
    CHECK(u.y1_0 == std::abs(u.alpha));
    CHECK(u.y2_0 == (u.alpha < 0 ? 1.0 : 0.0));
    if (u.group == Group::Observational) CHECK(u.treatment == (u.alpha >= 0 ? 1 : 0));
  }
}

TEST_CASE("ECB cell condition under the martingale design") {
  const auto p = generate(preset("submartingale_ecb_true", 100000), 10);
  double s[2] = {}, ss[2] = {}, n[2] = {};
  for (const auto& u : p.units) {
    if (u.group != Group::Observational) continue;
    const double gap = u.y2_0 - u.y1_0;
    s[u.treatment] += gap;
    ss[u.treatment] += gap * gap;
    n[u.treatment] += 1;
  }
  double se2 = 0;
  for (int w : {0, 1}) {
    const double m = s[w] / n[w];
    se2 += (ss[w] / n[w] - m * m) / n[w];
  }
  CHECK(std::abs(s[1] / n[1] - s[0] / n[0]) < 3 * std::sqrt(se2));
}

TEST_CASE("ATT oracle") {
  const auto p = generate(preset("ldv_lu_true", 3000), 12);
  CHECK(std::abs(true_att(p) - 0.3) <= 1e-12);

  auto null_spec = preset("ldv_lu_true", 3000);
  null_spec.effects.delta2 = 0.0;
  CHECK(true_att(generate(null_spec, 12)) == 0.0);

  auto noisy = preset("submartingale_rho08", 3000);
  noisy.effects.sd2 = 0.4;
  const auto q = generate(noisy, 13);
  double sum = 0, n = 0;
  for (std::size_t i = 0; i < q.units.size(); ++i) {
    const auto& u = q.units[i];
    if (u.group == Group::Observational && u.treatment == 1) {
      sum += u.y2_1 - u.y2_0;
      n += 1;
    }
  }
  CHECK(true_att(q) == doctest::Approx(sum / n).epsilon(1e-14));
}

TEST_CASE("projection onto observed data") {
  const auto p = generate(preset("if_invertible", 1000), 14);
  const auto masked = to_observed(p, true);
  const auto open = to_observed(p, false);
  CHECK(masked.size() == p.units.size());
  const auto v = validate(masked);
  CHECK(v.missing_y2_in_observational == 0);
  for (std::size_t i = 0; i < masked.size(); ++i) {
    CHECK(masked.has_y2(i) == (masked.group(i) == Group::Observational));
    CHECK(masked.y1(i) == p.units[i].y1());
    CHECK(*open.y2(i) == p.units[i].y2());
  }
  CHECK_THROWS_AS(estimate_experimental(masked), DataError);
  CHECK_NOTHROW(estimate_experimental(open));
}

TEST_CASE("latent ECB bias matches a brute-force pass") {
  const auto p = generate(preset("submartingale_rho08", 4000), 15);
  double m1 = 0, m2 = 0, n = 0, n1 = 0;
  for (const auto& u : p.units)
    if (u.group == Group::Observational) {
      m1 += u.y1_0;
      m2 += u.y2_0;
      n += 1;
      n1 += u.treatment;
    }
  m1 /= n;
  m2 /= n;
  double t = 0, c = 0;
  for (const auto& u : p.units)
    if (u.group == Group::Observational) {
      const double g = (u.y2_0 - m2) - (u.y1_0 - m1);
      (u.treatment ? t : c) += g;
    }
  const double expected = t / n1 - c / (n - n1);
  CHECK(latent_ecb_bias(p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("JSON configuration") {
  SUBCASE("round trip for every preset") {
    for (const auto& name : preset_names()) {
      const auto spec = preset(name, 300);
      const auto back = dgp_from_json(nlohmann::json::parse(to_json(spec).dump()));
      CHECK(to_json(back).dump() == to_json(spec).dump());
      CHECK(same_units(generate(spec, 1), generate(back, 1)));
    }
  }
  SUBCASE("preset with overrides") {
    const auto spec = dgp_from_json(
        nlohmann::json::parse(R"({"preset":"ashenfelter_beta0","n_observational":123,"params":{"beta":0.25,"c":"-inf"}})"));
    CHECK(spec.n_observational == 123);
    CHECK(spec.n_experimental == 50000);
    const auto& a = std::get<AshenfelterParams>(spec.params);
    CHECK(a.beta == 0.25);
    CHECK(a.c == -INFINITY);
  }
  SUBCASE("uniform shocks") {
    const auto spec = dgp_from_json(nlohmann::json::parse(
        R"({"family":"ldv","n_experimental":10,"n_observational":10,"params":{"nu":{"dist":"uniform","low":-1,"high":1}}})"));
    CHECK(std::get<LdvParams>(spec.params).nu.kind == Shock::Kind::Uniform);
    for (const auto& u : generate(spec, 3).units) {
      CHECK(u.nu >= -1.0);
      CHECK(u.nu <= 1.0);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(dgp_from_json(nlohmann::json::parse(R"({"family":"ldv","params":{"bogus":1}})")), UsageError);
    CHECK_THROWS_AS(dgp_from_json(nlohmann::json::parse(R"({"family":"martian"})")), UsageError);
    CHECK_THROWS_AS(dgp_from_json(nlohmann::json::parse(R"({"family":"ldv","params":{"rho":"x"}})")), UsageError);
    CHECK_THROWS_AS(dgp_from_json(nlohmann::json::parse(R"({"preset":"ashenfelter_beta0","params":{"beta":2}})")),
                    UsageError);
    CHECK_THROWS_AS(load_dgp_file("/nonexistent/dgp.json"), UsageError);
  }
}
