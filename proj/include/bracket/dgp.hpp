#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bracket/dataset.hpp"
#include "bracket/rng.hpp"

namespace bracket {

/// A scalar structural shock: Normal(mean=a, sd=b) or Uniform(low=a, high=b).
struct Shock {
  enum class Kind { Normal, Uniform };
  Kind kind = Kind::Normal;
  double a = 0.0;
  double b = 1.0;

  static Shock normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
  static Shock uniform(double low, double high) { return {Kind::Uniform, low, high}; }
  double mean() const { return kind == Kind::Normal ? a : 0.5 * (a + b); }
};

/// Treatment effects δ_t = mean_t + sd_t·ξ_t with ξ_t standard normal.
struct EffectSpec {
  double delta1 = 0.2;
  double delta2 = 0.3;
  double sd1 = 0.0;
  double sd2 = 0.0;
};

/// Y1(0) = mean_y1 + α;  Y2(0) = intercept + rho·Y1(0) + e;
/// W = 1{Y1(0) + ν ≤ threshold} (selection on the short-term outcome only).
struct LdvParams {
  double mean_y1 = 0.0;
  double intercept = 0.5;
  double rho = 0.7;
  double threshold = 0.0;
  Shock alpha = Shock::normal(0.0, 1.0);
  Shock e = Shock::normal(0.0, 0.5);
  Shock nu = Shock::normal(0.0, 1.0);
};

/// Y1(0) = mean_y1 + α + ε1;  Y2(0) = mean_y2 + persistence·α + ε2;
/// W = 1{Y1(0) + β·Y2(0) ≤ c}.
struct AshenfelterParams {
  double beta = 0.0;
  double c = 0.0;
  double mean_y1 = 0.0;
  double mean_y2 = 0.2;
  double persistence = 0.8;
  Shock alpha = Shock::normal(0.0, 1.0);
  Shock eps1 = Shock::normal(0.0, 0.5);
  Shock eps2 = Shock::normal(0.0, 0.5);
};

/// Two-way fixed effects Y_t(w) = α0 + λ0t + α1·λ1t + δ_t·w + ε_t with
/// gains δ_t = gain_mean_t + gain_loading_t·α1 + gain_sd_t·ξ_t and
/// W = 1{weight1·δ1 + weight2·δ2 > kappa}. Treated outcomes use these δ_t;
/// the shared EffectSpec is ignored.
struct RoyParams {
  double lambda01 = 0.0, lambda02 = 0.2;
  double lambda11 = 1.0, lambda12 = 1.0;
  double gain_mean1 = 0.2, gain_mean2 = 0.3;
  double gain_loading1 = -0.3, gain_loading2 = -0.3;
  double gain_sd1 = 0.2, gain_sd2 = 0.2;
  double weight1 = 0.5, weight2 = 0.5;
  double kappa = 0.25;
  Shock alpha0 = Shock::normal(0.0, 1.0);
  Shock alpha1 = Shock::normal(0.0, 1.0);
  Shock eps1 = Shock::normal(0.0, 0.5);
  Shock eps2 = Shock::normal(0.0, 0.5);
};

/// Y_t(0) = f_t(α, ε_t) with selection W = g(α, ε1, ν, η1), constant in (ε2, η2).
///
/// Invertible: f1(α) = mean_y1 + α, f2(α, ε2) = mean_y2 + loading·α + ε2,
/// g = 1{weight_alpha·α + weight_eps1·ε1 + ν + η1 ≤ threshold}.
/// Non-invertible: f1(α) = |α| with symmetric α, and the adversarial pair
/// f2(α, ·) = 1{α < 0}, g = 1{α ≥ 0}.
struct ImperfectForesightParams {
  bool invertible = true;
  double mean_y1 = 0.0;
  double mean_y2 = 0.2;
  double loading = 0.6;
  double weight_alpha = 1.0;
  double weight_eps1 = 0.5;
  double threshold = 0.0;
  Shock alpha = Shock::normal(0.0, 1.0);
  Shock eps1 = Shock::normal(0.0, 0.5);
  Shock eps2 = Shock::normal(0.0, 0.5);
  Shock nu = Shock::normal(0.0, 1.0);
  Shock eta1 = Shock::normal(0.0, 0.5);
};

/// Centred process Ẏ1(0) = α + ε1, E[Ẏ2(0) | α, ε1, ν, η1] = rho_bar·Ẏ1(0):
/// Y1(0) = mean_y1 + Ẏ1(0);  Y2(0) = mean_y2 + rho_bar·Ẏ1(0) + ε2;
/// W = 1{α + weight_eps1·ε1 + ν ≤ threshold}.
struct SubMartingaleParams {
  double rho_bar = 1.0;
  double mean_y1 = 0.0;
  double mean_y2 = 0.2;
  double weight_eps1 = 0.5;
  double threshold = 0.0;
  Shock alpha = Shock::normal(0.0, 1.0);
  Shock eps1 = Shock::normal(0.0, 0.5);
  Shock eps2 = Shock::normal(0.0, 0.5);
  Shock nu = Shock::normal(0.0, 1.0);
};

using FamilyParams =
    std::variant<LdvParams, AshenfelterParams, RoyParams, ImperfectForesightParams, SubMartingaleParams>;

struct DgpSpec {
  FamilyParams params = LdvParams{};
  std::size_t n_experimental = 50000;
  std::size_t n_observational = 50000;
  /// Fair randomisation probability inside the experiment.
  double experimental_treat_prob = 0.5;
  EffectSpec effects;
};

std::string family_name(const DgpSpec& spec);

/// Throws UsageError on any out-of-range parameter.
void check_spec(const DgpSpec& spec);

/// Shipped presets; `n_per_group` sets both group sizes.
std::vector<std::string> preset_names();
DgpSpec preset(const std::string& name, std::size_t n_per_group = 50000);

nlohmann::ordered_json to_json(const DgpSpec& spec);
/// Accepts a full spec or {"preset": name, ...overrides}; overrides are merged
/// as a JSON merge patch on top of the preset.
DgpSpec dgp_from_json(const nlohmann::json& config);
DgpSpec load_dgp_file(const std::string& path);

struct SimulatedUnit {
  Group group = Group::Experimental;
  int treatment = 0;
  double y1_0 = 0.0, y1_1 = 0.0, y2_0 = 0.0, y2_1 = 0.0;
  double alpha = 0.0, alpha1 = 0.0;
  double eps1 = 0.0, eps2 = 0.0, nu = 0.0, eta1 = 0.0, eta2 = 0.0;

  double y1() const { return treatment == 1 ? y1_1 : y1_0; }
  double y2() const { return treatment == 1 ? y2_1 : y2_0; }
};

struct SimulatedPanel {
  std::vector<SimulatedUnit> units;
  DgpSpec spec;
  std::uint64_t seed = 0;
};

/// Deterministic in (spec, seed). Experimental units are listed first.
SimulatedPanel generate(const DgpSpec& spec, std::uint64_t seed);

/// Sample ATT: mean of y2(1) − y2(0) over treated observational units.
double true_att(const SimulatedPanel& p);

/// Realised data only; with `mask_experimental_y2` the experimental rows lose y2.
CombinedDataset to_observed(const SimulatedPanel& p, bool mask_experimental_y2);

/// ECB bias computed from latent untreated potential outcomes:
/// Ê[W(Ẏ2(0)−Ẏ1(0))|O]/P̂(W=1|O) − Ê[(1−W)(Ẏ2(0)−Ẏ1(0))|O]/P̂(W=0|O),
/// with Ẏ_t(0) centred by Ê[Y_t(0)|O].
double latent_ecb_bias(const SimulatedPanel& p);

}  // namespace bracket
