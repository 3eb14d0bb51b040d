#include "bracket/dgp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bracket/error.hpp"

namespace bracket {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double operator()(const Shock& s) {
    if (s.kind == Shock::Kind::Normal) return s.a + s.b * normal_(rng_);
    return s.a + (s.b - s.a) * unit_(rng_);
  }
  double standard_normal() { return normal_(rng_); }
  bool bernoulli(double p) { return unit_(rng_) < p; }

 private:
  Engine rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

void check_shock(const Shock& s, const char* name) {
  if (!std::isfinite(s.a) || !std::isfinite(s.b))
    throw UsageError(std::string("shock ") + name + ": parameters must be finite");
  if (s.kind == Shock::Kind::Normal && s.b < 0.0)
    throw UsageError(std::string("shock ") + name + ": sd must be non-negative");
  if (s.kind == Shock::Kind::Uniform && s.b < s.a)
    throw UsageError(std::string("shock ") + name + ": uniform low exceeds high");
}

void check_finite(double x, const char* name) {
  if (!std::isfinite(x)) throw UsageError(std::string(name) + " must be finite");
}

// Thresholds may be infinite (degenerate selection); NaN never.
void check_threshold(double x, const char* name) {
  if (std::isnan(x)) throw UsageError(std::string(name) + " must not be NaN");
}

// ---- JSON helpers ------------------------------------------------------------

ojson number_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return kInf;
    if (s == "-inf" || s == "-Infinity") return -kInf;
  }
  throw UsageError("dgp field '" + key + "' must be a number");
}

ojson shock_json(const Shock& s) {
  if (s.kind == Shock::Kind::Normal) return {{"dist", "normal"}, {"mean", s.a}, {"sd", s.b}};
  return {{"dist", "uniform"}, {"low", s.a}, {"high", s.b}};
}

Shock shock_from(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  const auto dist = v.value("dist", std::string("normal"));
  if (dist == "normal") return Shock::normal(number_from(v, "mean"), number_from(v, "sd"));
  if (dist == "uniform") return Shock::uniform(number_from(v, "low"), number_from(v, "high"));
  throw UsageError("dgp shock '" + key + "': unknown dist '" + dist + "'");
}

// Field tables keep to_json and from_json symmetric.
template <class P>
struct Fields;

template <>
struct Fields<LdvParams> {
  static constexpr const char* name = "ldv";
  template <class F>
  static void each(LdvParams& p, F&& f) {
    f("mean_y1", p.mean_y1);
    f("intercept", p.intercept);
    f("rho", p.rho);
    f("threshold", p.threshold);
    f("alpha", p.alpha);
    f("e", p.e);
    f("nu", p.nu);
  }
};

template <>
struct Fields<AshenfelterParams> {
  static constexpr const char* name = "ashenfelter";
  template <class F>
  static void each(AshenfelterParams& p, F&& f) {
    f("beta", p.beta);
    f("c", p.c);
    f("mean_y1", p.mean_y1);
    f("mean_y2", p.mean_y2);
    f("persistence", p.persistence);
    f("alpha", p.alpha);
    f("eps1", p.eps1);
    f("eps2", p.eps2);
  }
};

template <>
struct Fields<RoyParams> {
  static constexpr const char* name = "roy";
  template <class F>
  static void each(RoyParams& p, F&& f) {
    f("lambda01", p.lambda01);
    f("lambda02", p.lambda02);
    f("lambda11", p.lambda11);
    f("lambda12", p.lambda12);
    f("gain_mean1", p.gain_mean1);
    f("gain_mean2", p.gain_mean2);
    f("gain_loading1", p.gain_loading1);
    f("gain_loading2", p.gain_loading2);
    f("gain_sd1", p.gain_sd1);
    f("gain_sd2", p.gain_sd2);
    f("weight1", p.weight1);
    f("weight2", p.weight2);
    f("kappa", p.kappa);
    f("alpha0", p.alpha0);
    f("alpha1", p.alpha1);
    f("eps1", p.eps1);
    f("eps2", p.eps2);
  }
};

template <>
struct Fields<ImperfectForesightParams> {
  static constexpr const char* name = "imperfect_foresight";
  template <class F>
  static void each(ImperfectForesightParams& p, F&& f) {
    f("invertible", p.invertible);
    f("mean_y1", p.mean_y1);
    f("mean_y2", p.mean_y2);
    f("loading", p.loading);
    f("weight_alpha", p.weight_alpha);
    f("weight_eps1", p.weight_eps1);
    f("threshold", p.threshold);
    f("alpha", p.alpha);
    f("eps1", p.eps1);
    f("eps2", p.eps2);
    f("nu", p.nu);
    f("eta1", p.eta1);
  }
};

template <>
struct Fields<SubMartingaleParams> {
  static constexpr const char* name = "submartingale";
  template <class F>
  static void each(SubMartingaleParams& p, F&& f) {
    f("rho_bar", p.rho_bar);
    f("mean_y1", p.mean_y1);
    f("mean_y2", p.mean_y2);
    f("weight_eps1", p.weight_eps1);
    f("threshold", p.threshold);
    f("alpha", p.alpha);
    f("eps1", p.eps1);
    f("eps2", p.eps2);
    f("nu", p.nu);
  }
};

template <class P>
ojson params_json(P p) {
  ojson out = ojson::object();
  Fields<P>::each(p, [&](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, Shock>)
      out[key] = shock_json(field);
    else if constexpr (std::is_same_v<T, bool>)
      out[key] = field;
    else
      out[key] = number_json(field);
  });
  return out;
}

template <class P>
P params_from(const json& j) {
  P p;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    Fields<P>::each(p, [&](const char* name, auto&) { known = known || key == name; });
    if (!known) throw UsageError(std::string("unknown ") + Fields<P>::name + " parameter '" + key + "'");
  }
  Fields<P>::each(p, [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, Shock>)
      field = shock_from(j, key);
    else if constexpr (std::is_same_v<T, bool>)
      field = j.at(key).get<bool>();
    else
      field = number_from(j, key);
  });
  return p;
}

// ---- per-family structural equations ------------------------------------------

// Fills untreated potential outcomes and latents, and returns the observational
// selection indicator.
struct UntreatedDraw {
  int selected = 0;
  // Roy gains override the shared treatment effects when set.
  bool own_gains = false;
  double gain1 = 0.0, gain2 = 0.0;
};

UntreatedDraw draw(const LdvParams& p, Sampler& s, SimulatedUnit& u) {
  u.alpha = s(p.alpha);
  u.eps2 = s(p.e);
  u.nu = s(p.nu);
  u.y1_0 = p.mean_y1 + u.alpha;
  u.y2_0 = p.intercept + p.rho * u.y1_0 + u.eps2;
  return {u.y1_0 + u.nu <= p.threshold ? 1 : 0};
}

UntreatedDraw draw(const AshenfelterParams& p, Sampler& s, SimulatedUnit& u) {
  u.alpha = s(p.alpha);
  u.eps1 = s(p.eps1);
  u.eps2 = s(p.eps2);
  u.y1_0 = p.mean_y1 + u.alpha + u.eps1;
  u.y2_0 = p.mean_y2 + p.persistence * u.alpha + u.eps2;
  return {u.y1_0 + p.beta * u.y2_0 <= p.c ? 1 : 0};
}

UntreatedDraw draw(const RoyParams& p, Sampler& s, SimulatedUnit& u) {
  u.alpha = s(p.alpha0);
  u.alpha1 = s(p.alpha1);
  u.eps1 = s(p.eps1);
  u.eps2 = s(p.eps2);
  u.y1_0 = u.alpha + p.lambda01 + u.alpha1 * p.lambda11 + u.eps1;
  u.y2_0 = u.alpha + p.lambda02 + u.alpha1 * p.lambda12 + u.eps2;
  UntreatedDraw d;
  d.own_gains = true;
  d.gain1 = p.gain_mean1 + p.gain_loading1 * u.alpha1 + p.gain_sd1 * s.standard_normal();
  d.gain2 = p.gain_mean2 + p.gain_loading2 * u.alpha1 + p.gain_sd2 * s.standard_normal();
  d.selected = p.weight1 * d.gain1 + p.weight2 * d.gain2 > p.kappa ? 1 : 0;
  return d;
}

UntreatedDraw draw(const ImperfectForesightParams& p, Sampler& s, SimulatedUnit& u) {
  u.alpha = s(p.alpha);
  u.eps1 = s(p.eps1);
  u.eps2 = s(p.eps2);
  u.nu = s(p.nu);
  u.eta1 = s(p.eta1);
  if (p.invertible) {
    u.y1_0 = p.mean_y1 + u.alpha;
    u.y2_0 = p.mean_y2 + p.loading * u.alpha + u.eps2;
    const double index = p.weight_alpha * u.alpha + p.weight_eps1 * u.eps1 + u.nu + u.eta1;
    return {index <= p.threshold ? 1 : 0};
  }
  u.y1_0 = std::abs(u.alpha);
  u.y2_0 = u.alpha < 0.0 ? 1.0 : 0.0;
  return {u.alpha >= 0.0 ? 1 : 0};
}

UntreatedDraw draw(const SubMartingaleParams& p, Sampler& s, SimulatedUnit& u) {
  u.alpha = s(p.alpha);
  u.eps1 = s(p.eps1);
  u.eps2 = s(p.eps2);
  u.nu = s(p.nu);
  const double centred1 = u.alpha + u.eps1;
  u.y1_0 = p.mean_y1 + centred1;
  u.y2_0 = p.mean_y2 + p.rho_bar * centred1 + u.eps2;
  return {u.alpha + p.weight_eps1 * u.eps1 + u.nu <= p.threshold ? 1 : 0};
}

}  // namespace

std::string family_name(const DgpSpec& spec) {
  return std::visit([](const auto& p) -> std::string { return Fields<std::decay_t<decltype(p)>>::name; },
                    spec.params);
}

void check_spec(const DgpSpec& spec) {
  if (spec.n_experimental < 1 || spec.n_observational < 1)
    throw UsageError("dgp group sizes must be positive");
  if (!(spec.experimental_treat_prob > 0.0 && spec.experimental_treat_prob < 1.0))
    throw UsageError("experimental_treat_prob must lie in (0,1)");
  check_finite(spec.effects.delta1, "delta1");
  check_finite(spec.effects.delta2, "delta2");
  if (!(spec.effects.sd1 >= 0.0) || !(spec.effects.sd2 >= 0.0) || !std::isfinite(spec.effects.sd1) ||
      !std::isfinite(spec.effects.sd2))
    throw UsageError("effect sd must be finite and non-negative");

  std::visit(
      [](auto p) {
        using P = decltype(p);
        Fields<P>::each(p, [](const char* key, auto& field) {
          using T = std::decay_t<decltype(field)>;
          if constexpr (std::is_same_v<T, Shock>) {
            check_shock(field, key);
          } else if constexpr (std::is_same_v<T, double>) {
            const std::string k = key;
            if (k == "threshold" || k == "c" || k == "kappa")
              check_threshold(field, key);
            else
              check_finite(field, key);
          }
        });
        if constexpr (std::is_same_v<P, AshenfelterParams>) {
          if (p.beta < 0.0 || p.beta > 1.0) throw UsageError("ashenfelter beta must lie in [0,1]");
        }
        if constexpr (std::is_same_v<P, SubMartingaleParams>) {
          if (!(p.rho_bar > 0.0 && p.rho_bar <= 1.0))
            throw UsageError("submartingale rho_bar must lie in (0,1]");
        }
        if constexpr (std::is_same_v<P, ImperfectForesightParams>) {
          if (!p.invertible && p.alpha.mean() != 0.0)
            throw UsageError("non-invertible design needs a symmetric alpha centred at 0");
        }
      },
      spec.params);
}

std::vector<std::string> preset_names() {
  return {"ldv_lu_true",       "submartingale_ecb_true", "submartingale_rho08", "ashenfelter_beta0",
          "ashenfelter_beta05", "roy_twfe_invariant",    "if_invertible",       "if_noninvertible"};
}

DgpSpec preset(const std::string& name, std::size_t n_per_group) {
  DgpSpec spec;
  spec.n_experimental = n_per_group;
  spec.n_observational = n_per_group;
  if (name == "ldv_lu_true") {
    spec.params = LdvParams{};
  } else if (name == "submartingale_ecb_true") {
    spec.params = SubMartingaleParams{};
  } else if (name == "submartingale_rho08") {
    SubMartingaleParams p;
    p.rho_bar = 0.8;
    spec.params = p;
  } else if (name == "ashenfelter_beta0") {
    spec.params = AshenfelterParams{};
  } else if (name == "ashenfelter_beta05") {
    AshenfelterParams p;
    p.beta = 0.5;
    spec.params = p;
  } else if (name == "roy_twfe_invariant") {
    spec.params = RoyParams{};
  } else if (name == "if_invertible") {
    spec.params = ImperfectForesightParams{};
  } else if (name == "if_noninvertible") {
    ImperfectForesightParams p;
    p.invertible = false;
    spec.params = p;
  } else {
    throw UsageError("unknown dgp preset '" + name + "'");
  }
  return spec;
}

nlohmann::ordered_json to_json(const DgpSpec& spec) {
  ojson out;
  out["family"] = family_name(spec);
  out["n_experimental"] = spec.n_experimental;
  out["n_observational"] = spec.n_observational;
  out["experimental_treat_prob"] = spec.experimental_treat_prob;
  out["effects"] = {{"delta1", spec.effects.delta1},
                    {"delta2", spec.effects.delta2},
                    {"sd1", spec.effects.sd1},
                    {"sd2", spec.effects.sd2}};
  out["params"] = std::visit([](const auto& p) { return params_json(p); }, spec.params);
  return out;
}

DgpSpec dgp_from_json(const nlohmann::json& config) {
  if (!config.is_object()) throw UsageError("dgp config must be a JSON object");
  json merged = config;
  if (config.contains("preset")) {
    const auto name = config.at("preset").get<std::string>();
    json base = json::parse(to_json(preset(name)).dump());
    json patch = config;
    patch.erase("preset");
    base.merge_patch(patch);
    merged = std::move(base);
  }
  try {
    DgpSpec spec;
    const auto family = merged.at("family").get<std::string>();
    const json params = merged.value("params", json::object());
    if (family == Fields<LdvParams>::name)
      spec.params = params_from<LdvParams>(params);
    else if (family == Fields<AshenfelterParams>::name)
      spec.params = params_from<AshenfelterParams>(params);
    else if (family == Fields<RoyParams>::name)
      spec.params = params_from<RoyParams>(params);
    else if (family == Fields<ImperfectForesightParams>::name)
      spec.params = params_from<ImperfectForesightParams>(params);
    else if (family == Fields<SubMartingaleParams>::name)
      spec.params = params_from<SubMartingaleParams>(params);
    else
      throw UsageError("unknown dgp family '" + family + "'");
    spec.n_experimental = merged.value("n_experimental", spec.n_experimental);
    spec.n_observational = merged.value("n_observational", spec.n_observational);
    spec.experimental_treat_prob = merged.value("experimental_treat_prob", spec.experimental_treat_prob);
    if (merged.contains("effects")) {
      const auto& e = merged.at("effects");
      spec.effects.delta1 = e.value("delta1", spec.effects.delta1);
      spec.effects.delta2 = e.value("delta2", spec.effects.delta2);
      spec.effects.sd1 = e.value("sd1", spec.effects.sd1);
      spec.effects.sd2 = e.value("sd2", spec.effects.sd2);
    }
    check_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed dgp config: ") + e.what());
  }
}

DgpSpec load_dgp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dgp config " + path);
  try {
    return dgp_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw UsageError("malformed dgp config " + path + ": " + e.what());
  }
}

SimulatedPanel generate(const DgpSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  SimulatedPanel panel;
  panel.spec = spec;
  panel.seed = seed;
  const std::size_t n = spec.n_experimental + spec.n_observational;
  panel.units.resize(n);
  Sampler s(seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto& u = panel.units[i];
    u.group = i < spec.n_experimental ? Group::Experimental : Group::Observational;
    const auto d = std::visit([&](const auto& p) { return draw(p, s, u); }, spec.params);
    double gain1 = d.gain1, gain2 = d.gain2;
    if (!d.own_gains) {
      gain1 = spec.effects.delta1 + spec.effects.sd1 * s.standard_normal();
      gain2 = spec.effects.delta2 + spec.effects.sd2 * s.standard_normal();
    }
    u.y1_1 = u.y1_0 + gain1;
    u.y2_1 = u.y2_0 + gain2;
    // Always consume the randomisation draw so that the stream layout does not
    // depend on the group.
    const bool coin = s.bernoulli(spec.experimental_treat_prob);
    u.treatment = u.group == Group::Experimental ? (coin ? 1 : 0) : d.selected;
  }
  return panel;
}

double true_att(const SimulatedPanel& p) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& u : p.units) {
    if (u.group != Group::Observational || u.treatment != 1) continue;
    sum += u.y2_1 - u.y2_0;
    ++n;
  }
  if (n == 0) throw DataError("no treated observational units");
  return sum / static_cast<double>(n);
}

CombinedDataset to_observed(const SimulatedPanel& p, bool mask_experimental_y2) {
  const std::size_t n = p.units.size();
  std::vector<Group> group(n);
  std::vector<std::uint8_t> treat(n);
  std::vector<double> y1(n), y2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = p.units[i];
    group[i] = u.group;
    treat[i] = static_cast<std::uint8_t>(u.treatment);
    y1[i] = u.y1();
    y2[i] = (mask_experimental_y2 && u.group == Group::Experimental) ? std::numeric_limits<double>::quiet_NaN()
                                                                      : u.y2();
  }
  std::ostringstream prov;
  prov << "simulated:" << family_name(p.spec) << ":seed=" << p.seed;
  return CombinedDataset(std::move(group), std::move(treat), std::move(y1), std::move(y2), prov.str());
}

double latent_ecb_bias(const SimulatedPanel& p) {
  double mean1 = 0.0, mean2 = 0.0;
  std::size_t n = 0, n1 = 0;
  for (const auto& u : p.units) {
    if (u.group != Group::Observational) continue;
    mean1 += u.y1_0;
    mean2 += u.y2_0;
    ++n;
    n1 += static_cast<std::size_t>(u.treatment);
  }
  if (n1 == 0 || n1 == n) throw DataError("latent bias needs both treatment arms in the observational group");
  mean1 /= static_cast<double>(n);
  mean2 /= static_cast<double>(n);
  double treated = 0.0, untreated = 0.0;
  for (const auto& u : p.units) {
    if (u.group != Group::Observational) continue;
    const double gap = (u.y2_0 - mean2) - (u.y1_0 - mean1);
    (u.treatment == 1 ? treated : untreated) += gap;
  }
  const double nn = static_cast<double>(n);
  const double p1 = static_cast<double>(n1) / nn;
  return (treated / nn) / p1 - (untreated / nn) / (1.0 - p1);
}

}  // namespace bracket
