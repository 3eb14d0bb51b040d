#include "bracket/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "bracket/error.hpp"

#ifndef BRACKET_VERSION
#define BRACKET_VERSION "0.0.0"
#endif

namespace bracket {

namespace {

ojson numbers(const std::vector<double>& v) {
  ojson out = ojson::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

template <class T>
ojson optional_number(const std::optional<T>& x) {
  return x ? number(static_cast<double>(*x)) : ojson(nullptr);
}

ojson summary_json(const EstimandSummary& s) {
  ojson out;
  out["n"] = s.n;
  out["mean"] = number(s.mean);
  out["mean_bias"] = number(s.mean_bias);
  out["sd"] = number(s.sd);
  out["rmse"] = number(s.rmse);
  out["mc_se"] = number(s.mc_se);
  out["coverage"] = optional_number(s.coverage);
  return out;
}

}  // namespace

ojson number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

ojson to_json(const ValidationReport& v) {
  ojson out;
  ojson cells = ojson::object();
  for (Group g : {Group::Experimental, Group::Observational})
    for (int w : {0, 1}) cells[std::string(to_string(g)) + std::to_string(w)] = v.count(g, w);
  out["cell_counts"] = cells;
  out["missing_y2_in_observational"] = v.missing_y2_in_observational;
  out["overlap_ok"] = v.overlap_ok;
  out["messages"] = v.messages;
  return out;
}

ojson to_json(const EstimateReport& e) {
  ojson out;
  out["theta_naive"] = number(e.theta_naive);
  out["theta_lu"] = number(e.theta_lu);
  out["theta_ecb"] = number(e.theta_ecb);
  out["theta_experimental"] = optional_number(e.theta_experimental);
  ojson cells = ojson::object();
  for (Group g : {Group::Experimental, Group::Observational})
    for (int w : {0, 1}) {
      ojson c;
      c["n"] = e.moments.n(w, g);
      c["mean_y1"] = number(e.moments.mean(Outcome::Y1, w, g));
      c["mean_y2"] = number(e.moments.mean(Outcome::Y2, w, g));
      cells[std::string(to_string(g)) + std::to_string(w)] = c;
    }
  out["cells"] = cells;
  out["control_fit"] = {{"intercept", number(e.control_fit.intercept)},
                        {"slope", number(e.control_fit.slope)},
                        {"n", e.control_fit.n}};
  out["psi"] = {{"intercept", number(e.psi.psi_intercept)},
                {"slope", number(e.psi.psi_slope)},
                {"non_increasing", e.psi.non_increasing},
                {"tolerance", number(e.psi.tolerance)}};
  return out;
}

ojson to_json(const std::map<Estimand, StandardError>& ses) {
  ojson out = ojson::object();
  for (const auto& [e, s] : ses)
    out[to_string(e)] = {{"point", number(s.point)},
                         {"se", number(s.se)},
                         {"ci_low", number(s.ci.low)},
                         {"ci_high", number(s.ci.high)}};
  return out;
}

ojson to_json(const TestResult& t) {
  ojson out;
  out["null"] = t.null_description;
  out["statistic"] = number(t.statistic);
  out["p_value"] = number(t.p_value);
  out["method"] = t.method;
  out["warnings"] = t.warnings;
  return out;
}

ojson to_json(const DominanceReport& d) {
  ojson out;
  out["verdict"] = to_string(d.verdict);
  out["tie"] = d.tie;
  out["violation_i"] = number(d.violation_i);
  out["violation_ii"] = number(d.violation_ii);
  out["max_violation"] = number(d.max_violation);
  out["n_observational_untreated"] = d.curve_o.n();
  out["n_experimental_untreated"] = d.curve_e.n();
  out["grid"] = numbers(d.grid);
  out["cdf_observational"] = numbers(d.f_o);
  out["cdf_experimental"] = numbers(d.f_e);
  out["band_observational"] = numbers(d.band_o);
  out["band_experimental"] = numbers(d.band_e);
  return out;
}

ojson to_json(const BracketReport& b) {
  ojson out;
  out["lower"] = optional_number(b.lower);
  out["upper"] = optional_number(b.upper);
  if (b.direction)
    out["direction"] = *b.direction == BracketDirection::I ? "I" : "II";
  else
    out["direction"] = nullptr;
  out["psi_ok"] = b.psi_ok;
  out["identity_residual"] = number(b.identity_residual);
  out["se_difference"] = optional_number(b.se_difference);
  out["flags"] = b.flags;
  out["estimates"] = to_json(b.estimates);
  out["dominance"] = to_json(b.dominance);
  return out;
}

ojson to_json(const SensitivityCurve& c) {
  ojson out;
  out["rho"] = numbers(c.rho);
  out["delta"] = numbers(c.delta);
  out["theta_ecb_adjusted"] = numbers(c.adjusted);
  out["target"] = optional_number(c.target);
  out["rho_star"] = optional_number(c.rho_star);
  if (!c.rho_star_note.empty()) out["rho_star_note"] = c.rho_star_note;
  return out;
}

ojson to_json(const McReport& r, bool include_records) {
  ojson out;
  out["family"] = r.family;
  out["reps"] = r.reps;
  out["failures"] = r.failures;
  out["oracle_att_mean"] = number(r.oracle_att_mean);
  out["oracle_att_mc_se"] = number(r.oracle_att_mc_se);
  ojson est = ojson::object();
  for (const auto& [name, s] : r.estimands) est[name] = summary_json(s);
  out["estimands"] = est;
  out["bracketing_held"] = number(r.bracketing_held);
  out["bracketing_held_se_adjusted"] = optional_number(r.bracketing_held_se);
  out["dominance_fractions"] = {{"DominanceI", number(r.dominance_i)},
                                {"DominanceII", number(r.dominance_ii)},
                                {"Inconclusive", number(r.inconclusive)}};
  out["delta_observed_minus_latent"] = r.delta_gap ? summary_json(*r.delta_gap) : ojson(nullptr);
  out["lalonde_lu_retained"] = optional_number(r.lalonde_lu_retained);
  out["lalonde_ecb_rejected"] = optional_number(r.lalonde_ecb_rejected);
  if (include_records) {
    ojson recs = ojson::array();
    for (const auto& rec : r.records) {
      ojson j;
      j["index"] = rec.index;
      j["seed"] = rec.seed;
      j["ok"] = rec.ok;
      if (!rec.ok) {
        j["failure"] = rec.failure;
        recs.push_back(j);
        continue;
      }
      j["att"] = number(rec.att);
      j["naive"] = number(rec.naive);
      j["lu"] = number(rec.lu);
      j["ecb"] = number(rec.ecb);
      j["experimental"] = optional_number(rec.experimental);
      j["verdict"] = to_string(rec.verdict);
      j["dominance_tol"] = number(rec.dominance_tol);
      j["latent_delta"] = number(rec.latent_delta);
      j["observed_delta"] = optional_number(rec.observed_delta);
      j["ecb_adjusted"] = optional_number(rec.adjusted_ecb);
      if (!rec.se.empty()) {
        ojson se = ojson::object();
        for (const auto& [k, v] : rec.se) se[k] = number(v);
        j["se"] = se;
        j["se_lu_minus_ecb"] = optional_number(rec.se_lu_minus_ecb);
        j["p_lu_vs_experimental"] = optional_number(rec.p_lu_vs_experimental);
        j["p_ecb_vs_experimental"] = optional_number(rec.p_ecb_vs_experimental);
      }
      recs.push_back(j);
    }
    out["records"] = recs;
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

ojson to_json(const Manifest& m) {
  ojson out;
  out["tool"] = "bracket";
  out["version"] = tool_version();
  out["command"] = m.command;
  ojson inputs = ojson::object();
  for (const auto& [path, digest] : m.input_sha256) inputs[path] = digest;
  out["input_sha256"] = inputs;
  out["seed"] = m.seed ? ojson(*m.seed) : ojson(nullptr);
  out["parameters"] = m.parameters;
  out["outputs"] = m.outputs;
  return out;
}

const char* tool_version() { return BRACKET_VERSION; }

}  // namespace bracket
