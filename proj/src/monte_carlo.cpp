#include "bracket/monte_carlo.hpp"

#include <cmath>
#include <ostream>

#include "bracket/error.hpp"
#include "bracket/inference.hpp"
#include "bracket/rng.hpp"
#include "bracket/sensitivity.hpp"

namespace bracket {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xb007;

EstimandSummary summarise(const std::vector<double>& values, double target_mean) {
  EstimandSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double x : values) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  s.mean_bias = s.mean - target_mean;
  s.sd = s.n > 1 ? sample_sd(values) : 0.0;
  s.mc_se = s.sd / std::sqrt(static_cast<double>(s.n));
  s.rmse = std::sqrt(s.mean_bias * s.mean_bias + s.sd * s.sd * static_cast<double>(s.n - 1) /
                                                     static_cast<double>(s.n));
  return s;
}

// Bias relative to each rep's own sample ATT, so mean_bias is the mean of
// per-rep errors.
EstimandSummary summarise_errors(const std::vector<double>& est, const std::vector<double>& att) {
  std::vector<double> err(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) err[i] = est[i] - att[i];
  auto s = summarise(err, 0.0);
  double mean_est = 0.0;
  for (double x : est) mean_est += x;
  s.mean = est.empty() ? 0.0 : mean_est / static_cast<double>(est.size());
  return s;
}

double ks_tolerance(const CombinedDataset& d, double multiplier) {
  if (multiplier == 0.0) return 0.0;
  double n_o = 0.0, n_e = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.treatment(i) != 0) continue;
    (d.group(i) == Group::Observational ? n_o : n_e) += 1.0;
  }
  if (n_o == 0.0 || n_e == 0.0) return 0.0;
  return multiplier * std::sqrt((n_o + n_e) / (n_o * n_e));
}

McReport assemble(const DgpSpec& spec, const McConfig& config, std::vector<RepRecord> records) {
  McReport r;
  r.family = family_name(spec);
  r.reps = config.reps;
  for (const auto& rec : records) r.failures += rec.ok ? 0 : 1;
  if (static_cast<double>(r.failures) > config.max_failure_rate * static_cast<double>(config.reps)) {
    std::string first;
    for (const auto& rec : records)
      if (!rec.ok) {
        first = rec.failure;
        break;
      }
    throw DataError("simulation aborted: " + std::to_string(r.failures) + " of " + std::to_string(config.reps) +
                    " reps failed (first: " + first + ")");
  }

  std::vector<double> att, naive, lu, ecb, experimental, exp_att, adjusted, adj_att, gap;
  std::size_t held = 0, dom_i = 0, dom_ii = 0, inconcl = 0, held_se = 0, dom_i_with_se = 0;
  std::size_t lu_kept = 0, ecb_rej = 0, n_tests = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> covered;  // name -> (hits, total)
  const double z = normal_quantile(1.0 - config.alpha / 2.0);
  for (const auto& rec : records) {
    if (!rec.ok) continue;
    att.push_back(rec.att);
    naive.push_back(rec.naive);
    lu.push_back(rec.lu);
    ecb.push_back(rec.ecb);
    if (rec.experimental) {
      experimental.push_back(*rec.experimental);
      exp_att.push_back(rec.att);
    }
    if (rec.adjusted_ecb) {
      adjusted.push_back(*rec.adjusted_ecb);
      adj_att.push_back(rec.att);
    }
    if (rec.observed_delta) gap.push_back(*rec.observed_delta - rec.latent_delta);
    held += rec.lu <= rec.ecb ? 1 : 0;
    switch (rec.verdict) {
      case DominanceVerdict::DominanceI: ++dom_i; break;
      case DominanceVerdict::DominanceII: ++dom_ii; break;
      case DominanceVerdict::Inconclusive: ++inconcl; break;
    }
    if (rec.se_lu_minus_ecb && rec.verdict == DominanceVerdict::DominanceI) {
      ++dom_i_with_se;
      held_se += rec.lu <= rec.ecb + 3.0 * *rec.se_lu_minus_ecb ? 1 : 0;
    }
    const std::map<std::string, std::optional<double>> points = {
        {"naive", rec.naive}, {"lu", rec.lu}, {"ecb", rec.ecb}, {"experimental", rec.experimental}};
    for (const auto& [name, se] : rec.se) {
      const auto pt = points.at(name);
      if (!pt) continue;
      auto& c = covered[name];
      c.second += 1;
      c.first += std::abs(*pt - rec.att) <= z * se ? 1 : 0;
    }
    if (rec.p_lu_vs_experimental && rec.p_ecb_vs_experimental) {
      ++n_tests;
      lu_kept += *rec.p_lu_vs_experimental > config.alpha ? 1 : 0;
      ecb_rej += *rec.p_ecb_vs_experimental < config.alpha ? 1 : 0;
    }
  }
  const double ok = static_cast<double>(att.size());
  const auto att_summary = summarise(att, 0.0);
  r.oracle_att_mean = att_summary.mean;
  r.oracle_att_mc_se = att_summary.mc_se;
  r.estimands["naive"] = summarise_errors(naive, att);
  r.estimands["lu"] = summarise_errors(lu, att);
  r.estimands["ecb"] = summarise_errors(ecb, att);
  if (!experimental.empty()) r.estimands["experimental"] = summarise_errors(experimental, exp_att);
  if (!adjusted.empty()) r.estimands["ecb_adjusted"] = summarise_errors(adjusted, adj_att);
  for (const auto& [name, c] : covered)
    if (c.second > 0) r.estimands[name].coverage = static_cast<double>(c.first) / static_cast<double>(c.second);
  if (!gap.empty()) r.delta_gap = summarise(gap, 0.0);
  r.bracketing_held = static_cast<double>(held) / ok;
  if (dom_i_with_se > 0) r.bracketing_held_se = static_cast<double>(held_se) / static_cast<double>(dom_i_with_se);
  r.dominance_i = static_cast<double>(dom_i) / ok;
  r.dominance_ii = static_cast<double>(dom_ii) / ok;
  r.inconclusive = static_cast<double>(inconcl) / ok;
  if (n_tests > 0) {
    r.lalonde_lu_retained = static_cast<double>(lu_kept) / static_cast<double>(n_tests);
    r.lalonde_ecb_rejected = static_cast<double>(ecb_rej) / static_cast<double>(n_tests);
  }
  r.records = std::move(records);
  return r;
}

void check_config(const McConfig& config) {
  if (config.reps < 2) throw UsageError("reps must be at least 2");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  if (config.bootstrap_replicates == 1) throw UsageError("bootstrap requires at least 2 replicates");
}

}  // namespace

RepRecord run_rep(const DgpSpec& spec, const McConfig& config, std::size_t index) {
  RepRecord rec;
  rec.index = index;
  rec.seed = derive_seed(config.seed, index);
  const auto panel = generate(spec, rec.seed);
  try {
    rec.att = true_att(panel);
    const auto data = to_observed(panel, config.mask_experimental_y2);
    const auto v = validate(data);
    if (!v.overlap_ok) throw DataError(v.messages.empty() ? "overlap failure" : v.messages.front());
    const auto est = estimate_all(data, config.psi_tol);
    rec.naive = est.theta_naive;
    rec.lu = est.theta_lu;
    rec.ecb = est.theta_ecb;
    rec.experimental = est.theta_experimental;
    rec.dominance_tol = ks_tolerance(data, config.dominance_ks_multiplier);
    rec.verdict = dominance_verdict(data, rec.dominance_tol);
    rec.latent_delta = latent_ecb_bias(panel);
    if (config.sensitivity_rho) {
      const SensitivityModel model(data, PhiSpec::linear());
      rec.observed_delta = model.delta(*config.sensitivity_rho);
      rec.adjusted_ecb = model.adjusted(*config.sensitivity_rho);
    }
    if (config.bootstrap_replicates > 0) {
      BootstrapSpec bs;
      bs.replicates = config.bootstrap_replicates;
      bs.seed = derive_seed(rec.seed, kBootstrapStream);
      bs.ci_level = 1.0 - config.alpha;
      const auto dist = bootstrap_serial(data, bs);
      for (const auto& [e, s] : standard_errors(dist)) rec.se[to_string(e)] = s.se;
      rec.se_lu_minus_ecb = difference_se(dist, Estimand::LU, Estimand::ECB);
      if (dist.aligned.count(Estimand::Experimental)) {
        const auto tests = lalonde_tests(dist);
        rec.p_lu_vs_experimental = tests[0].p_value;
        rec.p_ecb_vs_experimental = tests[1].p_value;
      }
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  return rec;
}

McReport monte_carlo_serial(const DgpSpec& spec, const McConfig& config) {
  check_spec(spec);
  check_config(config);
  std::vector<RepRecord> records;
  records.reserve(config.reps);
  for (std::size_t r = 0; r < config.reps; ++r) records.push_back(run_rep(spec, config, r));
  return assemble(spec, config, std::move(records));
}

McReport monte_carlo(const DgpSpec& spec, const McConfig& config) {
  check_spec(spec);
  check_config(config);
  std::vector<RepRecord> records(config.reps);
  const auto reps = static_cast<std::int64_t>(config.reps);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < reps; ++r)
    records[static_cast<std::size_t>(r)] = run_rep(spec, config, static_cast<std::size_t>(r));
  return assemble(spec, config, std::move(records));
}

void write_summary_csv(std::ostream& out, const McReport& report) {
  out << "estimand,n,mean,mean_bias,sd,rmse,mc_se,coverage\n";
  out.precision(17);
  for (const auto& [name, s] : report.estimands) {
    out << name << ',' << s.n << ',' << s.mean << ',' << s.mean_bias << ',' << s.sd << ',' << s.rmse << ','
        << s.mc_se << ',';
    if (s.coverage) out << *s.coverage;
    out << '\n';
  }
}

}  // namespace bracket
