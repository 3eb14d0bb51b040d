#include "bracket/inference.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <boost/math/distributions/normal.hpp>

#include "bracket/error.hpp"

namespace bracket {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ReplicateValues {
  double naive = kNaN, lu = kNaN, ecb = kNaN, experimental = kNaN;
};

ReplicateValues evaluate(const CombinedDataset& rep, bool with_experimental) {
  ReplicateValues v;
  Moments m;
  try {
    m = compute_moments(rep);
  } catch (const Error&) {
    return v;
  }
  const double p1 = m.treat_prob(Group::Observational);
  const double y2t = m.mean(Outcome::Y2, 1, Group::Observational);
  const double y2u = m.mean(Outcome::Y2, 0, Group::Observational);
  const double y1u_o = m.mean(Outcome::Y1, 0, Group::Observational);
  const double y1u_e = m.mean(Outcome::Y1, 0, Group::Experimental);
  v.naive = y2t - y2u;
  v.ecb = y2t + y1u_o / p1 - y1u_e / p1 - y2u;
  try {
    const auto fit = fit_control_regression(rep);
    v.lu = y2t + (1.0 - p1) * y2u / p1 - fit(y1u_e) / p1;
  } catch (const Error&) {
  }
  if (with_experimental)
    v.experimental = m.mean(Outcome::Y2, 1, Group::Experimental) - m.mean(Outcome::Y2, 0, Group::Experimental);
  return v;
}

BootstrapDistribution prepare(const CombinedDataset& d, const BootstrapSpec& spec, bool& with_experimental) {
  if (spec.replicates < 2) throw UsageError("bootstrap requires at least 2 replicates");
  if (!(spec.ci_level > 0.0 && spec.ci_level < 1.0)) throw UsageError("ci level must lie in (0,1)");
  const auto est = estimate_all(d);
  with_experimental = est.theta_experimental.has_value();
  BootstrapDistribution dist;
  dist.replicates = spec.replicates;
  dist.ci_level = spec.ci_level;
  dist.point[Estimand::Naive] = est.theta_naive;
  dist.point[Estimand::LU] = est.theta_lu;
  dist.point[Estimand::ECB] = est.theta_ecb;
  if (with_experimental) dist.point[Estimand::Experimental] = *est.theta_experimental;
  for (const auto& [e, value] : dist.point) dist.aligned[e].assign(spec.replicates, kNaN);
  if (spec.replicates < kLowReplicateWarning)
    dist.warnings.push_back("low replicate count (" + std::to_string(spec.replicates) + " < " +
                            std::to_string(kLowReplicateWarning) + ")");
  return dist;
}

void store(BootstrapDistribution& dist, std::size_t b, const ReplicateValues& v) {
  dist.aligned[Estimand::Naive][b] = v.naive;
  dist.aligned[Estimand::LU][b] = v.lu;
  dist.aligned[Estimand::ECB][b] = v.ecb;
  if (dist.has(Estimand::Experimental)) dist.aligned[Estimand::Experimental][b] = v.experimental;
}

void finish(BootstrapDistribution& dist, const BootstrapSpec& spec) {
  for (auto& [e, values] : dist.aligned) {
    std::size_t failed = 0;
    for (double x : values) failed += std::isnan(x) ? 1 : 0;
    dist.failures[e] = failed;
    if (static_cast<double>(failed) > spec.max_failure_rate * static_cast<double>(spec.replicates)) {
      dist.aborted[e] = std::string("bootstrap aborted for ") + to_string(e) + ": undefined in " +
                        std::to_string(failed) + " of " + std::to_string(spec.replicates) + " replicates";
      dist.warnings.push_back(dist.aborted[e]);
    } else if (failed > 0) {
      dist.warnings.push_back(std::string(to_string(e)) + ": " + std::to_string(failed) +
                              " failed replicates excluded");
    }
  }
  if (dist.aborted.size() == dist.aligned.size())
    throw NumericalError(dist.aborted.begin()->second);
}

void require(const BootstrapDistribution& dist, Estimand e) {
  if (auto it = dist.aborted.find(e); it != dist.aborted.end()) throw NumericalError(it->second);
  if (!dist.has(e)) throw DataError(std::string("no bootstrap replicates for ") + to_string(e));
}

}  // namespace

const char* to_string(Estimand e) {
  switch (e) {
    case Estimand::Naive: return "naive";
    case Estimand::LU: return "lu";
    case Estimand::ECB: return "ecb";
    case Estimand::Experimental: return "experimental";
  }
  return "?";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double two_sided_p_value(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> BootstrapDistribution::values(Estimand e) const {
  std::vector<double> out;
  auto it = aligned.find(e);
  if (it == aligned.end()) return out;
  for (double x : it->second)
    if (!std::isnan(x)) out.push_back(x);
  return out;
}

CellIndex::CellIndex(const CombinedDataset& d) {
  for (std::size_t i = 0; i < d.size(); ++i) rows[cell_index(d.group(i), d.treatment(i))].push_back(i);
}

CombinedDataset resample_stratified(const CombinedDataset& d, const CellIndex& cells, Engine& rng) {
  const std::size_t n = d.size();
  std::vector<Group> group;
  std::vector<std::uint8_t> treat;
  std::vector<double> y1, y2;
  group.reserve(n);
  treat.reserve(n);
  y1.reserve(n);
  y2.reserve(n);
  const auto src_y1 = d.y1_values();
  const auto src_y2 = d.y2_raw();
  for (std::size_t c = 0; c < 4; ++c) {
    const auto& rows = cells.rows[c];
    if (rows.empty()) continue;
    const auto g = static_cast<Group>(c / 2);
    const auto w = static_cast<std::uint8_t>(c % 2);
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t i = rows[pick(rng)];
      group.push_back(g);
      treat.push_back(w);
      y1.push_back(src_y1[i]);
      y2.push_back(src_y2[i]);
    }
  }
  return CombinedDataset(std::move(group), std::move(treat), std::move(y1), std::move(y2), d.provenance());
}

CombinedDataset bootstrap_replicate(const CombinedDataset& d, const BootstrapSpec& spec, std::size_t b) {
  const CellIndex cells(d);
  auto rng = make_engine(spec.seed, b);
  return resample_stratified(d, cells, rng);
}

BootstrapDistribution bootstrap_serial(const CombinedDataset& d, const BootstrapSpec& spec) {
  bool with_experimental = false;
  auto dist = prepare(d, spec, with_experimental);
  const CellIndex cells(d);
  for (std::size_t b = 0; b < spec.replicates; ++b) {
    auto rng = make_engine(spec.seed, b);
    store(dist, b, evaluate(resample_stratified(d, cells, rng), with_experimental));
  }
  finish(dist, spec);
  return dist;
}

BootstrapDistribution bootstrap(const CombinedDataset& d, const BootstrapSpec& spec) {
  bool with_experimental = false;
  auto dist = prepare(d, spec, with_experimental);
  const CellIndex cells(d);
  std::vector<ReplicateValues> results(spec.replicates);
  const auto reps = static_cast<std::int64_t>(spec.replicates);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < reps; ++b) {
    auto rng = make_engine(spec.seed, static_cast<std::uint64_t>(b));
    results[static_cast<std::size_t>(b)] = evaluate(resample_stratified(d, cells, rng), with_experimental);
  }
  for (std::size_t b = 0; b < spec.replicates; ++b) store(dist, b, results[b]);
  finish(dist, spec);
  return dist;
}

std::map<Estimand, StandardError> standard_errors(const BootstrapDistribution& dist) {
  const double z = normal_quantile(0.5 + dist.ci_level / 2.0);
  std::map<Estimand, StandardError> out;
  for (const auto& [e, point] : dist.point) {
    if (!dist.has(e)) continue;
    const auto values = dist.values(e);
    if (values.size() < 2)
      throw NumericalError(std::string("too few successful replicates for ") + to_string(e));
    StandardError s;
    s.point = point;
    s.se = sample_sd(values);
    s.ci = {point - z * s.se, point + z * s.se};
    out[e] = s;
  }
  return out;
}

double difference_se(const BootstrapDistribution& dist, Estimand a, Estimand b) {
  require(dist, a);
  require(dist, b);
  const auto& ra = dist.aligned.at(a);
  const auto& rb = dist.aligned.at(b);
  std::vector<double> diff;
  diff.reserve(ra.size());
  for (std::size_t i = 0; i < ra.size(); ++i)
    if (!std::isnan(ra[i]) && !std::isnan(rb[i])) diff.push_back(ra[i] - rb[i]);
  return sample_sd(diff);
}

TestResult wald_difference_test(const BootstrapDistribution& dist, Estimand a, Estimand b,
                                double point_a, double point_b) {
  const double sd = difference_se(dist, a, b);
  if (!(sd > 0.0)) throw NumericalError("degenerate difference distribution");
  TestResult t;
  t.null_description = std::string("H0: theta_") + to_string(a) + " = theta_" + to_string(b);
  t.statistic = (point_a - point_b) / sd;
  t.p_value = two_sided_p_value(t.statistic);
  t.warnings = dist.warnings;
  return t;
}

std::vector<TestResult> lalonde_tests(const BootstrapDistribution& dist) {
  if (!dist.aligned.count(Estimand::Experimental)) throw DataError("experimental long-term outcome unavailable");
  const double e = dist.point.at(Estimand::Experimental);
  return {wald_difference_test(dist, Estimand::LU, Estimand::Experimental, dist.point.at(Estimand::LU), e),
          wald_difference_test(dist, Estimand::ECB, Estimand::Experimental, dist.point.at(Estimand::ECB), e)};
}

std::vector<TestResult> lalonde_tests(const CombinedDataset& d, const BootstrapSpec& spec) {
  if (!d.experimental_y2_available()) throw DataError("experimental long-term outcome unavailable");
  return lalonde_tests(bootstrap(d, spec));
}

}  // namespace bracket
