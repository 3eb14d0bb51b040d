#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bracket/dataset.hpp"
#include "bracket/estimands.hpp"
#include "bracket/rng.hpp"

namespace bracket {

enum class Estimand { Naive, LU, ECB, Experimental };

const char* to_string(Estimand e);

struct BootstrapSpec {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  /// An estimand failing in more than this fraction of replicates is aborted;
  /// the whole bootstrap aborts when every estimand is.
  double max_failure_rate = 0.05;
};

/// Replicate values, aligned by replicate index (NaN marks a failed replicate).
struct BootstrapDistribution {
  std::size_t replicates = 0;
  double ci_level = 0.95;
  std::map<Estimand, double> point;
  std::map<Estimand, std::vector<double>> aligned;
  std::map<Estimand, std::size_t> failures;
  /// Estimands whose failure share exceeded the tolerance, with the diagnostic.
  /// Their replicates are kept for inspection but never used for inference.
  std::map<Estimand, std::string> aborted;
  std::vector<std::string> warnings;

  /// Present and not aborted.
  bool has(Estimand e) const { return aligned.count(e) != 0 && aborted.count(e) == 0; }
  /// Successful replicate values only, in replicate order.
  std::vector<double> values(Estimand e) const;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct StandardError {
  double point = 0.0;
  double se = 0.0;
  Interval ci;
};

struct TestResult {
  std::string null_description;
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method = "normal-approx bootstrap Wald";
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kLowReplicateWarning = 100;

double normal_cdf(double x);
double normal_quantile(double p);
/// 2·(1 − Φ(|z|)).
double two_sided_p_value(double z);
/// Sample standard deviation (denominator n − 1).
double sample_sd(const std::vector<double>& v);

/// Row indices of each (G, W) cell, by cell_index.
struct CellIndex {
  std::array<std::vector<std::size_t>, 4> rows;
  explicit CellIndex(const CombinedDataset& d);
};

/// Draws every cell's rows with replacement, preserving cell sizes. Labels are
/// not carried over.
CombinedDataset resample_stratified(const CombinedDataset& d, const CellIndex& cells, Engine& rng);

/// Dataset used for replicate `b` (0-based) under `spec`.
CombinedDataset bootstrap_replicate(const CombinedDataset& d, const BootstrapSpec& spec, std::size_t b);

/// Stratified joint bootstrap; replicates are evaluated in parallel and the
/// result is identical to bootstrap_serial for any thread count.
BootstrapDistribution bootstrap(const CombinedDataset& d, const BootstrapSpec& spec);
BootstrapDistribution bootstrap_serial(const CombinedDataset& d, const BootstrapSpec& spec);

/// Aborted estimands are omitted (see BootstrapDistribution::aborted).
std::map<Estimand, StandardError> standard_errors(const BootstrapDistribution& dist);

/// Bootstrap SD of θ̂_a − θ̂_b over replicates where both succeeded.
double difference_se(const BootstrapDistribution& dist, Estimand a, Estimand b);

TestResult wald_difference_test(const BootstrapDistribution& dist, Estimand a, Estimand b,
                                double point_a, double point_b);

/// H0: θ_LU = θ_E and H0: θ_ECB = θ_E, in that order.
std::vector<TestResult> lalonde_tests(const BootstrapDistribution& dist);
std::vector<TestResult> lalonde_tests(const CombinedDataset& d, const BootstrapSpec& spec);

}  // namespace bracket
