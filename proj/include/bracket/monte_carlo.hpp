#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bracket/dgp.hpp"
#include "bracket/dominance.hpp"
#include "bracket/estimands.hpp"

namespace bracket {

struct McConfig {
  std::size_t reps = 200;
  std::uint64_t seed = 0;
  double psi_tol = kDefaultPsiTolerance;
  /// Dominance tolerance is multiplier·sqrt((n_O0 + n_E0)/(n_O0·n_E0)), a
  /// two-sample KS critical value; 0 demands exact sample dominance.
  double dominance_ks_multiplier = 1.63;
  /// When set, Δ̂(ρ̄) (linear family) and the adjusted ECB estimate are recorded.
  std::optional<double> sensitivity_rho;
  /// Replicates per rep; 0 disables SEs, coverage and the LaLonde tests.
  std::size_t bootstrap_replicates = 0;
  double alpha = 0.05;
  bool mask_experimental_y2 = true;
  /// Abort when more than this fraction of reps fails.
  double max_failure_rate = 0.10;
};

struct RepRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  double att = 0.0;
  double naive = 0.0, lu = 0.0, ecb = 0.0;
  std::optional<double> experimental;
  double dominance_tol = 0.0;
  DominanceVerdict verdict = DominanceVerdict::Inconclusive;
  double latent_delta = 0.0;
  std::optional<double> observed_delta;
  std::optional<double> adjusted_ecb;
  // Bootstrap quantities.
  std::map<std::string, double> se;
  std::optional<double> se_lu_minus_ecb;
  std::optional<double> p_lu_vs_experimental;
  std::optional<double> p_ecb_vs_experimental;
};

struct EstimandSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double mean_bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  /// sd/√n: Monte Carlo standard error of the mean.
  double mc_se = 0.0;
  std::optional<double> coverage;
};

struct McReport {
  std::string family;
  std::size_t reps = 0;
  std::size_t failures = 0;
  double oracle_att_mean = 0.0;
  double oracle_att_mc_se = 0.0;
  std::map<std::string, EstimandSummary> estimands;
  /// Share of reps with θ̂_LU ≤ θ̂_ECB.
  double bracketing_held = 0.0;
  /// Among DominanceI reps: share with θ̂_LU ≤ θ̂_ECB + 3·SE(θ̂_LU − θ̂_ECB).
  std::optional<double> bracketing_held_se;
  double dominance_i = 0.0, dominance_ii = 0.0, inconclusive = 0.0;
  /// observed − latent Δ across reps.
  std::optional<EstimandSummary> delta_gap;
  std::optional<double> lalonde_lu_retained;
  std::optional<double> lalonde_ecb_rejected;
  std::vector<RepRecord> records;
};

/// One rep: simulate with `seed`, then estimate. Estimation failures are
/// recorded in the result rather than thrown.
RepRecord run_rep(const DgpSpec& spec, const McConfig& config, std::size_t index);

/// Reps run in parallel; identical to monte_carlo_serial for any thread count.
McReport monte_carlo(const DgpSpec& spec, const McConfig& config);
McReport monte_carlo_serial(const DgpSpec& spec, const McConfig& config);

void write_summary_csv(std::ostream& out, const McReport& report);

}  // namespace bracket
