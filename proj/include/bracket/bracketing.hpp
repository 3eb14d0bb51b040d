#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bracket/dataset.hpp"
#include "bracket/dominance.hpp"
#include "bracket/estimands.hpp"
#include "bracket/inference.hpp"

namespace bracket {

enum class BracketDirection { I, II };

struct BracketConfig {
  DominanceConfig dominance;
  double psi_tol = kDefaultPsiTolerance;
  /// When set, a bootstrap supplies SE(θ̂_LU − θ̂_ECB) for the contradiction check.
  std::optional<BootstrapSpec> bootstrap;
  /// Contradiction when the ordering is violated by more than this many SEs.
  double contradiction_se_multiple = 10.0;
};

inline constexpr double kIdentityTolerance = 1e-10;

/// Bounds on θ_ATT ordered by the dominance direction: under direction I the
/// LU estimate is the lower bound and the ECB estimate the upper bound;
/// direction II swaps them. Inconclusive dominance leaves the bounds unset.
struct BracketReport {
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<BracketDirection> direction;
  EstimateReport estimates;
  DominanceReport dominance;
  bool psi_ok = false;
  double identity_residual = 0.0;
  std::optional<double> se_difference;
  std::vector<std::string> flags;
};

BracketReport bracket_report(const CombinedDataset& d, const BracketConfig& config = {});

}  // namespace bracket
