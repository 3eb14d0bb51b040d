#include "bracket/bracketing.hpp"

#include <cmath>
#include <sstream>

namespace bracket {

BracketReport bracket_report(const CombinedDataset& d, const BracketConfig& config) {
  BracketReport r;
  r.estimates = estimate_all(d, config.psi_tol);
  r.dominance = dominance_report(d, config.dominance);
  r.psi_ok = r.estimates.psi.non_increasing;
  r.identity_residual = signed_difference(d, r.estimates).residual();

  if (!r.psi_ok) r.flags.push_back("psi slope positive: non-explosive condition fails");
  if (r.identity_residual > kIdentityTolerance) r.flags.push_back("signed-difference identity residual exceeds tolerance");
  if (r.dominance.tie) r.flags.push_back("dominance tie: untreated short-term distributions coincide on the grid");

  if (config.bootstrap) {
    const auto dist = bootstrap(d, *config.bootstrap);
    if (dist.has(Estimand::LU) && dist.has(Estimand::ECB))
      r.se_difference = difference_se(dist, Estimand::LU, Estimand::ECB);
    else
      r.flags.push_back("no bootstrap SE for the LU-ECB difference: an estimand was aborted");
  }

  const double lu = r.estimates.theta_lu;
  const double ecb = r.estimates.theta_ecb;
  switch (r.dominance.verdict) {
    case DominanceVerdict::DominanceI:
      r.direction = BracketDirection::I;
      r.lower = lu;
      r.upper = ecb;
      break;
    case DominanceVerdict::DominanceII:
      r.direction = BracketDirection::II;
      r.lower = ecb;
      r.upper = lu;
      break;
    case DominanceVerdict::Inconclusive:
      r.flags.push_back("dominance inconclusive: no ordered bounds");
      return r;
  }
  if (*r.lower > *r.upper) {
    r.flags.push_back("empirical ordering contradicts dominance direction");
    if (r.se_difference && *r.lower - *r.upper > config.contradiction_se_multiple * *r.se_difference) {
      std::ostringstream msg;
      msg << "dominance/estimate inconsistency: ordering violated by more than "
          << config.contradiction_se_multiple << " bootstrap SEs";
      r.flags.push_back(msg.str());
    }
  }
  return r;
}

}  // namespace bracket
