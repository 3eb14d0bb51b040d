#include "bracket/estimands.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bracket/error.hpp"

namespace bracket {

namespace {

std::string cell_name(Group g, int w) {
  return std::string("(G=") + to_string(g) + ", W=" + std::to_string(w) + ")";
}

// Plug-in pieces shared by the LU and ECB formulas.
struct PlugIn {
  double y2_treated_o, y2_untreated_o, y1_untreated_o, y1_untreated_e;
  double p1;
};

PlugIn plug_in(const Moments& m) {
  return {m.mean(Outcome::Y2, 1, Group::Observational), m.mean(Outcome::Y2, 0, Group::Observational),
          m.mean(Outcome::Y1, 0, Group::Observational), m.mean(Outcome::Y1, 0, Group::Experimental),
          m.treat_prob(Group::Observational)};
}

double lu_from(const PlugIn& p, const LinearFit& fit) {
  // The fit is linear, so Ê[m̂(Y1)|W=0,E] = m̂(Ê[Y1|W=0,E]).
  const double mean_fitted_e = fit(p.y1_untreated_e);
  return p.y2_treated_o + (1.0 - p.p1) * p.y2_untreated_o / p.p1 - mean_fitted_e / p.p1;
}

double ecb_from(const PlugIn& p) {
  return p.y2_treated_o + p.y1_untreated_o / p.p1 - p.y1_untreated_e / p.p1 - p.y2_untreated_o;
}

}  // namespace

double Moments::treat_prob(Group g) const {
  const auto n1 = static_cast<double>(n(1, g));
  const auto n0 = static_cast<double>(n(0, g));
  return n1 / (n0 + n1);
}

Moments compute_moments(const CombinedDataset& d) {
  Moments m;
  std::array<double, 4> sum_y1{}, sum_y2{};
  std::array<std::size_t, 4> n_y2{};
  const auto groups = d.groups();
  const auto treat = d.treatments();
  const auto y1 = d.y1_values();
  const auto y2 = d.y2_raw();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto c = cell_index(groups[i], treat[i]);
    ++m.cell_n[c];
    sum_y1[c] += y1[i];
    if (!std::isnan(y2[i])) {
      sum_y2[c] += y2[i];
      ++n_y2[c];
    }
  }
  for (Group g : {Group::Experimental, Group::Observational}) {
    for (int w : {0, 1}) {
      const auto c = cell_index(g, w);
      if (m.cell_n[c] == 0) throw DataError("empty cell " + cell_name(g, w));
      m.cond_mean[0][c] = sum_y1[c] / static_cast<double>(m.cell_n[c]);
      m.cond_mean[1][c] = n_y2[c] == m.cell_n[c] ? sum_y2[c] / static_cast<double>(n_y2[c])
                                                 : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return m;
}

LinearFit fit_control_regression(const CombinedDataset& d) {
  const auto groups = d.groups();
  const auto treat = d.treatments();
  const auto y1 = d.y1_values();
  const auto y2 = d.y2_raw();
  std::size_t n = 0;
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (groups[i] != Group::Observational || treat[i] != 0) continue;
    ++n;
    sx += y1[i];
    sy += y2[i];
  }
  if (n < 2) throw NumericalError("control regression ill-posed: fewer than 2 untreated observational rows");
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (groups[i] != Group::Observational || treat[i] != 0) continue;
    const double dx = y1[i] - mx;
    sxx += dx * dx;
    sxy += dx * (y2[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("control regression ill-posed: y1 constant in untreated observational cell");
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double resid = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (groups[i] != Group::Observational || treat[i] != 0) continue;
    resid += y2[i] - fit(y1[i]);
  }
  fit.residual_mean = resid / static_cast<double>(n);
  return fit;
}

double estimate_naive(const CombinedDataset& d) {
  const auto m = compute_moments(d);
  return m.mean(Outcome::Y2, 1, Group::Observational) - m.mean(Outcome::Y2, 0, Group::Observational);
}

double estimate_lu(const CombinedDataset& d) {
  return lu_from(plug_in(compute_moments(d)), fit_control_regression(d));
}

double estimate_ecb(const CombinedDataset& d) { return ecb_from(plug_in(compute_moments(d))); }

double estimate_experimental(const CombinedDataset& d) {
  if (!d.experimental_y2_available()) throw DataError("experimental long-term outcome unavailable");
  const auto m = compute_moments(d);
  return m.mean(Outcome::Y2, 1, Group::Experimental) - m.mean(Outcome::Y2, 0, Group::Experimental);
}

PsiDiagnostic estimate_psi(const CombinedDataset& d, double tol) {
  const auto fit = fit_control_regression(d);
  PsiDiagnostic psi;
  psi.psi_intercept = fit.intercept;
  psi.psi_slope = fit.slope - 1.0;
  psi.tolerance = tol;
  psi.non_increasing = psi.psi_slope <= tol;
  return psi;
}

EstimateReport estimate_all(const CombinedDataset& d, double tol) {
  EstimateReport r;
  r.moments = compute_moments(d);
  r.control_fit = fit_control_regression(d);
  const auto p = plug_in(r.moments);
  r.theta_naive = p.y2_treated_o - p.y2_untreated_o;
  r.theta_lu = lu_from(p, r.control_fit);
  r.theta_ecb = ecb_from(p);
  if (d.experimental_y2_available())
    r.theta_experimental = r.moments.mean(Outcome::Y2, 1, Group::Experimental) -
                           r.moments.mean(Outcome::Y2, 0, Group::Experimental);
  r.psi.psi_intercept = r.control_fit.intercept;
  r.psi.psi_slope = r.control_fit.slope - 1.0;
  r.psi.tolerance = tol;
  r.psi.non_increasing = r.psi.psi_slope <= tol;
  return r;
}

double SignedDifference::residual() const { return std::abs(scaled_gap - psi_contrast); }

SignedDifference signed_difference(const CombinedDataset& d, const EstimateReport& est) {
  SignedDifference s;
  s.scaled_gap = est.moments.treat_prob(Group::Observational) * (est.theta_lu - est.theta_ecb);
  double growth_o = 0.0, psi_e = 0.0;
  std::size_t n_o = 0, n_e = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.treatment(i) != 0) continue;
    if (d.group(i) == Group::Observational) {
      growth_o += *d.y2(i) - d.y1(i);
      ++n_o;
    } else {
      psi_e += est.control_fit(d.y1(i)) - d.y1(i);
      ++n_e;
    }
  }
  s.psi_contrast = growth_o / static_cast<double>(n_o) - psi_e / static_cast<double>(n_e);
  return s;
}

}  // namespace bracket
