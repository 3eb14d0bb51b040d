#include "bracket/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bracket/error.hpp"
#include "bracket/estimands.hpp"

namespace bracket {

PhiSpec PhiSpec::linear() {
  PhiSpec p;
  p.family_ = Family::Linear;
  p.fn_ = [](double y, double rho) { return rho * y; };
  return p;
}

PhiSpec PhiSpec::custom(Map fn, std::optional<Interval> domain) {
  if (!fn) throw UsageError("custom phi requires a callable");
  PhiSpec p;
  p.family_ = Family::Custom;
  p.fn_ = std::move(fn);
  p.domain_ = domain;
  return p;
}

PhiSpec PhiSpec::tabulated(std::vector<double> knots, std::vector<double> values) {
  if (knots.size() < 2 || knots.size() != values.size())
    throw UsageError("tabulated phi needs at least two (knot, value) pairs");
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (!(knots[k] > knots[k - 1])) throw UsageError("tabulated phi knots must be strictly increasing");
  const Interval domain{knots.front(), knots.back()};
  auto shape = [knots = std::move(knots), values = std::move(values)](double y) {
    auto it = std::upper_bound(knots.begin(), knots.end(), y);
    std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - knots.begin()), knots.size() - 1);
    std::size_t lo = hi - 1;
    const double t = (y - knots[lo]) / (knots[hi] - knots[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
  };
  return custom([shape](double y, double rho) { return y + (rho - 1.0) * shape(y); }, domain);
}

double PhiSpec::operator()(double y, double rho) const {
  if (domain_ && (y < domain_->low || y > domain_->high)) {
    std::ostringstream msg;
    msg << "phi evaluated at " << y << " outside its tabulated range [" << domain_->low << ", "
        << domain_->high << "]";
    throw DataError(msg.str());
  }
  return fn_(y, rho);
}

double centering_anchor(const CombinedDataset& d) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.group(i) == Group::Experimental && d.treatment(i) == 0) {
      sum += d.y1(i);
      ++n;
    }
  }
  if (n == 0) throw DataError("empty cell (G=E, W=0): cannot centre short-term outcomes");
  return sum / static_cast<double>(n);
}

std::vector<double> centered_y1(const CombinedDataset& d) {
  const double anchor = centering_anchor(d);
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d.y1(i) - anchor;
  return out;
}

SensitivityModel::SensitivityModel(const CombinedDataset& d, PhiSpec phi) : phi_(std::move(phi)) {
  const auto m = compute_moments(d);
  p1_ = m.treat_prob(Group::Observational);
  theta_ecb_ = estimate_ecb(d);
  const auto centered = centered_y1(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.treatment(i) != 0) continue;
    (d.group(i) == Group::Experimental ? centered_e0_ : centered_o0_).push_back(centered[i]);
  }
}

double SensitivityModel::delta(double rho) const {
  auto mean_gap = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double y : v) s += phi_(y, rho) - y;
    return s / static_cast<double>(v.size());
  };
  return mean_gap(centered_e0_) / p1_ - mean_gap(centered_o0_) / p1_;
}

double SensitivityModel::linear_slope() const {
  // Δ̂ is affine in ρ̄ for the linear family and vanishes at 1.
  return delta(2.0);
}

double delta(const CombinedDataset& d, const PhiSpec& phi, double rho) {
  return SensitivityModel(d, phi).delta(rho);
}

double delta_linear_closed_form(const CombinedDataset& d, double rho) {
  const auto m = compute_moments(d);
  const double anchor = m.mean(Outcome::Y1, 0, Group::Experimental);
  const double centered_e = m.mean(Outcome::Y1, 0, Group::Experimental) - anchor;
  const double centered_o = m.mean(Outcome::Y1, 0, Group::Observational) - anchor;
  return (rho - 1.0) * (centered_e - centered_o) / m.treat_prob(Group::Observational);
}

double adjusted_ecb(const CombinedDataset& d, const PhiSpec& phi, double rho) {
  return SensitivityModel(d, phi).adjusted(rho);
}

double solve_rho_star(const SensitivityModel& model, double target, Interval bracket) {
  if (model.phi().family() == PhiSpec::Family::Linear) {
    const double k = model.linear_slope();
    const double gap = model.theta_ecb() - target;
    if (gap == 0.0) return 1.0;
    if (k == 0.0 || !std::isfinite(k))
      throw NumericalError("target not attainable: adjusted ECB estimate is constant in rho");
    return 1.0 + gap / k;
  }
  if (!(bracket.low < bracket.high)) throw UsageError("rho bracket must satisfy low < high");
  double lo = bracket.low, hi = bracket.high;
  double f_lo = model.adjusted(lo) - target;
  double f_hi = model.adjusted(hi) - target;
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) throw NumericalError("target not bracketed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = model.adjusted(mid) - target;
    if (std::abs(f_mid) <= kRootTolerance || mid == lo || mid == hi) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double solve_rho_star(const CombinedDataset& d, const PhiSpec& phi, double target, Interval bracket) {
  return solve_rho_star(SensitivityModel(d, phi), target, bracket);
}

SensitivityCurve sensitivity_curve(const CombinedDataset& d, const PhiSpec& phi, double rho_min,
                                   double rho_max, std::size_t steps, std::optional<double> target) {
  if (!(rho_min < rho_max)) throw UsageError("rho_min must be smaller than rho_max");
  if (steps < 2) throw UsageError("sensitivity grid needs at least 2 steps");
  const SensitivityModel model(d, phi);
  SensitivityCurve c;
  c.rho.resize(steps);
  for (std::size_t k = 0; k < steps; ++k)
    c.rho[k] = rho_min + (rho_max - rho_min) * static_cast<double>(k) / static_cast<double>(steps - 1);
  c.rho.back() = rho_max;
  for (double r : c.rho) {
    c.delta.push_back(model.delta(r));
    c.adjusted.push_back(model.theta_ecb() - c.delta.back());
  }
  c.target = target;
  if (target) {
    try {
      c.rho_star = solve_rho_star(model, *target, {rho_min, rho_max});
    } catch (const NumericalError& e) {
      c.rho_star_note = e.what();
    }
  }
  return c;
}

}  // namespace bracket
