#include "bracket/dominance.hpp"

#include <algorithm>
#include <cmath>

#include "bracket/error.hpp"
#include "bracket/inference.hpp"

namespace bracket {

namespace {

std::vector<double> untreated_y1(const CombinedDataset& d, Group g) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.group(i) == g && d.treatment(i) == 0) out.push_back(d.y1(i));
  return out;
}

struct Violations {
  double i = 0.0, ii = 0.0;
};

// Merge-walk over both sorted samples; sup of a difference of right-continuous
// step functions is attained at a support point.
Violations sweep(const std::vector<double>& sorted_o, const std::vector<double>& sorted_e) {
  Violations v;
  const double no = static_cast<double>(sorted_o.size());
  const double ne = static_cast<double>(sorted_e.size());
  std::size_t io = 0, ie = 0;
  while (io < sorted_o.size() || ie < sorted_e.size()) {
    double y;
    if (ie == sorted_e.size() || (io < sorted_o.size() && sorted_o[io] <= sorted_e[ie]))
      y = sorted_o[io];
    else
      y = sorted_e[ie];
    while (io < sorted_o.size() && sorted_o[io] <= y) ++io;
    while (ie < sorted_e.size() && sorted_e[ie] <= y) ++ie;
    const double diff = static_cast<double>(io) / no - static_cast<double>(ie) / ne;
    v.i = std::max(v.i, diff);
    v.ii = std::max(v.ii, -diff);
  }
  return v;
}

DominanceVerdict decide(const Violations& v, double tol, bool& tie) {
  const bool dir_i = v.i <= tol;
  const bool dir_ii = v.ii <= tol;
  tie = dir_i && dir_ii;
  if (dir_i) return DominanceVerdict::DominanceI;
  if (dir_ii) return DominanceVerdict::DominanceII;
  return DominanceVerdict::Inconclusive;
}

}  // namespace

EcdfCurve::EcdfCurve(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.empty()) throw DataError("empirical CDF of an empty cell");
  std::sort(sorted_.begin(), sorted_.end());
  const double n = static_cast<double>(sorted_.size());
  for (std::size_t k = 0; k < sorted_.size(); ++k) {
    if (k + 1 < sorted_.size() && sorted_[k + 1] == sorted_[k]) continue;
    support_.push_back(sorted_[k]);
    cdf_.push_back(static_cast<double>(k + 1) / n);
  }
  cdf_.back() = 1.0;
}

double EcdfCurve::operator()(double y) const {
  if (sorted_.empty()) return 0.0;
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), y);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

EcdfCurve ecdf(const CombinedDataset& d, int w, Group g) {
  std::vector<double> values;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.group(i) == g && d.treatment(i) == w) values.push_back(d.y1(i));
  if (values.empty())
    throw DataError(std::string("empirical CDF of an empty cell (G=") + to_string(g) + ", W=" +
                    std::to_string(w) + ")");
  return EcdfCurve(std::move(values));
}

const char* to_string(DominanceVerdict v) {
  switch (v) {
    case DominanceVerdict::DominanceI: return "DominanceI";
    case DominanceVerdict::DominanceII: return "DominanceII";
    case DominanceVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

DominanceReport dominance_report(const CombinedDataset& d, const DominanceConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  DominanceReport r;
  r.curve_o = ecdf(d, 0, Group::Observational);
  r.curve_e = ecdf(d, 0, Group::Experimental);

  if (config.grid_size == 0) {
    std::set_union(r.curve_o.support().begin(), r.curve_o.support().end(), r.curve_e.support().begin(),
                   r.curve_e.support().end(), std::back_inserter(r.grid));
    r.grid.erase(std::unique(r.grid.begin(), r.grid.end()), r.grid.end());
  } else {
    const double lo = std::min(r.curve_o.support().front(), r.curve_e.support().front());
    const double hi = std::max(r.curve_o.support().back(), r.curve_e.support().back());
    if (config.grid_size == 1) {
      r.grid.push_back(hi);
    } else {
      for (std::size_t k = 0; k < config.grid_size; ++k)
        r.grid.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(config.grid_size - 1));
      r.grid.back() = hi;
    }
  }

  const double z = normal_quantile(1.0 - config.alpha / 2.0);
  const double no = static_cast<double>(r.curve_o.n());
  const double ne = static_cast<double>(r.curve_e.n());
  Violations v;
  for (double y : r.grid) {
    const double fo = r.curve_o(y);
    const double fe = r.curve_e(y);
    r.f_o.push_back(fo);
    r.f_e.push_back(fe);
    r.band_o.push_back(z * std::sqrt(fo * (1.0 - fo) / no));
    r.band_e.push_back(z * std::sqrt(fe * (1.0 - fe) / ne));
    v.i = std::max(v.i, fo - fe);
    v.ii = std::max(v.ii, fe - fo);
  }
  r.violation_i = v.i;
  r.violation_ii = v.ii;
  r.verdict = decide(v, config.tol, r.tie);
  switch (r.verdict) {
    case DominanceVerdict::DominanceI: r.max_violation = v.i; break;
    case DominanceVerdict::DominanceII: r.max_violation = v.ii; break;
    case DominanceVerdict::Inconclusive: r.max_violation = std::min(v.i, v.ii); break;
  }
  return r;
}

DominanceVerdict dominance_verdict(const CombinedDataset& d, double tol) {
  auto o = untreated_y1(d, Group::Observational);
  auto e = untreated_y1(d, Group::Experimental);
  if (o.empty() || e.empty()) throw DataError("dominance requires both untreated cells");
  std::sort(o.begin(), o.end());
  std::sort(e.begin(), e.end());
  bool tie = false;
  return decide(sweep(o, e), tol, tie);
}

}  // namespace bracket
