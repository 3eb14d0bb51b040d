#pragma once

#include <cstddef>
#include <vector>

#include "bracket/dataset.hpp"

namespace bracket {

/// Right-continuous empirical CDF.
class EcdfCurve {
 public:
  EcdfCurve() = default;
  /// Throws DataError on an empty sample.
  explicit EcdfCurve(std::vector<double> sample);

  double operator()(double y) const;
  std::size_t n() const { return sorted_.size(); }
  /// Distinct support points, ascending.
  const std::vector<double>& support() const { return support_; }
  /// F̂ at each support point.
  const std::vector<double>& cdf() const { return cdf_; }

 private:
  std::vector<double> sorted_;
  std::vector<double> support_;
  std::vector<double> cdf_;
};

EcdfCurve ecdf(const CombinedDataset& d, int w, Group g);

enum class DominanceVerdict { DominanceI, DominanceII, Inconclusive };

const char* to_string(DominanceVerdict v);

struct DominanceConfig {
  /// 0 selects the union of both supports; otherwise an evenly spaced grid.
  std::size_t grid_size = 0;
  double alpha = 0.05;
  double tol = 0.0;
};

struct DominanceReport {
  EcdfCurve curve_o;  // F̂_{Y1|W=0,G=O}
  EcdfCurve curve_e;  // F̂_{Y1|W=0,G=E}
  std::vector<double> grid;
  std::vector<double> f_o, f_e;
  std::vector<double> band_o, band_e;
  DominanceVerdict verdict = DominanceVerdict::Inconclusive;
  /// sup (F̂_O − F̂_E)+ and sup (F̂_E − F̂_O)+ over the grid.
  double violation_i = 0.0;
  double violation_ii = 0.0;
  /// Violation of the reported direction; for Inconclusive the smaller of the two.
  double max_violation = 0.0;
  /// Both directions pass within tol; reported as DominanceI.
  bool tie = false;
};

DominanceReport dominance_report(const CombinedDataset& d, const DominanceConfig& config = {});

/// Verdict only, evaluated on the union support; no bands. Used in simulation loops.
DominanceVerdict dominance_verdict(const CombinedDataset& d, double tol);

}  // namespace bracket
