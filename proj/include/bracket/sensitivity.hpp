#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bracket/dataset.hpp"
#include "bracket/inference.hpp"

namespace bracket {

/// Conditional mean of the centred long-term untreated outcome as a function
/// of the centred short-term one, φ(ẏ; ρ̄). ρ̄ = 1 is the martingale case.
class PhiSpec {
 public:
  enum class Family { Linear, Custom };
  using Map = std::function<double(double y, double rho)>;

  /// φ(y; ρ̄) = ρ̄·y.
  static PhiSpec linear();
  /// Arbitrary map; evaluation outside `domain` (when given) is an error.
  static PhiSpec custom(Map fn, std::optional<Interval> domain = std::nullopt);
  /// φ(y; ρ̄) = y + (ρ̄ − 1)·h(y) with h linearly interpolated through
  /// (knots, values). Knots must be strictly increasing; no extrapolation.
  static PhiSpec tabulated(std::vector<double> knots, std::vector<double> values);

  Family family() const { return family_; }
  double operator()(double y, double rho) const;

 private:
  Family family_ = Family::Linear;
  Map fn_;
  std::optional<Interval> domain_;
};

/// Ê[Y1 | W=0, G=E], the centring constant.
double centering_anchor(const CombinedDataset& d);
/// y1 − Ê[Y1|W=0,G=E] for every row, in row order.
std::vector<double> centered_y1(const CombinedDataset& d);

/// Plug-in bias of the ECB estimand under deviation φ(·; ρ̄).
double delta(const CombinedDataset& d, const PhiSpec& phi, double rho);
/// (ρ̄ − 1)·(Ê[Ẏ1|0,E] − Ê[Ẏ1|0,O]) / P̂(W=1|O): the linear-family shortcut,
/// computed independently of delta().
double delta_linear_closed_form(const CombinedDataset& d, double rho);
double adjusted_ecb(const CombinedDataset& d, const PhiSpec& phi, double rho);

/// Precomputed pieces for repeated evaluation over a ρ̄ grid.
class SensitivityModel {
 public:
  SensitivityModel(const CombinedDataset& d, PhiSpec phi);

  double delta(double rho) const;
  double adjusted(double rho) const { return theta_ecb_ - delta(rho); }
  double theta_ecb() const { return theta_ecb_; }
  const PhiSpec& phi() const { return phi_; }
  /// Linear-family slope K with Δ̂(ρ̄) = (ρ̄ − 1)·K.
  double linear_slope() const;

 private:
  PhiSpec phi_;
  double theta_ecb_ = 0.0;
  double p1_ = 0.0;
  std::vector<double> centered_e0_;
  std::vector<double> centered_o0_;
};

inline constexpr double kRootTolerance = 1e-10;

struct SensitivityCurve {
  std::vector<double> rho;
  std::vector<double> delta;
  std::vector<double> adjusted;
  std::optional<double> target;
  std::optional<double> rho_star;
  std::string rho_star_note;
};

SensitivityCurve sensitivity_curve(const CombinedDataset& d, const PhiSpec& phi, double rho_min,
                                   double rho_max, std::size_t steps,
                                   std::optional<double> target = std::nullopt);

/// ρ̄ with θ̂_ECB(ρ̄) = target. Linear family: exact affine solve (the bracket
/// is not consulted). Otherwise bisection over `bracket`.
double solve_rho_star(const CombinedDataset& d, const PhiSpec& phi, double target,
                      Interval bracket = {0.0, 1.0});
double solve_rho_star(const SensitivityModel& model, double target, Interval bracket = {0.0, 1.0});

}  // namespace bracket
