#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "bracket/dataset.hpp"

namespace bracket {

enum class Outcome { Y1 = 0, Y2 = 1 };

/// Sample cell means and treatment frequencies.
struct Moments {
  // [outcome][cell_index]; NaN where undefined (y2 absent in a cell).
  std::array<std::array<double, 4>, 2> cond_mean{};
  std::array<std::size_t, 4> cell_n{};

  double mean(Outcome o, int w, Group g) const {
    return cond_mean[static_cast<std::size_t>(o)][cell_index(g, w)];
  }
  std::size_t n(int w, Group g) const { return cell_n[cell_index(g, w)]; }
  /// P̂(W=1 | G=g).
  double treat_prob(Group g) const;
};

/// OLS of y2 on y1 (with intercept) over the untreated observational cell.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::size_t n = 0;
  double residual_mean = 0.0;

  double operator()(double y) const { return intercept + slope * y; }
};

/// Ψ̂(y) = m̂(y) − y, summarised through its linear coefficients.
struct PsiDiagnostic {
  double psi_intercept = 0.0;
  double psi_slope = 0.0;
  bool non_increasing = false;
  double tolerance = 0.0;
};

inline constexpr double kDefaultPsiTolerance = 1e-9;

struct EstimateReport {
  double theta_naive = 0.0;
  double theta_lu = 0.0;
  double theta_ecb = 0.0;
  std::optional<double> theta_experimental;
  Moments moments;
  LinearFit control_fit;
  PsiDiagnostic psi;
};

Moments compute_moments(const CombinedDataset& d);
LinearFit fit_control_regression(const CombinedDataset& d);

double estimate_naive(const CombinedDataset& d);
double estimate_lu(const CombinedDataset& d);
double estimate_ecb(const CombinedDataset& d);
double estimate_experimental(const CombinedDataset& d);
PsiDiagnostic estimate_psi(const CombinedDataset& d, double tol = kDefaultPsiTolerance);

EstimateReport estimate_all(const CombinedDataset& d, double tol = kDefaultPsiTolerance);

/// The two sides of the sample signed-difference identity
///   P̂(W=1|O)·(θ̂_LU − θ̂_ECB)  and  Ê[Y2−Y1|0,O] − Ê[m̂(Y1)−Y1|0,E],
/// each computed along its own path (cell moments vs. row-wise differences).
struct SignedDifference {
  double scaled_gap = 0.0;
  double psi_contrast = 0.0;
  double residual() const;
};

SignedDifference signed_difference(const CombinedDataset& d, const EstimateReport& est);

}  // namespace bracket
