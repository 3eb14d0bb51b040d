#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bracket/dataset.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(BRACKET_FIXTURES) + "/" + name; }

inline bracket::CombinedDataset load_fixture(const std::string& name) {
  return bracket::load_csv_file(fixture(name));
}

inline bracket::ObservationRow row(bracket::Group g, int w, double y1, std::optional<double> y2 = std::nullopt) {
  bracket::ObservationRow r;
  r.group = g;
  r.treatment = w;
  r.y1 = y1;
  r.y2 = y2;
  return r;
}

inline bracket::CombinedDataset from_rows(const std::vector<bracket::ObservationRow>& rows) {
  return bracket::CombinedDataset(rows);
}

/// Negates y1 and y2 everywhere.
inline bracket::CombinedDataset mirrored(const bracket::CombinedDataset& d) {
  std::vector<bracket::ObservationRow> rows;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto r = d.row(i);
    r.y1 = -r.y1;
    if (r.y2) r.y2 = -*r.y2;
    rows.push_back(r);
  }
  return from_rows(rows);
}

struct RandomDatasetOptions {
  std::size_t min_cell = 3;
  std::size_t max_cell = 40;
  bool experimental_y2 = false;
  bool labels = false;
  // Integer-valued outcomes produce ties and exercise duplicate handling.
  bool integer_valued = false;
};

/// Every cell non-empty; the O-untreated cell has at least two distinct y1.
inline bracket::CombinedDataset random_dataset(std::mt19937_64& rng, const RandomDatasetOptions& opt = {}) {
  using bracket::Group;
  std::uniform_int_distribution<std::size_t> size(opt.min_cell, opt.max_cell);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  std::uniform_int_distribution<int> small(-5, 5);
  const char* colours[] = {"red", "green", "blue"};
  const char* sexes[] = {"f", "m"};
  std::uniform_int_distribution<int> pick3(0, 2), pick2(0, 1);
  std::vector<bracket::ObservationRow> rows;
  for (Group g : {Group::Experimental, Group::Observational}) {
    for (int w : {0, 1}) {
      const std::size_t n = size(rng);
      const double mu = shift(rng);
      for (std::size_t k = 0; k < n; ++k) {
        double y1 = opt.integer_valued ? small(rng) : mu + noise(rng);
        if (g == Group::Observational && w == 0 && k < 2) y1 = static_cast<double>(k) + mu;
        const double y2 = opt.integer_valued ? y1 + small(rng) : 0.3 + 0.8 * y1 + 0.5 * noise(rng);
        auto r = row(g, w, y1);
        if (g == Group::Observational || opt.experimental_y2) r.y2 = y2;
        if (opt.labels) {
          r.labels["colour"] = colours[pick3(rng)];
          r.labels["sex"] = sexes[pick2(rng)];
        }
        rows.push_back(r);
      }
    }
  }
  std::shuffle(rows.begin(), rows.end(), rng);
  return from_rows(rows);
}

// Reference implementations computed straight from rows, independent of the
// library's cell-moment code path.
struct Oracle {
  double n[2][2] = {};     // [g][w]
  double s1[2][2] = {};    // sum y1
  double s2[2][2] = {};    // sum y2
  double sxx = 0, sxy = 0;

  explicit Oracle(const bracket::CombinedDataset& d) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const int g = static_cast<int>(d.group(i));
      const int w = d.treatment(i);
      n[g][w] += 1;
      s1[g][w] += d.y1(i);
      if (d.y2(i)) s2[g][w] += *d.y2(i);
    }
    const double mx = mean1(1, 0), my = mean2(1, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.group(i) != bracket::Group::Observational || d.treatment(i) != 0) continue;
      sxx += (d.y1(i) - mx) * (d.y1(i) - mx);
      sxy += (d.y1(i) - mx) * (*d.y2(i) - my);
    }
  }
  double mean1(int g, int w) const { return s1[g][w] / n[g][w]; }
  double mean2(int g, int w) const { return s2[g][w] / n[g][w]; }
  double p1() const { return n[1][1] / (n[1][0] + n[1][1]); }
  double slope() const { return sxy / sxx; }
  double intercept() const { return mean2(1, 0) - slope() * mean1(1, 0); }
  double naive() const { return mean2(1, 1) - mean2(1, 0); }
  double lu() const {
    const double p = p1();
    return mean2(1, 1) + (1 - p) * mean2(1, 0) / p - (intercept() + slope() * mean1(0, 0)) / p;
  }
  double ecb() const {
    const double p = p1();
    return mean2(1, 1) + mean1(1, 0) / p - mean1(0, 0) / p - mean2(1, 0);
  }
};

}  // namespace testing_support
