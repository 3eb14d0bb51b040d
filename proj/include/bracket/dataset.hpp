#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bracket {

enum class Group : std::uint8_t { Experimental = 0, Observational = 1 };

const char* to_string(Group g);

struct ObservationRow {
  Group group = Group::Experimental;
  int treatment = 0;
  double y1 = 0.0;
  std::optional<double> y2;
  std::map<std::string, std::string> labels;

  bool operator==(const ObservationRow&) const = default;
};

/// Index of a (group, treatment) cell in arrays of length 4.
constexpr std::size_t cell_index(Group g, int w) {
  return static_cast<std::size_t>(g) * 2 + static_cast<std::size_t>(w);
}

/// Column-oriented store of the combined experimental/observational sample.
///
/// Row invariants (checked on construction): treatment is 0 or 1, y1 is
/// finite, y2 is finite when present, and every observational row carries y2.
/// Cell overlap is not a construction invariant; see validate().
class CombinedDataset {
 public:
  CombinedDataset() = default;
  explicit CombinedDataset(std::span<const ObservationRow> rows, std::string provenance = {});

  /// Bulk constructor used by the simulator and the bootstrap. Absent y2 is NaN.
  CombinedDataset(std::vector<Group> group, std::vector<std::uint8_t> treatment,
                  std::vector<double> y1, std::vector<double> y2, std::string provenance = {});

  std::size_t size() const { return y1_.size(); }
  bool empty() const { return y1_.empty(); }

  Group group(std::size_t i) const { return group_[i]; }
  int treatment(std::size_t i) const { return treatment_[i]; }
  double y1(std::size_t i) const { return y1_[i]; }
  std::optional<double> y2(std::size_t i) const;
  bool has_y2(std::size_t i) const;
  ObservationRow row(std::size_t i) const;

  std::span<const Group> groups() const { return group_; }
  std::span<const std::uint8_t> treatments() const { return treatment_; }
  std::span<const double> y1_values() const { return y1_; }
  /// Raw long-term outcomes; NaN marks an absent value.
  std::span<const double> y2_raw() const { return y2_; }

  const std::vector<std::string>& label_names() const { return label_names_; }
  bool has_label(const std::string& name) const;
  const std::string& label(const std::string& name, std::size_t i) const;

  const std::string& provenance() const { return provenance_; }

  /// True when every experimental row carries y2 (and there is at least one).
  bool experimental_y2_available() const;

  /// Rows in the order given by `indices`; labels are carried along.
  CombinedDataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const CombinedDataset& other) const;

 private:
  void check_rows() const;

  std::vector<Group> group_;
  std::vector<std::uint8_t> treatment_;
  std::vector<double> y1_;
  std::vector<double> y2_;
  std::vector<std::string> label_names_;
  std::vector<std::vector<std::string>> label_values_;  // [label][row]
  std::string provenance_;
};

struct ValidationReport {
  std::array<std::size_t, 4> cell_counts{};  // by cell_index
  std::size_t missing_y2_in_observational = 0;
  bool overlap_ok = false;
  std::vector<std::string> messages;

  std::size_t count(Group g, int w) const { return cell_counts[cell_index(g, w)]; }
  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate(const CombinedDataset& d);

struct CsvSchema {
  std::string group_column = "g";
  std::string treatment_column = "w";
  std::string y1_column = "y1";
  std::string y2_column = "y2";
  /// Lower-cased token -> group. Matching is case-insensitive.
  std::map<std::string, Group> group_aliases = {{"e", Group::Experimental},
                                                {"o", Group::Observational}};
};

/// Parses a header-first CSV. Columns other than the four schema columns become
/// subgroup labels. Quoted fields are supported; embedded newlines are not.
CombinedDataset load_csv(std::istream& in, const CsvSchema& schema = {},
                         std::string provenance = {});
CombinedDataset load_csv_file(const std::string& path, const CsvSchema& schema = {});

/// Writes the dataset so that load_csv(write_csv(d)) == d. Numbers use the
/// shortest round-trip representation.
void write_csv(std::ostream& out, const CombinedDataset& d, const CsvSchema& schema = {});

/// Conjunction of label=value terms.
using SubgroupPredicate = std::vector<std::pair<std::string, std::string>>;

/// Parses "k=v[,k=v...]"; an empty string yields the empty predicate.
SubgroupPredicate parse_predicate(const std::string& text);

CombinedDataset filter_subgroup(const CombinedDataset& d, const SubgroupPredicate& predicate);

}  // namespace bracket
