#include "bracket/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/tokenizer.hpp>

#include "bracket/error.hpp"

namespace bracket {

namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string escape_field(const std::string& s) {
  bool needs_quotes = s.find_first_of(",\"\\") != std::string::npos || s != trim(s);
  if (!needs_quotes) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  using Sep = boost::escaped_list_separator<char>;
  try {
    boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
    return {tok.begin(), tok.end()};
  } catch (const boost::escaped_list_error& e) {
    throw DataError("line " + std::to_string(line_no) + ": malformed row (" + e.what() + ")");
  }
}

}  // namespace

const char* to_string(Group g) { return g == Group::Experimental ? "E" : "O"; }

CombinedDataset::CombinedDataset(std::span<const ObservationRow> rows, std::string provenance)
    : provenance_(std::move(provenance)) {
  group_.reserve(rows.size());
  treatment_.reserve(rows.size());
  y1_.reserve(rows.size());
  y2_.reserve(rows.size());
  if (!rows.empty()) {
    for (const auto& [name, value] : rows.front().labels) label_names_.push_back(name);
    label_values_.resize(label_names_.size());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.treatment != 0 && r.treatment != 1)
      throw DataError("row " + std::to_string(i) + ": treatment must be 0 or 1");
    group_.push_back(r.group);
    treatment_.push_back(static_cast<std::uint8_t>(r.treatment));
    y1_.push_back(r.y1);
    y2_.push_back(r.y2 ? *r.y2 : kAbsent);
    if (r.labels.size() != label_names_.size())
      throw DataError("row " + std::to_string(i) + ": inconsistent subgroup labels");
    for (std::size_t k = 0; k < label_names_.size(); ++k) {
      auto it = r.labels.find(label_names_[k]);
      if (it == r.labels.end())
        throw DataError("row " + std::to_string(i) + ": missing label '" + label_names_[k] + "'");
      label_values_[k].push_back(it->second);
    }
  }
  check_rows();
}

CombinedDataset::CombinedDataset(std::vector<Group> group, std::vector<std::uint8_t> treatment,
                                 std::vector<double> y1, std::vector<double> y2,
                                 std::string provenance)
    : group_(std::move(group)),
      treatment_(std::move(treatment)),
      y1_(std::move(y1)),
      y2_(std::move(y2)),
      provenance_(std::move(provenance)) {
  if (group_.size() != y1_.size() || treatment_.size() != y1_.size() || y2_.size() != y1_.size())
    throw DataError("dataset columns have different lengths");
  check_rows();
}

void CombinedDataset::check_rows() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (treatment_[i] > 1) throw DataError("row " + std::to_string(i) + ": treatment must be 0 or 1");
    if (!std::isfinite(y1_[i])) throw DataError("row " + std::to_string(i) + ": y1 is not finite");
    if (std::isinf(y2_[i])) throw DataError("row " + std::to_string(i) + ": y2 is not finite");
    if (group_[i] == Group::Observational && std::isnan(y2_[i]))
      throw DataError("row " + std::to_string(i) + ": observational row missing long-term outcome");
  }
}

std::optional<double> CombinedDataset::y2(std::size_t i) const {
  if (std::isnan(y2_[i])) return std::nullopt;
  return y2_[i];
}

bool CombinedDataset::has_y2(std::size_t i) const { return !std::isnan(y2_[i]); }

ObservationRow CombinedDataset::row(std::size_t i) const {
  ObservationRow r{group_[i], treatment_[i], y1_[i], y2(i), {}};
  for (std::size_t k = 0; k < label_names_.size(); ++k) r.labels[label_names_[k]] = label_values_[k][i];
  return r;
}

bool CombinedDataset::has_label(const std::string& name) const {
  return std::find(label_names_.begin(), label_names_.end(), name) != label_names_.end();
}

const std::string& CombinedDataset::label(const std::string& name, std::size_t i) const {
  auto it = std::find(label_names_.begin(), label_names_.end(), name);
  if (it == label_names_.end()) throw DataError("unknown subgroup label '" + name + "'");
  return label_values_[static_cast<std::size_t>(it - label_names_.begin())][i];
}

bool CombinedDataset::experimental_y2_available() const {
  bool any = false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (group_[i] != Group::Experimental) continue;
    if (std::isnan(y2_[i])) return false;
    any = true;
  }
  return any;
}

CombinedDataset CombinedDataset::subset(std::span<const std::size_t> indices) const {
  CombinedDataset out;
  out.provenance_ = provenance_;
  out.label_names_ = label_names_;
  out.label_values_.resize(label_names_.size());
  out.group_.reserve(indices.size());
  out.treatment_.reserve(indices.size());
  out.y1_.reserve(indices.size());
  out.y2_.reserve(indices.size());
  for (std::size_t i : indices) {
    out.group_.push_back(group_[i]);
    out.treatment_.push_back(treatment_[i]);
    out.y1_.push_back(y1_[i]);
    out.y2_.push_back(y2_[i]);
    for (std::size_t k = 0; k < label_names_.size(); ++k)
      out.label_values_[k].push_back(label_values_[k][i]);
  }
  return out;
}

bool CombinedDataset::operator==(const CombinedDataset& other) const {
  if (size() != other.size() || label_names_ != other.label_names_) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (group_[i] != other.group_[i] || treatment_[i] != other.treatment_[i] ||
        y1_[i] != other.y1_[i] || y2(i) != other.y2(i))
      return false;
  }
  return label_values_ == other.label_values_;
}

ValidationReport validate(const CombinedDataset& d) {
  ValidationReport rep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    ++rep.cell_counts[cell_index(d.group(i), d.treatment(i))];
    if (d.group(i) == Group::Observational && !d.has_y2(i)) ++rep.missing_y2_in_observational;
  }
  bool cells_ok = true;
  for (Group g : {Group::Experimental, Group::Observational}) {
    for (int w : {0, 1}) {
      if (rep.count(g, w) == 0) {
        cells_ok = false;
        rep.messages.push_back(std::string("empty cell (G=") + to_string(g) +
                               ", W=" + std::to_string(w) + ")");
      }
    }
  }
  if (rep.missing_y2_in_observational > 0)
    rep.messages.push_back(std::to_string(rep.missing_y2_in_observational) +
                           " observational rows missing long-term outcome");
  rep.overlap_ok = cells_ok && rep.missing_y2_in_observational == 0;
  return rep;
}

CombinedDataset load_csv(std::istream& in, const CsvSchema& schema, std::string provenance) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line, line_no);
      break;
    }
  }
  if (header.empty()) throw DataError("CSV input has no header");
  for (auto& h : header) h = std::string(trim(h));

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto g_col = find_col(schema.group_column);
  auto w_col = find_col(schema.treatment_column);
  auto y1_col = find_col(schema.y1_column);
  auto y2_col = find_col(schema.y2_column);
  if (!g_col || !w_col || !y1_col)
    throw DataError("CSV header must contain columns '" + schema.group_column + "', '" +
                    schema.treatment_column + "' and '" + schema.y1_column + "'");

  std::vector<std::size_t> label_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != *g_col && c != *w_col && c != *y1_col && (!y2_col || c != *y2_col)) label_cols.push_back(c);

  std::vector<ObservationRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, line_no);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != header.size())
      throw DataError(where + "malformed row (expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()) + ")");
    ObservationRow r;
    auto token = lower(std::string(trim(fields[*g_col])));
    auto alias = schema.group_aliases.find(token);
    if (alias == schema.group_aliases.end())
      throw DataError(where + "unknown group token '" + fields[*g_col] + "'");
    r.group = alias->second;

    auto w = parse_number(fields[*w_col]);
    if (!w || (*w != 0.0 && *w != 1.0)) throw DataError(where + "treatment must be 0 or 1");
    r.treatment = static_cast<int>(*w);

    auto y1 = parse_number(fields[*y1_col]);
    if (!y1 || !std::isfinite(*y1)) throw DataError(where + "y1 missing or not a finite number");
    r.y1 = *y1;

    if (y2_col && !trim(fields[*y2_col]).empty()) {
      auto y2 = parse_number(fields[*y2_col]);
      if (!y2 || !std::isfinite(*y2)) throw DataError(where + "y2 is not a finite number");
      r.y2 = *y2;
    }
    if (r.group == Group::Observational && !r.y2)
      throw DataError(where + "observational row missing long-term outcome");

    for (std::size_t c : label_cols) r.labels[header[c]] = std::string(trim(fields[c]));
    rows.push_back(std::move(r));
  }
  return CombinedDataset(rows, std::move(provenance));
}

CombinedDataset load_csv_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return load_csv(in, schema, path);
}

void write_csv(std::ostream& out, const CombinedDataset& d, const CsvSchema& schema) {
  auto token_for = [&](Group g) {
    for (const auto& [alias, grp] : schema.group_aliases) {
      if (grp == g) {
        std::string t = alias;
        std::transform(t.begin(), t.end(), t.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        return t;
      }
    }
    return std::string(to_string(g));
  };
  out << escape_field(schema.group_column) << ',' << escape_field(schema.treatment_column) << ','
      << escape_field(schema.y1_column) << ',' << escape_field(schema.y2_column);
  for (const auto& name : d.label_names()) out << ',' << escape_field(name);
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << token_for(d.group(i)) << ',' << d.treatment(i) << ',' << format_number(d.y1(i)) << ',';
    if (auto y2 = d.y2(i)) out << format_number(*y2);
    for (const auto& name : d.label_names()) out << ',' << escape_field(d.label(name, i));
    out << '\n';
  }
}

SubgroupPredicate parse_predicate(const std::string& text) {
  SubgroupPredicate pred;
  if (trim(text).empty()) return pred;
  std::stringstream ss(text);
  std::string term;
  while (std::getline(ss, term, ',')) {
    auto eq = term.find('=');
    if (eq == std::string::npos) throw UsageError("subgroup term '" + term + "' is not of the form k=v");
    auto key = std::string(trim(std::string_view(term).substr(0, eq)));
    auto value = std::string(trim(std::string_view(term).substr(eq + 1)));
    if (key.empty()) throw UsageError("subgroup term '" + term + "' has an empty label name");
    pred.emplace_back(std::move(key), std::move(value));
  }
  return pred;
}

CombinedDataset filter_subgroup(const CombinedDataset& d, const SubgroupPredicate& predicate) {
  for (const auto& [name, value] : predicate)
    if (!d.has_label(name)) throw DataError("unknown subgroup label '" + name + "'");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    bool ok = std::all_of(predicate.begin(), predicate.end(),
                          [&](const auto& term) { return d.label(term.first, i) == term.second; });
    if (ok) keep.push_back(i);
  }
  return d.subset(keep);
}

}  // namespace bracket
