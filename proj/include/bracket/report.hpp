#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bracket/bracketing.hpp"
#include "bracket/dataset.hpp"
#include "bracket/dominance.hpp"
#include "bracket/estimands.hpp"
#include "bracket/inference.hpp"
#include "bracket/monte_carlo.hpp"
#include "bracket/sensitivity.hpp"

namespace bracket {

using ojson = nlohmann::ordered_json;

/// Non-finite values serialise as null.
ojson number(double x);

ojson to_json(const ValidationReport& v);
ojson to_json(const EstimateReport& e);
ojson to_json(const std::map<Estimand, StandardError>& ses);
ojson to_json(const TestResult& t);
/// Grid, both curves and bands; the ECDF support itself is not repeated.
ojson to_json(const DominanceReport& d);
ojson to_json(const BracketReport& b);
ojson to_json(const SensitivityCurve& c);
ojson to_json(const McReport& r, bool include_records = true);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Run record written next to every artifact. Worker count and output location
/// are deliberately absent so that outputs do not depend on them.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> input_sha256;  // path as given -> digest
  std::optional<std::uint64_t> seed;
  ojson parameters = ojson::object();
  std::vector<std::string> outputs;
};

ojson to_json(const Manifest& m);

const char* tool_version();

}  // namespace bracket
