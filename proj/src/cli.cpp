#include "bracket/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <omp.h>

#include "bracket/bracketing.hpp"
#include "bracket/dgp.hpp"
#include "bracket/error.hpp"
#include "bracket/monte_carlo.hpp"
#include "bracket/report.hpp"
#include "bracket/sensitivity.hpp"

namespace bracket {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string data;
  std::string subgroup;
  std::size_t bootstrap = 0;
  std::optional<std::uint64_t> seed;
  double alpha = 0.05;
  double rho_min = 0.0;
  double rho_max = 1.0;
  std::size_t steps = 101;
  std::optional<double> target;
  std::string dgp;
  std::size_t reps = 200;
  std::string mask = "true";
  std::string out = "bracket-out";
  int threads = 0;
  std::size_t grid = 0;
  double tol = 0.0;
  std::optional<double> sensitivity_rho;
};

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class Runner {
 public:
  Runner(std::string command, const Options& opt, std::ostream& out)
      : opt_(opt), out_(out) {
    manifest_.command = std::move(command);
  }

  CombinedDataset load() {
    if (opt_.data.empty()) throw UsageError("--data is required");
    auto d = load_csv_file(opt_.data);
    record_input(opt_.data);
    manifest_.parameters["data"] = opt_.data;
    if (!opt_.subgroup.empty()) {
      manifest_.parameters["subgroup"] = opt_.subgroup;
      d = filter_subgroup(d, parse_predicate(opt_.subgroup));
      if (d.empty()) throw DataError("subgroup '" + opt_.subgroup + "' selects no rows");
    }
    return d;
  }

  void record_input(const std::string& path) { manifest_.input_sha256[path] = sha256_file(path); }

  static void require_overlap(const CombinedDataset& d) {
    const auto v = validate(d);
    if (!v.overlap_ok) throw DataError(v.messages.empty() ? "overlap failure" : v.messages.front());
  }

  std::uint64_t seed() {
    if (!opt_.seed) throw UsageError("--seed is required for stochastic commands");
    manifest_.seed = opt_.seed;
    return *opt_.seed;
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path dir(opt_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw UsageError("cannot write " + (dir / name).string());
    f << content;
    manifest_.outputs.push_back(name);
  }

  void write_json(const std::string& name, const ojson& j) { write(name, j.dump(2) + "\n"); }

  // The primary report also goes to stdout.
  void emit(const std::string& name, const ojson& j) {
    write_json(name, j);
    out_ << j.dump(2) << "\n";
  }

  void finish() {
    manifest_.outputs.push_back("manifest.json");
    write_json("manifest.json", to_json(manifest_));
  }

  ojson& parameters() { return manifest_.parameters; }

 private:
  const Options& opt_;
  std::ostream& out_;
  Manifest manifest_;
};

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
}

int cmd_validate(const Options& opt, std::ostream& out) {
  Runner run("validate", opt, out);
  const auto d = run.load();
  const auto v = validate(d);
  run.emit("validation.json", to_json(v));
  run.finish();
  if (!v.overlap_ok) throw DataError(v.messages.empty() ? "overlap failure" : v.messages.front());
  return kExitOk;
}

int cmd_analyze(const Options& opt, std::ostream& out) {
  check_alpha(opt.alpha);
  Runner run("analyze", opt, out);
  const auto d = run.load();
  Runner::require_overlap(d);
  BracketConfig config;
  config.dominance.alpha = opt.alpha;
  config.dominance.grid_size = opt.grid;
  config.dominance.tol = opt.tol;
  std::optional<BootstrapDistribution> dist;
  if (opt.bootstrap > 0) {
    BootstrapSpec bs;
    bs.replicates = opt.bootstrap;
    bs.seed = run.seed();
    bs.ci_level = 1.0 - opt.alpha;
    dist = bootstrap(d, bs);
    config.bootstrap = bs;
  }
  run.parameters()["bootstrap"] = opt.bootstrap;
  run.parameters()["alpha"] = opt.alpha;
  run.parameters()["grid"] = opt.grid;
  run.parameters()["tol"] = opt.tol;

  const auto bracket = bracket_report(d, config);
  ojson report;
  report["estimates"] = to_json(bracket.estimates);
  std::map<Estimand, StandardError> ses;
  if (dist) {
    ses = standard_errors(*dist);
    report["standard_errors"] = to_json(ses);
    report["bootstrap"] = {{"replicates", dist->replicates},
                           {"ci_level", dist->ci_level},
                           {"warnings", dist->warnings}};
    ojson aborted = ojson::object();
    for (const auto& [est, why] : dist->aborted) aborted[to_string(est)] = why;
    report["bootstrap"]["aborted"] = aborted;
  }
  auto b = to_json(bracket);
  b.erase("estimates");
  report["bracket"] = b;
  run.emit("estimates.json", report);

  std::string csv = "estimand,estimate,se,ci_low,ci_high\n";
  const auto& e = bracket.estimates;
  std::vector<std::pair<Estimand, double>> rows = {
      {Estimand::Naive, e.theta_naive}, {Estimand::LU, e.theta_lu}, {Estimand::ECB, e.theta_ecb}};
  if (e.theta_experimental) rows.emplace_back(Estimand::Experimental, *e.theta_experimental);
  for (const auto& [est, value] : rows) {
    csv += std::string(to_string(est)) + "," + fmt(value) + ",";
    if (auto it = ses.find(est); it != ses.end())
      csv += fmt(it->second.se) + "," + fmt(it->second.ci.low) + "," + fmt(it->second.ci.high);
    else
      csv += ",,";
    csv += "\n";
  }
  run.write("estimates.csv", csv);
  run.finish();
  return kExitOk;
}

int cmd_dominance(const Options& opt, std::ostream& out) {
  check_alpha(opt.alpha);
  Runner run("dominance", opt, out);
  const auto d = run.load();
  Runner::require_overlap(d);
  DominanceConfig config;
  config.alpha = opt.alpha;
  config.grid_size = opt.grid;
  config.tol = opt.tol;
  run.parameters()["alpha"] = opt.alpha;
  run.parameters()["grid"] = opt.grid;
  run.parameters()["tol"] = opt.tol;
  const auto r = dominance_report(d, config);
  auto j = to_json(r);
  for (const char* key : {"grid", "cdf_observational", "cdf_experimental", "band_observational", "band_experimental"})
    j.erase(key);
  j["curve_csv"] = "dominance.csv";
  run.emit("dominance.json", j);
  std::string csv = "y1,cdf_observational,cdf_experimental,band_observational,band_experimental\n";
  for (std::size_t k = 0; k < r.grid.size(); ++k)
    csv += fmt(r.grid[k]) + "," + fmt(r.f_o[k]) + "," + fmt(r.f_e[k]) + "," + fmt(r.band_o[k]) + "," +
           fmt(r.band_e[k]) + "\n";
  run.write("dominance.csv", csv);
  run.finish();
  return kExitOk;
}

int cmd_sensitivity(const Options& opt, std::ostream& out) {
  Runner run("sensitivity", opt, out);
  const auto d = run.load();
  Runner::require_overlap(d);
  run.parameters()["rho_min"] = opt.rho_min;
  run.parameters()["rho_max"] = opt.rho_max;
  run.parameters()["steps"] = opt.steps;
  run.parameters()["target"] = opt.target ? ojson(*opt.target) : ojson(nullptr);
  const auto curve = sensitivity_curve(d, PhiSpec::linear(), opt.rho_min, opt.rho_max, opt.steps, opt.target);
  ojson j;
  j["phi"] = "linear";
  j["theta_ecb"] = number(estimate_ecb(d));
  j["target"] = curve.target ? ojson(*curve.target) : ojson(nullptr);
  j["rho_star"] = curve.rho_star ? number(*curve.rho_star) : ojson(nullptr);
  if (!curve.rho_star_note.empty()) j["rho_star_note"] = curve.rho_star_note;
  j["curve_csv"] = "sensitivity.csv";
  run.emit("sensitivity.json", j);
  std::string csv = "rho,delta,adjusted_estimate\n";
  for (std::size_t k = 0; k < curve.rho.size(); ++k)
    csv += fmt(curve.rho[k]) + "," + fmt(curve.delta[k]) + "," + fmt(curve.adjusted[k]) + "\n";
  run.write("sensitivity.csv", csv);
  run.finish();
  return kExitOk;
}

int cmd_tests(const Options& opt, std::ostream& out) {
  check_alpha(opt.alpha);
  Runner run("tests", opt, out);
  const auto d = run.load();
  Runner::require_overlap(d);
  if (!d.experimental_y2_available()) throw DataError("experimental long-term outcome unavailable");
  BootstrapSpec bs;
  bs.replicates = opt.bootstrap > 0 ? opt.bootstrap : 1000;
  bs.seed = run.seed();
  bs.ci_level = 1.0 - opt.alpha;
  run.parameters()["bootstrap"] = bs.replicates;
  run.parameters()["alpha"] = opt.alpha;
  const auto tests = lalonde_tests(d, bs);
  ojson j = ojson::array();
  std::string csv = "null,statistic,p_value,decision\n";
  for (const auto& t : tests) {
    auto tj = to_json(t);
    const char* decision = t.p_value < opt.alpha ? "reject" : "fail to reject";
    tj["decision"] = decision;
    j.push_back(tj);
    csv += t.null_description + "," + fmt(t.statistic) + "," + fmt(t.p_value) + "," + decision + "\n";
  }
  run.emit("tests.json", {{"alpha", opt.alpha}, {"tests", j}});
  run.write("tests.csv", csv);
  run.finish();
  return kExitOk;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw UsageError("--mask-experimental-y2 expects true or false");
}

int cmd_simulate(const Options& opt, std::ostream& out) {
  check_alpha(opt.alpha);
  Runner run("simulate", opt, out);
  if (opt.dgp.empty()) throw UsageError("--dgp is required");
  DgpSpec spec;
  if (fs::exists(opt.dgp)) {
    spec = load_dgp_file(opt.dgp);
    run.record_input(opt.dgp);
    run.parameters()["dgp"] = opt.dgp;
  } else {
    spec = preset(opt.dgp);
    run.parameters()["dgp"] = "preset:" + opt.dgp;
  }
  McConfig config;
  config.reps = opt.reps;
  config.seed = run.seed();
  config.alpha = opt.alpha;
  config.bootstrap_replicates = opt.bootstrap;
  config.mask_experimental_y2 = parse_bool(opt.mask);
  config.sensitivity_rho = opt.sensitivity_rho;
  run.parameters()["dgp_spec"] = to_json(spec);
  run.parameters()["reps"] = opt.reps;
  run.parameters()["bootstrap"] = opt.bootstrap;
  run.parameters()["alpha"] = opt.alpha;
  run.parameters()["mask_experimental_y2"] = config.mask_experimental_y2;
  run.parameters()["sensitivity_rho"] = opt.sensitivity_rho ? ojson(*opt.sensitivity_rho) : ojson(nullptr);
  const auto report = monte_carlo(spec, config);
  run.write_json("mc_report.json", to_json(report, true));
  out << to_json(report, false).dump(2) << "\n";
  std::ostringstream csv;
  write_summary_csv(csv, report);
  run.write("mc_summary.csv", csv.str());
  run.finish();
  return kExitOk;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numerical: return "numerical";
  }
  return "?";
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

void report_error(std::ostream& err, const char* kind, int code, std::string message) {
  for (auto& c : message)
    if (c == '\n' || c == '\r') c = ' ';
  std::string quoted;
  for (char c : message) {
    if (c == '"' || c == '\\') quoted += '\\';
    quoted += c;
  }
  err << "error kind=" << kind << " code=" << code << " message=\"" << quoted << "\"\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Bracketing long-term treatment effects from combined experimental and observational data",
               "bracket"};
  app.require_subcommand(1, 1);

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", opt.data, "CSV with columns g,w,y1,y2 plus optional labels")->required();
    sub->add_option("--subgroup", opt.subgroup, "k=v[,k=v...] restriction on label columns");
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", opt.seed, "master seed"); };
  auto add_alpha = [&](CLI::App* sub) { sub->add_option("--alpha", opt.alpha, "significance level"); };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", opt.threads, "worker cap (results do not depend on it)")
        ->check(CLI::NonNegativeNumber);
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", opt.out, "output directory"); };

  auto* validate_cmd = app.add_subcommand("validate", "check a dataset and report cell counts");
  add_data(validate_cmd);
  add_out(validate_cmd);
  add_threads(validate_cmd);

  auto* analyze = app.add_subcommand("analyze", "point estimates, bootstrap SEs and bracket");
  add_data(analyze);
  analyze->add_option("--bootstrap", opt.bootstrap, "bootstrap replicates (0 disables)");
  add_seed(analyze);
  add_alpha(analyze);
  analyze->add_option("--grid", opt.grid, "evenly spaced dominance grid size (0: union support)");
  analyze->add_option("--tol", opt.tol, "dominance tolerance");
  add_out(analyze);
  add_threads(analyze);

  auto* dominance = app.add_subcommand("dominance", "ECDF curves of untreated short-term outcomes");
  add_data(dominance);
  add_alpha(dominance);
  dominance->add_option("--grid", opt.grid, "evenly spaced grid size (0: union support)");
  dominance->add_option("--tol", opt.tol, "dominance tolerance");
  add_out(dominance);
  add_threads(dominance);

  auto* sensitivity = app.add_subcommand("sensitivity", "ECB bias curve over the persistence parameter");
  add_data(sensitivity);
  sensitivity->add_option("--rho-min", opt.rho_min);
  sensitivity->add_option("--rho-max", opt.rho_max);
  sensitivity->add_option("--steps", opt.steps);
  sensitivity->add_option("--target", opt.target, "solve for the rho giving this adjusted estimate");
  add_out(sensitivity);
  add_threads(sensitivity);

  auto* tests = app.add_subcommand("tests", "Wald tests of LU and ECB against the experimental benchmark");
  add_data(tests);
  tests->add_option("--bootstrap", opt.bootstrap, "bootstrap replicates (default 1000)");
  add_seed(tests);
  add_alpha(tests);
  add_out(tests);
  add_threads(tests);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study on a synthetic design");
  simulate->add_option("--dgp", opt.dgp, "JSON config path or preset name")->required();
  simulate->add_option("--reps", opt.reps);
  add_seed(simulate);
  simulate->add_option("--bootstrap", opt.bootstrap, "bootstrap replicates per rep (0 disables)");
  add_alpha(simulate);
  simulate->add_option("--mask-experimental-y2", opt.mask, "true|false");
  simulate->add_option("--sensitivity-rho", opt.sensitivity_rho, "record the adjusted ECB at this rho");
  add_out(simulate);
  add_threads(simulate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", kExitUsage, e.what());
    return kExitUsage;
  }

  if (opt.threads > 0) omp_set_num_threads(opt.threads);
  try {
    if (*validate_cmd) return cmd_validate(opt, out);
    if (*analyze) return cmd_analyze(opt, out);
    if (*dominance) return cmd_dominance(opt, out);
    if (*sensitivity) return cmd_sensitivity(opt, out);
    if (*tests) return cmd_tests(opt, out);
    if (*simulate) return cmd_simulate(opt, out);
  } catch (const Error& e) {
    report_error(err, kind_name(e.kind()), exit_code(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report_error(err, "numerical", kExitNumerical, e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace bracket
