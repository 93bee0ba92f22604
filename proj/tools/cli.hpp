#pragma once

// The dirac3 command-line tool. run_cli() is the whole program; main() only
// forwards argv, so tests drive it in-process.
//
// Exit codes: 0 success, 1 a validate check failed, 2 weight matrix not
// positive definite, 3 invalid input or violated precondition, 4 a search or
// numerical check came up empty.

#include "dirac3/dirac3.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dirac3::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kPdFailure = 2, kInvalid = 3, kNotFound = 4 };

struct RunConfig {
  std::string delta = "0,0,0";
  int N = 3;
  double t = 0.0;
  std::vector<double> t_list;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "json";
  int workers = 1;

  // factor source: at most one of these
  std::optional<double> f_const;
  std::string f_file;
  std::string f_json;
  bool f_random = false;
  int degree = 2;
  double amplitude = 0.3;

  int cluster = 1;  // 1-based index among positive clusters of the flat spectrum
  double lambda_max = 3.0;
  int max_degree = 2;
  int trials = 50;
  int clusters = 3;
  std::optional<double> tau;
  double residual_bound = 1e-8;
  bool vectors = false;
  bool allow_large_t = false;
  int samples = 10000;
  int cases = 4;
};

namespace detail {

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

inline void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  static const std::vector<std::string> known = {
      "delta", "N", "t", "t_list", "seed", "out", "format", "workers", "f", "f_const", "f_file", "f_random",
      "degree", "amplitude", "cluster", "lambda_max", "max_degree", "trials", "clusters", "tau",
      "residual_bound", "vectors", "allow_large_t", "samples", "cases"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  try {
    if (j.contains("delta")) {
      const auto& d = j.at("delta");
      if (d.is_array()) {
        const auto v = d.get<std::vector<int>>();
        if (v.size() != 3) throw ValidationError("delta must have three components");
        c.delta = std::to_string(v[0]) + "," + std::to_string(v[1]) + "," + std::to_string(v[2]);
      } else {
        c.delta = d.get<std::string>();
      }
    }
    take(j, "N", c.N);
    take(j, "t", c.t);
    take(j, "t_list", c.t_list);
    take(j, "seed", c.seed);
    take(j, "out", c.out);
    take(j, "format", c.format);
    take(j, "workers", c.workers);
    if (j.contains("f")) c.f_json = j.at("f").dump();
    if (j.contains("f_const")) c.f_const = j.at("f_const").get<double>();
    take(j, "f_file", c.f_file);
    take(j, "f_random", c.f_random);
    take(j, "degree", c.degree);
    take(j, "amplitude", c.amplitude);
    take(j, "cluster", c.cluster);
    take(j, "lambda_max", c.lambda_max);
    take(j, "max_degree", c.max_degree);
    take(j, "trials", c.trials);
    take(j, "clusters", c.clusters);
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    take(j, "residual_bound", c.residual_bound);
    take(j, "vectors", c.vectors);
    take(j, "allow_large_t", c.allow_large_t);
    take(j, "samples", c.samples);
    take(j, "cases", c.cases);
  } catch (const json::exception& e) {
    throw ValidationError("bad value in config file: " + std::string(e.what()));
  }
}

/// Value of --config (either "--config path" or "--config=path"), if present.
inline std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

inline void validate_common(const RunConfig& c) {
  if (c.N < 1 || c.N > 8) throw ValidationError("N must be in [1, 8]");
  if (c.format != "json" && c.format != "csv") throw ValidationError("format must be json or csv");
  if (c.workers < 1) throw ValidationError("workers must be >= 1");
  if (c.tau && !(*c.tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(c.residual_bound > 0.0)) throw ValidationError("residual bound must be positive");
  const int sources = (c.f_const ? 1 : 0) + (c.f_file.empty() ? 0 : 1) + (c.f_json.empty() ? 0 : 1) +
                      (c.f_random ? 1 : 0);
  if (sources > 1) throw ValidationError("give at most one of --f-const, --f-file, --f-json, --f-random");
}

struct Factor {
  ConformalFactor f;
  std::string ref;
};

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline Factor load(const RunConfig& c) {
  if (c.f_const) return {ConformalFactor::constant(*c.f_const), "const:" + format_double(*c.f_const)};
  if (!c.f_file.empty()) return {load_factor(c.f_file), "file:" + c.f_file};
  if (!c.f_json.empty()) {
    json j;
    try {
      j = json::parse(c.f_json);
    } catch (const json::exception& e) {
      throw ValidationError("inline factor is not valid JSON: " + std::string(e.what()));
    }
    return {j.get<ConformalFactor>(), "inline"};
  }
  if (c.f_random) {
    return {random_factor(c.seed, c.degree, c.amplitude),
            "random:seed=" + std::to_string(c.seed) + ",d=" + std::to_string(c.degree) +
                ",a=" + format_double(c.amplitude)};
  }
  return {ConformalFactor(), "zero"};
}

inline void check_t(const ConformalFactor& f, double t, const RunConfig& c, std::ostream& err) {
  if (in_accepted_range(f, t)) return;
  if (!c.allow_large_t) {
    throw ValidationError("|t| (max f - min f) exceeds 1 for t = " + format_double(t) +
                          "; pass --allow-large-t to run anyway");
  }
  err << "warning: t = " << t << " is outside the range where the truncation is trusted\n";
}

inline SolveOptions solve_options(const RunConfig& c, bool vectors) {
  SolveOptions o;
  o.vectors = vectors;
  o.tau_rel = c.tau;
  return o;
}

inline void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw ValidationError("cannot write " + c.out);
  file << text;
}

inline json curves_to_json(const CurveFamily& fam) {
  json tr = json::array();
  for (const auto& t : fam.trajectories) tr.push_back({{"lambda", t.lambda}, {"overlap", t.overlap}});
  return {{"t", fam.t}, {"trajectories", tr}, {"flagged", fam.flagged}, {"ambiguous", fam.ambiguous},
          {"notes", fam.notes}};
}

inline EigenCluster pick_cluster(const RunConfig& c, const SpectrumResult& flat) {
  const auto pos = flat.positive_clusters();
  if (c.cluster < 1 || static_cast<std::size_t>(c.cluster) > pos.size()) {
    throw ValidationError("cluster index " + std::to_string(c.cluster) + " out of range [1, " +
                          std::to_string(pos.size()) + "]");
  }
  const std::size_t idx = pos[static_cast<std::size_t>(c.cluster - 1)];
  if (flat.clusters[idx].lambda >= flat.modes->trusted_radius()) {
    throw ValidationError("cluster lies outside the trusted part of the truncated spectrum; raise N");
  }
  return extract_cluster(flat, idx);
}

// ---------------------------------------------------------------- commands

inline int cmd_spectrum(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Factor fac = load(c);
  const ModeSetPtr modes = build_mode_set(c.N, SpinStructure::parse(c.delta));
  if (c.t_list.size() >= 2) {
    std::vector<SpectrumResult> snaps;
    for (double t : c.t_list) {
      check_t(fac.f, t, c, err);
      snaps.push_back(deformed_spectrum(fac.f, t, modes, solve_options(c, true), fac.ref));
    }
    const CurveFamily fam = match_curves(snaps);
    if (fam.flagged) err << "warning: curve matching flagged a low-overlap step\n";
    emit(c, c.format == "csv" ? curves_csv(fam) : dump(curves_to_json(fam)), out);
    return kOk;
  }
  const double t = c.t_list.empty() ? c.t : c.t_list.front();
  check_t(fac.f, t, c, err);
  const SpectrumResult s = deformed_spectrum(fac.f, t, modes, solve_options(c, c.vectors), fac.ref);
  emit(c, c.format == "csv" ? spectrum_csv(s) : dump(spectrum_to_json(s, c.vectors)), out);
  if (c.vectors && s.residual_max > c.residual_bound) {
    err << "error: residual " << s.residual_max << " exceeds bound " << c.residual_bound << "\n";
    return kNotFound;
  }
  return kOk;
}

inline int cmd_oracle(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (!(c.lambda_max >= 0.0)) throw ValidationError("lambda_max must be >= 0");
  const SpinStructure spin = SpinStructure::parse(c.delta);
  const auto lines = closed_form_spectrum(spin, c.lambda_max, true);
  emit(c, c.format == "csv" ? oracle_csv(lines) : dump(oracle_to_json(spin, c.lambda_max, lines)), out);
  return kOk;
}

inline int cmd_perturb(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Factor fac = load(c);
  const SpectrumResult flat = flat_spectrum(build_mode_set(c.N, SpinStructure::parse(c.delta)));
  const EigenCluster cluster = pick_cluster(c, flat);
  const PerturbationReport rep = perturbation_matrix(cluster, fac.f, fac.ref);
  json j = {{"report", rep}};
  if (fac.f.sup_norm() > 0.0) {
    const std::vector<double> ts = c.t_list.empty() ? std::vector<double>{1e-2, 1e-3, 1e-4} : c.t_list;
    j["fd"] = fd_check(cluster, fac.f, ts);
  } else {
    j["fd"] = nullptr;  // f = 0 leaves the spectrum fixed
  }
  if (c.format == "csv") {
    std::ostringstream s;
    s << std::setprecision(17) << "index,rate\n";
    for (std::size_t i = 0; i < rep.rates.size(); ++i) s << i << "," << rep.rates[i] << "\n";
    emit(c, s.str(), out);
  } else {
    emit(c, dump(j), out);
  }
  return kOk;
}

inline int cmd_split_search(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const SpectrumResult flat = flat_spectrum(build_mode_set(c.N, SpinStructure::parse(c.delta)));
  const EigenCluster cluster = pick_cluster(c, flat);
  SplitOptions o;
  if (c.t != 0.0) o.t_verify = c.t;
  o.seed = c.seed;
  try {
    const SplitCertificate cert = split_search(cluster, c.max_degree, o);
    emit(c, dump(json(cert)), out);
    return kOk;
  } catch (const ExhaustionError& e) {
    err << "error: " << e.what() << "\n";
    return kNotFound;
  }
}

inline int cmd_genericity(const RunConfig& c, std::ostream& out, std::ostream&) {
  GenericityParams p;
  p.spin = SpinStructure::parse(c.delta);
  p.trials = c.trials;
  p.t = c.t == 0.0 ? 0.05 : c.t;
  p.order = c.N;
  p.degree = c.degree;
  p.amplitude = c.amplitude;
  p.seed = c.seed;
  p.clusters = c.clusters;
  p.workers = c.workers;
  const GenericityReport rep = genericity_scan(p);
  emit(c, c.format == "csv" ? genericity_csv(rep) : dump(json(rep)), out);
  return kOk;
}

inline int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream&) {
  ValidateOptions o;
  o.seed = c.seed;
  o.samples = c.samples;
  o.order = std::min(c.N, 3);
  o.cases = c.cases;
  const auto checks = run_validation(o);
  json list = json::array();
  bool all = true;
  for (const auto& ch : checks) {
    all = all && ch.pass;
    list.push_back({{"name", ch.name}, {"pass", ch.pass}, {"worst", dirac3::detail::nullable(ch.worst)},
                    {"bound", ch.bound}, {"detail", ch.detail}});
  }
  if (c.format == "csv") {
    std::ostringstream s;
    s << std::setprecision(6) << "name,pass,worst,bound\n";
    for (const auto& ch : checks) s << ch.name << "," << (ch.pass ? 1 : 0) << "," << ch.worst << "," << ch.bound << "\n";
    emit(c, s.str(), out);
  } else {
    emit(c, dump({{"all_pass", all}, {"checks", list}}), out);
  }
  return all ? kOk : kCheckFailed;
}

}  // namespace detail

/// args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    if (const auto path = detail::find_config(args)) detail::apply_config_file(*path, cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  CLI::App app{"Dirac spectra of conformally deformed flat 3-tori"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--delta", cfg.delta, "spin structure a,b,c with entries in {0,1}");
    sub->add_option("--N", cfg.N, "Fourier truncation order (1..8)");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--out", cfg.out, "output file (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv");
    sub->add_option("--workers", cfg.workers, "worker threads");
    sub->add_option("--tau", cfg.tau, "relative clustering tolerance");
  };
  auto factor = [&](CLI::App* sub) {
    sub->add_option("--t", cfg.t, "deformation parameter");
    sub->add_option("--t-list", cfg.t_list, "several t values");
    sub->add_option("--f-const", cfg.f_const, "constant factor c");
    sub->add_option("--f-file", cfg.f_file, "factor JSON file");
    sub->add_option("--f-json", cfg.f_json, "inline factor JSON");
    sub->add_flag("--f-random", cfg.f_random, "random factor from --seed, --degree, --amplitude");
    sub->add_option("--degree", cfg.degree, "degree of the random factor");
    sub->add_option("--amplitude", cfg.amplitude, "sup-norm of the random factor");
    sub->add_flag("--allow-large-t", cfg.allow_large_t, "run outside the accepted t range with a warning");
  };

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the (deformed) Dirac operator");
  common(spectrum);
  factor(spectrum);
  spectrum->add_flag("--vectors", cfg.vectors, "include eigenvectors in the JSON artifact");
  spectrum->add_option("--residual-bound", cfg.residual_bound, "max accepted eigen-residual");

  auto* oracle = app.add_subcommand("oracle", "closed-form flat spectrum");
  common(oracle);
  oracle->add_option("--lambda-max", cfg.lambda_max, "largest |lambda| listed");

  auto* perturb = app.add_subcommand("perturb", "first-order rates of a flat cluster");
  common(perturb);
  factor(perturb);
  perturb->add_option("--cluster", cfg.cluster, "1-based positive cluster index");

  auto* split = app.add_subcommand("split-search", "find a factor that splits a cluster");
  common(split);
  split->add_option("--t", cfg.t, "verification t (default 0.05)");
  split->add_option("--cluster", cfg.cluster, "1-based positive cluster index");
  split->add_option("--max-degree", cfg.max_degree, "largest frequency searched");

  auto* generic = app.add_subcommand("genericity", "Monte Carlo simplicity scan");
  common(generic);
  generic->add_option("--t", cfg.t, "deformation parameter (default 0.05)");
  generic->add_option("--trials", cfg.trials, "number of trials");
  generic->add_option("--degree", cfg.degree, "degree of the random factors");
  generic->add_option("--amplitude", cfg.amplitude, "sup-norm of the random factors");
  generic->add_option("--clusters", cfg.clusters, "positive clusters examined per trial");

  auto* validate = app.add_subcommand("validate", "run the invariant suite");
  common(validate);
  validate->add_option("--samples", cfg.samples, "random samples for the algebra laws");
  validate->add_option("--cases", cfg.cases, "random cases per operator check");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  try {
    detail::validate_common(cfg);
    if (spectrum->parsed()) return detail::cmd_spectrum(cfg, out, err);
    if (oracle->parsed()) return detail::cmd_oracle(cfg, out, err);
    if (perturb->parsed()) return detail::cmd_perturb(cfg, out, err);
    if (split->parsed()) return detail::cmd_split_search(cfg, out, err);
    if (generic->parsed()) return detail::cmd_genericity(cfg, out, err);
    return detail::cmd_validate(cfg, out, err);
  } catch (const PdFailure& e) {
    err << "error: " << e.what() << "\n";
    return kPdFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kNotFound;
  }
}

}  // namespace dirac3::cli
