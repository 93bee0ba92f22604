#pragma once

// JSON artifacts and CSV exports. JSON is the canonical format; every
// artifact written here reads back to an equal value. CSV is lossy.
//
// Requires nlohmann/json (vendor/json.hpp).

#include "dirac3/conformal.hpp"
#include "dirac3/eigensolver.hpp"
#include "dirac3/errors.hpp"
#include "dirac3/experiments.hpp"
#include "dirac3/perturbation.hpp"
#include "dirac3/torus.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dirac3 {

using json = nlohmann::json;

namespace detail {

inline json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline json nullable(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline double read_nullable(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

inline bool same_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

inline json matrix_to_json(const Eigen::MatrixXcd& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array();
    json ri = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"re", re}, {"im", im}};
}

inline Eigen::MatrixXcd matrix_from_json(const json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const auto rows = static_cast<Eigen::Index>(re.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(re.at(0).size());
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = cplx(re.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>(),
                     im.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>());
    }
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------- factor

inline void to_json(json& j, const ConformalFactor& f) {
  json coeffs = json::array();
  for (const auto& [m, c] : f.terms()) {
    coeffs.push_back({{"m", {m[0], m[1], m[2]}}, {"re", c.real()}, {"im", c.imag()}});
  }
  j = {{"degree", f.degree()}, {"coeffs", coeffs}};
}

inline void from_json(const json& j, ConformalFactor& f) {
  try {
    const int degree = j.at("degree").get<int>();
    std::vector<ConformalFactor::Term> terms;
    for (const auto& c : j.at("coeffs")) {
      const auto m = c.at("m").get<std::vector<int>>();
      if (m.size() != 3) throw ValidationError("factor frequency must have three components");
      terms.emplace_back(IntVec3{m[0], m[1], m[2]}, cplx(c.at("re").get<double>(), c.value("im", 0.0)));
    }
    f = ConformalFactor::from_terms(degree, terms);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed conformal factor JSON: ") + e.what());
  }
}

inline ConformalFactor load_factor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open factor file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("factor file " + path + " is not valid JSON: " + e.what());
  }
  return j.get<ConformalFactor>();
}

// ---------------------------------------------------------------- spectrum

inline void to_json(json& j, const Cluster& c) {
  j = {{"lambda", c.lambda}, {"mult_c", c.mult_c}, {"mult_h", c.mult_h}};
}

inline json spectrum_to_json(const SpectrumResult& s, bool with_vectors = false) {
  json j;
  j["meta"] = {{"delta", s.meta.delta.delta()}, {"N", s.meta.order}, {"t", s.meta.t}, {"f_ref", s.meta.f_ref}};
  j["eigenvalues"] = s.eigenvalues;
  j["clusters"] = s.clusters;
  j["residual_max"] = detail::nullable(s.residual_max);
  if (with_vectors && s.has_vectors()) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index c = 0; c < s.eigenvectors.cols(); ++c) {
      for (Eigen::Index r = 0; r < s.eigenvectors.rows(); ++r) {
        re.push_back(s.eigenvectors(r, c).real());
        im.push_back(s.eigenvectors(r, c).imag());
      }
    }
    j["eigenvectors"] = {{"rows", s.eigenvectors.rows()}, {"cols", s.eigenvectors.cols()}, {"re", re}, {"im", im}};
  }
  return j;
}

inline SpectrumResult spectrum_from_json(const json& j) {
  try {
    SpectrumResult s;
    const auto& meta = j.at("meta");
    const auto d = meta.at("delta").get<std::vector<int>>();
    if (d.size() != 3) throw ValidationError("delta must have three components");
    s.meta.delta = SpinStructure(IntVec3{d[0], d[1], d[2]});
    s.meta.order = meta.at("N").get<int>();
    s.meta.t = meta.at("t").get<double>();
    s.meta.f_ref = meta.at("f_ref").get<std::string>();
    s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    std::size_t begin = 0;
    for (const auto& c : j.at("clusters")) {
      Cluster cl;
      cl.lambda = c.at("lambda").get<double>();
      cl.mult_c = c.at("mult_c").get<int>();
      cl.mult_h = c.at("mult_h").get<int>();
      cl.begin = begin;
      cl.size = static_cast<std::size_t>(cl.mult_c);
      cl.kramers_ok = cl.mult_c % 2 == 0;
      begin += cl.size;
      s.clusters.push_back(cl);
    }
    s.residual_max = detail::read_nullable(j.at("residual_max"));
    s.modes = build_mode_set(s.meta.order, s.meta.delta);
    if (j.contains("eigenvectors")) {
      const auto& v = j.at("eigenvectors");
      const auto rows = v.at("rows").get<Eigen::Index>();
      const auto cols = v.at("cols").get<Eigen::Index>();
      const auto& re = v.at("re");
      const auto& im = v.at("im");
      s.eigenvectors.resize(rows, cols);
      std::size_t k = 0;
      for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r, ++k) {
          s.eigenvectors(r, c) = cplx(re.at(k).get<double>(), im.at(k).get<double>());
        }
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed spectrum JSON: ") + e.what());
  }
}

/// Equality of the serialized content (the weight matrix is not part of the artifact).
inline bool same_spectrum(const SpectrumResult& a, const SpectrumResult& b) {
  const auto same_clusters = [&] {
    if (a.clusters.size() != b.clusters.size()) return false;
    for (std::size_t i = 0; i < a.clusters.size(); ++i) {
      const Cluster& x = a.clusters[i];
      const Cluster& y = b.clusters[i];
      if (x.lambda != y.lambda || x.mult_c != y.mult_c || x.mult_h != y.mult_h) return false;
    }
    return true;
  };
  return a.meta == b.meta && a.eigenvalues == b.eigenvalues && same_clusters() &&
         detail::same_double(a.residual_max, b.residual_max) && detail::same_matrix(a.eigenvectors, b.eigenvectors);
}

inline std::string spectrum_csv(const SpectrumResult& s) {
  std::ostringstream out;
  out << std::setprecision(17) << "lambda,mult_complex,mult_quaternionic\n";
  for (const auto& c : s.clusters) out << c.lambda << "," << c.mult_c << "," << c.mult_h << "\n";
  return out.str();
}

inline std::string oracle_csv(const std::vector<SpectralLine>& lines) {
  std::ostringstream out;
  out << std::setprecision(17) << "lambda,mult_complex,mult_quaternionic\n";
  for (const auto& l : lines) out << l.lambda << "," << l.mult_c << "," << l.mult_h << "\n";
  return out.str();
}

inline json oracle_to_json(const SpinStructure& spin, double lambda_max, const std::vector<SpectralLine>& lines) {
  json rows = json::array();
  for (const auto& l : lines) rows.push_back({{"lambda", l.lambda}, {"mult_c", l.mult_c}, {"mult_h", l.mult_h}});
  return {{"delta", spin.delta()}, {"lambda_max", lambda_max}, {"lines", rows}};
}

inline std::string curves_csv(const CurveFamily& fam) {
  std::ostringstream out;
  out << std::setprecision(17) << "t,trajectory_id,lambda\n";
  for (std::size_t k = 0; k < fam.t.size(); ++k) {
    for (std::size_t i = 0; i < fam.trajectories.size(); ++i) {
      out << fam.t[k] << "," << i << "," << fam.trajectories[i].lambda[k] << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------- perturbation

inline void to_json(json& j, const PerturbationReport& r) {
  j = {{"lambda", r.lambda},
       {"f_ref", r.f_ref},
       {"rates", r.rates},
       {"quaternionic_rates", r.quaternionic_rates},
       {"min_gap", detail::nullable(r.min_gap)},
       {"j_closed", r.j_closed},
       {"pairing_ok", r.pairing_ok},
       {"P", detail::matrix_to_json(r.P)}};
}

inline void from_json(const json& j, PerturbationReport& r) {
  r.lambda = j.at("lambda").get<double>();
  r.f_ref = j.at("f_ref").get<std::string>();
  r.rates = j.at("rates").get<std::vector<double>>();
  r.quaternionic_rates = j.at("quaternionic_rates").get<std::vector<double>>();
  r.min_gap = j.at("min_gap").is_null() ? std::nullopt : std::optional<double>(j.at("min_gap").get<double>());
  r.j_closed = j.at("j_closed").get<bool>();
  r.pairing_ok = j.at("pairing_ok").get<bool>();
  r.P = detail::matrix_from_json(j.at("P"));
}

inline bool same_report(const PerturbationReport& a, const PerturbationReport& b) {
  return a.lambda == b.lambda && a.f_ref == b.f_ref && a.rates == b.rates &&
         a.quaternionic_rates == b.quaternionic_rates && a.min_gap == b.min_gap && a.j_closed == b.j_closed &&
         a.pairing_ok == b.pairing_ok && detail::same_matrix(a.P, b.P);
}

inline void to_json(json& j, const FdRow& r) {
  j = {{"t", r.t}, {"max_mismatch", r.max_mismatch}, {"gap", detail::nullable(r.gap)}, {"observed", r.observed}};
}

inline void from_json(const json& j, FdRow& r) {
  r.t = j.at("t").get<double>();
  r.max_mismatch = j.at("max_mismatch").get<double>();
  r.gap = j.at("gap").is_null() ? std::numeric_limits<double>::infinity() : j.at("gap").get<double>();
  r.observed = j.at("observed").get<std::vector<double>>();
}

inline void to_json(json& j, const FdReport& r) {
  json orders = json::array();
  for (double o : r.pairwise_orders) orders.push_back(detail::nullable(o));
  j = {{"lambda", r.lambda},
       {"rates", r.rates},
       {"rows", r.rows},
       {"pairwise_orders", orders},
       {"fitted_order", detail::nullable(r.fitted_order)}};
}

inline void from_json(const json& j, FdReport& r) {
  r.lambda = j.at("lambda").get<double>();
  r.rates = j.at("rates").get<std::vector<double>>();
  r.rows = j.at("rows").get<std::vector<FdRow>>();
  r.pairwise_orders.clear();
  for (const auto& o : j.at("pairwise_orders")) r.pairwise_orders.push_back(detail::read_nullable(o));
  r.fitted_order = detail::read_nullable(j.at("fitted_order"));
}

// ---------------------------------------------------------------- experiments

inline void to_json(json& j, const CandidateRecord& c) {
  j = {{"label", c.label}, {"quaternionic_rates", c.quaternionic_rates}, {"spread", c.spread}, {"verified", c.verified}};
}

inline void from_json(const json& j, CandidateRecord& c) {
  c.label = j.at("label").get<std::string>();
  c.quaternionic_rates = j.at("quaternionic_rates").get<std::vector<double>>();
  c.spread = j.at("spread").get<double>();
  c.verified = j.at("verified").get<bool>();
}

inline void to_json(json& j, const SplitCertificate& c) {
  j = {{"lambda", c.lambda},
       {"p_h", c.p_h},
       {"factor_label", c.factor_label},
       {"factor", c.factor},
       {"rates", c.rates},
       {"quaternionic_rates", c.quaternionic_rates},
       {"rate_gap", c.rate_gap},
       {"t_verify", c.t_verify},
       {"predicted", c.predicted},
       {"observed", c.observed},
       {"post_split_mult_h", c.post_split_mult_h},
       {"max_mismatch", c.max_mismatch},
       {"tried", c.tried}};
}

inline void from_json(const json& j, SplitCertificate& c) {
  c.lambda = j.at("lambda").get<double>();
  c.p_h = j.at("p_h").get<int>();
  c.factor_label = j.at("factor_label").get<std::string>();
  c.factor = j.at("factor").get<ConformalFactor>();
  c.rates = j.at("rates").get<std::vector<double>>();
  c.quaternionic_rates = j.at("quaternionic_rates").get<std::vector<double>>();
  c.rate_gap = j.at("rate_gap").get<double>();
  c.t_verify = j.at("t_verify").get<double>();
  c.predicted = j.at("predicted").get<std::vector<double>>();
  c.observed = j.at("observed").get<std::vector<double>>();
  c.post_split_mult_h = j.at("post_split_mult_h").get<std::vector<int>>();
  c.max_mismatch = j.at("max_mismatch").get<double>();
  c.tried = j.at("tried").get<std::vector<CandidateRecord>>();
}

inline void to_json(json& j, const TrialRecord& r) {
  j = {{"trial", r.trial},         {"factor_seed", r.factor_seed}, {"lambdas", r.lambdas},
       {"mult_h", r.mult_h},       {"all_simple", r.all_simple},   {"error", r.error}};
}

inline void from_json(const json& j, TrialRecord& r) {
  r.trial = j.at("trial").get<int>();
  r.factor_seed = j.at("factor_seed").get<std::uint64_t>();
  r.lambdas = j.at("lambdas").get<std::vector<double>>();
  r.mult_h = j.at("mult_h").get<std::vector<int>>();
  r.all_simple = j.at("all_simple").get<bool>();
  r.error = j.at("error").get<std::string>();
}

/// The worker count is an execution detail and is not serialized.
inline void to_json(json& j, const GenericityReport& r) {
  const auto& p = r.params;
  j = {{"params",
        {{"delta", p.spin.delta()},
         {"trials", p.trials},
         {"t", p.t},
         {"N", p.order},
         {"degree", p.degree},
         {"amplitude", p.amplitude},
         {"seed", p.seed},
         {"clusters", p.clusters}}},
       {"trials", r.trials},
       {"fraction_all_simple", r.fraction_all_simple},
       {"failures", r.failures}};
}

inline void from_json(const json& j, GenericityReport& r) {
  const auto& p = j.at("params");
  const auto d = p.at("delta").get<std::vector<int>>();
  r.params.spin = SpinStructure(IntVec3{d.at(0), d.at(1), d.at(2)});
  r.params.trials = p.at("trials").get<int>();
  r.params.t = p.at("t").get<double>();
  r.params.order = p.at("N").get<int>();
  r.params.degree = p.at("degree").get<int>();
  r.params.amplitude = p.at("amplitude").get<double>();
  r.params.seed = p.at("seed").get<std::uint64_t>();
  r.params.clusters = p.at("clusters").get<int>();
  r.params.workers = 1;
  r.trials = j.at("trials").get<std::vector<TrialRecord>>();
  r.fraction_all_simple = j.at("fraction_all_simple").get<double>();
  r.failures = j.at("failures").get<std::vector<int>>();
}

inline bool same_report(const GenericityReport& a, const GenericityReport& b) {
  GenericityParams pa = a.params;
  GenericityParams pb = b.params;
  pa.workers = pb.workers = 1;
  return pa == pb && a.trials == b.trials && a.fraction_all_simple == b.fraction_all_simple &&
         a.failures == b.failures;
}

inline std::string genericity_csv(const GenericityReport& r) {
  std::ostringstream out;
  out << std::setprecision(17) << "trial,factor_seed,all_simple,mult_h,error\n";
  for (const auto& t : r.trials) {
    out << t.trial << "," << t.factor_seed << "," << (t.all_simple ? 1 : 0) << ",";
    for (std::size_t i = 0; i < t.mult_h.size(); ++i) out << (i ? ";" : "") << t.mult_h[i];
    out << "," << t.error << "\n";
  }
  return out.str();
}

inline void to_json(json& j, const SimplicityReport& r) {
  j = {{"k", r.k},
       {"pass", r.pass},
       {"kernel_empty", r.kernel_empty},
       {"kernel_dim", r.kernel_dim},
       {"positives", r.positives},
       {"negatives", r.negatives}};
  if (r.offending) {
    j["offending"] = {{"side", r.offending->side},
                      {"first", r.offending->first},
                      {"second", r.offending->second},
                      {"value", r.offending->value}};
  } else {
    j["offending"] = nullptr;
  }
}

inline void from_json(const json& j, SimplicityReport& r) {
  r.k = j.at("k").get<int>();
  r.pass = j.at("pass").get<bool>();
  r.kernel_empty = j.at("kernel_empty").get<bool>();
  r.kernel_dim = j.at("kernel_dim").get<int>();
  r.positives = j.at("positives").get<std::vector<double>>();
  r.negatives = j.at("negatives").get<std::vector<double>>();
  r.offending.reset();
  if (!j.at("offending").is_null()) {
    const auto& o = j.at("offending");
    r.offending = OffendingPair{o.at("side").get<int>(), o.at("first").get<int>(), o.at("second").get<int>(),
                                o.at("value").get<double>()};
  }
}

/// Canonical text form of an artifact: two-space indent, trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace dirac3
