#pragma once

// Genericity experiments: random conformal factors, the search for a factor
// that splits a degenerate eigenspace, Monte Carlo scans of multiplicities
// after deformation, and simplicity certificates for the first k eigenvalues
// on each side of zero.

#include "dirac3/conformal.hpp"
#include "dirac3/eigensolver.hpp"
#include "dirac3/errors.hpp"
#include "dirac3/perturbation.hpp"
#include "dirac3/torus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace dirac3 {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Runs body(i) for i in [0, count) on `workers` threads. Each index is
/// handled exactly once; callers write results into slot i.
inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(n_threads, count); ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Frequencies 0 < |m|_inf <= d with first nonzero component positive,
/// ordered by |m|^2 and then lexicographically.
inline std::vector<IntVec3> half_space_frequencies(int d) {
  std::vector<IntVec3> out;
  for (int a = -d; a <= d; ++a) {
    for (int b = -d; b <= d; ++b) {
      for (int c = -d; c <= d; ++c) {
        const IntVec3 m{a, b, c};
        const int lead = a != 0 ? a : (b != 0 ? b : c);
        if (lead > 0) out.push_back(m);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const IntVec3& x, const IntVec3& y) {
    const int nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const int ny = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    if (nx != ny) return nx < ny;
    return x < y;
  });
  return out;
}

/// Random real trigonometric polynomial of degree d: standard complex normal
/// coefficients on a half space of frequencies (real normal at m = 0),
/// mirrored by conjugation, then rescaled so that sup|f| = amplitude.
inline ConformalFactor random_factor(std::uint64_t seed, int degree, double amplitude) {
  if (degree < 1) throw ValidationError("random factor degree must be >= 1");
  if (!(amplitude >= 0.0)) throw ValidationError("random factor amplitude must be >= 0");
  if (amplitude == 0.0) return ConformalFactor();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ConformalFactor::Term> terms;
  terms.emplace_back(IntVec3{0, 0, 0}, cplx(normal(rng), 0.0));
  for (const IntVec3& m : half_space_frequencies(degree)) {
    const double re = normal(rng);
    const double im = normal(rng);
    const cplx c = cplx(re, im) / std::sqrt(2.0);
    terms.emplace_back(m, c);
    terms.emplace_back(ConformalFactor::neg(m), std::conj(c));
  }
  const ConformalFactor raw = ConformalFactor::from_terms(degree, terms);
  const double sup = raw.sup_norm();
  return raw.scaled(amplitude / sup);
}

// --------------------------------------------------------------------------
// Split search

struct CandidateRecord {
  std::string label;
  std::vector<double> quaternionic_rates;
  double spread = 0.0;
  bool verified = false;

  friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

struct SplitCertificate {
  double lambda = 0.0;
  int p_h = 0;
  std::string factor_label;
  ConformalFactor factor;
  std::vector<double> rates;
  std::vector<double> quaternionic_rates;
  double rate_gap = 0.0;  // smallest gap between distinct quaternionic rates
  double t_verify = 0.0;
  std::vector<double> predicted;   // lambda + t rates, ascending
  std::vector<double> observed;    // deformed eigenvalues of the cluster window
  std::vector<int> post_split_mult_h;
  double max_mismatch = 0.0;
  std::vector<CandidateRecord> tried;

  int max_post_split_mult_h() const {
    return post_split_mult_h.empty() ? 0 : *std::max_element(post_split_mult_h.begin(), post_split_mult_h.end());
  }

  friend bool operator==(const SplitCertificate&, const SplitCertificate&) = default;
};

struct SplitOptions {
  double t_verify = 0.05;
  /// Quaternionic rates closer than this count as equal.
  double rate_threshold = 1e-6;
  int random_candidates = 32;
  std::uint64_t seed = 0x5eedULL;
};

struct SplitVerification {
  std::vector<double> observed;
  std::vector<double> predicted;
  std::vector<int> mult_h;
  double max_mismatch = 0.0;
};

/// One deformed solve at t, restricted to the cluster's window.
inline SplitVerification verify_split(const EigenCluster& cluster, const ConformalFactor& f,
                                      const std::vector<double>& rates, double t) {
  const std::size_t p = cluster.dim_c();
  const std::size_t offset = spectrum_offset(*cluster.modes(), cluster.lambda(), p);
  const SpectrumResult s = deformed_spectrum(f, t, cluster.modes(), SolveOptions::values_only());
  SplitVerification v;
  v.observed.assign(s.eigenvalues.begin() + static_cast<std::ptrdiff_t>(offset),
                    s.eigenvalues.begin() + static_cast<std::ptrdiff_t>(offset + p));
  for (std::size_t i = 0; i < p; ++i) {
    v.predicted.push_back(cluster.lambda() + t * rates[i]);
    v.max_mismatch = std::max(v.max_mismatch, std::abs(v.observed[i] - v.predicted[i]));
  }
  for (const Cluster& c : cluster_eigenvalues(v.observed, kTauSplit)) v.mult_h.push_back(c.mult_h);
  return v;
}

/// Looks for a conformal factor whose first-order rates separate the
/// quaternionic eigenvalues of `cluster`: first cos<m,x> and sin<m,x> for
/// 0 < |m|_inf <= max_degree in order of |m|, then seeded random
/// combinations. The first candidate whose verification solve lowers the
/// largest quaternionic multiplicity is returned.
inline SplitCertificate split_search(const EigenCluster& cluster, int max_degree, const SplitOptions& opts = {}) {
  if (!cluster.j_closed() || cluster.dim_h() < 2) {
    throw PreconditionError("split search needs a J-closed cluster of quaternionic dimension >= 2");
  }
  if (max_degree < 1) throw ValidationError("max_degree must be >= 1");

  struct Candidate {
    std::string label;
    ConformalFactor f;
  };
  std::vector<Candidate> cands;
  auto tag = [](const IntVec3& m) {
    return std::to_string(m[0]) + "," + std::to_string(m[1]) + "," + std::to_string(m[2]);
  };
  for (const IntVec3& m : half_space_frequencies(max_degree)) {
    cands.push_back({"cos(" + tag(m) + ")", ConformalFactor::cosine(m)});
    cands.push_back({"sin(" + tag(m) + ")", ConformalFactor::sine(m)});
  }
  for (int r = 0; r < opts.random_candidates; ++r) {
    const std::uint64_t s = splitmix64(opts.seed + static_cast<std::uint64_t>(r));
    cands.push_back({"random#" + std::to_string(r), random_factor(s, max_degree, 1.0)});
  }

  SplitCertificate cert;
  cert.lambda = cluster.lambda();
  cert.p_h = static_cast<int>(cluster.dim_h());
  for (const auto& cand : cands) {
    const PerturbationReport rep = perturbation_matrix(cluster, cand.f, cand.label);
    CandidateRecord rec{cand.label, rep.quaternionic_rates, rep.spread(), false};
    if (rec.spread > opts.rate_threshold) {
      const SplitVerification v = verify_split(cluster, cand.f, rep.rates, opts.t_verify);
      const int worst = *std::max_element(v.mult_h.begin(), v.mult_h.end());
      if (worst < cert.p_h) {
        rec.verified = true;
        cert.tried.push_back(rec);
        cert.factor_label = cand.label;
        cert.factor = cand.f;
        cert.rates = rep.rates;
        cert.quaternionic_rates = rep.quaternionic_rates;
        cert.rate_gap = *distinct_gap(rep.quaternionic_rates, opts.rate_threshold);
        cert.t_verify = opts.t_verify;
        cert.predicted = v.predicted;
        cert.observed = v.observed;
        cert.post_split_mult_h = v.mult_h;
        cert.max_mismatch = v.max_mismatch;
        return cert;
      }
    }
    cert.tried.push_back(std::move(rec));
  }

  std::ostringstream msg;
  msg << "no candidate of degree <= " << max_degree << " split the cluster at lambda = " << cluster.lambda()
      << "; rate spreads:";
  for (const auto& rec : cert.tried) msg << "\n  " << rec.label << ": " << rec.spread;
  throw ExhaustionError(msg.str());
}

// --------------------------------------------------------------------------
// Genericity scan

struct GenericityParams {
  SpinStructure spin;
  int trials = 50;
  double t = 0.05;
  int order = 3;
  int degree = 2;
  double amplitude = 0.3;
  std::uint64_t seed = 1;
  int clusters = 3;  // number of positive clusters examined
  int workers = 1;

  friend bool operator==(const GenericityParams&, const GenericityParams&) = default;
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t factor_seed = 0;
  std::vector<double> lambdas;  // first `clusters` positive cluster values
  std::vector<int> mult_h;
  bool all_simple = false;
  std::string error;            // non-empty when the solve failed

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct GenericityReport {
  GenericityParams params;
  std::vector<TrialRecord> trials;
  double fraction_all_simple = 0.0;
  std::vector<int> failures;  // trials that were not all-simple or errored

  friend bool operator==(const GenericityReport&, const GenericityReport&) = default;
};

inline std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(trial));
}

/// Multiplicities of the first `clusters` positive clusters after deforming by f.
inline TrialRecord scan_factor(const SpinStructure& spin, const ConformalFactor& f, double t, int order,
                               int clusters) {
  TrialRecord rec;
  const SpectrumResult s = deformed_spectrum(f, t, build_mode_set(order, spin), SolveOptions::values_only());
  const auto pos = s.positive_clusters();
  for (std::size_t i = 0; i < pos.size() && static_cast<int>(i) < clusters; ++i) {
    rec.lambdas.push_back(s.clusters[pos[i]].lambda);
    rec.mult_h.push_back(s.clusters[pos[i]].mult_h);
  }
  rec.all_simple = static_cast<int>(rec.mult_h.size()) == clusters &&
                   std::all_of(rec.mult_h.begin(), rec.mult_h.end(), [](int m) { return m == 1; });
  return rec;
}

inline GenericityReport genericity_scan(const GenericityParams& params) {
  if (params.trials < 0) throw ValidationError("trial count must be >= 0");
  if (params.clusters < 1) throw ValidationError("number of examined clusters must be >= 1");
  GenericityReport rep;
  rep.params = params;
  rep.trials.resize(static_cast<std::size_t>(params.trials));
  parallel_for(rep.trials.size(), params.workers, [&](std::size_t i) {
    const int trial = static_cast<int>(i);
    const std::uint64_t fs = trial_seed(params.seed, trial);
    TrialRecord rec;
    try {
      const ConformalFactor f = random_factor(fs, params.degree, params.amplitude);
      rec = scan_factor(params.spin, f, params.t, params.order, params.clusters);
    } catch (const Error& e) {
      rec = TrialRecord{};
      rec.error = e.what();
    }
    rec.trial = trial;
    rec.factor_seed = fs;
    rep.trials[i] = std::move(rec);
  });
  int simple = 0;
  for (const auto& rec : rep.trials) {
    if (rec.all_simple) {
      ++simple;
    } else {
      rep.failures.push_back(rec.trial);
    }
  }
  rep.fraction_all_simple = params.trials == 0 ? 0.0 : static_cast<double>(simple) / params.trials;
  return rep;
}

// --------------------------------------------------------------------------
// Simplicity certificate

struct OffendingPair {
  int side = 1;  // +1 positive, -1 negative
  int first = 0; // 1-based positions in the enumeration
  int second = 0;
  double value = 0.0;

  friend bool operator==(const OffendingPair&, const OffendingPair&) = default;
};

struct SimplicityReport {
  int k = 0;
  bool pass = false;
  bool kernel_empty = false;
  int kernel_dim = 0;
  std::vector<double> positives;  // lambda_1..lambda_k, repeated by quaternionic multiplicity
  std::vector<double> negatives;  // lambda_-1..lambda_-k
  std::optional<OffendingPair> offending;

  friend bool operator==(const SimplicityReport&, const SimplicityReport&) = default;
};

/// Checks that lambda_{+-1}, ..., lambda_{+-k} are all different and that
/// there are no harmonic spinors.
inline SimplicityReport simplicity_certificate(const SpinStructure& spin, const ConformalFactor& f, double t,
                                               int k, int order) {
  if (k < 1) throw ValidationError("k must be >= 1");
  const ModeSetPtr modes = build_mode_set(order, spin);
  const SpectrumResult s = deformed_spectrum(f, t, modes, SolveOptions::values_only());
  SimplicityReport rep;
  rep.k = k;
  rep.kernel_dim = static_cast<int>(s.kernel_dimension());
  rep.kernel_empty = rep.kernel_dim == 0;

  const double margin = std::exp(std::abs(t) * f.sup_norm());
  auto enumerate = [&](const std::vector<std::size_t>& idx, std::vector<double>& values,
                       std::vector<std::size_t>& owner) {
    for (std::size_t c : idx) {
      for (int r = 0; r < std::max(1, s.clusters[c].mult_h) && static_cast<int>(values.size()) < k; ++r) {
        values.push_back(s.clusters[c].lambda);
        owner.push_back(c);
      }
      if (static_cast<int>(values.size()) >= k) break;
    }
    if (static_cast<int>(values.size()) < k || std::abs(values.back()) * margin >= modes->trusted_radius()) {
      throw PreconditionError("k = " + std::to_string(k) + " exceeds the trustworthy part of the truncated spectrum");
    }
  };
  std::vector<std::size_t> own_pos, own_neg;
  enumerate(s.positive_clusters(), rep.positives, own_pos);
  enumerate(s.negative_clusters(), rep.negatives, own_neg);

  auto first_repeat = [&](const std::vector<double>& values, const std::vector<std::size_t>& owner,
                          int side) -> std::optional<OffendingPair> {
    for (std::size_t i = 1; i < owner.size(); ++i) {
      if (owner[i] == owner[i - 1]) {
        return OffendingPair{side, static_cast<int>(i), static_cast<int>(i + 1), values[i]};
      }
    }
    return std::nullopt;
  };
  rep.offending = first_repeat(rep.positives, own_pos, 1);
  if (!rep.offending) rep.offending = first_repeat(rep.negatives, own_neg, -1);
  rep.pass = rep.kernel_empty && !rep.offending;
  return rep;
}

}  // namespace dirac3
