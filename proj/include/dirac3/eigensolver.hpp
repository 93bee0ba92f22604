#pragma once

// Dense Hermitian-definite generalized eigensolver A x = lambda B x,
// multiplicity clustering, and eigenvalue-curve matching across a t-grid.

#include "dirac3/errors.hpp"
#include "dirac3/torus.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace dirac3 {

/// Clustering tolerance for exact (t = 0) degeneracy.
inline constexpr double kTauDegenerate = 1e-6;
/// Clustering tolerance used to resolve first-order splits at t != 0.
inline constexpr double kTauSplit = 1e-9;
/// |lambda| below this counts as a harmonic spinor.
inline constexpr double kZeroTolerance = 1e-8;

struct GenEigenSolution {
  Eigen::VectorXd values;     // ascending
  Eigen::MatrixXcd vectors;   // B-orthonormal columns; empty when not requested
  double residual_max = std::numeric_limits<double>::quiet_NaN();
};

/// Rotates every column so its first significant entry is real and positive.
inline void canonicalize_phases(Eigen::MatrixXcd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    auto col = vectors.col(c);
    const double cut = 1e-10 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col[r]) > cut) {
        col *= std::conj(col[r]) / std::abs(col[r]);
        col[r] = cplx(std::abs(col[r]), 0.0);
        break;
      }
    }
  }
}

/// Cholesky reduction B = L L^*, Hermitian solve of L^-1 A L^-*, back
/// substitution. Throws PdFailure when B is not positive definite.
inline GenEigenSolution solve_gen_hermitian(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                            bool want_vectors = true) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw ValidationError("generalized eigenproblem: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(b);
  if (!b.allFinite() || llt.info() != Eigen::Success) {
    throw PdFailure("weight matrix is not positive definite (Cholesky failed)");
  }
  Eigen::MatrixXcd c = llt.matrixL().solve(a);
  c = llt.matrixL().solve(c.adjoint()).adjoint();
  c = (0.5 * (c + c.adjoint())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      c, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("Hermitian eigensolver did not converge");

  GenEigenSolution out;
  out.values = es.eigenvalues();
  if (want_vectors) {
    out.vectors = llt.matrixU().solve(es.eigenvectors());
    canonicalize_phases(out.vectors);
    const Eigen::MatrixXcd bv = b * out.vectors;
    const Eigen::MatrixXcd r = a * out.vectors - bv * out.values.asDiagonal();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      const double bnorm = std::sqrt(std::abs(out.vectors.col(j).dot(bv.col(j))));
      worst = std::max(worst, r.col(j).norm() / bnorm);
    }
    out.residual_max = worst;
  }
  return out;
}

/// Maximal run of sorted eigenvalues whose consecutive gaps are within
/// tau_rel * max(1, |lambda|).
struct Cluster {
  double lambda = 0.0;  // mean of the run
  std::size_t begin = 0;
  std::size_t size = 0;
  int mult_c = 0;
  int mult_h = 0;
  bool kramers_ok = true;  // false when mult_c is odd

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

inline std::vector<Cluster> cluster_eigenvalues(std::span<const double> values, double tau_rel) {
  if (!(tau_rel >= 0.0)) throw ValidationError("clustering tolerance must be nonnegative");
  std::vector<Cluster> out;
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i + 1;
    while (j < values.size() &&
           values[j] - values[j - 1] <= tau_rel * std::max(1.0, std::abs(values[j]))) {
      ++j;
    }
    const double mean =
        std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(i),
                        values.begin() + static_cast<std::ptrdiff_t>(j), 0.0) /
        static_cast<double>(j - i);
    const int mult = static_cast<int>(j - i);
    out.push_back({mean, i, j - i, mult, mult / 2, mult % 2 == 0});
    i = j;
  }
  return out;
}

struct SpectrumMeta {
  SpinStructure delta;
  int order = 0;
  double t = 0.0;
  std::string f_ref;

  friend bool operator==(const SpectrumMeta&, const SpectrumMeta&) = default;
};

struct SpectrumResult {
  SpectrumMeta meta;
  std::vector<double> eigenvalues;
  Eigen::MatrixXcd eigenvectors;  // 0x0 when only eigenvalues were computed
  std::vector<Cluster> clusters;
  double residual_max = std::numeric_limits<double>::quiet_NaN();
  ModeSetPtr modes;
  /// Weight matrix B of the solve; null means identity.
  std::shared_ptr<const Eigen::MatrixXcd> weight;

  bool has_vectors() const { return eigenvectors.size() > 0; }

  /// Indices into `clusters` of the clusters with lambda > kZeroTolerance,
  /// ascending.
  std::vector<std::size_t> positive_clusters() const {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].lambda > kZeroTolerance) idx.push_back(c);
    }
    return idx;
  }

  /// Indices of the clusters with lambda < -kZeroTolerance, ordered by
  /// increasing |lambda|.
  std::vector<std::size_t> negative_clusters() const {
    std::vector<std::size_t> idx;
    for (std::size_t c = clusters.size(); c-- > 0;) {
      if (clusters[c].lambda < -kZeroTolerance) idx.push_back(c);
    }
    return idx;
  }

  std::size_t kernel_dimension() const {
    return static_cast<std::size_t>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                                  [](double v) { return std::abs(v) <= kZeroTolerance; }));
  }

  bool kramers_ok() const {
    return std::all_of(clusters.begin(), clusters.end(), [](const Cluster& c) { return c.kramers_ok; });
  }

  /// Eigenvector column as a field over `modes`.
  SpinorField field(std::size_t column) const {
    return SpinorField(modes, eigenvectors.col(static_cast<Eigen::Index>(column)));
  }
};

struct SolveOptions {
  bool vectors = true;
  /// Clustering tolerance; defaults to kTauDegenerate at t = 0 and kTauSplit otherwise.
  std::optional<double> tau_rel;

  static SolveOptions values_only() {
    SolveOptions o;
    o.vectors = false;
    return o;
  }
};

inline SpectrumResult make_spectrum(SpectrumMeta meta, ModeSetPtr modes, const Eigen::MatrixXcd& a,
                                    std::shared_ptr<const Eigen::MatrixXcd> weight,
                                    const SolveOptions& opts = {}) {
  const Eigen::MatrixXcd identity =
      weight ? Eigen::MatrixXcd() : Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  GenEigenSolution sol = solve_gen_hermitian(a, weight ? *weight : identity, opts.vectors);
  SpectrumResult r;
  r.meta = std::move(meta);
  r.eigenvalues.assign(sol.values.data(), sol.values.data() + sol.values.size());
  r.eigenvectors = std::move(sol.vectors);
  r.residual_max = sol.residual_max;
  const double tau = opts.tau_rel.value_or(r.meta.t == 0.0 ? kTauDegenerate : kTauSplit);
  r.clusters = cluster_eigenvalues(r.eigenvalues, tau);
  r.modes = std::move(modes);
  r.weight = std::move(weight);
  return r;
}

/// Flat spectrum: the generalized problem with B = I.
inline SpectrumResult flat_spectrum(const ModeSetPtr& modes, const SolveOptions& opts = {}) {
  SpectrumMeta meta{modes->spin(), modes->order(), 0.0, "zero"};
  return make_spectrum(std::move(meta), modes, assemble_flat_dirac(*modes), nullptr, opts);
}

// --------------------------------------------------------------------------
// Curve matching

struct Trajectory {
  std::vector<double> lambda;          // one entry per t
  std::vector<double> overlap;         // score of each step (size t.size() - 1)
  std::vector<std::size_t> index;      // eigenvalue index in each snapshot
};

struct CurveFamily {
  std::vector<double> t;
  std::vector<Trajectory> trajectories;  // sorted by lambda at t[0]
  bool flagged = false;                  // some step scored below 0.7 or broke continuity
  bool ambiguous = false;                // some step scored below 0.3
  std::vector<std::string> notes;
};

inline constexpr double kOverlapFlag = 0.7;
inline constexpr double kOverlapAmbiguous = 0.3;

namespace detail {

/// Maximum-weight perfect matching on a square score matrix
/// (Hungarian algorithm on cost = -score). Returns row -> column.
inline std::vector<std::size_t> hungarian_max(const Eigen::MatrixXd& score) {
  const auto n = static_cast<std::size_t>(score.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cost = -score(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1));
        const double cur = cost - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline std::vector<std::size_t> cluster_of(const SpectrumResult& s) {
  std::vector<std::size_t> owner(s.eigenvalues.size(), 0);
  for (std::size_t c = 0; c < s.clusters.size(); ++c) {
    for (std::size_t k = 0; k < s.clusters[c].size; ++k) owner[s.clusters[c].begin + k] = c;
  }
  return owner;
}

}  // namespace detail

/// Matches eigenvectors of consecutive snapshots by B-overlap. Overlaps are
/// aggregated per cluster pair, so an index i is scored against j by the
/// weight flowing between their clusters, normalized by the smaller cluster.
/// Greedy assignment in decreasing score; a Hungarian assignment replaces the
/// greedy one when greedy leaves a step below the flag threshold and the
/// optimal assignment does better.
inline CurveFamily match_curves(std::span<const SpectrumResult> snapshots) {
  if (snapshots.size() < 2) throw ValidationError("curve matching needs at least two snapshots");
  const SpectrumResult& first = snapshots.front();
  for (const auto& s : snapshots) {
    if (!s.modes || !(*s.modes == *first.modes)) {
      throw ValidationError("curve matching needs a common mode set");
    }
    if (!s.has_vectors()) throw ValidationError("curve matching needs eigenvectors");
  }

  const std::size_t n = first.eigenvalues.size();
  CurveFamily fam;
  fam.trajectories.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fam.trajectories[i].lambda.push_back(first.eigenvalues[i]);
    fam.trajectories[i].index.push_back(i);
  }
  fam.t.push_back(first.meta.t);

  // current[i] = eigenvalue index in the latest snapshot carried by trajectory i
  std::vector<std::size_t> current(n);
  std::iota(current.begin(), current.end(), 0);

  for (std::size_t step = 1; step < snapshots.size(); ++step) {
    const SpectrumResult& prev = snapshots[step - 1];
    const SpectrumResult& next = snapshots[step];
    fam.t.push_back(next.meta.t);

    const Eigen::MatrixXcd bv = next.weight ? Eigen::MatrixXcd(*next.weight * next.eigenvectors)
                                            : next.eigenvectors;
    const Eigen::MatrixXd overlap = (prev.eigenvectors.adjoint() * bv).cwiseAbs2();

    const auto own_prev = detail::cluster_of(prev);
    const auto own_next = detail::cluster_of(next);
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(prev.clusters.size()),
                                                 static_cast<Eigen::Index>(next.clusters.size()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        flow(static_cast<Eigen::Index>(own_prev[i]), static_cast<Eigen::Index>(own_next[j])) +=
            overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    Eigen::MatrixXd score(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto ci = own_prev[i];
        const auto cj = own_next[j];
        const double denom =
            static_cast<double>(std::min(prev.clusters[ci].size, next.clusters[cj].size));
        score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            flow(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(cj)) / denom;
      }
    }

    // Greedy, ties broken by (i, j) ascending.
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    cand.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double s = score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (s > 1e-6) cand.emplace_back(s, i, j);
      }
    }
    std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
      if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
      if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
      return std::get<2>(x) < std::get<2>(y);
    });
    std::vector<std::size_t> assign(n, n);
    std::vector<char> taken(n, 0);
    for (const auto& [s, i, j] : cand) {
      if (assign[i] == n && !taken[j]) {
        assign[i] = j;
        taken[j] = 1;
      }
    }
    std::size_t free_col = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i] != n) continue;
      while (taken[free_col]) ++free_col;
      assign[i] = free_col;
      taken[free_col] = 1;
    }
    auto min_score = [&](const std::vector<std::size_t>& a) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        m = std::min(m, score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a[i])));
      }
      return m;
    };
    auto total = [&](const std::vector<std::size_t>& a) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a[i]));
      }
      return s;
    };
    if (min_score(assign) < kOverlapFlag) {
      auto opt = detail::hungarian_max(score);
      if (total(opt) > total(assign) + 1e-12) {
        assign = std::move(opt);
        fam.notes.push_back("step " + std::to_string(step) + ": assignment fallback used");
      }
    }

    // Continuity: for B' = B + E with (1 - eps) B <= B' <= (1 + eps) B the
    // eigenvalues move by at most |lambda| eps / (1 - eps).
    double eps = 0.0;
    {
      const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n),
                                                             static_cast<Eigen::Index>(n));
      const Eigen::MatrixXcd& bp = prev.weight ? *prev.weight : id;
      const Eigen::MatrixXcd& bn = next.weight ? *next.weight : id;
      const Eigen::MatrixXcd diff = bn - bp;
      if (diff.norm() > 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bp, Eigen::EigenvaluesOnly);
        eps = diff.norm() / es.eigenvalues().minCoeff();
      }
    }

    double step_min = std::numeric_limits<double>::infinity();
    for (std::size_t tr = 0; tr < n; ++tr) {
      const std::size_t i = current[tr];
      const std::size_t j = assign[i];
      const double s = score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      step_min = std::min(step_min, s);
      auto& traj = fam.trajectories[tr];
      const double lam_prev = traj.lambda.back();
      const double lam_next = next.eigenvalues[j];
      const double bound = eps < 1.0 ? std::abs(lam_prev) * eps / (1.0 - eps) + 1e-9
                                     : std::numeric_limits<double>::infinity();
      if (std::abs(lam_next - lam_prev) > bound) {
        fam.flagged = true;
        fam.notes.push_back("step " + std::to_string(step) + ": trajectory " + std::to_string(tr) +
                            " jumps beyond the continuity bound");
      }
      traj.lambda.push_back(lam_next);
      traj.overlap.push_back(s);
      traj.index.push_back(j);
      current[tr] = j;
    }
    if (step_min < kOverlapFlag) fam.flagged = true;
    if (step_min < kOverlapAmbiguous) {
      fam.ambiguous = true;
      fam.notes.push_back("step " + std::to_string(step) + ": ambiguous matching");
    }
  }
  return fam;
}

}  // namespace dirac3
