#pragma once

// Invariant suite behind the `validate` command. Each check returns a named
// pass/fail record with its worst observed value.

#include "dirac3/conformal.hpp"
#include "dirac3/eigensolver.hpp"
#include "dirac3/experiments.hpp"
#include "dirac3/perturbation.hpp"
#include "dirac3/spinor.hpp"
#include "dirac3/torus.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dirac3 {

struct Check {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // largest error seen, or the measured quantity
  double bound = 0.0;
  std::string detail;
};

namespace detail {

inline Spinor random_spinor(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Spinor(cplx(n(rng), n(rng)), cplx(n(rng), n(rng)));
}

inline Vector3 random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vector3(n(rng), n(rng), n(rng));
}

inline Check make_check(std::string name, double worst, double bound, std::string detail = {}) {
  return Check{std::move(name), worst <= bound, worst, bound, std::move(detail)};
}

}  // namespace detail

/// Random field with standard complex normal coefficients on every mode.
inline SpinorField random_field(const ModeSetPtr& modes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXcd c(static_cast<Eigen::Index>(modes->dim()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = cplx(n(rng), n(rng));
  return SpinorField(modes, c);
}

/// Max over samples of |c(v)c(w) + c(w)c(v) + 2<v,w>| applied to a spinor,
/// relative to |v||w||s|.
inline Check check_clifford(std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vector3 v = detail::random_vector(rng);
    const Vector3 w = detail::random_vector(rng);
    const Spinor s = detail::random_spinor(rng);
    const Spinor lhs = clifford_mul(v, clifford_mul(w, s)) + clifford_mul(w, clifford_mul(v, s)) + 2.0 * v.dot(w) * s;
    worst = std::max(worst, lhs.norm() / (v.norm() * w.norm() * s.norm()));
  }
  return detail::make_check("clifford_relation", worst, 1e-13);
}

/// J^2 = -1, J(i s) = -i J s, J c(v) = c(v) J, <Js, Jr> = conj<s, r>.
inline Check check_j_laws(std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vector3 v = detail::random_vector(rng);
    const Spinor s = detail::random_spinor(rng);
    const Spinor r = detail::random_spinor(rng);
    const double scale = s.norm() * std::max(1.0, r.norm() * (1.0 + v.norm()));
    worst = std::max(worst, (apply_J(apply_J(s)) + s).norm() / scale);
    worst = std::max(worst, (apply_J(kI * s) + kI * apply_J(s)).norm() / scale);
    worst = std::max(worst, (apply_J(clifford_mul(v, s)) - clifford_mul(v, apply_J(s))).norm() / scale);
    worst = std::max(worst, std::abs(herm_inner(apply_J(s), apply_J(r)) - std::conj(herm_inner(s, r))) / scale);
  }
  return detail::make_check("quaternionic_structure", worst, 1e-13);
}

/// Galerkin flat spectrum against the closed form for |lambda| <= lambda_max.
inline Check check_oracle(const SpinStructure& spin, int order, double lambda_max) {
  const SpectrumResult s = flat_spectrum(build_mode_set(order, spin), SolveOptions::values_only());
  const auto lines = closed_form_spectrum(spin, lambda_max, true);
  std::vector<const Cluster*> seen;
  for (const auto& c : s.clusters) {
    if (std::abs(c.lambda) <= lambda_max + 1e-9) seen.push_back(&c);
  }
  double worst = 0.0;
  std::string detail;
  if (seen.size() != lines.size()) {
    worst = std::numeric_limits<double>::infinity();
    detail = "cluster count " + std::to_string(seen.size()) + " vs " + std::to_string(lines.size());
  } else {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      worst = std::max(worst, std::abs(seen[i]->lambda - lines[i].lambda));
      if (seen[i]->mult_c != lines[i].mult_c || seen[i]->mult_h != lines[i].mult_h) {
        worst = std::numeric_limits<double>::infinity();
        detail = "multiplicity mismatch at lambda = " + std::to_string(lines[i].lambda);
      }
    }
  }
  return detail::make_check("oracle_" + spin.to_string(), worst, 1e-12, detail);
}

/// Relative sup-norm error of D(e^{tf} phi) = e^{2tf} D^t phi on a G^3 grid.
/// The left side is differentiated spectrally from grid samples of e^{tf} phi,
/// the right side comes from apply_deformed_dirac.
inline double substitution_residual(const ConformalFactor& f, double t, const SpinorField& phi, int g = 64) {
  const ModeSet& modes = *phi.modes();
  const std::vector<double> fv = f.sample(g);
  const SpinorGrid pg = evaluate_on_grid(phi, g);
  const Vector3 shift = modes.spin().shift();

  // e^{tf} phi with the half-integer phase removed, so it is periodic.
  detail::ComplexGrid u(g), l(g);
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      for (int c = 0; c < g; ++c) {
        const std::size_t k = u.flat(a, b, c);
        const Vector3 x(detail::ComplexGrid::coordinate(a, g), detail::ComplexGrid::coordinate(b, g),
                        detail::ComplexGrid::coordinate(c, g));
        const cplx w = std::exp(t * fv[k]) * std::exp(-kI * shift.dot(x));
        u.values[k] = w * pg.upper.values[k];
        l.values[k] = w * pg.lower.values[k];
      }
    }
  }
  detail::fft3_inplace(u, detail::FftDirection::kForward);
  detail::fft3_inplace(l, detail::FftDirection::kForward);
  const double norm = 1.0 / (static_cast<double>(g) * g * g);
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      for (int c = 0; c < g; ++c) {
        const Vector3 kappa = Vector3(detail::bin_frequency(a, g), detail::bin_frequency(b, g),
                                      detail::bin_frequency(c, g)) + shift;
        const std::size_t k = u.flat(a, b, c);
        const Spinor v = dirac_symbol(kappa) * Spinor(u.values[k], l.values[k]) * norm;
        u.values[k] = v[0];
        l.values[k] = v[1];
      }
    }
  }
  detail::fft3_inplace(u, detail::FftDirection::kInverse);
  detail::fft3_inplace(l, detail::FftDirection::kInverse);

  const SpinorGrid rg = evaluate_on_grid(apply_deformed_dirac(f, t, phi), g);
  double err = 0.0;
  double scale = 0.0;
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      for (int c = 0; c < g; ++c) {
        const std::size_t k = u.flat(a, b, c);
        const Vector3 x(detail::ComplexGrid::coordinate(a, g), detail::ComplexGrid::coordinate(b, g),
                        detail::ComplexGrid::coordinate(c, g));
        const cplx phase = std::exp(kI * shift.dot(x));
        const Spinor lhs = phase * Spinor(u.values[k], l.values[k]);
        const Spinor rhs = std::exp(2.0 * t * fv[k]) * rg.at(k);
        err = std::max(err, (lhs - rhs).norm());
        scale = std::max(scale, rhs.norm());
      }
    }
  }
  return scale > 0.0 ? err / scale : err;
}

inline Check check_substitution(std::uint64_t seed, int cases) {
  double worst = 0.0;
  for (int k = 0; k < cases; ++k) {
    const std::uint64_t s = trial_seed(seed, k);
    const SpinStructure spin = SpinStructure::all()[s % 8];
    const ConformalFactor f = random_factor(s, 1 + static_cast<int>((s >> 8) % 2), 0.3);
    const double t = 0.02 + 0.08 * static_cast<double>((s >> 16) % 1000) / 1000.0;
    const SpinorField phi = random_field(build_mode_set(2, spin), splitmix64(s));
    worst = std::max(worst, substitution_residual(f, t, phi));
  }
  return detail::make_check("substitution_identity", worst, 1e-10);
}

/// Every cluster of flat and deformed solves has even complex multiplicity.
inline Check check_kramers(std::uint64_t seed, int cases, int order) {
  int violations = 0;
  for (int k = 0; k < cases; ++k) {
    const std::uint64_t s = trial_seed(seed, k);
    const SpinStructure spin = SpinStructure::all()[static_cast<std::size_t>(k) % 8];
    const ModeSetPtr modes = build_mode_set(order, spin);
    if (!flat_spectrum(modes, SolveOptions::values_only()).kramers_ok()) ++violations;
    const ConformalFactor f = random_factor(s, 2, 0.3);
    if (!deformed_spectrum(f, 0.05, modes, SolveOptions::values_only()).kramers_ok()) ++violations;
  }
  return detail::make_check("kramers_pairing", violations, 0.0, std::to_string(2 * cases) + " solves");
}

/// delta = 0: exactly two zero eigenvalues under random deformations.
inline Check check_kernel(std::uint64_t seed, int cases, int order) {
  int violations = 0;
  double next = std::numeric_limits<double>::infinity();
  const ModeSetPtr modes = build_mode_set(order, SpinStructure());
  for (int k = 0; k < cases; ++k) {
    const ConformalFactor f = random_factor(trial_seed(seed, k), 2, 0.3);
    const SpectrumResult s = deformed_spectrum(f, 0.05, modes, SolveOptions::values_only());
    double nonzero = std::numeric_limits<double>::infinity();
    for (double v : s.eigenvalues) {
      if (std::abs(v) > kZeroTolerance) nonzero = std::min(nonzero, std::abs(v));
    }
    next = std::min(next, nonzero);
    if (s.kernel_dimension() != 2 || nonzero < 0.3) ++violations;
  }
  return detail::make_check("kernel_constancy", violations, 0.0,
                            "smallest nonzero |lambda| = " + std::to_string(next));
}

/// First-order rates against deformed solves; fitted order must reach 1.9.
inline Check check_first_order(std::uint64_t seed, int order) {
  const SpinStructure spin(IntVec3{1, 0, 0});
  const SpectrumResult flat = flat_spectrum(build_mode_set(order, spin));
  const EigenCluster cluster = extract_cluster(flat, flat.positive_clusters().front());
  const ConformalFactor f = random_factor(seed, 2, 0.3);
  const FdReport r = fd_check(cluster, f, {1e-2, 1e-3, 1e-4});
  Check c;
  c.name = "first_order_rates";
  c.worst = r.fitted_order;
  c.bound = 1.9;
  c.pass = r.fitted_order >= 1.9;
  c.detail = "lambda = " + std::to_string(r.lambda);
  return c;
}

struct ValidateOptions {
  std::uint64_t seed = 1;
  int samples = 10000;
  int order = 2;
  int cases = 4;
};

inline std::vector<Check> run_validation(const ValidateOptions& o) {
  std::vector<Check> out;
  out.push_back(check_clifford(o.seed, o.samples));
  out.push_back(check_j_laws(splitmix64(o.seed), o.samples));
  for (const auto& spin : SpinStructure::all()) out.push_back(check_oracle(spin, o.order, o.order - 0.5));
  out.push_back(check_substitution(o.seed, o.cases));
  out.push_back(check_kramers(o.seed, o.cases, o.order));
  out.push_back(check_kernel(o.seed, o.cases, o.order));
  out.push_back(check_first_order(o.seed, o.order));
  return out;
}

}  // namespace dirac3
