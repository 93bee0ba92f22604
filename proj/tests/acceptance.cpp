// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace dirac3;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// 1. Galerkin flat spectrum against the closed form, N = 3, |lambda| <= 2.5.
Outcome oracle_equality() {
  const auto start = Clock::now();
  double worst = 0.0;
  bool mult_ok = true;
  for (const auto& spin : SpinStructure::all()) {
    const auto s = flat_spectrum(build_mode_set(3, spin), SolveOptions::values_only());
    const auto lines = closed_form_spectrum(spin, 2.5, true);
    // the brute-force lattice enumeration must agree with the closed form too
    const auto lattice = ts::lattice_spectrum(spin, 2.5);
    std::vector<Cluster> inside;
    for (const auto& c : s.clusters) {
      if (std::abs(c.lambda) <= 2.5 + 1e-9) inside.push_back(c);
    }
    if (inside.size() != lines.size() || lattice.size() != lines.size()) {
      mult_ok = false;
      continue;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      worst = std::max(worst, std::abs(inside[i].lambda - lines[i].lambda));
      worst = std::max(worst, std::abs(lattice[i].lambda - lines[i].lambda));
      mult_ok = mult_ok && inside[i].mult_c == lines[i].mult_c && inside[i].mult_h == lines[i].mult_h &&
                lattice[i].mult_c == lines[i].mult_c;
    }
  }
  const double secs = seconds_since(start);
  return {mult_ok && worst <= 1e-12 && secs < 10.0,
          fmt("8 spin structures, worst |dlambda| = %.2e, ", worst) +
              (mult_ok ? "multiplicities agree, " : "multiplicities DIFFER, ") + fmt("%.1f s", secs)};
}

// 2. Every cluster of every run has even complex multiplicity.
Outcome kramers() {
  std::mt19937_64 rng(20261016);
  int runs = 0;
  int clusters = 0;
  int violations = 0;
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  for (int k = 0; k < 120; ++k) {
    const int order = k % 10 == 0 ? 3 : 2;
    const auto modes = build_mode_set(order, ts::spin(rng));
    SpectrumResult s;
    if (k % 4 == 0) {
      s = flat_spectrum(modes, SolveOptions::values_only());
    } else {
      const auto f = ts::factor(rng, 1 + k % 2, 0.3);
      const auto range = f.range();
      const double t = 0.9 * ut(rng) / (range.second - range.first);
      s = deformed_spectrum(f, t, modes, SolveOptions::values_only());
    }
    ++runs;
    for (const auto& c : s.clusters) {
      ++clusters;
      if (c.mult_c % 2 != 0) ++violations;
    }
  }
  return {runs >= 100 && violations == 0,
          std::to_string(runs) + " runs, " + std::to_string(clusters) + " clusters, " + std::to_string(violations) +
              " odd multiplicities"};
}

// 3. Constant factor: exact homothety and rates -lambda c.
Outcome homothety() {
  double worst_ev = 0.0;
  double worst_rate = 0.0;
  for (const auto& spin : SpinStructure::all()) {
    const auto modes = build_mode_set(2, spin);
    const auto flat = flat_spectrum(modes);
    for (double c : {0.3, -0.7}) {
      const auto f = ConformalFactor::constant(c);
      for (double t : {0.1, 0.5}) {
        const auto s = deformed_spectrum(f, t, modes, SolveOptions::values_only());
        for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
          worst_ev = std::max(worst_ev, std::abs(s.eigenvalues[i] - std::exp(-t * c) * flat.eigenvalues[i]));
        }
      }
      for (std::size_t idx : flat.positive_clusters()) {
        if (flat.clusters[idx].lambda > modes->trusted_radius()) break;
        const auto rep = perturbation_matrix(extract_cluster(flat, idx), f);
        for (double r : rep.rates) worst_rate = std::max(worst_rate, std::abs(r + rep.lambda * c));
      }
    }
  }
  return {worst_ev <= 1e-10 && worst_rate <= 1e-12,
          fmt("max |lambda_t - e^{-tc} lambda| = %.2e, max |rate + lambda c| = %.2e", worst_ev, worst_rate)};
}

// 4. First-order rates against deformed solves: fitted order >= 1.9.
Outcome finite_difference() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4);
  int cases = 0;
  int good = 0;
  double min_order = 1e9;
  std::string failures;
  for (int k = 0; k < 12; ++k) {
    const SpinStructure spin = ts::nontrivial_spin(rng);
    const auto flat = flat_spectrum(build_mode_set(3, spin));
    const auto f = ts::factor(rng, 1 + k % 2, 0.3);
    const auto pos = flat.positive_clusters();
    const std::size_t idx = pos[static_cast<std::size_t>(k % 3)];
    const auto rep = fd_check(extract_cluster(flat, idx), f, {1e-2, 1e-3, 1e-4});
    ++cases;
    min_order = std::min(min_order, rep.fitted_order);
    // C t^2 with one constant for all three t
    double c = 0.0;
    for (const auto& row : rep.rows) c = std::max(c, row.max_mismatch / (row.t * row.t));
    if (rep.fitted_order >= 1.9 && c < 1e3) {
      ++good;
    } else {
      failures += " case " + std::to_string(k) + " (delta " + spin.to_string() + ")";
    }
  }
  const double secs = seconds_since(start);
  return {good == cases && cases >= 10 && secs < 60.0,
          std::to_string(good) + "/" + std::to_string(cases) + " cases, min fitted order " + fmt("%.3f", min_order) +
              fmt(", %.1f s", secs) + failures};
}

// 5. D(e^{tf} phi) = e^{2tf} D^t phi: grid check plus direct pointwise sums.
Outcome substitution() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(0.02, 0.3);
  double worst_grid = 0.0;
  double worst_point = 0.0;
  const int cases = 20;
  for (int k = 0; k < cases; ++k) {
    const auto modes = build_mode_set(1 + k % 2, ts::spin(rng));
    const auto f = ts::factor(rng, 1 + k % 2, 0.4);
    const double t = ut(rng);
    const auto phi = ts::field(modes, rng);
    worst_grid = std::max(worst_grid, substitution_residual(f, t, phi));

    const auto dt = apply_deformed_dirac(f, t, phi);
    double err = 0.0;
    double scale = 0.0;
    for (int p = 0; p < 8; ++p) {
      const Vector3 x = ts::point(rng);
      const Spinor rhs = std::exp(2.0 * t * ts::factor_value(f, x)) * ts::value(dt, x);
      const Spinor lhs = ts::substituted_value(f, t, phi, x);
      err = std::max(err, (lhs - rhs).norm());
      scale = std::max(scale, lhs.norm());
    }
    worst_point = std::max(worst_point, err / scale);
  }
  return {worst_grid <= 1e-10 && worst_point <= 1e-10,
          std::to_string(cases) + fmt(" cases, grid rel. error %.2e, pointwise rel. error %.2e", worst_grid, worst_point)};
}

// 6. split_search certificates for the two degenerate clusters.
Outcome splitting() {
  bool ok = true;
  std::ostringstream msg;
  const std::pair<SpinStructure, double> targets[] = {{SpinStructure(), 1.0},
                                                      {SpinStructure(IntVec3{1, 0, 0}), std::sqrt(5.0) / 2.0}};
  for (const auto& [spin, lambda] : targets) {
    const auto cl = cluster_near(flat_spectrum(build_mode_set(3, spin)), lambda);
    try {
      const SplitCertificate cert = split_search(cl, 2);
      const double bound = 5.0 * cert.t_verify * cert.t_verify;
      const bool pass = cert.t_verify == 0.05 && cert.max_post_split_mult_h() < cert.p_h &&
                        cert.max_mismatch <= bound;
      ok = ok && pass;
      msg << "delta " << spin.to_string() << " p_H " << cert.p_h << " -> max " << cert.max_post_split_mult_h()
          << " via " << cert.factor_label << ", mismatch " << fmt("%.2e", cert.max_mismatch) << "; ";
    } catch (const Error& e) {
      ok = false;
      msg << "delta " << spin.to_string() << ": " << e.what() << "; ";
    }
  }
  std::string text = msg.str();
  return {ok, text.substr(0, text.size() - 2)};
}

// 7. Kernel dimension is 2 throughout the conformal class of the trivial structure.
Outcome kernel() {
  std::mt19937_64 rng(7);
  int violations = 0;
  double smallest_next = 1e9;
  for (int k = 0; k < 20; ++k) {
    const auto f = ts::factor(rng, 1 + k % 2, 0.3);
    const auto s = deformed_spectrum(f, 0.05, build_mode_set(3, SpinStructure()), SolveOptions::values_only());
    int zeros = 0;
    double next = 1e9;
    for (double v : s.eigenvalues) {
      if (std::abs(v) <= 1e-8) {
        ++zeros;
      } else {
        next = std::min(next, std::abs(v));
      }
    }
    smallest_next = std::min(smallest_next, next);
    if (zeros != 2 || next < 0.3) ++violations;
  }
  return {violations == 0, "20 factors, " + std::to_string(violations) + " violations, smallest nonzero |lambda| " +
                               fmt("%.4f", smallest_next)};
}

// 8. Genericity scan, persisted and reproduced byte for byte.
Outcome genericity() {
  const auto start = Clock::now();
  GenericityParams p;
  p.spin = SpinStructure(IntVec3{1, 0, 0});
  p.trials = 50;
  p.t = 0.05;
  p.order = 3;
  p.degree = 2;
  p.amplitude = 0.3;
  p.seed = 1;
  const std::string text = dump(json(genericity_scan(p)));
  const auto path = std::filesystem::current_path() / "acceptance_genericity.json";
  std::ofstream(path, std::ios::binary) << text;

  p.workers = 2;
  const std::string again = dump(json(genericity_scan(p)));
  std::ifstream in(path, std::ios::binary);
  const std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const bool same = again == text && stored == text;

  const double fraction = json::parse(text).at("fraction_all_simple").get<double>();
  const double secs = seconds_since(start);
  return {fraction >= 0.9 && same && secs < 300.0,
          fmt("fraction all-simple %.2f, ", fraction) + (same ? "byte-identical" : "NOT reproducible") +
              " across reruns and worker counts, " + fmt("%.1f s, report in ", secs) + path.string()};
}

// 9. Clifford relation and quaternionic structure laws on 10^4 samples.
Outcome spinor_laws() {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  const int samples = 10000;
  for (int k = 0; k < samples; ++k) {
    const Vector3 v = ts::vector3(rng);
    const Spinor s = ts::spinor(rng);
    const Spinor r = ts::spinor(rng);
    const double sv = s.norm() * std::max(1.0, v.squaredNorm());
    const double sr = s.norm() * r.norm();
    worst = std::max(worst, (clifford_mul(v, s) - ts::clifford(v) * s).norm() / sv);
    worst = std::max(worst, (clifford_mul(v, clifford_mul(v, s)) + v.squaredNorm() * s).norm() / sv);
    worst = std::max(worst, (apply_J(apply_J(s)) + s).norm() / s.norm());
    worst = std::max(worst, (apply_J(ts::kI * s) + ts::kI * apply_J(s)).norm() / s.norm());
    worst = std::max(worst, (apply_J(clifford_mul(v, s)) - clifford_mul(v, apply_J(s))).norm() / sv);
    worst = std::max(worst, std::abs(herm_inner(apply_J(s), apply_J(r)) - std::conj(ts::inner(s, r))) / sr);
    worst = std::max(worst, (apply_J(s) - ts::quaternionic_j(s)).norm() / s.norm());
  }
  return {worst <= 1e-13, std::to_string(samples) + fmt(" samples, worst relative defect %.2e", worst)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 oracle spectrum equality", oracle_equality},
      {"2 quaternionic degeneracy", kramers},
      {"3 homothety exactness", homothety},
      {"4 first-order rate finite differences", finite_difference},
      {"5 substitution identity", substitution},
      {"6 cluster splitting certificates", splitting},
      {"7 kernel constancy", kernel},
      {"8 genericity Monte Carlo", genericity},
      {"9 spinor algebra laws", spinor_laws},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.summary.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
