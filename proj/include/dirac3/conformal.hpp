#pragma once

// Conformal deformation g^t = e^{2tf} g of the flat torus.
//
// With chi = e^{tf} phi (in dimension 3, (n-1)/2 = 1) the eigenproblem
// D^t phi = lambda phi becomes D chi = lambda e^{tf} chi. Its Galerkin form
// A chi = lambda B chi has A the flat operator and B[kappa, kappa'] =
// h(kappa - kappa') I_2 with h = e^{tf}; both Hermitian, B positive definite.
// B-orthonormal chi correspond to g^t-orthonormal phi.

#include "dirac3/detail/grid_fft.hpp"
#include "dirac3/eigensolver.hpp"
#include "dirac3/errors.hpp"
#include "dirac3/spinor.hpp"
#include "dirac3/torus.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dirac3 {

/// Tolerance on f(-m) = conj f(m) accepted from external input.
inline constexpr double kRealityTolerance = 1e-14;

/// Real trigonometric polynomial f(x) = sum_{|m|_inf <= d} c_m e^{i<m,x>}.
class ConformalFactor {
 public:
  using Term = std::pair<IntVec3, cplx>;

  ConformalFactor() : degree_(0), coeffs_(1, cplx{0.0, 0.0}) {}

  /// Builds a factor from listed coefficients. Missing coefficients are zero.
  /// Reality violations above `tol` are rejected; accepted input is then
  /// symmetrized exactly.
  static ConformalFactor from_terms(int degree, const std::vector<Term>& terms,
                                    double tol = kRealityTolerance) {
    if (degree < 0) throw ValidationError("factor degree must be >= 0");
    ConformalFactor f(degree);
    for (const auto& [m, c] : terms) {
      if (linf(m) > degree) throw ValidationError("factor coefficient outside the declared degree");
      f.ref(m) += c;
    }
    for (int a = -degree; a <= degree; ++a) {
      for (int b = -degree; b <= degree; ++b) {
        for (int c = -degree; c <= degree; ++c) {
          const IntVec3 m{a, b, c};
          const cplx x = f.coeff(m);
          const cplx y = f.coeff(neg(m));
          if (std::abs(x - std::conj(y)) > tol) {
            throw ValidationError("reality constraint violated: coefficient at (" + std::to_string(a) + "," +
                                  std::to_string(b) + "," + std::to_string(c) +
                                  ") is not the conjugate of its mirror");
          }
        }
      }
    }
    f.symmetrize();
    return f;
  }

  static ConformalFactor constant(double c) {
    ConformalFactor f(0);
    f.ref({0, 0, 0}) = c;
    return f;
  }

  /// amplitude * cos<m, x>
  static ConformalFactor cosine(const IntVec3& m, double amplitude = 1.0) {
    ConformalFactor f(linf(m));
    f.ref(m) += 0.5 * amplitude;
    f.ref(neg(m)) += 0.5 * amplitude;
    return f;
  }

  /// amplitude * sin<m, x>
  static ConformalFactor sine(const IntVec3& m, double amplitude = 1.0) {
    ConformalFactor f(linf(m));
    f.ref(m) += cplx(0.0, -0.5 * amplitude);
    f.ref(neg(m)) += cplx(0.0, 0.5 * amplitude);
    return f;
  }

  int degree() const { return degree_; }

  cplx coeff(const IntVec3& m) const {
    if (linf(m) > degree_) return {0.0, 0.0};
    return coeffs_[index(m)];
  }

  /// Nonzero coefficients in lexicographic order of m.
  std::vector<Term> terms() const {
    std::vector<Term> out;
    for (int a = -degree_; a <= degree_; ++a) {
      for (int b = -degree_; b <= degree_; ++b) {
        for (int c = -degree_; c <= degree_; ++c) {
          const IntVec3 m{a, b, c};
          const cplx v = coeff(m);
          if (v != cplx{0.0, 0.0}) out.emplace_back(m, v);
        }
      }
    }
    return out;
  }

  double mean() const { return coeff({0, 0, 0}).real(); }

  bool is_constant() const {
    for (const auto& [m, c] : terms()) {
      if (m != IntVec3{0, 0, 0}) return false;
    }
    return true;
  }

  double evaluate(const Vector3& x) const {
    cplx s{0.0, 0.0};
    for (const auto& [m, c] : terms()) {
      s += c * std::exp(kI * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]));
    }
    return s.real();
  }

  /// Flat gradient; (grad f)^(m) = i m f^(m).
  Vector3 gradient(const Vector3& x) const {
    Eigen::Vector3cd g = Eigen::Vector3cd::Zero();
    for (const auto& [m, c] : terms()) {
      const cplx e = kI * c * std::exp(kI * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]));
      g += e * Eigen::Vector3cd(m[0], m[1], m[2]);
    }
    return g.real();
  }

  /// Samples on a G^3 grid (real parts), G >= 2d+1.
  std::vector<double> sample(int g) const {
    detail::ComplexGrid grid(g);
    for (const auto& [m, c] : terms()) grid.mode(m) += c;
    detail::fft3_inplace(grid, detail::FftDirection::kInverse);
    std::vector<double> out(grid.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid.values[i].real();
    return out;
  }

  /// (min f, max f) estimated on a grid with at least 8 samples per period
  /// of the highest frequency.
  std::pair<double, double> range() const {
    if (is_constant()) return {mean(), mean()};
    const auto v = sample(std::max(32, detail::next_pow2(8 * (degree_ + 1))));
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {*lo, *hi};
  }

  double sup_norm() const {
    const auto [lo, hi] = range();
    return std::max(std::abs(lo), std::abs(hi));
  }

  ConformalFactor scaled(double s) const {
    ConformalFactor f = *this;
    for (auto& c : f.coeffs_) c *= s;
    return f;
  }

  ConformalFactor shifted(double c) const {
    ConformalFactor f = *this;
    f.ref({0, 0, 0}) += c;
    return f;
  }

  friend ConformalFactor operator+(const ConformalFactor& a, const ConformalFactor& b) {
    ConformalFactor f(std::max(a.degree_, b.degree_));
    for (const auto& [m, c] : a.terms()) f.ref(m) += c;
    for (const auto& [m, c] : b.terms()) f.ref(m) += c;
    return f;
  }

  friend bool operator==(const ConformalFactor& a, const ConformalFactor& b) {
    const int d = std::max(a.degree_, b.degree_);
    for (int x = -d; x <= d; ++x) {
      for (int y = -d; y <= d; ++y) {
        for (int z = -d; z <= d; ++z) {
          if (a.coeff({x, y, z}) != b.coeff({x, y, z})) return false;
        }
      }
    }
    return a.degree_ == b.degree_;
  }

  static int linf(const IntVec3& m) {
    return std::max({std::abs(m[0]), std::abs(m[1]), std::abs(m[2])});
  }
  static IntVec3 neg(const IntVec3& m) { return {-m[0], -m[1], -m[2]}; }

 private:
  explicit ConformalFactor(int degree)
      : degree_(degree),
        coeffs_(static_cast<std::size_t>((2 * degree + 1) * (2 * degree + 1) * (2 * degree + 1)),
                cplx{0.0, 0.0}) {}

  std::size_t index(const IntVec3& m) const {
    const int w = 2 * degree_ + 1;
    return static_cast<std::size_t>(((m[0] + degree_) * w + (m[1] + degree_)) * w + (m[2] + degree_));
  }
  cplx& ref(const IntVec3& m) { return coeffs_[index(m)]; }

  void symmetrize() {
    std::vector<cplx> sym(coeffs_.size());
    for (int a = -degree_; a <= degree_; ++a) {
      for (int b = -degree_; b <= degree_; ++b) {
        for (int c = -degree_; c <= degree_; ++c) {
          const IntVec3 m{a, b, c};
          sym[index(m)] = 0.5 * (coeff(m) + std::conj(coeff(neg(m))));
        }
      }
    }
    coeffs_ = std::move(sym);
  }

  int degree_;
  std::vector<cplx> coeffs_;
};

/// Fourier coefficients of e^{tf} for |m|_inf <= band.
struct ExpCoefficients {
  int band = 0;
  int grid = 0;                      // oversampled grid used (0 for exact cases)
  double reconstruction_error = 0.0; // max |truncated series - e^{tf}| on that grid
  std::vector<cplx> values;

  cplx at(const IntVec3& m) const {
    if (ConformalFactor::linf(m) > band) return {0.0, 0.0};
    const int w = 2 * band + 1;
    return values[static_cast<std::size_t>(((m[0] + band) * w + (m[1] + band)) * w + (m[2] + band))];
  }
};

/// Oversampled grid size: smallest power of two >= max(64, 8(band + d)).
inline int exp_grid_size(int band, int degree) {
  return detail::next_pow2(std::max(64, 8 * (band + degree)));
}

inline ExpCoefficients exp_coeffs(const ConformalFactor& f, double t, int band) {
  if (band < 0) throw ValidationError("exponential band must be >= 0");
  ExpCoefficients out;
  out.band = band;
  const int w = 2 * band + 1;
  out.values.assign(static_cast<std::size_t>(w * w * w), cplx{0.0, 0.0});
  auto slot = [&](const IntVec3& m) -> cplx& {
    return out.values[static_cast<std::size_t>(((m[0] + band) * w + (m[1] + band)) * w + (m[2] + band))];
  };

  if (t == 0.0 || f.is_constant()) {
    slot({0, 0, 0}) = std::exp(t * f.mean());
    return out;
  }

  const int g = exp_grid_size(band, f.degree());
  out.grid = g;
  detail::ComplexGrid grid(g);
  for (const auto& [m, c] : f.terms()) grid.mode(m) += c;
  detail::fft3_inplace(grid, detail::FftDirection::kInverse);
  std::vector<double> target(grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    target[i] = std::exp(t * grid.values[i].real());
    grid.values[i] = target[i];
  }
  detail::fft3_inplace(grid, detail::FftDirection::kForward);
  const double scale = 1.0 / (static_cast<double>(g) * g * g);
  for (int a = -band; a <= band; ++a) {
    for (int b = -band; b <= band; ++b) {
      for (int c = -band; c <= band; ++c) {
        slot({a, b, c}) = grid.mode({a, b, c}) * scale;
      }
    }
  }
  // e^{tf} is real: enforce h(-m) = conj h(m) exactly.
  std::vector<cplx> sym(out.values.size());
  for (int a = -band; a <= band; ++a) {
    for (int b = -band; b <= band; ++b) {
      for (int c = -band; c <= band; ++c) {
        sym[static_cast<std::size_t>(((a + band) * w + (b + band)) * w + (c + band))] =
            0.5 * (out.at({a, b, c}) + std::conj(out.at({-a, -b, -c})));
      }
    }
  }
  out.values = std::move(sym);

  detail::ComplexGrid rec(g);
  for (int a = -band; a <= band; ++a) {
    for (int b = -band; b <= band; ++b) {
      for (int c = -band; c <= band; ++c) rec.mode({a, b, c}) = out.at({a, b, c});
    }
  }
  detail::fft3_inplace(rec, detail::FftDirection::kInverse);
  double err = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    err = std::max(err, std::abs(rec.values[i] - target[i]));
  }
  out.reconstruction_error = err;
  return out;
}

/// Scalar Galerkin matrix H[i, j] = h(k_i - k_j) of multiplication by e^{tf}.
inline Eigen::MatrixXcd assemble_weight_scalar(const ConformalFactor& f, double t, const ModeSet& modes) {
  const ExpCoefficients h = exp_coeffs(f, t, 2 * modes.order());
  const auto n = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const IntVec3 ki = modes.lattice_point(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      const IntVec3 kj = modes.lattice_point(static_cast<std::size_t>(j));
      out(i, j) = h.at({ki[0] - kj[0], ki[1] - kj[1], ki[2] - kj[2]});
    }
  }
  return out;
}

/// B = H (x) I_2 in the interleaved spinor layout.
inline Eigen::MatrixXcd assemble_B(const ConformalFactor& f, double t, const ModeSet& modes) {
  const Eigen::MatrixXcd h = assemble_weight_scalar(f, t, modes);
  const auto n = static_cast<Eigen::Index>(modes.dim());
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      b(2 * i, 2 * j) = h(i, j);
      b(2 * i + 1, 2 * j + 1) = h(i, j);
    }
  }
  return b;
}

/// |t| (max f - min f) <= 1.
inline bool in_accepted_range(const ConformalFactor& f, double t) {
  const auto [lo, hi] = f.range();
  return std::abs(t) * (hi - lo) <= 1.0 + 1e-12;
}

/// Galerkin pair (A, B) of the deformed operator at parameter t.
class DeformedOperator {
 public:
  DeformedOperator(ConformalFactor f, double t, ModeSetPtr modes, std::string f_ref = {})
      : f_(std::move(f)), t_(t), modes_(std::move(modes)), f_ref_(std::move(f_ref)) {
    if (!modes_) throw ValidationError("deformed operator needs a mode set");
    a_ = assemble_flat_dirac(*modes_);
    b_ = std::make_shared<const Eigen::MatrixXcd>(assemble_B(f_, t_, *modes_));
    // e^{tf} overflows for huge t; LLT does not notice NaN entries
    Eigen::LLT<Eigen::MatrixXcd> llt(*b_);
    if (!b_->allFinite() || llt.info() != Eigen::Success) {
      throw PdFailure("weight matrix not positive definite at t = " + std::to_string(t_) +
                      "; t is too large for this truncation");
    }
    accepted_ = dirac3::in_accepted_range(f_, t_);
  }

  const ConformalFactor& factor() const { return f_; }
  double t() const { return t_; }
  const ModeSetPtr& modes() const { return modes_; }
  const Eigen::MatrixXcd& a() const { return a_; }
  const Eigen::MatrixXcd& b() const { return *b_; }
  const std::string& f_ref() const { return f_ref_; }

  /// False when |t| (max f - min f) > 1; callers should warn.
  bool in_accepted_range() const { return accepted_; }

  /// Mean of e^{tf}; equals every diagonal entry of B.
  double weight_mean() const { return (*b_)(0, 0).real(); }

  /// vol(g^t) = int e^{3tf} dmu
  double volume() const {
    return exp_coeffs(f_, TorusGeometry::dimension * t_, 0).at({0, 0, 0}).real();
  }

  SpectrumResult spectrum(const SolveOptions& opts = {}) const {
    SpectrumMeta meta{modes_->spin(), modes_->order(), t_, f_ref_};
    return make_spectrum(std::move(meta), modes_, a_, b_, opts);
  }

 private:
  ConformalFactor f_;
  double t_;
  ModeSetPtr modes_;
  std::string f_ref_;
  Eigen::MatrixXcd a_;
  std::shared_ptr<const Eigen::MatrixXcd> b_;
  bool accepted_ = true;
};

/// Eigenvalues of D^t in the truncation, with B-orthonormal eigenvectors
/// chi = e^{tf} phi.
inline SpectrumResult deformed_spectrum(const ConformalFactor& f, double t, const ModeSetPtr& modes,
                                        const SolveOptions& opts = {}, std::string f_ref = {}) {
  return DeformedOperator(f, t, modes, std::move(f_ref)).spectrum(opts);
}

inline constexpr int kDefaultExpBand = 12;

/// D^t phi = e^{-tf} (D phi + (n-1)/2 t grad f . phi), computed in Fourier
/// space. e^{-tf} is truncated to |m|_inf <= exp_band, so the result lives on
/// the truncation of order N + d + exp_band.
inline SpinorField apply_deformed_dirac(const ConformalFactor& f, double t, const SpinorField& phi,
                                        int exp_band = kDefaultExpBand) {
  const ModeSet& in = *phi.modes();
  const int d = f.degree();
  const ModeSetPtr mid = build_mode_set(in.order() + d, in.spin());
  const ModeSetPtr out_modes = build_mode_set(in.order() + d + exp_band, in.spin());
  const double half = 0.5 * (TorusGeometry::dimension - 1);

  SpinorField psi = apply_flat_dirac(phi).extend_to(mid);
  if (t != 0.0) {
    // c(grad f) = i sigma.(grad f) = -sum_m f^(m) (sigma.m) e^{i<m,x>}
    for (const auto& [m, c] : f.terms()) {
      if (m == IntVec3{0, 0, 0}) continue;
      const Mat2 op = -c * sigma_dot(Vector3(m[0], m[1], m[2])) * (half * t);
      for (std::size_t i = 0; i < in.size(); ++i) {
        const IntVec3 k = in.lattice_point(i);
        const std::size_t j = *mid->find({k[0] + m[0], k[1] + m[1], k[2] + m[2]});
        psi.coeffs().segment<2>(2 * static_cast<Eigen::Index>(j)) += op * phi.coefficient(i);
      }
    }
  }

  const ExpCoefficients g = exp_coeffs(f, -t, exp_band);
  std::vector<std::pair<IntVec3, cplx>> weights;
  for (int a = -exp_band; a <= exp_band; ++a) {
    for (int b = -exp_band; b <= exp_band; ++b) {
      for (int c = -exp_band; c <= exp_band; ++c) {
        const cplx v = g.at({a, b, c});
        if (v != cplx{0.0, 0.0}) weights.emplace_back(IntVec3{a, b, c}, v);
      }
    }
  }
  SpinorField out = SpinorField::zero(out_modes);
  for (std::size_t i = 0; i < mid->size(); ++i) {
    const Spinor u = psi.coefficient(i);
    if (u.isZero(0.0)) continue;
    const IntVec3 k = mid->lattice_point(i);
    for (const auto& [m, w] : weights) {
      const std::size_t j = *out_modes->find({k[0] + m[0], k[1] + m[1], k[2] + m[2]});
      out.coeffs().segment<2>(2 * static_cast<Eigen::Index>(j)) += w * u;
    }
  }
  return out;
}

}  // namespace dirac3
