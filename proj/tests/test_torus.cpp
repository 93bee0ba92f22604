#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace dirac3;
namespace ts = testsupport;

TEST(SpinStructure, ParseAndPrint) {
  const SpinStructure s = SpinStructure::parse("1,0,1");
  EXPECT_EQ(s.delta(), (IntVec3{1, 0, 1}));
  EXPECT_EQ(s.to_string(), "1,0,1");
  EXPECT_THROW(SpinStructure::parse("1,0"), ValidationError);
  EXPECT_THROW(SpinStructure::parse("1,0,2"), ValidationError);
  EXPECT_THROW(SpinStructure::parse("1,0,0,1"), ValidationError);
  EXPECT_EQ(SpinStructure::all().size(), 8u);
}

TEST(ModeSet, CountsForOrderOne) {
  const auto m0 = build_mode_set(1, SpinStructure());
  EXPECT_EQ(m0->size(), 27u);
  EXPECT_TRUE(m0->find({0, 0, 0}).has_value());

  const auto m1 = build_mode_set(1, SpinStructure(IntVec3{1, 0, 0}));
  EXPECT_EQ(m1->size(), 18u);
  bool has_plus = false;
  bool has_minus = false;
  for (std::size_t i = 0; i < m1->size(); ++i) {
    const Vector3 k = m1->kappa(i);
    EXPECT_NE(k[0], std::round(k[0]));
    has_plus = has_plus || k.isApprox(Vector3(0.5, 0, 0));
    has_minus = has_minus || k.isApprox(Vector3(-0.5, 0, 0));
  }
  EXPECT_TRUE(has_plus && has_minus);
  EXPECT_THROW(build_mode_set(0, SpinStructure()), ValidationError);
}

TEST(ModeSet, NegationClosedWithoutDuplicates) {
  for (int n = 1; n <= 4; ++n) {
    for (const auto& spin : SpinStructure::all()) {
      const auto m = build_mode_set(n, spin);
      std::size_t expected = 1;
      for (int j = 0; j < 3; ++j) expected *= static_cast<std::size_t>(spin[j] ? 2 * n : 2 * n + 1);
      EXPECT_EQ(m->size(), expected);
      std::set<IntVec3> seen;
      for (std::size_t i = 0; i < m->size(); ++i) {
        EXPECT_TRUE(seen.insert(m->lattice_point(i)).second);
        const std::size_t j = m->negated(i);
        EXPECT_TRUE(m->kappa(j).isApprox(-m->kappa(i)) || m->kappa(i).isZero());
        EXPECT_EQ(*m->find(m->lattice_point(i)), i);
      }
    }
  }
}

TEST(FlatDirac, ZeroAndUnitEigenvaluesAtOrderOne) {
  const auto ev = flat_eigenvalues(*build_mode_set(1, SpinStructure()));
  EXPECT_EQ(std::count_if(ev.begin(), ev.end(), [](double v) { return std::abs(v) < 1e-14; }), 2);
  EXPECT_EQ(std::count_if(ev.begin(), ev.end(), [](double v) { return std::abs(v - 1.0) < 1e-14; }), 6);

  const auto ev1 = flat_eigenvalues(*build_mode_set(1, SpinStructure(IntVec3{1, 0, 0})));
  double smallest = 1e9;
  for (double v : ev1) {
    if (v > 0) smallest = std::min(smallest, v);
  }
  EXPECT_NEAR(smallest, 0.5, 1e-15);
  EXPECT_EQ(std::count_if(ev1.begin(), ev1.end(), [](double v) { return std::abs(v - 0.5) < 1e-14; }), 2);
}

TEST(FlatDirac, MatrixIsBlockDiagonalOfSymbols) {
  const auto m = build_mode_set(2, SpinStructure(IntVec3{0, 1, 1}));
  const Eigen::MatrixXcd a = assemble_flat_dirac(*m);
  EXPECT_TRUE(a.isApprox(a.adjoint()));
  for (std::size_t i = 0; i < m->size(); ++i) {
    const auto r = 2 * static_cast<Eigen::Index>(i);
    const Mat2 blk = a.block<2, 2>(r, r);
    EXPECT_TRUE(blk.isApprox(ts::clifford(m->kappa(i)) * ts::kI) || m->kappa(i).isZero());
  }
  Eigen::MatrixXcd off = a;
  for (std::size_t i = 0; i < m->size(); ++i) {
    off.block<2, 2>(2 * static_cast<Eigen::Index>(i), 2 * static_cast<Eigen::Index>(i)).setZero();
  }
  EXPECT_TRUE(off.isZero(0.0));
}

TEST(ClosedForm, ListedValues) {
  const auto l0 = closed_form_spectrum(SpinStructure(), 1.5);
  ASSERT_GE(l0.size(), 3u);
  EXPECT_EQ(l0[0].lambda, 0.0);
  EXPECT_EQ(l0[0].mult_c, 2);
  EXPECT_EQ(l0[0].mult_h, 1);
  EXPECT_EQ(l0[1].lambda, 1.0);
  EXPECT_EQ(l0[1].mult_c, 6);
  EXPECT_EQ(l0[1].mult_h, 3);
  EXPECT_DOUBLE_EQ(l0[2].lambda, std::sqrt(2.0));
  EXPECT_EQ(l0[2].mult_c, 12);
  EXPECT_EQ(l0[2].mult_h, 6);

  const auto l1 = closed_form_spectrum(SpinStructure(IntVec3{1, 0, 0}), 1.5);
  ASSERT_EQ(l1.size(), 3u);
  EXPECT_EQ(l1[0].lambda, 0.5);
  EXPECT_EQ(l1[0].mult_c, 2);
  EXPECT_DOUBLE_EQ(l1[1].lambda, std::sqrt(5.0) / 2.0);
  EXPECT_EQ(l1[1].mult_c, 8);
  EXPECT_EQ(l1[2].lambda, 1.5);
  EXPECT_EQ(l1[2].mult_c, 10);
  EXPECT_EQ(l1[2].mult_h, 5);
}

TEST(ClosedForm, NoKernelForNontrivialSpin) {
  for (const auto& spin : SpinStructure::all()) {
    if (spin.is_trivial()) continue;
    for (const auto& l : closed_form_spectrum(spin, 3.0, true)) EXPECT_NE(l.lambda, 0.0);
  }
}

TEST(ClosedForm, AgreesWithLatticeEnumeration) {
  for (const auto& spin : SpinStructure::all()) {
    const auto mine = closed_form_spectrum(spin, 3.2, true);
    const auto ref = ts::lattice_spectrum(spin, 3.2);
    ASSERT_EQ(mine.size(), ref.size()) << spin.to_string();
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_NEAR(mine[i].lambda, ref[i].lambda, 1e-13);
      EXPECT_EQ(mine[i].mult_c, ref[i].mult_c);
      EXPECT_EQ(mine[i].mult_h * 2, mine[i].mult_c);
    }
  }
}

TEST(FlatDirac, MatchesOracleInsideTrustedRadius) {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& spin : SpinStructure::all()) {
      const auto m = build_mode_set(n, spin);
      const auto ev = flat_eigenvalues(*m);
      for (const auto& line : ts::lattice_spectrum(spin, n - 0.5)) {
        const auto hits = std::count_if(ev.begin(), ev.end(),
                                        [&](double v) { return std::abs(v - line.lambda) < 1e-12; });
        EXPECT_EQ(hits, line.mult_c) << spin.to_string() << " N=" << n << " lambda=" << line.lambda;
      }
    }
  }
}

TEST(FlatDirac, SpectrumSymmetricAndKernelOnlyForTrivialSpin) {
  for (const auto& spin : SpinStructure::all()) {
    const auto ev = flat_eigenvalues(*build_mode_set(2, spin));
    for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], -ev[ev.size() - 1 - i], 1e-13);
    const auto zeros = std::count_if(ev.begin(), ev.end(), [](double v) { return std::abs(v) < 1e-12; });
    EXPECT_EQ(zeros, spin.is_trivial() ? 2 : 0);
  }
}

TEST(SpinorFieldInner, ParsevalBasics) {
  const auto m = build_mode_set(2, SpinStructure(IntVec3{1, 1, 0}));
  const auto a = SpinorField::single_mode(m, {1, 0, -1}, Spinor(1.0, 0.0));
  const auto b = SpinorField::single_mode(m, {0, 0, 0}, Spinor(0.0, 1.0));
  EXPECT_EQ(l2_inner(a, a), cplx(1.0));
  EXPECT_EQ(l2_inner(a, b), cplx(0.0));
  EXPECT_THROW(SpinorField::single_mode(m, {5, 0, 0}, Spinor(1.0, 0.0)), ValidationError);
}

TEST(SpinorFieldInner, AgreesWithGridQuadrature) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 4; ++k) {
    const auto m = build_mode_set(1, ts::spin(rng));
    const auto phi = ts::field(m, rng);
    const auto psi = ts::field(m, rng);
    // frequencies of the product stay within [-2, 2] per axis, so 6 points are exact
    EXPECT_LT(std::abs(l2_inner(phi, psi) - ts::quadrature_inner(phi, psi, 6)), 1e-12 * l2_norm(phi) * l2_norm(psi));
    const cplx ab = l2_inner(phi, psi);
    EXPECT_LT(std::abs(std::conj(ab) - l2_inner(psi, phi)), 1e-12);
  }
}

TEST(SpinorFieldInner, MismatchedModeSetsThrow) {
  const auto a = SpinorField::zero(build_mode_set(1, SpinStructure()));
  const auto b = SpinorField::zero(build_mode_set(2, SpinStructure()));
  EXPECT_THROW(l2_inner(a, b), ValidationError);
}

TEST(Density, SingleModeIsConstant) {
  const auto m = build_mode_set(2, SpinStructure(IntVec3{0, 0, 1}));
  const Spinor u(cplx(0.6, 0.0), cplx(0.0, 0.8));
  for (double v : pointwise_density(SpinorField::single_mode(m, {1, -2, 0}, u), 16)) EXPECT_NEAR(v, 1.0, 1e-13);
  for (double v : pointwise_density(SpinorField::zero(m), 16)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(pointwise_density(SpinorField::zero(m), 8), ValidationError);
}

TEST(Density, TwoModeFieldMatchesDirectEvaluation) {
  std::mt19937_64 rng(22);
  const auto m = build_mode_set(2, SpinStructure(IntVec3{1, 0, 1}));
  const auto phi = ts::sparse_field(m, 2, rng);
  const int g = 16;
  const auto rho = pointwise_density(phi, g);
  std::uniform_int_distribution<int> idx(0, g - 1);
  for (int k = 0; k < 10; ++k) {
    const int a = idx(rng), b = idx(rng), c = idx(rng);
    const double h = 2.0 * std::numbers::pi / g;
    const Vector3 x(a * h, b * h, c * h);
    EXPECT_NEAR(rho[static_cast<std::size_t>((a * g + b) * g + c)], ts::value(phi, x).squaredNorm(), 1e-12);
    EXPECT_LT((phi.evaluate(x) - ts::value(phi, x)).norm(), 1e-12);
  }
}

TEST(QuaternionicField, SingleModeAndInvolution) {
  const auto m = build_mode_set(2, SpinStructure(IntVec3{1, 1, 1}));
  const auto phi = SpinorField::single_mode(m, {0, 1, -1}, Spinor(1.0, 0.0));
  const auto jphi = apply_J_field(phi);
  // kappa = (1/2, 3/2, -1/2), so -kappa has lattice part (-1, -2, 0)
  EXPECT_EQ(jphi.coeffs(), SpinorField::single_mode(m, {-1, -2, 0}, Spinor(0.0, 1.0)).coeffs());

  std::mt19937_64 rng(23);
  for (const auto& spin : SpinStructure::all()) {
    const auto mm = build_mode_set(2, spin);
    const auto f = ts::field(mm, rng);
    EXPECT_LT((apply_J_field(apply_J_field(f)) + f).coeffs().norm(), 1e-13 * f.coeffs().norm());
    EXPECT_LT((apply_flat_dirac(apply_J_field(f)) - apply_J_field(apply_flat_dirac(f))).coeffs().norm(),
              1e-12 * f.coeffs().norm());
    // pointwise J is the pointwise quaternionic structure
    const Vector3 x = ts::point(rng);
    EXPECT_LT((ts::value(apply_J_field(f), x) - ts::quaternionic_j(ts::value(f, x))).norm(), 1e-10);
  }
}

TEST(QuaternionicField, FlatEigenspacesAreJInvariant) {
  const auto m = build_mode_set(2, SpinStructure(IntVec3{1, 0, 0}));
  const SpectrumResult s = flat_spectrum(m);
  for (const auto& c : s.clusters) {
    const Eigen::MatrixXcd v = s.eigenvectors.middleCols(static_cast<Eigen::Index>(c.begin),
                                                         static_cast<Eigen::Index>(c.size));
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      const Eigen::VectorXcd jv = apply_J_coeffs(*m, v.col(k));
      EXPECT_LT((jv - v * (v.adjoint() * jv)).norm(), 1e-10);
    }
  }
}

TEST(FlatDirac, ApplyMatchesDirectDerivative) {
  std::mt19937_64 rng(24);
  const auto m = build_mode_set(2, SpinStructure(IntVec3{0, 1, 0}));
  const auto phi = ts::field(m, rng);
  const auto dphi = apply_flat_dirac(phi);
  for (int k = 0; k < 5; ++k) {
    const Vector3 x = ts::point(rng);
    EXPECT_LT((ts::value(dphi, x) - ts::dirac_value(phi, x)).norm(), 1e-10);
  }
}
