// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "hubbard_phonon/lang_firsov.hpp"
#include "oracles.hpp"

using namespace hubbard_phonon;

namespace {

constexpr double kB2 = 0.5;  // common ‖ω^{−1/2}λ_x‖²

/// Two sites, one mode per site at ω = 0.7 and 1.3.
CoupledModel two_site(double t, double u, double alpha, int n_max, int n_e = 2) {
  ModeSet modes({0.7, 1.3}, {0, 1});
  Eigen::VectorXd l0(2), l1(2);
  l0 << std::sqrt(0.7 * kB2), 0.0;
  l1 << 0.0, std::sqrt(1.3 * kB2);
  return CoupledModel(SectorBasis(2, n_e), HoppingMatrix::chain(2, t), u, alpha, TruncatedFock(modes, n_max), {l0, l1});
}

/// S from Kronecker products: site numbers by popcount, fields from ladder matrices.
Eigen::MatrixXcd oracle_generator(const CoupledModel& m) {
  const oracle::FermionOracle o(m.n_sites());
  const std::vector<int> sec = o.sector(m.n_e());
  const int nb = static_cast<int>(m.boson_dim());
  const int nm = m.mode_count();
  const int nf = static_cast<int>(sec.size());
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(nf * nb, nf * nb);
  for (int x = 0; x < m.n_sites(); ++x) {
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(nb, nb);
    for (int j = 0; j < nm; ++j) {
      const Eigen::MatrixXcd a = oracle::mode_annihilator(nm, m.fock().n_max(), j).cast<Complex>();
      phi += m.g()[x](j) * Complex(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0);
    }
    for (int c = 0; c < nf; ++c) {
      const int n = ((sec[c] >> (2 * x)) & 1) + ((sec[c] >> (2 * x + 1)) & 1);
      s.block(c * nb, c * nb, nb, nb) += static_cast<double>(n) * phi;
    }
  }
  return s;
}

Eigen::VectorXcd electron_vector(const CoupledModel& m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(m.fermion_dim()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return v.normalized();
}

Eigen::VectorXcd with_vacuum(const CoupledModel& m, const Eigen::VectorXcd& psi_e) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m.dim()));
  for (std::size_t c = 0; c < m.fermion_dim(); ++c) v(static_cast<Eigen::Index>(c * m.boson_dim())) = psi_e(c);
  return v;
}

}  // namespace

TEST(CoupledModel, AmplitudesAndValidation) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 4);
  EXPECT_NEAR(m.b_kappa(), std::sqrt(kB2), 1e-15);
  // Configuration with both electrons on site 0: z = −(α/√2)·2·g_0.
  const std::size_t c = *m.basis().index_of(OccupationState{0b0011});
  const Eigen::VectorXd z = m.dressing_amplitude(c);
  EXPECT_NEAR(z(0), -0.5 / std::sqrt(2.0) * 2.0 * std::sqrt(0.7 * kB2) / 0.7, 1e-15);
  EXPECT_EQ(z(1), 0.0);
  EXPECT_NEAR(m.r_value(c), 0.5 * 4.0 * kB2, 1e-15);

  ModeSet modes({0.7, 1.3}, {});
  Eigen::VectorXd l(2);
  l << 0.5, 0.5;
  EXPECT_THROW(CoupledModel(SectorBasis(2, 2), HoppingMatrix::chain(2, -1.0), 1.0, 0.5, TruncatedFock(modes, 3), {l, l}),
               ValidationError);
  Eigen::VectorXd bad(2);
  bad << std::numeric_limits<double>::infinity(), 0.0;
  EXPECT_THROW(CoupledModel(SectorBasis(2, 2), HoppingMatrix::chain(2, -1.0), 1.0, 0.5, TruncatedFock(modes, 3), {bad, l}),
               InfraredDivergenceError);
}

TEST(Generator, MatchesKroneckerOracle) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 5);
  const Eigen::MatrixXcd s(build_generator(m));
  EXPECT_LT((s - oracle_generator(m)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((s - s.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(UnitaryV, ExpmPathIsExpOfGenerator) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 6);
  const Eigen::MatrixXcd v = unitary_V(m, VMethod::Expm).to_dense();
  const Eigen::MatrixXcd ref = (Complex(0.0, 0.5) * oracle_generator(m)).exp();
  EXPECT_LT((v - ref).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(v.rows(), v.cols());
  EXPECT_LT((v.adjoint() * v - id).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(UnitaryV, DisplacementMatchesPaddedSeriesAndExpm) {
  // |z| ≤ 0.36: boson tails beyond n_max = 12 stay below 1e-8.
  const CoupledModel m = two_site(-1.0, 1.0, 0.3, 12);
  const DressingUnitary disp = unitary_V(m);
  const DressingUnitary ex = unitary_V(m, VMethod::Expm);
  // Exact elements against a padded exponential, mode by mode.
  for (std::size_t c = 0; c < m.fermion_dim(); ++c) {
    const Eigen::VectorXd z = m.dressing_amplitude(c);
    for (int j = 0; j < 2; ++j)
      EXPECT_LT((disp.product_blocks[c].factors[j] - oracle::displacement_padded(z(j), 12)).cwiseAbs().maxCoeff(), 1e-12);
  }
  for (const auto& psi : interior_test_vectors(m, 4, 3)) {
    EXPECT_LT((disp.apply(psi) - ex.apply(psi)).norm(), 1e-7);
    EXPECT_LT((disp.apply_adjoint(disp.apply(psi)) - psi).norm(), 1e-7);
  }
}

TEST(UnitaryV, TestVectorsIndependentOfTruncation) {
  const auto a = interior_test_vectors(two_site(-1.0, 1.0, 0.5, 4), 2, 9);
  const auto b = interior_test_vectors(two_site(-1.0, 1.0, 0.5, 7), 2, 9);
  const CoupledModel ma = two_site(-1.0, 1.0, 0.5, 4), mb = two_site(-1.0, 1.0, 0.5, 7);
  for (std::size_t c = 0; c < ma.fermion_dim(); ++c)
    for (int n0 = 0; n0 <= 2; ++n0)
      for (int n1 = 0; n0 + n1 <= 2; ++n1) {
        const std::vector<int> occ{n0, n1};
        EXPECT_EQ(a[1](c * ma.boson_dim() + ma.fock().index_of(occ)), b[1](c * mb.boson_dim() + mb.fock().index_of(occ)));
      }
}

TEST(Transform, HbIdentityConvergesWithTruncation) {
  double prev = std::numeric_limits<double>::infinity();
  for (int n_max : {6, 10, 14, 20, 26}) {
    const TransformResidual r = verify_transform_Hb(two_site(-1.0, 1.0, 0.8, n_max));
    EXPECT_LT(r.residual, prev) << n_max;
    prev = r.residual;
  }
  EXPECT_LT(prev, 1e-9);
  EXPECT_LT(verify_transform_Hb(two_site(-1.0, 1.0, 0.0, 6)).residual, 1e-14);
}

TEST(Transform, NbQuadraticCoefficientIsHalfAlphaSquared) {
  for (double alpha : {0.3, 0.5, 1.0}) {
    const NbTransformResult r = verify_transform_Nb(two_site(-1.0, 1.0, alpha, 30));
    EXPECT_NEAR(r.fitted_over_alpha2(), 0.5, 1e-8) << alpha;
    EXPECT_LT(r.linear_residual, 1e-8);
    EXPECT_LT(r.quadratic_residual, 1e-8);
    EXPECT_LT(r.residual_half, 1e-8);
    EXPECT_GT(r.residual_stated, 1e-3);
  }
}

TEST(Transform, CommutatorLadder) {
  const CommutatorResiduals r = commutator_ladder(two_site(-1.0, 1.0, 0.5, 9));
  EXPECT_LT(r.hb, 1e-13);
  EXPECT_LT(r.fields, 1e-13);
  EXPECT_LT(r.triple, 1e-12);
}

TEST(Spectra, WithoutHoppingDirectAndEffectiveCoincide) {
  const CoupledModel m = two_site(0.0, 1.0, 0.5, 12);
  const SpectralComparison s = compare_spectra(m, 5);
  EXPECT_LT(s.max_difference, 1e-8);
  EXPECT_LT(s.polaron_max_difference, 1e-8);
  // u_eff = 1 − 0.25·0.5 > 0: the four singly occupied configurations.
  EXPECT_EQ(s.effective_degeneracy, 4);
  EXPECT_EQ(s.direct_degeneracy, 4);
}

TEST(Spectra, HoppingIsDressedByTheTransformation) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 14);
  const SpectralComparison s = compare_spectra(m, 5);
  // V†HV reproduces H; the undressed hopping in Ĥ_e does not.
  EXPECT_LT(s.polaron_max_difference, 1e-7);
  EXPECT_GT(s.max_difference, 1e-3);
}

TEST(DressedState, ExpectationsAndAnnihilation) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 14);
  std::mt19937_64 rng(31);
  const Eigen::VectorXcd psi_e = electron_vector(m, rng);
  const DressedState d = dress_state(m, psi_e);
  EXPECT_FALSE(d.flagged);
  const Eigen::VectorXcd full = reconstruct(m, d);
  EXPECT_LT((full - unitary_V(m).apply(with_vacuum(m, psi_e))).norm(), 1e-9);
  EXPECT_NEAR(nb_expectation(d), nb_expectation_matrix(m, full), 1e-9);
  // ⟨N_b⟩ = (α²/2) Σ_c |ψ_c|² Σ_x ν_x² ‖g_x‖² for orthogonal channels.
  double expect = 0.0;
  for (std::size_t c = 0; c < m.fermion_dim(); ++c) {
    const auto nu = m.nu(c);
    for (int x = 0; x < 2; ++x) expect += std::norm(psi_e(c)) * 0.125 * nu[x] * nu[x] * m.g()[x].squaredNorm();
  }
  EXPECT_NEAR(nb_expectation(d), expect, 1e-14);
  for (int k = 0; k < 5; ++k) {
    ModeVector f(2);
    f << Complex(rng() % 7 / 3.0, 0.4), Complex(-0.3, rng() % 5 / 4.0);
    EXPECT_LT(annihilation_residual(m, d, f), 1e-7);
  }
  EXPECT_THROW(dress_state(m, 2.0 * psi_e), ArgumentError);
}

TEST(Heisenberg, ExactWithoutHopping) {
  const CoupledModel m = two_site(0.0, 1.0, 0.5, 20);
  ModeVector f(2);
  f << Complex(0.4, -0.2), Complex(0.1, 0.7);
  EXPECT_LT(heisenberg_evolution_check(m, f, 10.0, {2, 5, 2}), 1e-7);
  EXPECT_EQ(heisenberg_evolution_check(m, f, 0.0), 0.0);
}

TEST(Heisenberg, HoppingModelDeviates) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 16);
  ModeVector f(2);
  f << Complex(0.4, -0.2), Complex(0.1, 0.7);
  EXPECT_GT(heisenberg_evolution_check(m, f, 2.0, {2, 5, 2}), 1e-3);
}

TEST(Overlap, NumericMatchesClosedFormAndFullSpace) {
  const CoupledModel m = two_site(-1.0, 1.0, 0.5, 14);
  const double alpha = m.alpha();
  const SectorBasis& b = m.basis();
  const GroundSpaceReport g = ground_space(build_effective_hubbard(b, m.hopping(), m.effective()));
  ASSERT_EQ(g.degeneracy, 1);
  const Eigen::VectorXcd psi_eg = g.vectors.col(0).cast<Complex>();
  const std::size_t c0 = *b.index_of(OccupationState{0b0110});  // up on 1, down on 0
  Eigen::VectorXcd psi_e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.size()));
  psi_e(c0) = 1.0;
  ModeVector f1(2), f2(2);
  f1 << Complex(0.3, 0.2), Complex(-0.5, 0.1);
  f2 << Complex(0.9, 0.0), Complex(0.2, -0.4);
  const std::vector<std::vector<ModeVector>> cases{{}, {f1}, {f1, f2}};

  // Full-space oracle: a(f)…a(f) applied to V(ψ_eg⊗Ω), projected on ψ_e⊗Ω.
  const Eigen::VectorXcd dressed = unitary_V(m, VMethod::Expm).apply(with_vacuum(m, psi_eg));
  for (const auto& fs : cases) {
    const OverlapResult r = overlap_formula(m, fs, psi_e, psi_eg);
    Eigen::VectorXcd bos = dressed.segment(c0 * m.boson_dim(), m.boson_dim());
    for (const auto& f : fs) bos = annihilator(m.fock(), f) * bos;
    const Complex ref = bos(0);
    EXPECT_LT(std::abs(r.numeric - ref), 1e-9) << fs.size();
    ASSERT_TRUE(r.closed);
    EXPECT_LT(std::abs(r.numeric - *r.closed), 1e-12) << fs.size();
    // The printed variant differs by α^n in modulus.
    ASSERT_TRUE(r.printed);
    EXPECT_NEAR(std::abs(*r.printed) / std::abs(*r.closed), std::pow(alpha, -static_cast<double>(fs.size())), 1e-10);
  }
  const Eigen::VectorXcd mixed = (Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(b.size()))).normalized();
  EXPECT_THROW(overlap_formula(m, {f1}, mixed, psi_eg), PreconditionError);
  EXPECT_NO_THROW(overlap_numeric(m, {f1}, mixed, psi_eg));
}

TEST(Overlap, DoublyOccupiedReference) {
  const CoupledModel m = two_site(-1.0, -1.0, 0.7, 16);
  const GroundSpaceReport g = ground_space(build_effective_hubbard(m.basis(), m.hopping(), m.effective()));
  const Eigen::VectorXcd psi_eg = g.vectors.col(0).cast<Complex>();
  const std::size_t c0 = *m.basis().index_of(OccupationState{0b0011});
  Eigen::VectorXcd psi_e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m.fermion_dim()));
  psi_e(c0) = 1.0;
  ModeVector f(2);
  f << Complex(0.6, -0.1), Complex(0.3, 0.3);
  const OverlapResult r = overlap_formula(m, {f, f}, psi_e, psi_eg);
  EXPECT_LT(std::abs(r.numeric - *r.closed), 1e-12);
}
