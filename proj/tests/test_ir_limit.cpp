// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "hubbard_phonon/ir_limit.hpp"
#include "oracles.hpp"

using namespace hubbard_phonon;

namespace {

LimitModel reference(double t = -1.0, int n_e = 2) {
  LimitModel m;
  m.hopping = HoppingMatrix::chain(2, t);
  m.u = 1.0;
  m.alpha = 0.5;
  m.n_e = n_e;
  m.family = CutoffFamily{0.5, 1.0, 2};
  m.modes_per_site = 3;
  return m;
}

/// f_x(k) = k^β (a_x + b_x k); integrated exactly by a three-node rule.
SiteProfile linear_profile(const std::vector<Complex>& a, const std::vector<Complex>& b, double beta = 0.5) {
  return [a, b, beta](int x, double k) { return std::pow(k, beta) * (a[x] + b[x] * k); };
}

Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST(Moments, ContinuumMatchesDiscrete) {
  const LimitModel m = reference();
  const SiteProfile f = linear_profile({{0.3, 0.1}, {-0.2, 0.4}}, {{0.5, -0.6}, {0.1, 0.0}});
  for (double kappa : {0.1, 1e-3}) {
    const Discretization d = discretize(m.family, kappa, 3);
    const ProfileMoments c = continuum_moments(m.family, f, kappa);
    const ProfileMoments q = discrete_moments(d, d.embed(f));
    EXPECT_NEAR(c.f_squared, q.f_squared, 1e-12);
    for (int x = 0; x < 2; ++x) {
      EXPECT_NEAR(c.g_squared[x], q.g_squared[x], 1e-12);
      EXPECT_LT(std::abs(c.g_dot_f[x] - q.g_dot_f[x]), 1e-12);
    }
  }
  const ProfileMoments z = continuum_moments(m.family, f, 0.0);
  EXPECT_TRUE(std::isinf(z.g_squared[0]));
  // ∫_0^1 k^{−1/2} k^{1/2}(a + b k) dk = a + b/2.
  EXPECT_LT(std::abs(z.g_dot_f[0] - (Complex(0.3, 0.1) + 0.5 * Complex(0.5, -0.6))), 1e-12);
}

TEST(CoherentElement, MatchesPaddedDisplacements) {
  // One mode: ⟨z'|D(w)|z⟩ with z = −(α/√2) ν g, w = i f/√2.
  const double alpha = 0.8, g = 1.1;
  const Complex f(0.4, -0.3);
  ProfileMoments pm;
  pm.g_squared = {g * g};
  pm.g_dot_f = {g * f};
  pm.f_squared = std::norm(f);
  for (int nu : {0, 1, 2})
    for (int nup : {0, 1, 2}) {
      const int n = 40;
      const Complex z = -alpha / std::sqrt(2.0) * nu * g, zp = -alpha / std::sqrt(2.0) * nup * g;
      const Eigen::VectorXcd ket = oracle::displacement_padded(z, n).col(0);
      const Eigen::VectorXcd bra = oracle::displacement_padded(zp, n).col(0);
      const Eigen::MatrixXcd w = oracle::displacement_padded(Complex(0.0, 1.0) * f / std::sqrt(2.0), n);
      const Complex ref = bra.dot(w * ket);
      EXPECT_LT(std::abs(coherent_weyl_element(alpha, {nu}, {nup}, pm) - ref), 1e-12) << nu << nup;
    }
}

TEST(WeylState, PathsAgree) {
  std::mt19937_64 rng(3);
  const LimitModel m = reference();
  const SiteProfile f = linear_profile({{0.3, 0.1}, {-0.2, 0.4}}, {{0.5, -0.6}, {0.1, 0.0}});
  const Eigen::MatrixXcd a = random_hermitian(6, rng);
  for (double kappa : {0.1, 1e-2, 1e-3}) {
    const WeylStateResult r = weyl_state(m, kappa, a, f);
    EXPECT_LT(std::abs(r.numeric - r.closed), 1e-10) << kappa;
    EXPECT_FALSE(r.phase_form.has_value());
  }
  EXPECT_THROW(weyl_state(m, 0.0, a, f), ArgumentError);
  EXPECT_THROW(weyl_state(m, 0.1, Eigen::MatrixXcd::Identity(3, 3), f), ArgumentError);
}

TEST(WeylState, MatchesTruncatedFockSpace) {
  // One site, two electrons or one: small enough for the full tensor space.
  for (int n_e : {1, 2}) {
    LimitModel m;
    m.hopping = HoppingMatrix(1);
    m.u = 0.5;
    m.alpha = 0.7;
    m.n_e = n_e;
    m.family = CutoffFamily{0.5, 1.0, 1};
    m.modes_per_site = 2;
    const double kappa = 0.2;
    const SiteProfile f = linear_profile({{0.4, -0.2}}, {{0.3, 0.5}});
    std::mt19937_64 rng(8);
    const SectorBasis basis(1, n_e);
    const Eigen::MatrixXcd a = random_hermitian(static_cast<int>(basis.size()), rng);
    const WeylStateResult r = weyl_state(m, kappa, a, f);

    const Discretization d = discretize(m.family, kappa, 2);
    const CoupledModel cm(basis, m.hopping, m.u, m.alpha, TruncatedFock(d.modes, 24), d.couplings);
    const ElectronGround eg = electron_ground(m, kappa);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(cm.dim()));
    for (std::size_t c = 0; c < basis.size(); ++c) psi(c * cm.boson_dim()) = eg.psi(c);
    psi = unitary_V(cm).apply(psi);
    const Eigen::MatrixXcd w = weyl(cm.fock(), d.embed(f)).matrix();
    Complex ref = 0.0;
    for (std::size_t c = 0; c < basis.size(); ++c)
      for (std::size_t cp = 0; cp < basis.size(); ++cp)
        ref += a(cp, c) * psi.segment(cp * cm.boson_dim(), cm.boson_dim()).dot(w * psi.segment(c * cm.boson_dim(), cm.boson_dim()));
    EXPECT_LT(std::abs(r.numeric - ref), 1e-9) << n_e;
    if (n_e == 1) {
      ASSERT_TRUE(r.phase_form);
      EXPECT_LT(std::abs(*r.phase_form - r.closed), 1e-12);
    }
  }
}

TEST(LimitState, ApproachedAsKappaShrinks) {
  std::mt19937_64 rng(12);
  const LimitModel m = reference();
  const SiteProfile f = linear_profile({{0.5, 0.0}, {0.0, -0.3}}, {{-0.2, 0.2}, {0.4, 0.1}});
  const Eigen::MatrixXcd a = random_hermitian(6, rng);
  const LimitStateResult lim = limit_state(m, a, f);
  EXPECT_NEAR(lim.b0, 1.0, 1e-15);
  double prev = std::numeric_limits<double>::infinity();
  for (double kappa : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double dev = std::abs(weyl_state(m, kappa, a, f).closed - lim.value);
    EXPECT_LT(dev, prev) << kappa;
    prev = dev;
  }
}

TEST(LimitState, PhaseFormWithoutHopping) {
  std::mt19937_64 rng(13);
  const LimitModel m = reference(0.0);
  const SiteProfile f = linear_profile({{0.5, 0.0}, {0.0, -0.3}}, {{-0.2, 0.2}, {0.4, 0.1}});
  const Eigen::MatrixXcd a = random_hermitian(6, rng);
  const LimitStateResult lim = limit_state(m, a, f);
  ASSERT_TRUE(lim.phase_form);
  EXPECT_LT(std::abs(*lim.phase_form - lim.value), 1e-12);
}

TEST(OverlapDecay, PowerLawForLogSingularFamily) {
  LimitModel m = reference(-1.0, 1);
  m.alpha = 2.0;
  const std::vector<double> grid{1e-1, 1e-2, 1e-3, 1e-4};
  const auto rows = overlap_decay_curve(m, grid);
  ASSERT_EQ(rows.size(), grid.size());
  for (const auto& r : rows) {
    // (κ/K)^{α² N_e / 4} = κ here.
    EXPECT_NEAR(r.predicted, r.kappa, 1e-12 * r.kappa);
    EXPECT_NEAR(r.normalized, r.predicted, 1e-8 * r.predicted);
  }
}
