// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "hubbard_phonon/ir_modes.hpp"
#include "oracles.hpp"

using namespace hubbard_phonon;

namespace {
const CutoffFamily kRef{0.5, 1.0, 2};
}

TEST(NormOmegaPower, ReferenceValues) {
  EXPECT_NEAR(norm_omega_power(kRef, 0.5, 0.1).closed, 0.9, 1e-15);
  EXPECT_NEAR(norm_omega_power(kRef, 1.0, 0.1).closed, std::log(10.0), 1e-15);
  EXPECT_NEAR(norm_omega_power(kRef, 1.0, 0.1).closed, 2.3025851, 1e-7);
  try {
    norm_omega_power(kRef, 1.0, 0.0);
    FAIL() << "expected a divergence";
  } catch (const InfraredDivergenceError& e) {
    EXPECT_EQ(e.divergence_class(), DivergenceClass::LogSingular);
  }
  try {
    norm_omega_power(CutoffFamily{0.3, 1.0, 1}, 1.0, 0.0);
    FAIL() << "expected a divergence";
  } catch (const InfraredDivergenceError& e) {
    EXPECT_EQ(e.divergence_class(), DivergenceClass::PowerSingular);
  }
  EXPECT_THROW(norm_omega_power(kRef, 0.5, 1.5), ArgumentError);
  EXPECT_THROW(norm_omega_power(CutoffFamily{-0.5, 1.0, 1}, 0.5, 0.1), ArgumentError);
}

TEST(NormOmegaPower, QuadratureMatchesClosedForm) {
  for (double beta : {0.3, 0.5, 0.8})
    for (double s : {0.0, 0.5, 1.0})
      for (double kappa : {1e-4, 1e-3, 1e-2, 1e-1}) {
        const NormValue v = norm_omega_power(CutoffFamily{beta, 2.0, 1}, s, kappa);
        EXPECT_LE(v.relative_difference(), 1e-10) << beta << " " << s << " " << kappa;
        EXPECT_NEAR(v.closed, oracle::simpson_power(2 * (beta - s), kappa, 2.0), 1e-9 * v.closed);
      }
  // κ = 0 on the convergent side.
  const NormValue v = norm_omega_power(CutoffFamily{0.3, 1.0, 1}, 0.5, 0.0);
  EXPECT_NEAR(v.closed, 1.0 / 0.6, 1e-14);
  EXPECT_LE(v.relative_difference(), 1e-10);
}

TEST(BKappa, Values) {
  EXPECT_NEAR(b_kappa(kRef, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(b_kappa(kRef, 0.1), 0.9486833, 1e-7);
  double prev = b_kappa(kRef, 0.0);
  for (double k : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9}) {
    const double b = b_kappa(kRef, k);
    EXPECT_LE(b, prev);
    prev = b;
  }
  EXPECT_NEAR(b_kappa(CutoffFamily{0.8, 2.0, 1}, 0.0), std::sqrt(std::pow(2.0, 1.6) / 1.6), 1e-14);
}

TEST(Singularity, Classes) {
  EXPECT_EQ(classify_singularity(0.5), DivergenceClass::LogSingular);
  EXPECT_EQ(classify_singularity(0.3), DivergenceClass::PowerSingular);
  EXPECT_EQ(classify_singularity(0.8), DivergenceClass::Regular);
}

TEST(IRReport, DivergenceRates) {
  const std::vector<double> grid{1e-1, 1e-2, 1e-3, 1e-4};
  const IRReport log = ir_report(kRef, grid);
  EXPECT_EQ(log.cls, DivergenceClass::LogSingular);
  EXPECT_NEAR(log.log_coefficient, 1.0, 1e-12);
  for (const auto& r : log.rows) EXPECT_LT(std::abs(r.g_squared - std::log(1.0 / r.kappa)), 1e-12);

  const IRReport pw = ir_report(CutoffFamily{0.3, 1.0, 1}, grid);
  EXPECT_EQ(pw.cls, DivergenceClass::PowerSingular);
  EXPECT_NEAR(pw.rate_exponent, 2 * 0.3 - 1, 0.02 * 0.4);
  EXPECT_THROW(ir_report(kRef, {0.1, 0.01}), ArgumentError);
}

TEST(Discretize, MomentsAreExact) {
  for (int m : {2, 3, 5, 8}) {
    const Discretization d = discretize(kRef, 0.1, m);
    EXPECT_NEAR(discrete_moment(d, 0.5), 0.9, 1e-13) << m;
    EXPECT_NEAR(discrete_moment(d, 1.0), std::log(10.0), 1e-13) << m;
    EXPECT_NEAR(discrete_moment(d, 0.0), 0.495, 1e-13) << m;
    for (double k : d.nodes) {
      EXPECT_GE(k, 0.1);
      EXPECT_LE(k, 1.0);
    }
  }
  for (double beta : {0.3, 0.8})
    for (double kappa : {1e-4, 1e-2}) {
      const CutoffFamily f{beta, 1.0, 1};
      const Discretization d = discretize(f, kappa, 3);
      for (double s : {0.0, 0.5, 1.0})
        EXPECT_NEAR(discrete_moment(d, s), norm_omega_power(f, s, kappa).closed,
                    1e-12 * norm_omega_power(f, s, kappa).closed);
    }
}

TEST(Discretize, HalvingKappaAddsLogTwo) {
  const Discretization a = discretize(kRef, 0.1, 3), b = discretize(kRef, 0.05, 3);
  EXPECT_NEAR(discrete_moment(b, 1.0) - discrete_moment(a, 1.0), std::log(2.0), 1e-12);
}

TEST(Discretize, ChannelsAreOrthogonal) {
  const Discretization d = discretize(CutoffFamily{0.5, 1.0, 3}, 0.01, 4);
  ASSERT_EQ(d.mode_count(), 12);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) {
      double ip = 0.0;
      for (int j = 0; j < d.mode_count(); ++j) ip += d.couplings[x](j) * d.couplings[y](j) / d.modes.freqs[j];
      if (x == y) EXPECT_NEAR(ip, 0.99, 1e-13);
      else EXPECT_EQ(ip, 0.0);
    }
  for (int j = 0; j < d.mode_count(); ++j) EXPECT_EQ(d.modes.channel_of_mode[j], j / 4);
}

TEST(Discretize, EmbeddingReproducesInnerProducts) {
  const CutoffFamily f{0.5, 1.0, 2};
  const Discretization d = discretize(f, 1e-3, 3);
  // h(k) = k^β (a + b k) is integrated exactly by the three-node rule.
  const Complex a(0.3, -0.2), b(-0.5, 0.9);
  const ModeVector h = d.embed([&](int x, double k) { return x == 0 ? std::pow(k, 0.5) * (a + b * k) : Complex(0.0); });
  double norm2 = 0.0;
  // ∫_κ^K k |a + b k|² dk
  const double k0 = 1e-3, k1 = 1.0;
  auto prim = [&](double k) {
    return std::norm(a) * k * k / 2 + 2 * std::real(std::conj(a) * b) * k * k * k / 3 + std::norm(b) * k * k * k * k / 4;
  };
  norm2 = prim(k1) - prim(k0);
  EXPECT_NEAR(h.squaredNorm(), norm2, 1e-13);
  // Embedding λ itself gives the coupling vector.
  const ModeVector lam = d.embed([&](int x, double k) { return x == 1 ? Complex(std::pow(k, 0.5)) : Complex(0.0); });
  EXPECT_LT((lam.real() - d.couplings[1]).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Discretize, Errors) {
  EXPECT_THROW(discretize(kRef, 0.1, 1), DiscretizationError);
  EXPECT_THROW(discretize(kRef, 0.0, 3), ArgumentError);
}

TEST(RiemannLebesgue, IndicatorClosedForm) {
  const Profile one = [](double) { return Complex(1.0); };
  const std::vector<double> ts{0.0, 1.0, 10.0, 100.0};
  const DecayCurve c = riemann_lebesgue_decay(one, one, ts, 1.0);
  EXPECT_NEAR(std::abs(c.value[0] - 1.0), 0.0, 1e-12);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double t = ts[i];
    // ⟨e^{itω}f, g⟩ with the antilinear first slot: ∫ e^{−itk} dk.
    const Complex ref = (std::exp(Complex(0, -t)) - 1.0) / Complex(0, -t);
    EXPECT_LT(std::abs(c.value[i] - ref), 1e-10) << t;
    EXPECT_LE(std::abs(c.value[i]), 2.0 / t + 1e-12);
  }
  EXPECT_TRUE(c.tail_nonincreasing);
}

TEST(RiemannLebesgue, SmoothProfilesDecay) {
  const Profile f = [](double k) { return Complex(std::pow(k, 0.5) * (1 - k)); };
  const Profile g = [](double k) { return Complex(std::pow(k, 0.5) * (1 + k), 0.3 * k); };
  const DecayCurve c = riemann_lebesgue_decay(f, g, {10.0, 100.0}, 1.0);
  EXPECT_LT(std::abs(c.value[1]), std::abs(c.value[0]));
}
