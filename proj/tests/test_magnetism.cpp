// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "hubbard_phonon/magnetism.hpp"

using namespace hubbard_phonon;

TEST(EffectiveParams, Values) {
  auto p = effective_params(1.0, 0.0, 0.9);
  EXPECT_EQ(p.u_eff, 1.0);
  EXPECT_EQ(p.chemical_shift, 0.0);
  EXPECT_EQ(p.regime, Regime::Repulsive);

  p = effective_params(1.0, 2.0, 1.0);
  EXPECT_EQ(p.u_eff, -3.0);
  EXPECT_EQ(p.chemical_shift, 2.0);
  EXPECT_EQ(p.regime, Regime::Attractive);

  p = effective_params(1.0, 1.0, 1.0);
  EXPECT_EQ(p.u_eff, 0.0);
  EXPECT_EQ(p.regime, Regime::Free);
  p = effective_params(1.0, 1.0 / std::sqrt(0.9), std::sqrt(0.9));
  EXPECT_NEAR(p.u_eff, 0.0, 1e-15);

  EXPECT_THROW(effective_params(1.0, 1.0, -0.1), ArgumentError);
}

TEST(CriticalAlpha, Values) {
  EXPECT_NEAR(critical_alpha(1.0, std::sqrt(0.9)), 1.0540925533894598, 1e-12);
  EXPECT_DOUBLE_EQ(critical_alpha(4.0, 1.0), 2.0);
  EXPECT_THROW(critical_alpha(0.0, 1.0), ArgumentError);
  EXPECT_THROW(critical_alpha(1.0, 0.0), ArgumentError);
}

TEST(Classify, Definitions) {
  GroundSpaceReport r;
  r.spin_computed = true;
  r.degeneracy = 1;
  r.s_tot = SpinValue{0};
  EXPECT_EQ(classify(r, 2, 2).value, Classification::UniqueSinglet);

  r.degeneracy = 4;
  r.s_tot = SpinValue{3};
  EXPECT_EQ(classify(r, 3, 4).value, Classification::Ferromagnetic);

  r.degeneracy = 2;
  r.s_tot = SpinValue{0};
  EXPECT_EQ(classify(r, 2, 4).value, Classification::Other);

  r.s_tot.reset();
  const auto c = classify(r, 2, 4);
  EXPECT_EQ(c.value, Classification::Other);
  EXPECT_TRUE(c.mixed_spin);
}

TEST(TasakiHopping, Construction) {
  const HoppingMatrix a = build_tasaki_hopping(1.0, {1, 1, 1});
  EXPECT_EQ(a.matrix(), Eigen::MatrixXd::Ones(3, 3));
  const HoppingMatrix b = build_tasaki_hopping(2.0, {1, 2});
  Eigen::MatrixXd expect(2, 2);
  expect << 2, 4, 4, 8;
  EXPECT_EQ(b.matrix(), expect);
  const HoppingMatrix c = build_tasaki_hopping(1.3, {0.5, 1.7, 0.9, 1.1});
  Eigen::FullPivLU<Eigen::MatrixXd> lu(c.matrix());
  EXPECT_EQ(lu.rank(), 1);
  EXPECT_TRUE(c.is_connected());
  const HoppingMatrix d = build_tasaki_hopping(1.0, {1, 2}, false);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_THROW(build_tasaki_hopping(1.0, {1, 0}), ArgumentError);
  EXPECT_THROW(build_tasaki_hopping(-1.0, {1, 1}), ArgumentError);
}

TEST(LiebRegime, Examples) {
  auto v = check_lieb_regime(HoppingMatrix::chain(2, 1.0), -1.0, 2);
  EXPECT_TRUE(v.applies);
  EXPECT_TRUE(v.verified);
  EXPECT_EQ(v.report->degeneracy, 1);

  v = check_lieb_regime(HoppingMatrix::chain(4, 1.0), 0.0, 2);
  EXPECT_TRUE(v.applies);
  EXPECT_TRUE(v.verified);

  v = check_lieb_regime(HoppingMatrix::chain(4, 1.0), -1.0, 3);
  EXPECT_FALSE(v.applies);

  HoppingMatrix broken(3);
  broken.set(0, 1, 1.0);
  EXPECT_FALSE(check_lieb_regime(broken, -1.0, 2).applies);

  EXPECT_THROW(check_lieb_regime(HoppingMatrix::chain(12, 1.0), -1.0, 12, {}, 1000), SizingError);
}

TEST(TasakiRegime, Examples) {
  auto v = check_tasaki_regime(1.0, {1, 1, 1}, 1.0);
  EXPECT_TRUE(v.applies);
  EXPECT_TRUE(v.verified);
  EXPECT_EQ(v.report->degeneracy, 3);
  EXPECT_EQ(v.report->s_tot_str(), "1");
  EXPECT_EQ(classify(*v.report, 2, 3).value, Classification::Ferromagnetic);

  v = check_tasaki_regime(1.0, {1, 1, 1, 1}, 0.5);
  EXPECT_TRUE(v.verified);
  EXPECT_EQ(v.report->degeneracy, 4);
  EXPECT_EQ(v.report->s_tot_str(), "3/2");

  EXPECT_FALSE(check_tasaki_regime(1.0, {1, 1, 1}, -0.5).applies);
}

TEST(TasakiRegime, PermutationInvariance) {
  const auto a = check_tasaki_regime(1.0, {0.7, 0.7, 1.4, 1.1}, 2.0);
  const auto b = check_tasaki_regime(1.0, {1.4, 0.7, 1.1, 0.7}, 2.0);
  EXPECT_NEAR(a.report->e0, b.report->e0, 1e-12);
  EXPECT_EQ(a.report->degeneracy, b.report->degeneracy);
}

TEST(EffectiveHubbard, ShiftedHoppingEquivalence) {
  const SectorBasis basis(3, 2);
  const HoppingMatrix t = build_tasaki_hopping(1.0, {1.0, 0.8, 1.3});
  const auto p = effective_params(1.0, 0.7, std::sqrt(0.9));
  const Eigen::MatrixXd a(build_effective_hubbard(basis, t, p));
  const Eigen::MatrixXd b(build_effective_hubbard_shifted_hopping(basis, t, p));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-14);
  const Eigen::MatrixXd plain(build_hubbard(basis, t, p.u_eff));
  const Eigen::VectorXd ea = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
  const Eigen::VectorXd ep = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(plain).eigenvalues();
  EXPECT_LT((ea - (ep.array() - p.chemical_shift * 2).matrix()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Sweep, TasakiFlipBracketsCriticalCoupling) {
  const SweepModel model{build_tasaki_hopping(1.0, {1, 1, 1}), 1.0, 2};
  std::vector<double> grid;
  for (int i = 0; i <= 90; ++i) grid.push_back(0.2 + 0.02 * i);
  const double b = std::sqrt(0.9);
  const auto recs = sweep_alpha(model, grid, b, 0.1, {}, 2);
  ASSERT_EQ(recs.size(), grid.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].alpha, grid[i]);
  const FlipBracket f = find_flip(recs);
  ASSERT_TRUE(f.found);
  EXPECT_EQ(f.flips, 1);
  EXPECT_EQ(f.below, Classification::Ferromagnetic);
  EXPECT_EQ(f.above, Classification::UniqueSinglet);
  const double ac = critical_alpha(1.0, b);
  EXPECT_LE(f.lo, ac);
  EXPECT_GE(f.hi, ac);
  EXPECT_LE(f.hi - f.lo, 0.02 + 1e-12);

  const FlipBracket r = refine_flip(model, f, b, 0.1, 1e-6);
  EXPECT_LE(r.hi - r.lo, 1e-6);
  EXPECT_NEAR(0.5 * (r.lo + r.hi), ac, 1e-5);
}

TEST(Sweep, DecoupledPointAndOrdering) {
  const SweepModel model{build_tasaki_hopping(1.0, {1, 1, 1}), 1.0, 2};
  const SweepRecord r = sweep_point(model, 0.0, 0.9, 0.1, {});
  EXPECT_EQ(r.u_eff, 1.0);
  const auto g = hubbard_ground_space(model.hopping, 1.0, 2);
  EXPECT_NEAR(r.e0, g.e0, 1e-12);
  EXPECT_THROW(sweep_alpha(model, {0.5, 0.4}, 0.9, 0.1), ArgumentError);
}

TEST(Sweep, FailedPointsAreFlagged) {
  SweepModel model{HoppingMatrix(2), 0.0, 2};
  // No hopping, U = 0: six-fold mixed-spin ground space.
  const SweepRecord r = sweep_point(model, 0.0, 1.0, 0.1, {});
  EXPECT_FALSE(r.failed);
  EXPECT_EQ(r.s_tot, "mixed");
  EXPECT_EQ(r.residual_flags, "mixed_spin");
  EXPECT_EQ(r.classification, Classification::Other);
  model.n_e = 9;
  const SweepRecord bad = sweep_point(model, 0.0, 1.0, 0.1, {});
  EXPECT_TRUE(bad.failed);
  EXPECT_NE(bad.residual_flags.find("error"), std::string::npos);
}
