// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

// Two sites, two electrons, two phonon modes per site. Builds the dressed
// ground state for shrinking infrared cutoffs and prints its boson number and
// its overlap with the bare electron state times the phonon vacuum.

#include <cstdio>

#include "hubbard_phonon/ir_limit.hpp"

using namespace hubbard_phonon;

int main() {
  LimitModel m;
  m.hopping = HoppingMatrix::chain(2, -1.0);
  m.u = 1.0;
  m.alpha = 0.5;
  m.n_e = 2;
  m.family = CutoffFamily{0.5, 1.0, 2};
  m.modes_per_site = 2;

  std::printf("%8s %10s %12s %12s\n", "kappa", "u_eff", "<N_b>", "|<e x 0|g>|");
  for (double kappa : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const Discretization d = discretize(m.family, kappa, m.modes_per_site);
    const CoupledModel cm = make_coupled_model(m.hopping, m.u, m.alpha, m.n_e, d, 4);
    const ElectronGround eg = electron_ground(m, kappa);
    const Eigen::VectorXcd psi = eg.psi.cast<Complex>();
    const DressedState ds = dress_state(cm, psi);
    const Complex overlap = overlap_numeric(cm, {}, psi, psi);
    std::printf("%8.0e %10.6f %12.6f %12.6f\n", kappa, effective_params(m.u, m.alpha, eg.b).u_eff,
                nb_expectation(ds), std::abs(overlap));
  }
  return 0;
}
