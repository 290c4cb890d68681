// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

// Sweeps the phonon coupling on a three-site flat-band lattice and prints where
// the ground state turns from ferromagnetic to a unique singlet.

#include <cstdio>

#include "hubbard_phonon/ir_modes.hpp"
#include "hubbard_phonon/magnetism.hpp"

using namespace hubbard_phonon;

int main() {
  const SweepModel model{build_tasaki_hopping(1.0, {1.0, 1.0, 1.0}), /*u=*/1.0, /*n_e=*/2};
  const CutoffFamily family{0.5, 1.0, 3};
  const double kappa = 0.1;
  const double b = b_kappa(family, kappa);

  std::vector<double> grid;
  for (int i = 0; i <= 18; ++i) grid.push_back(0.2 + 0.1 * i);
  const auto records = sweep_alpha(model, grid, b, kappa, {}, 1);
  std::printf("%6s %9s %10s %4s %5s  %s\n", "alpha", "u_eff", "e0", "deg", "S", "phase");
  for (const auto& r : records)
    std::printf("%6.2f %9.5f %10.6f %4d %5s  %s\n", r.alpha, r.u_eff, r.e0, r.degeneracy, r.s_tot.c_str(),
                to_string(r.classification));

  const FlipBracket coarse = find_flip(records);
  if (!coarse.found) return 1;
  const FlipBracket fine = refine_flip(model, coarse, b, kappa, 1e-8, {});
  std::printf("flip in [%.8f, %.8f], predicted %.8f\n", fine.lo, fine.hi, critical_alpha(model.u, b));
  return 0;
}
