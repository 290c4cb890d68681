// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file magnetism.hpp
 * @brief Effective Hubbard parameters after the phonon dressing, Lieb and
 *        Tasaki regime checks, magnetic classification and the α sweep.
 *
 * After the dressing transformation the electrons see an on-site interaction
 * u_eff = U − (αb)² and a uniform shift −(αb)²/2 per electron. Since N_e is
 * fixed the shift only moves energies; ground vectors, degeneracy and spin are
 * those of the Hubbard model with interaction u_eff.
 */

#pragma once

#include <future>
#include <string>
#include <thread>
#include <vector>

#include "hubbard_phonon/eigensolver.hpp"
#include "hubbard_phonon/lattice_fermions.hpp"

namespace hubbard_phonon {

enum class Regime { Attractive, Free, Repulsive };
enum class Classification { UniqueSinglet, Ferromagnetic, Other };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Attractive:
      return "Attractive";
    case Regime::Free:
      return "Free";
    case Regime::Repulsive:
      return "Repulsive";
  }
  return "?";
}

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::UniqueSinglet:
      return "UniqueSinglet";
    case Classification::Ferromagnetic:
      return "Ferromagnetic";
    case Classification::Other:
      return "Other";
  }
  return "?";
}

struct EffectiveParams {
  double u_eff = 0.0;           ///< U − (αb)²
  double chemical_shift = 0.0;  ///< (αb)²/2
  Regime regime = Regime::Free;
};

inline EffectiveParams effective_params(double u, double alpha, double b_kappa) {
  if (b_kappa < 0.0) throw ArgumentError("b_kappa must be non-negative");
  const double ab2 = (alpha * b_kappa) * (alpha * b_kappa);
  EffectiveParams p;
  p.u_eff = u - ab2;
  p.chemical_shift = 0.5 * ab2;
  p.regime = p.u_eff < 0.0 ? Regime::Attractive : (p.u_eff > 0.0 ? Regime::Repulsive : Regime::Free);
  return p;
}

/// Coupling at which u_eff changes sign: √u / b.
inline double critical_alpha(double u, double b_kappa) {
  if (!(u > 0.0) || !(b_kappa > 0.0)) throw ArgumentError("critical_alpha needs u > 0 and b_kappa > 0");
  return std::sqrt(u) / b_kappa;
}

/// dΓ_e(T) + u_eff D − shift·N_e.
inline OperatorMatrix build_effective_hubbard(const SectorBasis& basis, const HoppingMatrix& t,
                                              const EffectiveParams& p) {
  OperatorMatrix h = build_hubbard(basis, t, p.u_eff);
  if (p.chemical_shift != 0.0) {
    OperatorMatrix id(static_cast<int>(basis.size()), static_cast<int>(basis.size()));
    id.setIdentity();
    h -= (p.chemical_shift * basis.n_e()) * id;
  }
  return h;
}

/// dΓ_e(T̂) + u_eff D with T̂ = T − shift·1; the same operator written with
/// the shift absorbed into the hopping diagonal.
inline OperatorMatrix build_effective_hubbard_shifted_hopping(const SectorBasis& basis,
                                                              const HoppingMatrix& t,
                                                              const EffectiveParams& p) {
  Eigen::MatrixXd shifted = t.matrix();
  shifted.diagonal().array() -= p.chemical_shift;
  return build_hubbard(basis, HoppingMatrix::from_dense(shifted), p.u_eff);
}

// ============================================================================
// Classification
// ============================================================================

struct ClassificationResult {
  Classification value = Classification::Other;
  bool mixed_spin = false;  ///< ground space is not a single spin multiplet
};

inline ClassificationResult classify(const GroundSpaceReport& report, int n_e, int n_sites) {
  ClassificationResult r;
  if (!report.s_tot) {
    r.mixed_spin = true;
    return r;
  }
  const SpinValue smax = s_max(n_e, n_sites);
  if (report.degeneracy == 1 && report.s_tot->twice == 0) {
    r.value = Classification::UniqueSinglet;
  } else if (*report.s_tot == smax) {
    r.value = Classification::Ferromagnetic;
  }
  return r;
}

/// t_{x,y} = t0 t_x t_y; the diagonal t0 t_x² is kept unless include_diagonal is false.
inline HoppingMatrix build_tasaki_hopping(double t0, const std::vector<double>& amplitudes,
                                          bool include_diagonal = true) {
  if (!(t0 > 0.0)) throw ArgumentError("t0 must be positive");
  if (amplitudes.empty()) throw ArgumentError("at least one site amplitude is required");
  for (double a : amplitudes) {
    if (!(a > 0.0)) throw ArgumentError("site amplitudes must be strictly positive");
  }
  const int n = static_cast<int>(amplitudes.size());
  Eigen::MatrixXd m(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) m(x, y) = (x == y && !include_diagonal) ? 0.0 : t0 * (amplitudes[x] * amplitudes[y]);
  return HoppingMatrix::from_dense(m);
}

struct RegimeVerdict {
  bool applies = false;
  bool verified = false;
  std::string details;
  std::optional<GroundSpaceReport> report;
};

inline GroundSpaceReport hubbard_ground_space(const HoppingMatrix& t, double u_eff, int n_e,
                                              const GroundSpaceOptions& opts = {},
                                              std::size_t cap = SectorBasis::kDefaultDimensionCap) {
  const SectorBasis basis(t.size(), n_e, cap);
  const OperatorMatrix h = build_hubbard(basis, t, u_eff);
  const SpinOperators spin = build_spin_operators(basis);
  return ground_space(h, opts, &spin.s_squared);
}

/// Connected T, even N_e and u_eff ≤ 0: a singlet among the ground states,
/// and a unique ground state when u_eff < 0.
inline RegimeVerdict check_lieb_regime(const HoppingMatrix& t, double u_eff, int n_e,
                                       const GroundSpaceOptions& opts = {},
                                       std::size_t cap = SectorBasis::kDefaultDimensionCap) {
  RegimeVerdict v;
  const bool connected = t.is_connected();
  const bool even = (n_e % 2 == 0);
  v.applies = connected && even && u_eff <= 0.0;
  if (!v.applies) {
    v.details = std::string(connected ? "" : "lattice not connected; ") + (even ? "" : "n_e odd; ") +
                (u_eff <= 0.0 ? "" : "u_eff > 0");
    return v;
  }
  const GroundSpaceReport r = hubbard_ground_space(t, u_eff, n_e, opts, cap);
  // A singlet exists in the ground space iff the projected S² has a zero eigenvalue.
  bool singlet_present = false;
  for (double c : r.s_squared_values) singlet_present = singlet_present || std::abs(c) <= opts.spin_tol;
  v.verified = singlet_present && (u_eff < 0.0 ? r.degeneracy == 1 : true);
  v.details = "degeneracy=" + std::to_string(r.degeneracy) + " s_tot=" + r.s_tot_str() +
              (singlet_present ? " singlet present" : " no singlet");
  v.report = r;
  return v;
}

/// Tasaki flat-band setting: N_e = |Λ| − 1 and u_eff > 0 give a ferromagnetic
/// ground multiplet of dimension 2 S_max + 1.
inline RegimeVerdict check_tasaki_regime(double t0, const std::vector<double>& amplitudes, double u_eff,
                                         const GroundSpaceOptions& opts = {}, bool include_diagonal = true) {
  RegimeVerdict v;
  v.applies = u_eff > 0.0;
  if (!v.applies) {
    v.details = "u_eff <= 0";
    return v;
  }
  const HoppingMatrix t = build_tasaki_hopping(t0, amplitudes, include_diagonal);
  const int n_sites = t.size();
  const int n_e = n_sites - 1;
  const GroundSpaceReport r = hubbard_ground_space(t, u_eff, n_e, opts);
  const SpinValue smax = s_max(n_e, n_sites);
  v.verified = r.s_tot && *r.s_tot == smax && r.degeneracy == smax.twice + 1;
  v.details = "degeneracy=" + std::to_string(r.degeneracy) + " s_tot=" + r.s_tot_str() + " s_max=" + smax.str();
  v.report = r;
  return v;
}

// ============================================================================
// α sweep
// ============================================================================

struct SweepModel {
  HoppingMatrix hopping;
  double u = 0.0;
  int n_e = 0;
};

struct SweepRecord {
  double alpha = 0.0;
  double kappa = 0.0;
  double u_eff = 0.0;
  double e0 = 0.0;
  int degeneracy = 0;
  std::string s_tot;  ///< "0", "1/2", ..., "mixed", or empty on failure
  Classification classification = Classification::Other;
  std::string residual_flags;  ///< empty when the point succeeded
  bool failed = false;
};

struct FlipBracket {
  bool found = false;
  int flips = 0;
  double lo = 0.0;
  double hi = 0.0;
  Classification below = Classification::Other;
  Classification above = Classification::Other;
};

inline SweepRecord sweep_point(const SweepModel& model, double alpha, double b_kappa, double kappa,
                               const GroundSpaceOptions& opts) {
  SweepRecord rec;
  rec.alpha = alpha;
  rec.kappa = kappa;
  const EffectiveParams p = effective_params(model.u, alpha, b_kappa);
  rec.u_eff = p.u_eff;
  try {
    const SectorBasis basis(model.hopping.size(), model.n_e);
    const OperatorMatrix h = build_effective_hubbard(basis, model.hopping, p);
    const SpinOperators spin = build_spin_operators(basis);
    const GroundSpaceReport r = ground_space(h, opts, &spin.s_squared);
    rec.e0 = r.e0;
    rec.degeneracy = r.degeneracy;
    rec.s_tot = r.s_tot_str();
    const ClassificationResult c = classify(r, model.n_e, model.hopping.size());
    rec.classification = c.value;
    if (c.mixed_spin) rec.residual_flags = "mixed_spin";
  } catch (const Error& e) {
    rec.failed = true;
    rec.residual_flags = std::string("error: ") + e.what();
  }
  return rec;
}

/// One record per grid point, in grid order; failing points are flagged, not fatal.
inline std::vector<SweepRecord> sweep_alpha(const SweepModel& model, const std::vector<double>& alpha_grid,
                                            double b_kappa, double kappa, const GroundSpaceOptions& opts = {},
                                            int threads = 1) {
  for (std::size_t i = 1; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > alpha_grid[i - 1])) throw ArgumentError("alpha grid must be strictly ascending");
  }
  std::vector<SweepRecord> out(alpha_grid.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(alpha_grid.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) out[i] = sweep_point(model, alpha_grid[i], b_kappa, kappa, opts);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < alpha_grid.size(); i += workers)
        out[i] = sweep_point(model, alpha_grid[i], b_kappa, kappa, opts);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

/// Locates classification changes between consecutive successful records.
inline FlipBracket find_flip(const std::vector<SweepRecord>& records) {
  FlipBracket b;
  const SweepRecord* prev = nullptr;
  for (const auto& r : records) {
    if (r.failed) continue;
    if (prev && prev->classification != r.classification) {
      ++b.flips;
      if (!b.found) {
        b.found = true;
        b.lo = prev->alpha;
        b.hi = r.alpha;
        b.below = prev->classification;
        b.above = r.classification;
      }
    }
    prev = &r;
  }
  return b;
}

/// Bisection on α between a bracket's endpoints until hi − lo ≤ tol.
inline FlipBracket refine_flip(const SweepModel& model, FlipBracket bracket, double b_kappa, double kappa,
                               double tol, const GroundSpaceOptions& opts = {}) {
  if (!bracket.found) return bracket;
  while (bracket.hi - bracket.lo > tol) {
    const double mid = 0.5 * (bracket.lo + bracket.hi);
    const SweepRecord r = sweep_point(model, mid, b_kappa, kappa, opts);
    if (r.failed || r.classification == Classification::Other) {
      // Exactly at the transition the spectrum is degenerate across sectors;
      // shrink symmetrically around it.
      bracket.lo = 0.5 * (bracket.lo + mid);
      bracket.hi = 0.5 * (bracket.hi + mid);
    } else if (r.classification == bracket.below) {
      bracket.lo = mid;
    } else {
      bracket.hi = mid;
    }
  }
  return bracket;
}

}  // namespace hubbard_phonon
