// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file ir_limit.hpp
 * @brief Dressed ground states along κ → 0: Weyl expectations, their limit, and
 * the decay of overlaps with undressed references.
 *
 * With Ψ^κ = V^κ(ψ^κ_eg ⊗ Ω), ψ^κ_eg a ground vector of the effective
 * Hubbard model at b_κ, and W(f) = exp(iφ(f)):
 *
 *   ⟨Ψ^κ, A_e ⊗ W(f) Ψ^κ⟩ = Σ_{c,c'} conj(ψ_c') ψ_c (A_e)_{c'c} ⟨z_c'|W(f)|z_c⟩.
 *
 * The coherent matrix element depends on ν(c), ν(c') only through
 *   G_x = ‖g_x‖², F_x = ⟨g_x, f⟩, ‖f‖²:
 *   exp(−‖f‖²/4 − (α²/4) Σ_x (ν_x − ν'_x)² G_x − (iα/2) Σ_x (ν_x conj F_x + ν'_x F_x)).
 * For a log- or power-singular family G_x = ∞ at κ = 0, so only pairs with
 * equal occupation patterns survive.
 */

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hubbard_phonon/ir_modes.hpp"
#include "hubbard_phonon/lang_firsov.hpp"

namespace hubbard_phonon {

/// Per-site continuum profile f_x(k) on [κ, K].
using SiteProfile = std::function<Complex(int, double)>;

struct LimitModel {
  HoppingMatrix hopping{1};
  double u = 0.0;
  double alpha = 0.0;
  int n_e = 0;
  CutoffFamily family;
  int modes_per_site = 3;
  std::uint64_t gauge_seed = 4242;  ///< reference vector fixing the ground-vector gauge
};

struct ElectronGround {
  double kappa = 0.0;
  double b = 0.0;
  double e0 = 0.0;
  int degeneracy = 0;
  Eigen::VectorXd psi;
};

/// Ground vector of Ĥ_e at b_κ. A degenerate ground space is resolved by
/// projecting a fixed pseudo-random reference vector onto it, so the choice
/// is continuous in κ.
inline ElectronGround electron_ground(const LimitModel& m, double kappa, const GroundSpaceOptions& opts = {}) {
  ElectronGround g;
  g.kappa = kappa;
  g.b = b_kappa(m.family, kappa);
  const SectorBasis basis(m.hopping.size(), m.n_e);
  const RealSparse h = build_effective_hubbard(basis, m.hopping, effective_params(m.u, m.alpha, g.b));
  const GroundSpaceReport r = ground_space(h, opts);
  g.e0 = r.e0;
  g.degeneracy = r.degeneracy;
  std::mt19937_64 rng(m.gauge_seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd ref(static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index i = 0; i < ref.size(); ++i) ref(i) = nd(rng);
  g.psi = r.vectors * (r.vectors.transpose() * ref);
  if (g.psi.norm() < 1e-8) throw ConvergenceError("gauge reference vector is orthogonal to the ground space", g.psi.norm());
  g.psi.normalize();
  return g;
}

struct ProfileMoments {
  std::vector<double> g_squared;  ///< G_x = ‖ω^{−1}λ_x‖²; +∞ when divergent
  std::vector<Complex> g_dot_f;   ///< F_x = ∫ k^{β−1} f_x(k) dk
  double f_squared = 0.0;         ///< Σ_x ∫ |f_x|² dk
};

/// Continuum moments on [κ, K] by tanh-sinh quadrature (κ = 0 allowed).
inline ProfileMoments continuum_moments(const CutoffFamily& fam, const SiteProfile& f, double kappa) {
  fam.validate();
  fam.check_kappa(kappa);
  ProfileMoments pm;
  boost::math::quadrature::tanh_sinh<double> ts;
  auto integrate = [&](auto&& fn) {
    return ts.integrate(fn, kappa, fam.big_k, 1e-13);
  };
  double g2 = std::numeric_limits<double>::infinity();
  try {
    g2 = norm_omega_power(fam, 1.0, kappa).closed;
  } catch (const InfraredDivergenceError&) {
  }
  for (int x = 0; x < fam.n_sites; ++x) {
    pm.g_squared.push_back(g2);
    const double re = integrate([&](double k) { return std::pow(k, fam.beta - 1.0) * f(x, k).real(); });
    const double im = integrate([&](double k) { return std::pow(k, fam.beta - 1.0) * f(x, k).imag(); });
    pm.g_dot_f.emplace_back(re, im);
    pm.f_squared += integrate([&](double k) { return std::norm(f(x, k)); });
  }
  return pm;
}

/// Discrete moments of a discretized family and an embedded profile.
inline ProfileMoments discrete_moments(const Discretization& d, const ModeVector& f) {
  ProfileMoments pm;
  for (int x = 0; x < d.family.n_sites; ++x) {
    const Eigen::VectorXd g = d.g(x);
    pm.g_squared.push_back(g.squaredNorm());
    pm.g_dot_f.push_back(g.cast<Complex>().dot(f));
  }
  pm.f_squared = f.squaredNorm();
  return pm;
}

/// ⟨z_{ν'}|W(f)|z_ν⟩ from the moments.
inline Complex coherent_weyl_element(double alpha, const std::vector<int>& nu, const std::vector<int>& nu_bra,
                                     const ProfileMoments& pm) {
  double quad = 0.0;
  Complex lin = 0.0;
  for (std::size_t x = 0; x < nu.size(); ++x) {
    const int dn = nu[x] - nu_bra[x];
    if (dn != 0) {
      if (!std::isfinite(pm.g_squared[x])) return 0.0;
      quad += dn * dn * pm.g_squared[x];
    }
    lin += static_cast<double>(nu[x]) * std::conj(pm.g_dot_f[x]) + static_cast<double>(nu_bra[x]) * pm.g_dot_f[x];
  }
  return std::exp(Complex(-0.25 * pm.f_squared - 0.25 * alpha * alpha * quad, 0.0) + Complex(0.0, -0.5 * alpha) * lin);
}

namespace detail {

/// Σ_{c,c'} conj(ψ_c') ψ_c A_{c'c} elem(ν(c), ν(c')), cached by pattern pair.
template <class Elem>
Complex pair_sum(const SectorBasis& basis, const Eigen::VectorXd& psi, const Eigen::MatrixXcd& a, Elem&& elem) {
  std::map<std::pair<std::vector<int>, std::vector<int>>, Complex> cache;
  Complex total = 0.0;
  for (std::size_t c = 0; c < basis.size(); ++c) {
    if (psi(c) == 0.0) continue;
    const std::vector<int> nu = basis.site_occupations(c);
    for (std::size_t cp = 0; cp < basis.size(); ++cp) {
      const Complex w = psi(cp) * psi(c) * a(cp, c);
      if (w == Complex(0.0)) continue;
      const std::vector<int> nup = basis.site_occupations(cp);
      auto key = std::make_pair(nu, nup);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, elem(nu, nup)).first;
      total += w * it->second;
    }
  }
  return total;
}

inline void check_observable(const SectorBasis& basis, const Eigen::MatrixXcd& a) {
  const Eigen::Index d = static_cast<Eigen::Index>(basis.size());
  if (a.rows() != d || a.cols() != d) throw ArgumentError("electron observable has wrong dimension");
}

}  // namespace detail

struct WeylStateResult {
  double kappa = 0.0;
  Complex numeric = 0.0;              ///< per-mode matrix exponentials
  Complex closed = 0.0;               ///< coherent matrix elements from the moments
  std::optional<Complex> phase_form;  ///< phase × ⟨ψ, A ψ⟩ × e^{−‖f‖²/4}; definite occupations only
};

/// ⟨Ψ^κ, (A_e ⊗ W(f)) Ψ^κ⟩ for the discretized family at κ > 0.
inline WeylStateResult weyl_state(const LimitModel& m, double kappa, const Eigen::MatrixXcd& a_e, const SiteProfile& f,
                                  const GroundSpaceOptions& opts = {}) {
  if (!(kappa > 0.0)) throw ArgumentError("weyl_state needs kappa > 0; use limit_state at kappa = 0");
  const ElectronGround eg = electron_ground(m, kappa, opts);
  const Discretization d = discretize(m.family, kappa, m.modes_per_site);
  const SectorBasis basis(m.hopping.size(), m.n_e);
  detail::check_observable(basis, a_e);
  const ModeVector fv = d.embed(f);
  const CoupledModel cm(basis, m.hopping, m.u, m.alpha, TruncatedFock(d.modes, 1), d.couplings);
  const int nm = d.mode_count();

  // Per-mode dressed vacua on a common level count per mode.
  std::map<std::vector<int>, Eigen::VectorXd> zs;
  for (std::size_t c = 0; c < basis.size(); ++c) {
    const std::vector<int> nu = basis.site_occupations(c);
    if (!zs.count(nu)) zs.emplace(nu, cm.amplitude_for(nu));
  }
  std::vector<int> levels(nm);
  std::vector<Eigen::MatrixXcd> w(nm);
  for (int j = 0; j < nm; ++j) {
    double zmax = 0.0;
    for (const auto& [nu, z] : zs) zmax = std::max(zmax, std::abs(z(j)));
    const double r = zmax + std::abs(fv(j)) / std::sqrt(2.0);
    levels[j] = single_mode::levels_for(r * r, 1e-18, 4) + 12;
    w[j] = single_mode::weyl_expm(fv(j), levels[j]);
  }
  std::map<std::vector<int>, std::vector<Eigen::VectorXcd>> vac;
  for (const auto& [nu, z] : zs) {
    std::vector<Eigen::VectorXcd> u(nm);
    for (int j = 0; j < nm; ++j) u[j] = single_mode::displacement_expm(z(j), levels[j]).col(0);
    vac.emplace(nu, std::move(u));
  }
  auto numeric_elem = [&](const std::vector<int>& nu, const std::vector<int>& nup) {
    Complex prod = 1.0;
    for (int j = 0; j < nm; ++j) prod *= vac.at(nup)[j].dot(w[j] * vac.at(nu)[j]);
    return prod;
  };
  const ProfileMoments pm = discrete_moments(d, fv);
  auto closed_elem = [&](const std::vector<int>& nu, const std::vector<int>& nup) {
    return coherent_weyl_element(m.alpha, nu, nup, pm);
  };
  WeylStateResult r;
  r.kappa = kappa;
  r.numeric = detail::pair_sum(basis, eg.psi, a_e, numeric_elem);
  r.closed = detail::pair_sum(basis, eg.psi, a_e, closed_elem);
  if (const auto nu = detail::occupation_pattern(basis, eg.psi))
    r.phase_form = coherent_weyl_element(m.alpha, *nu, *nu, pm) * eg.psi.cast<Complex>().dot(a_e * eg.psi.cast<Complex>());
  return r;
}

struct LimitStateResult {
  Complex value = 0.0;
  std::optional<Complex> phase_form;  ///< e^{−iα Re Σ_x ν_x F_x} ⟨ψ⁰, A ψ⁰⟩ e^{−‖f‖²/4}; definite occupations only
  double b0 = 0.0;
};

/// κ → 0 value of the Weyl expectation, from continuum moments at κ = 0 and
/// the ground vector at b_0.
inline LimitStateResult limit_state(const LimitModel& m, const Eigen::MatrixXcd& a_e, const SiteProfile& f,
                                    const GroundSpaceOptions& opts = {}) {
  const ElectronGround eg = electron_ground(m, 0.0, opts);
  const SectorBasis basis(m.hopping.size(), m.n_e);
  detail::check_observable(basis, a_e);
  const ProfileMoments pm = continuum_moments(m.family, f, 0.0);
  for (const Complex& v : pm.g_dot_f)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InfraredDivergenceError("profile is not in the domain of omega^-1/2", classify_singularity(m.family.beta));
  LimitStateResult r;
  r.b0 = eg.b;
  r.value = detail::pair_sum(basis, eg.psi, a_e, [&](const std::vector<int>& nu, const std::vector<int>& nup) {
    return coherent_weyl_element(m.alpha, nu, nup, pm);
  });
  if (const auto nu = detail::occupation_pattern(basis, eg.psi))
    r.phase_form = coherent_weyl_element(m.alpha, *nu, *nu, pm) * eg.psi.cast<Complex>().dot(a_e * eg.psi.cast<Complex>());
  return r;
}

struct OverlapDecayRow {
  double kappa = 0.0;
  double modulus = 0.0;     ///< |⟨ψ_ref ⊗ Ω, Ψ^κ⟩|, numeric
  double normalized = 0.0;  ///< modulus / |⟨ψ_ref, ψ^κ_eg⟩|
  double predicted = 0.0;   ///< exp(−(α²/4) Σ_x ν_x² G_x(κ))
};

/// Decay of the vacuum overlap with a fixed reference configuration. The
/// reference is the first configuration with no doubly occupied site (the
/// first configuration if none exists) that overlaps every ψ^κ_eg.
inline std::vector<OverlapDecayRow> overlap_decay_curve(const LimitModel& m, const std::vector<double>& kappa_grid,
                                                        const GroundSpaceOptions& opts = {}) {
  const SectorBasis basis(m.hopping.size(), m.n_e);
  std::vector<ElectronGround> grounds;
  for (double k : kappa_grid) grounds.push_back(electron_ground(m, k, opts));
  std::optional<std::size_t> ref;
  for (int pass = 0; pass < 2 && !ref; ++pass) {
    for (std::size_t c = 0; c < basis.size() && !ref; ++c) {
      const std::vector<int> nu = basis.site_occupations(c);
      if (pass == 0 && std::any_of(nu.begin(), nu.end(), [](int v) { return v > 1; })) continue;
      bool ok = true;
      for (const auto& g : grounds) ok = ok && std::abs(g.psi(c)) > 1e-6;
      if (ok) ref = c;
    }
  }
  if (!ref) throw PreconditionError("no configuration overlaps every ground vector on the grid");
  Eigen::VectorXcd psi_ref = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
  psi_ref(static_cast<Eigen::Index>(*ref)) = 1.0;
  const std::vector<int> nu = basis.site_occupations(*ref);
  std::vector<OverlapDecayRow> rows;
  for (std::size_t i = 0; i < kappa_grid.size(); ++i) {
    const Discretization d = discretize(m.family, kappa_grid[i], m.modes_per_site);
    const CoupledModel cm(basis, m.hopping, m.u, m.alpha, TruncatedFock(d.modes, 1), d.couplings);
    OverlapDecayRow row;
    row.kappa = kappa_grid[i];
    row.modulus = std::abs(overlap_numeric(cm, {}, psi_ref, grounds[i].psi.cast<Complex>()));
    row.normalized = row.modulus / std::abs(grounds[i].psi(static_cast<Eigen::Index>(*ref)));
    double s = 0.0;
    for (int x = 0; x < basis.n_sites(); ++x) s += nu[x] * nu[x] * d.g(x).squaredNorm();
    row.predicted = std::exp(-0.25 * m.alpha * m.alpha * s);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hubbard_phonon
