// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file ir_modes.hpp
 * @brief Continuum cutoff family and its discretization into a finite ModeSet.
 *
 * Each lattice site owns its own half-line channel (0, K] with ω(k) = k and
 * coupling profile λ^κ(k) = k^β on [κ, K]. Channels are disjoint, so couplings
 * of different sites are exactly orthogonal.
 *
 * Discretization uses the Gauss rule of the density ρ(k) = k^{2β−2} on
 * [κ, K]. With amplitudes λ_j = √W_j · k_j every moment Σ_j k_j^{−2s}|λ_j|²
 * for s ∈ {0, ½, 1} equals its continuum integral once m ≥ 2.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "hubbard_phonon/boson_fock.hpp"
#include "hubbard_phonon/common.hpp"

namespace hubbard_phonon {

struct CutoffFamily {
  double beta = 0.5;
  double big_k = 1.0;
  int n_sites = 1;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("profile exponent beta must be > 0");
    if (!(big_k > 0.0) || !std::isfinite(big_k)) throw ArgumentError("ultraviolet edge K must be > 0");
    if (n_sites < 1) throw ArgumentError("n_sites must be >= 1");
  }
  void check_kappa(double kappa) const {
    if (!(kappa >= 0.0) || !(kappa < big_k)) throw ArgumentError("infrared cutoff must satisfy 0 <= kappa < K");
  }
  double profile(double k) const { return std::pow(k, beta); }
};

inline DivergenceClass classify_singularity(double beta) {
  if (std::abs(beta - 0.5) <= 1e-12) return DivergenceClass::LogSingular;
  return beta < 0.5 ? DivergenceClass::PowerSingular : DivergenceClass::Regular;
}

namespace detail {

/// ∫_a^b k^p dk with the p = −1 case and the near-cancellation handled.
inline double power_integral(double p, double a, double b) {
  const double q = p + 1.0;
  if (std::abs(q) <= 1e-14) return std::log(b / a);
  if (a == 0.0) return std::pow(b, q) / q;
  return -std::pow(b, q) * std::expm1(q * std::log(a / b)) / q;
}

}  // namespace detail

struct NormValue {
  double closed = 0.0;
  double quadrature = 0.0;
  double relative_difference() const {
    return std::abs(closed - quadrature) / std::max(std::abs(closed), std::numeric_limits<double>::min());
  }
};

/// ‖ω^{−s} λ^κ‖² = ∫_κ^K k^{2(β−s)} dk, by antiderivative and by quadrature.
inline NormValue norm_omega_power(const CutoffFamily& family, double s, double kappa) {
  family.validate();
  family.check_kappa(kappa);
  if (!(s >= 0.0)) throw ArgumentError("s must be >= 0");
  const double p = 2.0 * (family.beta - s);
  if (kappa == 0.0 && p <= -1.0 + 1e-14) {
    const DivergenceClass cls = (std::abs(p + 1.0) <= 1e-14) ? DivergenceClass::LogSingular
                                                              : DivergenceClass::PowerSingular;
    throw InfraredDivergenceError("||omega^-s lambda||^2 diverges at kappa = 0", cls);
  }
  NormValue v;
  v.closed = detail::power_integral(p, kappa, family.big_k);
  if (kappa > 0.0) {
    // In u = ln k the integrand e^{(p+1)u} is smooth on a finite interval.
    auto integrand = [p](double u) { return std::exp((p + 1.0) * u); };
    double err = 0.0;
    v.quadrature = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, std::log(kappa), std::log(family.big_k), 12, 1e-14, &err);
  } else {
    boost::math::quadrature::tanh_sinh<double> ts;
    v.quadrature = ts.integrate([p](double k) { return std::pow(k, p); }, 0.0, family.big_k, 1e-14);
  }
  return v;
}

inline double b_kappa(const CutoffFamily& family, double kappa) {
  return std::sqrt(norm_omega_power(family, 0.5, kappa).closed);
}

struct IRRow {
  double kappa = 0.0;
  double b_squared = 0.0;
  double g_squared = 0.0;  ///< ‖ω^{−1}λ^κ‖²
};

struct IRReport {
  DivergenceClass cls = DivergenceClass::Regular;
  std::vector<IRRow> rows;
  double rate_exponent = 0.0;    ///< fitted exponent of the κ-dependent part of ‖ω^{−1}λ^κ‖²
  double log_coefficient = 0.0;  ///< fitted d‖ω^{−1}λ^κ‖² / d ln(1/κ)
};

/// Tabulates norms over a κ grid (κ > 0, sorted either way) and fits the rate.
/// Successive differences cancel the κ-independent part, so a power law
/// A − Bκ^q yields log-differences with slope exactly q on a geometric grid.
inline IRReport ir_report(const CutoffFamily& family, std::vector<double> kappa_grid) {
  family.validate();
  if (kappa_grid.size() < 3) throw ArgumentError("ir_report needs at least three kappa values");
  std::sort(kappa_grid.begin(), kappa_grid.end(), std::greater<>());
  IRReport r;
  r.cls = classify_singularity(family.beta);
  for (double k : kappa_grid) {
    if (!(k > 0.0)) throw ArgumentError("ir_report needs kappa > 0");
    r.rows.push_back({k, norm_omega_power(family, 0.5, k).closed, norm_omega_power(family, 1.0, k).closed});
  }
  std::vector<double> xs, ys, logc;
  for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
    const double dg = r.rows[i + 1].g_squared - r.rows[i].g_squared;
    const double dl = std::log(r.rows[i].kappa / r.rows[i + 1].kappa);
    logc.push_back(dg / dl);
    // Exponent from Δg ∝ κ_i^q (κ_{i+1}/κ_i)^q − 1; the ratio factor is constant on a geometric grid.
    xs.push_back(std::log(r.rows[i].kappa));
    ys.push_back(std::log(std::abs(dg)));
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  r.rate_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  r.log_coefficient = logc.back();
  return r;
}

// ============================================================================
// Discretization
// ============================================================================

struct Discretization {
  CutoffFamily family;
  double kappa = 0.0;
  int modes_per_site = 0;
  std::vector<double> nodes;    ///< k_j, one channel
  std::vector<double> weights;  ///< Gauss weights W_j of ρ(k) = k^{2β−2}
  ModeSet modes;
  std::vector<Eigen::VectorXd> couplings;  ///< λ_x per site on the full mode set

  int mode_count() const { return static_cast<int>(modes.freqs.size()); }

  /// g_x = ω^{−1} λ_x.
  Eigen::VectorXd g(int site) const {
    Eigen::VectorXd out = couplings[site];
    for (int j = 0; j < mode_count(); ++j) out(j) /= modes.freqs[j];
    return out;
  }

  /// Samples per-site continuum profiles h_x(k) into a mode vector so that
  /// discrete inner products approximate ∫ conj(h) h' dk over [κ, K].
  ModeVector embed(const std::function<Complex(int, double)>& profile) const {
    ModeVector v = ModeVector::Zero(mode_count());
    const double p = 2.0 * family.beta - 2.0;
    for (int x = 0; x < family.n_sites; ++x) {
      for (int j = 0; j < modes_per_site; ++j) {
        const double k = nodes[j];
        v(x * modes_per_site + j) = std::sqrt(weights[j] / std::pow(k, p)) * profile(x, k);
      }
    }
    return v;
  }
};

namespace detail {

/// Gauss nodes and weights for x^{e} on [a, 1] via Golub-Welsch on the
/// Hankel moment matrix. The Cholesky step runs in 50-digit arithmetic.
inline std::pair<std::vector<double>, std::vector<double>> gauss_power_rule(double e, double a, int m) {
  using mp = boost::multiprecision::cpp_bin_float_50;
  const mp ma(a);
  const mp me(e);
  std::vector<mp> mu(2 * m + 1);
  for (int n = 0; n <= 2 * m; ++n) {
    const mp q = me + n + 1;
    if (abs(q) < mp(1e-30)) mu[n] = -log(ma);
    else mu[n] = (1 - pow(ma, q)) / q;
  }
  // Cholesky of the (m+1)x(m+1) Hankel matrix, upper factor R.
  const int d = m + 1;
  std::vector<mp> r(static_cast<std::size_t>(d * d), mp(0));
  auto R = [&](int i, int j) -> mp& { return r[static_cast<std::size_t>(i * d + j)]; };
  for (int i = 0; i < d; ++i) {
    mp diag = mu[2 * i];
    for (int k = 0; k < i; ++k) diag -= R(k, i) * R(k, i);
    if (!(diag > 0)) throw DiscretizationError("moment matrix is not positive definite; change modes_per_site");
    R(i, i) = sqrt(diag);
    for (int j = i + 1; j < d; ++j) {
      mp s = mu[i + j];
      for (int k = 0; k < i; ++k) s -= R(k, i) * R(k, j);
      R(i, j) = s / R(i, i);
    }
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    mp alpha = R(j, j + 1) / R(j, j);
    if (j > 0) alpha -= R(j - 1, j) / R(j - 1, j - 1);
    jac(j, j) = static_cast<double>(alpha);
    if (j + 1 < m) {
      const double b = static_cast<double>(R(j + 1, j + 1) / R(j, j));
      jac(j, j + 1) = b;
      jac(j + 1, j) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  std::vector<double> x(m), w(m);
  const double mu0 = static_cast<double>(mu[0]);
  for (int j = 0; j < m; ++j) {
    x[j] = es.eigenvalues()(j);
    w[j] = mu0 * es.eigenvectors()(0, j) * es.eigenvectors()(0, j);
  }
  return {x, w};
}

}  // namespace detail

inline Discretization discretize(const CutoffFamily& family, double kappa, int m) {
  family.validate();
  family.check_kappa(kappa);
  if (!(kappa > 0.0)) throw ArgumentError("discretize requires kappa > 0");
  if (m < 2) throw DiscretizationError("two-moment matching needs at least 2 modes per site; use modes_per_site >= 2");
  const double e = 2.0 * family.beta - 2.0;
  auto [x, w] = detail::gauss_power_rule(e, kappa / family.big_k, m);

  Discretization d;
  d.family = family;
  d.kappa = kappa;
  d.modes_per_site = m;
  const double scale = std::pow(family.big_k, e + 1.0);
  for (int j = 0; j < m; ++j) {
    const double k = family.big_k * x[j];
    if (!(k >= kappa * (1.0 - 1e-12) && k <= family.big_k * (1.0 + 1e-12)) || !(w[j] > 0.0))
      throw DiscretizationError("quadrature rule left [kappa, K]; change modes_per_site");
    d.nodes.push_back(k);
    d.weights.push_back(w[j] * scale);
  }
  std::vector<double> freqs;
  std::vector<int> channels;
  for (int s = 0; s < family.n_sites; ++s) {
    for (int j = 0; j < m; ++j) {
      freqs.push_back(d.nodes[j]);
      channels.push_back(s);
    }
  }
  d.modes = ModeSet(freqs, channels);
  const int total = family.n_sites * m;
  for (int s = 0; s < family.n_sites; ++s) {
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(total);
    for (int j = 0; j < m; ++j) lam(s * m + j) = std::sqrt(d.weights[j]) * d.nodes[j];
    d.couplings.push_back(lam);
  }
  return d;
}

/// Σ_j k_j^{−2s} |λ_j|² for one channel of a discretization.
inline double discrete_moment(const Discretization& d, double s) {
  double acc = 0.0;
  for (int j = 0; j < d.modes_per_site; ++j) acc += d.weights[j] * std::pow(d.nodes[j], 2.0 - 2.0 * s);
  return acc;
}

// ============================================================================
// Riemann-Lebesgue decay
// ============================================================================

using Profile = std::function<Complex(double)>;

struct DecayCurve {
  std::vector<double> t;
  std::vector<Complex> value;
  std::vector<double> tail_sup;  ///< max_{|t'| ≥ |t|} |value(t')| over the grid
  bool tail_nonincreasing = true;
};

/// ⟨e^{itω} f, g⟩ = ∫_0^K e^{−itk} conj(f(k)) g(k) dk, one grid point at a time.
/// The interval is split into pieces of length ≤ π/|t| so every piece sees at
/// most half an oscillation.
inline Complex oscillatory_inner(const Profile& f, const Profile& g, double t, double big_k, double tol = 1e-12) {
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(t) * big_k / M_PI)));
  const double h = big_k / pieces;
  Complex acc = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double a = p * h;
    const double b = (p + 1) * h;
    auto part = [&](bool imag) {
      auto integrand = [&](double k) {
        const Complex v = std::exp(Complex(0.0, -t * k)) * std::conj(f(k)) * g(k);
        return imag ? v.imag() : v.real();
      };
      double err = 0.0;
      double val;
      if (p == 0) {
        boost::math::quadrature::tanh_sinh<double> ts;
        double l1 = 0.0;
        val = ts.integrate(integrand, a, b, tol, &err, &l1);
        if (err > 1e3 * tol * std::max(1.0, l1)) throw ConvergenceError("oscillatory quadrature did not converge", err);
      } else {
        val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 12, tol, &err);
        if (err > 1e3 * tol * std::max(1.0, std::abs(val))) throw ConvergenceError("oscillatory quadrature did not converge", err);
      }
      return val;
    };
    acc += Complex(part(false), part(true));
  }
  return acc;
}

inline DecayCurve riemann_lebesgue_decay(const Profile& f, const Profile& g, const std::vector<double>& t_grid,
                                         double big_k) {
  DecayCurve c;
  c.t = t_grid;
  for (double t : t_grid) c.value.push_back(oscillatory_inner(f, g, t, big_k));
  const std::size_t n = t_grid.size();
  c.tail_sup.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(t_grid[j]) >= std::abs(t_grid[i])) s = std::max(s, std::abs(c.value[j]));
    c.tail_sup[i] = s;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(t_grid[j]) > std::abs(t_grid[i]) && c.tail_sup[j] > c.tail_sup[i] + 1e-15) c.tail_nonincreasing = false;
  return c;
}

}  // namespace hubbard_phonon
