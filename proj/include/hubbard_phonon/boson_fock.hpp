// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file boson_fock.hpp
 * @brief Truncated multimode bosonic Fock space.
 *
 * Every mode j carries occupations 0..n_max; basis states are ordered
 * row-major over modes (mode 0 is the slowest index). Conventions:
 *
 *   ⟨f, g⟩ = Σ_j conj(f_j) g_j                  (antilinear in the first slot)
 *   a(f)   = Σ_j conj(f_j) a_j                   (antilinear in f)
 *   φ(f)   = (a(f) + a(f)†) / √2
 *   W(f)   = exp(i φ(f)) = D(i f / √2),   D(z) = exp(a†(z) − a(z))
 *
 * Operators that factorize over modes (W, D) are kept as a list of per-mode
 * matrices; the truncated space is a tensor product of per-mode spaces, so the
 * factorization is exact for the truncated operators as well.
 */

#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "hubbard_phonon/common.hpp"

namespace hubbard_phonon {

using ModeVector = Eigen::VectorXcd;

struct ModeSet {
  std::vector<double> freqs;
  std::vector<int> channel_of_mode;  ///< owning site; −1 for a shared mode

  ModeSet() = default;
  ModeSet(std::vector<double> frequencies, std::vector<int> channels)
      : freqs(std::move(frequencies)), channel_of_mode(std::move(channels)) {
    if (channel_of_mode.empty()) channel_of_mode.assign(freqs.size(), -1);
    if (channel_of_mode.size() != freqs.size()) throw ArgumentError("channel map size mismatch");
    for (double w : freqs) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("mode frequencies must be finite and strictly positive");
    }
  }
  int size() const { return static_cast<int>(freqs.size()); }
};

class TruncatedFock {
 public:
  static constexpr std::size_t kDefaultDimensionCap = 4'000'000;

  TruncatedFock(ModeSet modes, int n_max, std::size_t cap = kDefaultDimensionCap)
      : modes_(std::move(modes)), n_max_(n_max) {
    if (n_max < 0) throw ArgumentError("n_max must be non-negative");
    long double d = 1.0L;
    for (int j = 0; j < modes_.size(); ++j) d *= (n_max + 1);
    if (d > static_cast<long double>(cap)) throw SizingError("truncated Fock space", static_cast<std::size_t>(d), cap);
    dim_ = static_cast<std::size_t>(d);
    strides_.assign(modes_.size(), 1);
    for (int j = modes_.size() - 2; j >= 0; --j) strides_[j] = strides_[j + 1] * static_cast<std::size_t>(n_max + 1);
  }

  const ModeSet& modes() const { return modes_; }
  int mode_count() const { return modes_.size(); }
  int n_max() const { return n_max_; }
  int levels() const { return n_max_ + 1; }
  std::size_t dim() const { return dim_; }
  std::size_t stride(int j) const { return strides_[j]; }

  int occupation(std::size_t index, int j) const {
    return static_cast<int>((index / strides_[j]) % static_cast<std::size_t>(n_max_ + 1));
  }
  std::vector<int> occupations(std::size_t index) const {
    std::vector<int> n(mode_count());
    for (int j = 0; j < mode_count(); ++j) n[j] = occupation(index, j);
    return n;
  }
  std::size_t index_of(std::span<const int> occ) const {
    if (static_cast<int>(occ.size()) != mode_count()) throw ArgumentError("occupation tuple length mismatch");
    std::size_t idx = 0;
    for (int j = 0; j < mode_count(); ++j) {
      if (occ[j] < 0 || occ[j] > n_max_) throw ArgumentError("occupation outside [0, n_max]");
      idx += static_cast<std::size_t>(occ[j]) * strides_[j];
    }
    return idx;
  }
  /// No mode sits at the truncation edge.
  bool is_interior(std::size_t index) const {
    for (int j = 0; j < mode_count(); ++j)
      if (occupation(index, j) >= n_max_) return false;
    return true;
  }
  int total_occupation(std::size_t index) const {
    int s = 0;
    for (int j = 0; j < mode_count(); ++j) s += occupation(index, j);
    return s;
  }

 private:
  ModeSet modes_;
  int n_max_;
  std::size_t dim_ = 1;
  std::vector<std::size_t> strides_;
};

// ============================================================================
// Single-mode building blocks
// ============================================================================

namespace single_mode {

inline Eigen::MatrixXd annihilation(int n_max) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

/// φ(f) for a single mode with amplitude f.
inline Eigen::MatrixXcd field(Complex f, int n_max) {
  const Eigen::MatrixXcd a = annihilation(n_max).cast<Complex>();
  return (std::conj(f) * a + f * a.adjoint()) / std::sqrt(2.0);
}

/// exp(i φ(f)) of the truncated generator.
inline Eigen::MatrixXcd weyl_expm(Complex f, int n_max) {
  const Eigen::MatrixXcd gen = Complex(0.0, 1.0) * field(f, n_max);
  return gen.exp();
}

/// exp(z a† − conj(z) a) of the truncated generator.
inline Eigen::MatrixXcd displacement_expm(Complex z, int n_max) {
  const Eigen::MatrixXcd a = annihilation(n_max).cast<Complex>();
  const Eigen::MatrixXcd gen = z * a.adjoint() - std::conj(z) * a;
  return gen.exp();
}

/// Exact matrix elements ⟨m|D(z)|n⟩ for 0 ≤ m, n ≤ n_max (generalized Laguerre form).
inline Eigen::MatrixXcd displacement_exact(Complex z, int n_max) {
  using ld = long double;
  const ld x = static_cast<ld>(std::norm(z));
  const std::complex<ld> zl(z.real(), z.imag());
  const std::complex<ld> mzc = -std::conj(zl);
  Eigen::MatrixXcd d(n_max + 1, n_max + 1);
  auto laguerre = [](int n, int a, ld xv) {
    ld lm1 = 1.0L;
    if (n == 0) return lm1;
    ld l = 1.0L + a - xv;
    for (int k = 1; k < n; ++k) {
      const ld next = ((2.0L * k + 1.0L + a - xv) * l - (k + a) * lm1) / (k + 1.0L);
      lm1 = l;
      l = next;
    }
    return l;
  };
  for (int m = 0; m <= n_max; ++m) {
    for (int n = 0; n <= n_max; ++n) {
      const int lo = std::min(m, n);
      const int hi = std::max(m, n);
      // √(lo!/hi!) e^{−x/2}
      ld pref = std::exp(-x / 2.0L + 0.5L * (std::lgamma(static_cast<ld>(lo + 1)) - std::lgamma(static_cast<ld>(hi + 1))));
      const std::complex<ld> base = (m >= n) ? zl : mzc;
      std::complex<ld> pw(1.0L, 0.0L);
      for (int k = 0; k < hi - lo; ++k) pw *= base;
      const std::complex<ld> v = pref * pw * laguerre(lo, hi - lo, x);
      d(m, n) = Complex(static_cast<double>(v.real()), static_cast<double>(v.imag()));
    }
  }
  return d;
}

/// Normalized coherent amplitudes on 0..n_max and the squared-norm deficit
/// 1 − Σ_{n≤n_max} |⟨n|z⟩|² of the exact state.
inline std::pair<Eigen::VectorXcd, double> coherent(Complex z, int n_max) {
  Eigen::VectorXcd c(n_max + 1);
  const double x = std::norm(z);
  c(0) = std::exp(-0.5 * x);
  for (int n = 1; n <= n_max; ++n) c(n) = c(n - 1) * z / std::sqrt(static_cast<double>(n));
  const double kept = c.squaredNorm();
  const double deficit = std::max(0.0, 1.0 - kept);
  c /= std::sqrt(kept);
  return {c, deficit};
}

/// Poisson tail P(n > n_max) for mean |z|²; the coherent truncation error.
inline double poisson_tail(double mean, int n_max) {
  if (mean == 0.0) return 0.0;
  // Sum the tail directly; terms decay once n > mean.
  double term = std::exp(-mean);
  for (int n = 1; n <= n_max; ++n) term *= mean / n;
  double tail = 0.0;
  for (int n = n_max + 1; n < n_max + 2000; ++n) {
    term *= mean / n;
    tail += term;
    if (term < 1e-300 || (n > mean && term < 1e-18 * tail)) break;
  }
  return tail;
}

/// Smallest n_max whose Poisson tail for mean |z|² is below bound.
inline int levels_for(double mean, double bound, int floor_n_max = 1) {
  int n = floor_n_max;
  while (poisson_tail(mean, n) > bound) ++n;
  return n;
}

}  // namespace single_mode

// ============================================================================
// Per-mode product operators
// ============================================================================

/// Applies `m` to mode j of a vector laid out row-major over `levels`-level modes.
inline void apply_mode_matrix(Eigen::Ref<Eigen::VectorXcd> v, int mode_count, int levels, int j,
                              const Eigen::MatrixXcd& m) {
  std::size_t right = 1;
  for (int k = j + 1; k < mode_count; ++k) right *= static_cast<std::size_t>(levels);
  const std::size_t block = right * static_cast<std::size_t>(levels);
  const std::size_t left = static_cast<std::size_t>(v.size()) / block;
  Eigen::VectorXcd tmp(levels);
  for (std::size_t l = 0; l < left; ++l) {
    for (std::size_t r = 0; r < right; ++r) {
      const std::size_t base = l * block + r;
      for (int n = 0; n < levels; ++n) tmp(n) = v(static_cast<Eigen::Index>(base + n * right));
      const Eigen::VectorXcd out = m * tmp;
      for (int n = 0; n < levels; ++n) v(static_cast<Eigen::Index>(base + n * right)) = out(n);
    }
  }
}

/// ⊗_j M_j on a TruncatedFock, one square factor per mode.
struct ProductOperator {
  std::vector<Eigen::MatrixXcd> factors;

  void apply_in_place(Eigen::Ref<Eigen::VectorXcd> v, int levels) const {
    const int m = static_cast<int>(factors.size());
    for (int j = 0; j < m; ++j) apply_mode_matrix(v, m, levels, j, factors[j]);
  }
  ProductOperator adjoint() const {
    ProductOperator r;
    for (const auto& f : factors) r.factors.push_back(f.adjoint());
    return r;
  }
  Eigen::MatrixXcd to_dense() const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Ones(1, 1);
    for (const auto& f : factors) {
      Eigen::MatrixXcd next(out.rows() * f.rows(), out.cols() * f.cols());
      for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index k = 0; k < out.cols(); ++k)
          next.block(i * f.rows(), k * f.cols(), f.rows(), f.cols()) = out(i, k) * f;
      out = std::move(next);
    }
    return out;
  }
};

/// Kronecker product of per-mode vectors in the row-major layout.
inline Eigen::VectorXcd product_vector(const std::vector<Eigen::VectorXcd>& parts) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Ones(1);
  for (const auto& p : parts) {
    Eigen::VectorXcd next(out.size() * p.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * p.size(), p.size()) = out(i) * p;
    out = std::move(next);
  }
  return out;
}

// ============================================================================
// Operators on the full truncated space
// ============================================================================

struct Ladder {
  RealSparse a;
  RealSparse a_dagger;
};

inline Ladder ladder(const TruncatedFock& space, int j) {
  if (j < 0 || j >= space.mode_count()) throw ArgumentError("mode index out of range");
  std::vector<Eigen::Triplet<double>> trips;
  const std::size_t stride = space.stride(j);
  for (std::size_t idx = 0; idx < space.dim(); ++idx) {
    const int n = space.occupation(idx, j);
    if (n > 0) trips.emplace_back(static_cast<int>(idx - stride), static_cast<int>(idx), std::sqrt(static_cast<double>(n)));
  }
  Ladder l;
  const int d = static_cast<int>(space.dim());
  l.a.resize(d, d);
  l.a.setFromTriplets(trips.begin(), trips.end());
  l.a_dagger = l.a.transpose();
  return l;
}

inline void check_mode_vector(const TruncatedFock& space, const ModeVector& f) {
  if (f.size() != space.mode_count()) throw ArgumentError("mode vector length does not match the mode count");
  if (!f.allFinite()) throw ArgumentError("mode vector has non-finite entries");
}

/// a(f) = Σ_j conj(f_j) a_j.
inline ComplexSparse annihilator(const TruncatedFock& space, const ModeVector& f) {
  check_mode_vector(space, f);
  const int d = static_cast<int>(space.dim());
  ComplexSparse out(d, d);
  for (int j = 0; j < space.mode_count(); ++j) {
    if (f(j) == Complex(0.0)) continue;
    out += std::conj(f(j)) * ladder(space, j).a.cast<Complex>();
  }
  return out;
}

/// Segal field φ(f) = (a(f) + a(f)†)/√2.
inline ComplexSparse field(const TruncatedFock& space, const ModeVector& f) {
  const ComplexSparse a = annihilator(space, f);
  return ComplexSparse((a + ComplexSparse(a.adjoint())) / std::sqrt(2.0));
}

/// Real field φ(f) for real f (all mode amplitudes real).
inline RealSparse field_real(const TruncatedFock& space, const Eigen::VectorXd& f) {
  if (f.size() != space.mode_count()) throw ArgumentError("mode vector length does not match the mode count");
  const int d = static_cast<int>(space.dim());
  RealSparse out(d, d);
  for (int j = 0; j < space.mode_count(); ++j) {
    if (f(j) == 0.0) continue;
    const Ladder l = ladder(space, j);
    out += (f(j) / std::sqrt(2.0)) * (l.a + l.a_dagger);
  }
  return out;
}

struct SecondQuantized {
  Eigen::VectorXd h_b;  ///< diagonal of dΓ(ω) = Σ_j ω_j n_j
  Eigen::VectorXd n_b;  ///< diagonal of N_b = Σ_j n_j

  RealSparse hb_matrix() const { return diag(h_b); }
  RealSparse nb_matrix() const { return diag(n_b); }

  static RealSparse diag(const Eigen::VectorXd& d) {
    RealSparse m(d.size(), d.size());
    m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d(i) != 0.0) m.insert(i, i) = d(i);
    m.makeCompressed();
    return m;
  }
};

inline SecondQuantized d_gamma(const TruncatedFock& space) {
  SecondQuantized s;
  s.h_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dim()));
  s.n_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dim()));
  for (std::size_t idx = 0; idx < space.dim(); ++idx) {
    for (int j = 0; j < space.mode_count(); ++j) {
      const int n = space.occupation(idx, j);
      s.h_b(idx) += space.modes().freqs[j] * n;
      s.n_b(idx) += n;
    }
  }
  return s;
}

struct WeylOperator {
  ProductOperator product;  ///< per-mode exp(i φ_j(f_j))
  double tail_bound = 0.0;  ///< worst per-mode Poisson tail of the displacement amplitude
  bool truncation_warning = false;

  Eigen::MatrixXcd matrix() const { return product.to_dense(); }
};

/// W(f) = exp(i φ(f)). The exponential is taken per mode; the field is a sum
/// of commuting single-mode terms, so this equals the exponential of the full
/// truncated generator. Adequacy: every mode's displacement |f_j|/√2 must
/// leave a Poisson tail beyond n_max below `truncation_bound`.
inline WeylOperator weyl(const TruncatedFock& space, const ModeVector& f, double truncation_bound = 1e-8) {
  check_mode_vector(space, f);
  WeylOperator w;
  for (int j = 0; j < space.mode_count(); ++j) {
    w.product.factors.push_back(single_mode::weyl_expm(f(j), space.n_max()));
    w.tail_bound = std::max(w.tail_bound, single_mode::poisson_tail(0.5 * std::norm(f(j)), space.n_max()));
  }
  w.truncation_warning = w.tail_bound > truncation_bound;
  return w;
}

struct CoherentState {
  Eigen::VectorXcd vector;
  double truncation_error = 0.0;  ///< 1 − (norm before renormalization)²
  bool flagged = false;
};

/// ⊗_j |z_j⟩ truncated to n_max per mode and renormalized.
inline CoherentState coherent_state(const TruncatedFock& space, const ModeVector& z, double bound = 1e-8) {
  check_mode_vector(space, z);
  std::vector<Eigen::VectorXcd> parts;
  double kept = 1.0;
  for (int j = 0; j < space.mode_count(); ++j) {
    auto [c, deficit] = single_mode::coherent(z(j), space.n_max());
    kept *= (1.0 - deficit);
    parts.push_back(std::move(c));
  }
  CoherentState s;
  s.vector = product_vector(parts);
  s.truncation_error = 1.0 - kept;
  s.flagged = s.truncation_error > bound;
  return s;
}

/// Random unit vector supported on interior basis states (no mode at n_max).
inline Eigen::VectorXcd random_interior_vector(const TruncatedFock& space, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dim()));
  for (std::size_t i = 0; i < space.dim(); ++i) {
    if (!space.is_interior(i)) continue;
    const double re = g(rng);
    const double im = g(rng);
    v(static_cast<Eigen::Index>(i)) = Complex(re, im);
  }
  return v.normalized();
}

inline double weighted_norm(const TruncatedFock& space, const ModeVector& f, double power) {
  double s = 0.0;
  for (int j = 0; j < space.mode_count(); ++j) s += std::norm(f(j)) * std::pow(space.modes().freqs[j], power);
  return std::sqrt(s);
}

/// max over trials of ‖φ(f)Ψ‖ − (1/√2)(2‖ω^{−1/2}f‖‖H_b^{1/2}Ψ‖ + ‖f‖‖Ψ‖).
/// The first trial is the vacuum, where the bound is tight.
inline double relative_bound_check(const TruncatedFock& space, const ModeVector& f, int trials,
                                   std::uint64_t seed = 7) {
  const ComplexSparse phi = field(space, f);
  const SecondQuantized dg = d_gamma(space);
  const double f_norm = f.norm();
  const double f_inv = weighted_norm(space, f, -1.0);
  std::mt19937_64 rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd psi;
    if (t == 0) {
      psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dim()));
      psi(0) = 1.0;
    } else {
      psi = random_interior_vector(space, rng);
    }
    const double lhs = (phi * psi).norm();
    const double hb_half = std::sqrt(std::max(0.0, (dg.h_b.cast<Complex>().cwiseProduct(psi)).dot(psi).real()));
    const double rhs = (2.0 * f_inv * hb_half + f_norm * psi.norm()) / std::sqrt(2.0);
    worst = std::max(worst, lhs - rhs);
  }
  return worst;
}

/// max |([a(f), a(g)†] − ⟨f,g⟩)_{ik}| over interior columns k.
inline double ccr_residual(const TruncatedFock& space, const ModeVector& f, const ModeVector& g) {
  const ComplexSparse af = annihilator(space, f);
  const ComplexSparse ag_dag = ComplexSparse(annihilator(space, g).adjoint());
  const ComplexSparse comm = ComplexSparse(af * ag_dag) - ComplexSparse(ag_dag * af);
  const Complex inner = f.dot(g);
  double worst = 0.0;
  for (int k = 0; k < comm.outerSize(); ++k) {
    if (!space.is_interior(static_cast<std::size_t>(k))) continue;
    Complex diag_entry = 0.0;
    for (ComplexSparse::InnerIterator it(comm, k); it; ++it) {
      if (it.row() == k) diag_entry = it.value();
      else worst = std::max(worst, std::abs(it.value()));
    }
    worst = std::max(worst, std::abs(diag_entry - inner));
  }
  return worst;
}

}  // namespace hubbard_phonon
