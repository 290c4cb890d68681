// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file lang_firsov.hpp
 * @brief Dressing unitary V = exp(iαS), S = Σ_x n_x ⊗ φ(i g_x), g_x = ω^{−1}λ_x.
 *
 * S is diagonal in the electron configurations. On a configuration c with
 * site occupations ν_x(c) it acts on the bosons as a displacement:
 *
 *   V|c⟩⊗Ψ = |c⟩ ⊗ D(z_c)Ψ,    z_c = −(α/√2) Σ_x ν_x(c) g_x.
 *
 * Tensor vectors are stored configuration-major: index = c · dim_b + boson index.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "hubbard_phonon/boson_fock.hpp"
#include "hubbard_phonon/common.hpp"
#include "hubbard_phonon/eigensolver.hpp"
#include "hubbard_phonon/ir_modes.hpp"
#include "hubbard_phonon/lattice_fermions.hpp"
#include "hubbard_phonon/magnetism.hpp"

namespace hubbard_phonon {

class CoupledModel {
 public:
  CoupledModel(SectorBasis basis, HoppingMatrix hopping, double u, double alpha, TruncatedFock fock,
               std::vector<Eigen::VectorXd> lambda)
      : basis_(std::move(basis)),
        hopping_(std::move(hopping)),
        u_(u),
        alpha_(alpha),
        fock_(std::move(fock)),
        lambda_(std::move(lambda)) {
    const int n = basis_.n_sites();
    if (hopping_.size() != n) throw ArgumentError("hopping size does not match the lattice");
    if (static_cast<int>(lambda_.size()) != n) throw ArgumentError("one coupling vector per site is required");
    const int m = fock_.mode_count();
    for (const auto& l : lambda_) {
      if (l.size() != m) throw ArgumentError("coupling vector length does not match the mode count");
      if (!l.allFinite()) throw InfraredDivergenceError("coupling vector is not finite", DivergenceClass::PowerSingular);
    }
    for (int x = 0; x < n; ++x) {
      Eigen::VectorXd g = lambda_[x];
      for (int j = 0; j < m; ++j) g(j) /= fock_.modes().freqs[j];
      g_.push_back(std::move(g));
    }
    gram_.resize(n, n);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) gram_(x, y) = lambda_[x].dot(g_[y]);
    // Common-norm orthogonality of the couplings in the ω^{−1/2} inner product.
    const double scale = std::max(1e-300, gram_.diagonal().cwiseAbs().maxCoeff());
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        const double target = (x == y) ? gram_(0, 0) : 0.0;
        if (std::abs(gram_(x, y) - target) > 1e-12 * scale)
          throw ValidationError("couplings must be mutually orthogonal with a common norm in the omega^-1/2 inner product");
      }
    }
    b_kappa_ = std::sqrt(std::max(0.0, gram_(0, 0)));
  }

  const SectorBasis& basis() const { return basis_; }
  const HoppingMatrix& hopping() const { return hopping_; }
  double u() const { return u_; }
  double alpha() const { return alpha_; }
  const TruncatedFock& fock() const { return fock_; }
  const std::vector<Eigen::VectorXd>& lambda() const { return lambda_; }
  const std::vector<Eigen::VectorXd>& g() const { return g_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  double b_kappa() const { return b_kappa_; }
  int n_sites() const { return basis_.n_sites(); }
  int n_e() const { return basis_.n_e(); }
  int mode_count() const { return fock_.mode_count(); }
  std::size_t fermion_dim() const { return basis_.size(); }
  std::size_t boson_dim() const { return fock_.dim(); }
  std::size_t dim() const { return basis_.size() * fock_.dim(); }

  EffectiveParams effective() const { return effective_params(u_, alpha_, b_kappa_); }

  /// Same model with a different coupling constant.
  CoupledModel with_alpha(double alpha) const {
    CoupledModel m = *this;
    m.alpha_ = alpha;
    return m;
  }

  std::vector<int> nu(std::size_t c) const { return basis_.site_occupations(c); }

  Eigen::VectorXd amplitude_for(const std::vector<int>& nu) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(mode_count());
    for (int x = 0; x < n_sites(); ++x)
      if (nu[x]) z += static_cast<double>(nu[x]) * g_[x];
    return (-alpha_ / std::sqrt(2.0)) * z;
  }
  /// z_c = −(α/√2) Σ_x ν_x(c) g_x.
  Eigen::VectorXd dressing_amplitude(std::size_t c) const { return amplitude_for(nu(c)); }

  /// R_c = ½ Σ_{x,y} ⟨ω^{−1/2}λ_x, ω^{−1/2}λ_y⟩ ν_x ν_y.
  double r_value(std::size_t c) const {
    const std::vector<int> v = nu(c);
    double r = 0.0;
    for (int x = 0; x < n_sites(); ++x)
      for (int y = 0; y < n_sites(); ++y) r += 0.5 * gram_(x, y) * v[x] * v[y];
    return r;
  }

 private:
  SectorBasis basis_;
  HoppingMatrix hopping_;
  double u_;
  double alpha_;
  TruncatedFock fock_;
  std::vector<Eigen::VectorXd> lambda_;
  std::vector<Eigen::VectorXd> g_;
  Eigen::MatrixXd gram_;
  double b_kappa_ = 0.0;
};

/// Coupled model on a discretized cutoff family.
inline CoupledModel make_coupled_model(const HoppingMatrix& hopping, double u, double alpha, int n_e,
                                       const Discretization& disc, int n_max,
                                       std::size_t fock_cap = TruncatedFock::kDefaultDimensionCap) {
  if (disc.family.n_sites != hopping.size()) throw ArgumentError("cutoff family site count does not match the lattice");
  return CoupledModel(SectorBasis(hopping.size(), n_e), hopping, u, alpha, TruncatedFock(disc.modes, n_max, fock_cap),
                      disc.couplings);
}

// ============================================================================
// Tensor helpers
// ============================================================================

namespace detail {

inline Eigen::Ref<const Eigen::VectorXcd> block(const Eigen::VectorXcd& v, const CoupledModel& m, std::size_t c) {
  return v.segment(static_cast<Eigen::Index>(c * m.boson_dim()), static_cast<Eigen::Index>(m.boson_dim()));
}
inline Eigen::Ref<Eigen::VectorXcd> block(Eigen::VectorXcd& v, const CoupledModel& m, std::size_t c) {
  return v.segment(static_cast<Eigen::Index>(c * m.boson_dim()), static_cast<Eigen::Index>(m.boson_dim()));
}

template <class Scalar>
Eigen::SparseMatrix<Scalar> kron(const Eigen::SparseMatrix<Scalar>& a, const Eigen::SparseMatrix<Scalar>& b) {
  Eigen::SparseMatrix<Scalar> out = Eigen::kroneckerProduct(a, b);
  out.makeCompressed();
  return out;
}

inline RealSparse identity(std::size_t n) {
  RealSparse id(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  id.setIdentity();
  return id;
}

}  // namespace detail

/// Random unit vectors supported on configurations ⊗ boson states with at
/// most `max_quanta` quanta in total. Occupation tuples are enumerated in a
/// fixed order, so the same seed gives the same vectors for any n_max > max_quanta.
inline std::vector<Eigen::VectorXcd> interior_test_vectors(const CoupledModel& model, int count, std::uint64_t seed,
                                                           int max_quanta = 2) {
  if (model.fock().n_max() <= max_quanta) throw ArgumentError("n_max too small for the test-vector battery");
  std::vector<std::vector<int>> tuples;
  std::vector<int> cur(model.mode_count(), 0);
  // Depth-first enumeration of tuples with Σ n_j ≤ max_quanta.
  std::function<void(int, int)> rec = [&](int j, int left) {
    if (j == model.mode_count()) {
      tuples.push_back(cur);
      return;
    }
    for (int n = 0; n <= left; ++n) {
      cur[j] = n;
      rec(j + 1, left - n);
    }
    cur[j] = 0;
  };
  rec(0, max_quanta);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Eigen::VectorXcd> out;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(model.dim()));
    for (std::size_t c = 0; c < model.fermion_dim(); ++c) {
      for (const auto& t : tuples) {
        const double re = g(rng);
        const double im = g(rng);
        v(static_cast<Eigen::Index>(c * model.boson_dim() + model.fock().index_of(t))) = Complex(re, im);
      }
    }
    out.push_back(v.normalized());
  }
  return out;
}

// ============================================================================
// Generator and unitary
// ============================================================================

/// S = Σ_x n_x ⊗ φ(i g_x) on the tensor space.
inline ComplexSparse build_generator(const CoupledModel& model) {
  for (const auto& g : model.g())
    if (!g.allFinite()) throw InfraredDivergenceError("omega^-1 lambda is not finite", DivergenceClass::LogSingular);
  const NumberOperators num = number_operators(model.basis());
  const int d = static_cast<int>(model.dim());
  ComplexSparse s(d, d);
  for (int x = 0; x < model.n_sites(); ++x) {
    const ComplexSparse phi = field(model.fock(), Complex(0.0, 1.0) * model.g()[x].cast<Complex>());
    s += detail::kron<Complex>(num.site[x].cast<Complex>(), phi);
  }
  return s;
}

enum class VMethod { Displacement, Expm };

/// Block-diagonal V: one boson operator per configuration.
struct DressingUnitary {
  VMethod method = VMethod::Displacement;
  std::size_t fermion_dim = 0;
  std::size_t boson_dim = 0;
  int levels = 0;
  std::vector<ProductOperator> product_blocks;  ///< displacement path
  std::vector<Eigen::MatrixXcd> dense_blocks;   ///< expm path
  double tail_bound = 0.0;                      ///< worst per-mode Poisson tail of |z_cj|²

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v, bool adjoint = false) const {
    Eigen::VectorXcd out = v;
    for (std::size_t c = 0; c < fermion_dim; ++c) {
      auto seg = out.segment(static_cast<Eigen::Index>(c * boson_dim), static_cast<Eigen::Index>(boson_dim));
      if (method == VMethod::Displacement) {
        const ProductOperator& p = product_blocks[c];
        if (adjoint) p.adjoint().apply_in_place(seg, levels);
        else p.apply_in_place(seg, levels);
      } else {
        const Eigen::VectorXcd tmp = adjoint ? Eigen::VectorXcd(dense_blocks[c].adjoint() * seg)
                                             : Eigen::VectorXcd(dense_blocks[c] * seg);
        seg = tmp;
      }
    }
    return out;
  }
  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& v) const { return apply(v, true); }

  Eigen::MatrixXcd to_dense() const {
    const Eigen::Index d = static_cast<Eigen::Index>(fermion_dim * boson_dim);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t c = 0; c < fermion_dim; ++c) {
      const Eigen::Index o = static_cast<Eigen::Index>(c * boson_dim);
      const Eigen::Index b = static_cast<Eigen::Index>(boson_dim);
      out.block(o, o, b, b) = (method == VMethod::Displacement) ? product_blocks[c].to_dense() : dense_blocks[c];
    }
    return out;
  }
};

/// V = exp(iαS). Displacement path: per mode the exact matrix elements
/// ⟨m|D(z_cj)|n⟩, m, n ≤ n_max. Expm path: matrix exponential of the truncated
/// block generator iα Σ_x ν_x φ(i g_x) (dense, boson dimension ≤ 4096).
inline DressingUnitary unitary_V(const CoupledModel& model, VMethod method = VMethod::Displacement) {
  for (const auto& g : model.g())
    if (!g.allFinite()) throw InfraredDivergenceError("omega^-1 lambda is not finite", DivergenceClass::LogSingular);
  DressingUnitary v;
  v.method = method;
  v.fermion_dim = model.fermion_dim();
  v.boson_dim = model.boson_dim();
  v.levels = model.fock().levels();
  const int n_max = model.fock().n_max();
  std::map<std::vector<int>, std::size_t> seen;
  for (std::size_t c = 0; c < model.fermion_dim(); ++c) {
    const std::vector<int> nu = model.nu(c);
    const Eigen::VectorXd z = model.amplitude_for(nu);
    for (int j = 0; j < z.size(); ++j)
      v.tail_bound = std::max(v.tail_bound, single_mode::poisson_tail(z(j) * z(j), n_max));
    const auto it = seen.find(nu);
    if (method == VMethod::Displacement) {
      if (it != seen.end()) {
        v.product_blocks.push_back(v.product_blocks[it->second]);
        continue;
      }
      ProductOperator p;
      for (int j = 0; j < z.size(); ++j) p.factors.push_back(single_mode::displacement_exact(z(j), n_max));
      v.product_blocks.push_back(std::move(p));
    } else {
      if (model.boson_dim() > 4096) throw SizingError("dense expm block", model.boson_dim(), 4096);
      if (it != seen.end()) {
        v.dense_blocks.push_back(v.dense_blocks[it->second]);
        continue;
      }
      ComplexSparse gen(static_cast<int>(model.boson_dim()), static_cast<int>(model.boson_dim()));
      for (int x = 0; x < model.n_sites(); ++x)
        if (nu[x]) gen += static_cast<double>(nu[x]) * field(model.fock(), Complex(0.0, 1.0) * model.g()[x].cast<Complex>());
      const Eigen::MatrixXcd dense = Complex(0.0, model.alpha()) * Eigen::MatrixXcd(gen);
      v.dense_blocks.push_back(dense.exp());
    }
    seen.emplace(nu, c);
  }
  return v;
}

// ============================================================================
// Transformation identities
// ============================================================================

namespace detail {

/// (1 ⊗ H_b) v.
inline Eigen::VectorXcd apply_hb(const CoupledModel& m, const Eigen::VectorXd& hb, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out(v.size());
  for (std::size_t c = 0; c < m.fermion_dim(); ++c) block(out, m, c) = hb.cast<Complex>().cwiseProduct(block(v, m, c));
  return out;
}

/// Σ_x n_x ⊗ φ(h_x) v for real per-site mode vectors h_x.
inline Eigen::VectorXcd apply_site_fields(const CoupledModel& m, const std::vector<Eigen::VectorXd>& h,
                                          const Eigen::VectorXcd& v) {
  std::vector<RealSparse> phis;
  for (const auto& hx : h) phis.push_back(field_real(m.fock(), hx));
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
  for (std::size_t c = 0; c < m.fermion_dim(); ++c) {
    const std::vector<int> nu = m.nu(c);
    for (int x = 0; x < m.n_sites(); ++x)
      if (nu[x]) block(out, m, c) += static_cast<double>(nu[x]) * (phis[x].cast<Complex>() * block(v, m, c));
  }
  return out;
}

/// Multiplies block c by s[c].
inline Eigen::VectorXcd scale_blocks(const CoupledModel& m, const std::vector<double>& s, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out(v.size());
  for (std::size_t c = 0; c < m.fermion_dim(); ++c) block(out, m, c) = s[c] * block(v, m, c);
  return out;
}

}  // namespace detail

struct TransformCheckOptions {
  int n_vectors = 4;
  std::uint64_t seed = 17;
  int max_quanta = 2;
};

struct TransformResidual {
  double residual = 0.0;  ///< max over test vectors of ‖(LHS − RHS)Ψ‖
  double tail_bound = 0.0;
};

/// ‖V(1⊗H_b)V^{−1}Ψ − (1⊗H_b + αH_I + α²R⊗1)Ψ‖ over interior test vectors, V^{−1} = V†.
inline TransformResidual verify_transform_Hb(const CoupledModel& model, const TransformCheckOptions& opts = {}) {
  const DressingUnitary v = unitary_V(model);
  const SecondQuantized dg = d_gamma(model.fock());
  std::vector<double> r(model.fermion_dim());
  for (std::size_t c = 0; c < model.fermion_dim(); ++c) r[c] = model.alpha() * model.alpha() * model.r_value(c);
  TransformResidual out;
  out.tail_bound = v.tail_bound;
  for (const auto& psi : interior_test_vectors(model, opts.n_vectors, opts.seed, opts.max_quanta)) {
    const Eigen::VectorXcd lhs = v.apply(detail::apply_hb(model, dg.h_b, v.apply_adjoint(psi)));
    Eigen::VectorXcd rhs = detail::apply_hb(model, dg.h_b, psi) + detail::scale_blocks(model, r, psi);
    if (model.alpha() != 0.0) rhs += model.alpha() * detail::apply_site_fields(model, model.lambda(), psi);
    out.residual = std::max(out.residual, (lhs - rhs).norm());
  }
  return out;
}

struct NbTransformResult {
  double linear_residual = 0.0;     ///< odd-in-α part vs α Σ n_x ⊗ φ(g_x)
  double quadratic_residual = 0.0;  ///< even-in-α part minus the fitted multiple of Σ n_x² ‖g_x‖²
  double fitted_coefficient = 0.0;  ///< fitted c in c · Σ n_x² ‖g_x‖²
  double stated_coefficient = 0.0;  ///< α²
  double fitted_over_alpha2() const { return fitted_coefficient / stated_coefficient; }
  double residual_half = 0.0;       ///< full identity with coefficient α²/2
  double residual_stated = 0.0;     ///< full identity with coefficient α²
};

/// V N_b V^{−1} = N_b + α Σ n_x ⊗ φ(g_x) + c Σ n_x² ‖g_x‖²; the odd and even
/// parts in α are separated by evaluating at ±α, and c is fitted.
inline NbTransformResult verify_transform_Nb(const CoupledModel& model, const TransformCheckOptions& opts = {}) {
  const double a = model.alpha();
  if (a == 0.0) return NbTransformResult{};
  const DressingUnitary vp = unitary_V(model);
  const DressingUnitary vm = unitary_V(model.with_alpha(-a));
  const SecondQuantized dg = d_gamma(model.fock());
  std::vector<double> m2(model.fermion_dim(), 0.0);
  for (std::size_t c = 0; c < model.fermion_dim(); ++c) {
    const std::vector<int> nu = model.nu(c);
    for (int x = 0; x < model.n_sites(); ++x) m2[c] += nu[x] * nu[x] * model.g()[x].squaredNorm();
  }
  NbTransformResult out;
  out.stated_coefficient = a * a;
  const auto vecs = interior_test_vectors(model, opts.n_vectors, opts.seed, opts.max_quanta);
  std::vector<Eigen::VectorXcd> evens, mpsis, shifts, lins;
  double num = 0.0, den = 0.0;
  for (const auto& psi : vecs) {
    const Eigen::VectorXcd nb = detail::apply_hb(model, dg.n_b, psi);
    const Eigen::VectorXcd qp = vp.apply(detail::apply_hb(model, dg.n_b, vp.apply_adjoint(psi))) - nb;
    const Eigen::VectorXcd qm = vm.apply(detail::apply_hb(model, dg.n_b, vm.apply_adjoint(psi))) - nb;
    const Eigen::VectorXcd even = 0.5 * (qp + qm);
    const Eigen::VectorXcd odd = 0.5 * (qp - qm);
    const Eigen::VectorXcd mpsi = detail::scale_blocks(model, m2, psi);
    const Eigen::VectorXcd lin = a * detail::apply_site_fields(model, model.g(), psi);
    num += mpsi.dot(even).real();
    den += mpsi.squaredNorm();
    out.linear_residual = std::max(out.linear_residual, (odd - lin).norm());
    evens.push_back(even);
    mpsis.push_back(mpsi);
    shifts.push_back(qp);
    lins.push_back(lin);
  }
  out.fitted_coefficient = den > 0.0 ? num / den : 0.0;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    out.quadratic_residual = std::max(out.quadratic_residual, (evens[i] - out.fitted_coefficient * mpsis[i]).norm());
    out.residual_half = std::max(out.residual_half, (shifts[i] - lins[i] - 0.5 * a * a * mpsis[i]).norm());
    out.residual_stated = std::max(out.residual_stated, (shifts[i] - lins[i] - a * a * mpsis[i]).norm());
  }
  return out;
}

struct CommutatorResiduals {
  double hb = 0.0;      ///< [φ(i g_x), H_b] + i φ(λ_x)
  double fields = 0.0;  ///< [φ(i g_x), φ(λ_y)] + i ⟨ω^{−1/2}λ_x, ω^{−1/2}λ_y⟩
  double triple = 0.0;  ///< [S, [S, [S, 1⊗H_b]]]
};

/// Boson-side commutators behind the H_b transformation, on low-occupation vectors.
inline CommutatorResiduals commutator_ladder(const CoupledModel& model, int n_vectors = 3, std::uint64_t seed = 23) {
  if (model.fock().n_max() < 8) throw ArgumentError("commutator checks need n_max >= 8");
  const TruncatedFock& fock = model.fock();
  const SecondQuantized dg = d_gamma(fock);
  const ComplexSparse hb = dg.hb_matrix().cast<Complex>();
  CommutatorResiduals out;
  std::vector<Eigen::VectorXcd> vecs;
  for (const auto& t : interior_test_vectors(model, n_vectors, seed, 2)) vecs.push_back(t.head(static_cast<Eigen::Index>(fock.dim())).normalized());
  for (int x = 0; x < model.n_sites(); ++x) {
    const ComplexSparse pg = field(fock, Complex(0.0, 1.0) * model.g()[x].cast<Complex>());
    const ComplexSparse pl = field(fock, model.lambda()[x].cast<Complex>());
    for (const auto& v : vecs) {
      const Eigen::VectorXcd c1 = pg * (hb * v) - hb * (pg * v) + Complex(0.0, 1.0) * (pl * v);
      out.hb = std::max(out.hb, c1.norm());
      for (int y = 0; y < model.n_sites(); ++y) {
        const ComplexSparse py = field(fock, model.lambda()[y].cast<Complex>());
        const Eigen::VectorXcd c2 = pg * (py * v) - py * (pg * v) + Complex(0.0, model.gram()(x, y)) * v;
        out.fields = std::max(out.fields, c2.norm());
      }
    }
  }
  const ComplexSparse s = build_generator(model);
  const ComplexSparse hb_full = detail::kron<Complex>(detail::identity(model.fermion_dim()).cast<Complex>(), hb);
  auto comm = [&](const Eigen::VectorXcd& v, auto&& inner) -> Eigen::VectorXcd {
    return Eigen::VectorXcd(s * inner(v)) - inner(Eigen::VectorXcd(s * v));
  };
  auto c1 = [&](const Eigen::VectorXcd& v) { return comm(v, [&](const Eigen::VectorXcd& w) { return Eigen::VectorXcd(hb_full * w); }); };
  auto c2 = [&](const Eigen::VectorXcd& v) { return comm(v, c1); };
  for (const auto& psi : interior_test_vectors(model, n_vectors, seed + 1, 2)) {
    const Eigen::VectorXcd t = comm(psi, c2);
    out.triple = std::max(out.triple, t.norm());
  }
  return out;
}

// ============================================================================
// Hamiltonians
// ============================================================================

struct CoupledHamiltonians {
  RealSparse direct;     ///< H_e⊗1 + 1⊗H_b + α Σ_x n_x ⊗ φ(λ_x)
  RealSparse effective;  ///< Ĥ_e⊗1 + 1⊗H_b
  RealSparse h_e_effective;
};

inline RealSparse build_direct_hamiltonian(const CoupledModel& model) {
  const RealSparse he = build_hubbard(model.basis(), model.hopping(), model.u());
  const SecondQuantized dg = d_gamma(model.fock());
  RealSparse h = detail::kron<double>(he, detail::identity(model.boson_dim()));
  h += detail::kron<double>(detail::identity(model.fermion_dim()), dg.hb_matrix());
  if (model.alpha() != 0.0) {
    const NumberOperators num = number_operators(model.basis());
    for (int x = 0; x < model.n_sites(); ++x)
      h += model.alpha() * detail::kron<double>(num.site[x], field_real(model.fock(), model.lambda()[x]));
  }
  h.prune(0.0);
  return h;
}

inline CoupledHamiltonians effective_hamiltonians(const CoupledModel& model) {
  CoupledHamiltonians out;
  out.direct = build_direct_hamiltonian(model);
  out.h_e_effective = build_effective_hubbard(model.basis(), model.hopping(), model.effective());
  const SecondQuantized dg = d_gamma(model.fock());
  out.effective = detail::kron<double>(out.h_e_effective, detail::identity(model.boson_dim())) +
                  detail::kron<double>(detail::identity(model.fermion_dim()), dg.hb_matrix());
  out.effective.prune(0.0);
  return out;
}

/// V^{−1} H V written out: hopping between configurations c → c' carries the
/// boson operator D(z_c − z_c'); everything else is Ĥ's diagonal part.
/// Applied matrix-free; real because all z_c are real.
class PolaronHamiltonian {
 public:
  explicit PolaronHamiltonian(const CoupledModel& model) : model_(model) {
    const RealSparse hop = build_one_body(model.basis(), model.hopping().matrix());
    const NumberOperators num = number_operators(model.basis());
    hb_ = d_gamma(model.fock()).h_b;
    diag_.resize(model.fermion_dim());
    const double a2 = model.alpha() * model.alpha();
    const Eigen::VectorXd dd = Eigen::MatrixXd(num.double_occupancy).diagonal();
    for (std::size_t c = 0; c < model.fermion_dim(); ++c) diag_[c] = model.u() * dd(c) - a2 * model.r_value(c);
    std::map<std::vector<int>, std::size_t> cache;
    for (int k = 0; k < hop.outerSize(); ++k) {
      for (RealSparse::InnerIterator it(hop, k); it; ++it) {
        const std::size_t cp = static_cast<std::size_t>(it.row());
        const std::size_t c = static_cast<std::size_t>(it.col());
        if (cp == c) {
          diag_[c] += it.value();
          continue;
        }
        const std::vector<int> nc = model.nu(c), ncp = model.nu(cp);
        std::vector<int> key(nc.size());
        for (std::size_t x = 0; x < nc.size(); ++x) key[x] = nc[x] - ncp[x];
        auto f = cache.find(key);
        if (f == cache.end()) {
          const Eigen::VectorXd dz = model.amplitude_for(key);  // linear in ν: z_c − z_c'
          std::vector<Eigen::MatrixXcd> factors;
          for (int j = 0; j < dz.size(); ++j) factors.push_back(single_mode::displacement_exact(dz(j), model.fock().n_max()));
          ops_.push_back(std::move(factors));
          f = cache.emplace(key, ops_.size() - 1).first;
        }
        hops_.push_back({cp, c, it.value(), f->second});
      }
    }
  }

  std::size_t dim() const { return model_.dim(); }

  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.resize(v.size());
    const Eigen::Index b = static_cast<Eigen::Index>(model_.boson_dim());
    for (std::size_t c = 0; c < model_.fermion_dim(); ++c)
      out.segment(c * b, b) = (hb_.array() + diag_[c]).matrix().cwiseProduct(v.segment(c * b, b));
    Eigen::VectorXcd tmp;
    for (const auto& h : hops_) {
      tmp = v.segment(h.c * b, b).cast<Complex>();
      for (int j = 0; j < model_.mode_count(); ++j)
        apply_mode_matrix(tmp, model_.mode_count(), model_.fock().levels(), j, ops_[h.op][j]);
      out.segment(h.cp * b, b) += h.t * tmp.real();
    }
  }

  double norm_estimate() const {
    double hop = 0.0;
    for (const auto& h : hops_) hop += std::abs(h.t);
    double d = 0.0;
    for (double x : diag_) d = std::max(d, std::abs(x));
    return hb_.maxCoeff() + d + hop;
  }

 private:
  struct Hop {
    std::size_t cp, c;
    double t;
    std::size_t op;
  };
  const CoupledModel& model_;
  Eigen::VectorXd hb_;
  std::vector<double> diag_;
  std::vector<Hop> hops_;
  std::vector<std::vector<Eigen::MatrixXcd>> ops_;
};

struct SpectralComparison {
  Eigen::VectorXd direct;
  Eigen::VectorXd effective;
  Eigen::VectorXd polaron;
  double max_difference = 0.0;          ///< direct vs effective
  double polaron_max_difference = 0.0;  ///< direct vs polaron form
  int direct_degeneracy = 0;
  int effective_degeneracy = 0;  ///< of Ĥ_e
};

inline SpectralComparison compare_spectra(const CoupledModel& model, int k = 5, const GroundSpaceOptions& gopts = {}) {
  const CoupledHamiltonians h = effective_hamiltonians(model);
  SolverOptions so = gopts.solver;
  SpectralComparison out;
  out.direct = eigensolve<double>(h.direct, k, so).values;
  out.effective = eigensolve<double>(h.effective, k, so).values;
  const PolaronHamiltonian pol(model);
  LinearOperator<double> apply = [&pol](const Eigen::VectorXd& x, Eigen::VectorXd& y) { pol.apply(x, y); };
  out.polaron = lanczos_lowest<double>(apply, static_cast<Eigen::Index>(pol.dim()), k, pol.norm_estimate(), so).values;
  out.max_difference = (out.direct - out.effective).cwiseAbs().maxCoeff();
  out.polaron_max_difference = (out.direct - out.polaron).cwiseAbs().maxCoeff();
  GroundSpaceOptions g = gopts;
  g.spectrum_head = std::max(g.spectrum_head, k + 4);
  out.direct_degeneracy = ground_space(h.direct, g).degeneracy;
  out.effective_degeneracy = ground_space(h.h_e_effective, g).degeneracy;
  return out;
}

// ============================================================================
// Dressed states
// ============================================================================

struct DressedComponent {
  std::size_t config = 0;
  Complex weight = 0.0;
  Eigen::VectorXd z;
};

struct DressedState {
  std::vector<DressedComponent> components;
  double truncation_error = 0.0;  ///< Σ_c |ψ_c|² (1 − kept coherent norm²)
  bool flagged = false;
};

/// Ψ = V(ψ_e ⊗ Ω) decomposed per configuration.
inline DressedState dress_state(const CoupledModel& model, const Eigen::VectorXcd& psi_e, double bound = 1e-8) {
  if (psi_e.size() != static_cast<Eigen::Index>(model.fermion_dim())) throw ArgumentError("electron vector has wrong dimension");
  if (std::abs(psi_e.norm() - 1.0) > 1e-10) throw ArgumentError("electron vector must be normalized");
  DressedState d;
  for (std::size_t c = 0; c < model.fermion_dim(); ++c) {
    const Complex w = psi_e(static_cast<Eigen::Index>(c));
    if (w == Complex(0.0)) continue;
    DressedComponent comp{c, w, model.dressing_amplitude(c)};
    double kept = 1.0;
    for (int j = 0; j < comp.z.size(); ++j) kept *= 1.0 - single_mode::poisson_tail(comp.z(j) * comp.z(j), model.fock().n_max());
    d.truncation_error += std::norm(w) * (1.0 - kept);
    d.components.push_back(std::move(comp));
  }
  d.flagged = d.truncation_error > bound;
  return d;
}

/// Tensor vector of a dressed state (each coherent block renormalized).
inline Eigen::VectorXcd reconstruct(const CoupledModel& model, const DressedState& d) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(model.dim()));
  for (const auto& comp : d.components)
    detail::block(v, model, comp.config) = comp.weight * coherent_state(model.fock(), comp.z.cast<Complex>()).vector;
  return v;
}

/// Σ_c |ψ_c|² ‖z_c‖².
inline double nb_expectation(const DressedState& d) {
  double s = 0.0;
  for (const auto& comp : d.components) s += std::norm(comp.weight) * comp.z.squaredNorm();
  return s;
}

/// ⟨Ψ, 1⊗N_b Ψ⟩ from a tensor vector.
inline double nb_expectation_matrix(const CoupledModel& model, const Eigen::VectorXcd& v) {
  const SecondQuantized dg = d_gamma(model.fock());
  return detail::apply_hb(model, dg.n_b, v).dot(v).real();
}

namespace detail {

/// (a_{ω,κ}(f) v) = (1⊗a(f) + (α/√2) Σ_x ⟨ω^{−1/2}f, ω^{−1/2}λ_x⟩ n_x ⊗ 1) v.
inline Eigen::VectorXcd apply_dressed_annihilator(const CoupledModel& model, const ModeVector& f, const Eigen::VectorXcd& v) {
  const ComplexSparse af = annihilator(model.fock(), f);
  std::vector<Complex> coef(model.n_sites());
  for (int x = 0; x < model.n_sites(); ++x) {
    Complex s = 0.0;
    for (int j = 0; j < model.mode_count(); ++j) s += std::conj(f(j)) * model.g()[x](j);
    coef[x] = model.alpha() / std::sqrt(2.0) * s;
  }
  Eigen::VectorXcd out(v.size());
  for (std::size_t c = 0; c < model.fermion_dim(); ++c) {
    const std::vector<int> nu = model.nu(c);
    Complex shift = 0.0;
    for (int x = 0; x < model.n_sites(); ++x) shift += static_cast<double>(nu[x]) * coef[x];
    block(out, model, c) = af * block(v, model, c) + shift * block(v, model, c);
  }
  return out;
}

}  // namespace detail

/// ‖a_{ω,κ}(f) Ψ‖ for a dressed state Ψ.
inline double annihilation_residual(const CoupledModel& model, const DressedState& d, const ModeVector& f) {
  check_mode_vector(model.fock(), f);
  return detail::apply_dressed_annihilator(model, f, reconstruct(model, d)).norm();
}

/// max over test vectors of ‖e^{itH} a_{ω,κ}(f) e^{−itH} Ψ − a_{ω,κ}(e^{itω} f) Ψ‖.
/// Subtracting E_0 from H does not change the conjugation, so it is skipped.
inline double heisenberg_evolution_check(const CoupledModel& model, const ModeVector& f, double t,
                                         const TransformCheckOptions& opts = {}) {
  check_mode_vector(model.fock(), f);
  if (t == 0.0) return 0.0;
  const RealSparse h = build_direct_hamiltonian(model);
  ModeVector ft(f.size());
  for (int j = 0; j < f.size(); ++j) ft(j) = std::exp(Complex(0.0, t * model.fock().modes().freqs[j])) * f(j);
  double worst = 0.0;
  for (const auto& psi : interior_test_vectors(model, opts.n_vectors, opts.seed, opts.max_quanta)) {
    const Eigen::VectorXcd forward = krylov_evolve(h, psi, t);
    const Eigen::VectorXcd lhs = krylov_evolve(h, detail::apply_dressed_annihilator(model, f, forward), -t);
    const Eigen::VectorXcd rhs = detail::apply_dressed_annihilator(model, ft, psi);
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

// ============================================================================
// Overlap with excited reference states
// ============================================================================

namespace detail {

/// Per-mode vector exp(z (a† − a))|0⟩ of the truncated generator, with the
/// level count chosen from the Poisson tail.
inline Eigen::VectorXd displaced_vacuum_expm(double z, int extra_levels, double tail = 1e-17) {
  const int n = single_mode::levels_for(z * z, tail, 4) + extra_levels + 8;
  const Eigen::MatrixXd a = single_mode::annihilation(n);
  const Eigen::MatrixXd gen = z * (a.transpose() - a);
  return Eigen::MatrixXd(gen.exp()).col(0);
}

/// The common site-occupation pattern ν of all configurations carrying
/// weight in psi, or nothing if there are several.
template <class Vec>
std::optional<std::vector<int>> occupation_pattern(const SectorBasis& basis, const Vec& psi, double tol = 1e-14) {
  std::optional<std::vector<int>> nu;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (std::abs(psi(i)) <= tol) continue;
    const std::vector<int> v = basis.site_occupations(static_cast<std::size_t>(i));
    if (!nu) nu = v;
    else if (*nu != v) return std::nullopt;
  }
  return nu;
}

}  // namespace detail

struct OverlapResult {
  Complex numeric = 0.0;
  std::optional<Complex> closed;   ///< per-configuration closed form
  std::optional<Complex> printed;  ///< same with no α^n prefactor, e^{iαN_e} phase and the support set Λ_e
};

/// ⟨a(f_1)†…a(f_n)† ψ_e⊗Ω, V(ψ_eg⊗Ω)⟩ evaluated mode by mode: the dressed vacuum
/// of each configuration is a product of per-mode vectors, and
/// ⟨Ω| a(f_n)…a(f_1) ⊗_j u_j⟩ = Σ over mode assignments of Π conj(f_i,j_i) Π_j √(k_j!) u_j[k_j].
inline Complex overlap_numeric(const CoupledModel& model, const std::vector<ModeVector>& f, const Eigen::VectorXcd& psi_e,
                               const Eigen::VectorXcd& psi_eg) {
  const int m = model.mode_count();
  const int n = static_cast<int>(f.size());
  for (const auto& fi : f)
    if (fi.size() != m) throw ArgumentError("excitation vector length does not match the mode count");
  Complex total = 0.0;
  std::map<std::vector<int>, Complex> cache;
  for (std::size_t c = 0; c < model.fermion_dim(); ++c) {
    const Complex w = std::conj(psi_e(static_cast<Eigen::Index>(c))) * psi_eg(static_cast<Eigen::Index>(c));
    if (w == Complex(0.0)) continue;
    const std::vector<int> nu = model.nu(c);
    auto it = cache.find(nu);
    if (it == cache.end()) {
      const Eigen::VectorXd z = model.amplitude_for(nu);
      std::vector<Eigen::VectorXd> u(m);
      for (int j = 0; j < m; ++j) u[j] = detail::displaced_vacuum_expm(z(j), n);
      Complex amp = 0.0;
      std::vector<int> assign(n, 0);
      const long combos = static_cast<long>(std::pow(m, n));
      for (long idx = 0; idx < combos; ++idx) {
        long r = idx;
        Complex coef = 1.0;
        std::vector<int> k(m, 0);
        for (int i = 0; i < n; ++i) {
          assign[i] = static_cast<int>(r % m);
          r /= m;
          coef *= std::conj(f[i](assign[i]));
          ++k[assign[i]];
        }
        if (coef == Complex(0.0)) continue;
        double prod = 1.0;
        for (int j = 0; j < m; ++j) prod *= std::sqrt(std::tgamma(k[j] + 1.0)) * u[j](k[j]);
        amp += coef * prod;
      }
      it = cache.emplace(nu, amp).first;
    }
    total += w * it->second;
  }
  return total;
}

/// Closed forms for a reference ψ_e with definite site occupations ν:
///   (−α/√2)^n Π_i (Σ_x ν_x ⟨f_i, g_x⟩) e^{−(α²/4) Σ_x ν_x² ‖g_x‖²} ⟨ψ_e, ψ_eg⟩.
inline OverlapResult overlap_formula(const CoupledModel& model, const std::vector<ModeVector>& f,
                                     const Eigen::VectorXcd& psi_e, const Eigen::VectorXcd& psi_eg) {
  const auto pattern = detail::occupation_pattern(model.basis(), psi_e);
  if (!pattern)
    throw PreconditionError("closed-form overlap needs a reference state with definite site occupations; use overlap_numeric");
  OverlapResult r;
  r.numeric = overlap_numeric(model, f, psi_e, psi_eg);
  const std::vector<int>& nu = *pattern;
  const double a = model.alpha();
  const Complex base = psi_e.dot(psi_eg);
  double gsum = 0.0, gsum_support = 0.0;
  for (int x = 0; x < model.n_sites(); ++x) {
    gsum += nu[x] * nu[x] * model.g()[x].squaredNorm();
    if (nu[x]) gsum_support += model.g()[x].squaredNorm();
  }
  Complex closed = base * std::exp(-0.25 * a * a * gsum);
  Complex printed = base * std::exp(Complex(0.0, a * model.n_e())) * std::exp(-0.25 * a * a * gsum_support);
  for (const auto& fi : f) {
    Complex s = 0.0, s_support = 0.0;
    for (int x = 0; x < model.n_sites(); ++x) {
      const Complex ip = fi.dot(model.g()[x].cast<Complex>());
      s += static_cast<double>(nu[x]) * ip;
      if (nu[x]) s_support += ip;
    }
    closed *= (-a / std::sqrt(2.0)) * s;
    printed *= (-1.0 / std::sqrt(2.0)) * s_support;
  }
  r.closed = closed;
  r.printed = printed;
  return r;
}

}  // namespace hubbard_phonon
