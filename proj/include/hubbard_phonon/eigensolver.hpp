// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file eigensolver.hpp
 * @brief Lowest eigenpairs of Hermitian operators and ground-space extraction.
 *
 * Small problems (dimension <= dense_limit) go through a dense
 * SelfAdjointEigenSolver. Larger ones use Lanczos with full
 * reorthogonalization, one eigenpair at a time: each converged Ritz vector is
 * locked and projected out of the next run, so degenerate multiplets are
 * resolved one copy per run. A final Rayleigh-Ritz step over the locked vectors
 * cleans up the small mutual contamination left by inexact locking.
 */

#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hubbard_phonon/common.hpp"

namespace hubbard_phonon {

struct SolverOptions {
  std::size_t dense_limit = 4096;
  double residual_tol = 1e-10;  ///< relative to the operator norm estimate
  int max_krylov = 160;
  int max_restarts = 60;
  double hermiticity_tol = 1e-12;  ///< relative to the largest entry
  std::uint64_t seed = 20260101;
};

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
struct EigenPairs {
  Eigen::VectorXd values;       ///< ascending
  MatrixX<Scalar> vectors;      ///< columns, orthonormal
  Eigen::VectorXd residuals;    ///< ‖Hv − λv‖ per pair
};

template <class Scalar>
using LinearOperator = std::function<void(const VectorX<Scalar>&, VectorX<Scalar>&)>;

namespace detail {

template <class Scalar>
VectorX<Scalar> random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  VectorX<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<Scalar, Complex>) {
      const double re = g(rng);
      const double im = g(rng);
      v(i) = Complex(re, im);
    } else {
      v(i) = g(rng);
    }
  }
  return v;
}

template <class Scalar>
void project_out(VectorX<Scalar>& w, const std::vector<VectorX<Scalar>>& basis) {
  for (const auto& q : basis) w -= q * q.dot(w);
}

template <class Sparse>
double max_abs_entry(const Sparse& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (typename Sparse::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

template <class Sparse>
double inf_norm(const Sparse& m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (typename Sparse::InnerIterator it(m, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return m.rows() ? rows.maxCoeff() : 0.0;
}

}  // namespace detail

/// Throws ValidationError unless max |A − A†| ≤ tol · max |A|.
template <class Scalar>
void check_hermitian(const Eigen::SparseMatrix<Scalar>& h, double tol) {
  if (h.rows() != h.cols()) throw ValidationError("operator is not square");
  const Eigen::SparseMatrix<Scalar> diff = h - Eigen::SparseMatrix<Scalar>(h.adjoint());
  const double scale = std::max(1.0, detail::max_abs_entry(h));
  const double dev = detail::max_abs_entry(diff);
  if (dev > tol * scale) {
    throw ValidationError("operator is not Hermitian: max |A - A^H| = " + std::to_string(dev));
  }
}

/// Lowest k eigenpairs of a Hermitian operator given only as a matvec.
template <class Scalar>
EigenPairs<Scalar> lanczos_lowest(const LinearOperator<Scalar>& apply, Eigen::Index dim, int k,
                                  double norm_estimate, const SolverOptions& opts = {}) {
  if (k < 1 || k > dim) throw ArgumentError("requested eigenpair count out of range");
  std::mt19937_64 rng(opts.seed);
  const double tol = opts.residual_tol * std::max(1.0, norm_estimate);
  std::vector<VectorX<Scalar>> locked;
  VectorX<Scalar> w(dim);

  for (int target = 0; target < k; ++target) {
    VectorX<Scalar> start = detail::random_vector<Scalar>(dim, rng);
    bool converged = false;
    double last_residual = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart <= opts.max_restarts && !converged; ++restart) {
      detail::project_out(start, locked);
      detail::project_out(start, locked);
      const double n0 = start.norm();
      if (n0 == 0.0) start = detail::random_vector<Scalar>(dim, rng), detail::project_out(start, locked);
      std::vector<VectorX<Scalar>> q{start / start.norm()};
      std::vector<double> alpha;
      std::vector<double> beta;
      const int krylov_cap = static_cast<int>(std::min<Eigen::Index>(opts.max_krylov, dim - static_cast<Eigen::Index>(locked.size())));
      Eigen::VectorXd ritz_y;
      double theta = 0.0;
      for (int j = 0; j < krylov_cap; ++j) {
        apply(q[j], w);
        detail::project_out(w, locked);
        alpha.push_back(std::real(q[j].dot(w)));
        for (int pass = 0; pass < 2; ++pass) {
          for (const auto& qi : q) w -= qi * qi.dot(w);
          detail::project_out(w, locked);
        }
        const double b = w.norm();
        const int m = static_cast<int>(alpha.size());
        const bool last = (j + 1 == krylov_cap) || b < 1e-14 * std::max(1.0, norm_estimate);
        if (last || m % 4 == 0) {
          Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
          for (int i = 0; i < m; ++i) {
            tri(i, i) = alpha[i];
            if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
          }
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
          ritz_y = es.eigenvectors().col(0);
          theta = es.eigenvalues()(0);
          last_residual = b * std::abs(ritz_y(m - 1));
          if (last_residual <= 0.1 * tol || last) break;
        }
        beta.push_back(b);
        q.push_back(w / b);
      }
      VectorX<Scalar> x = VectorX<Scalar>::Zero(dim);
      for (Eigen::Index i = 0; i < ritz_y.size(); ++i) x += ritz_y(i) * q[i];
      detail::project_out(x, locked);
      x.normalize();
      apply(x, w);
      detail::project_out(w, locked);
      last_residual = (w - theta * x).norm();
      if (last_residual <= tol) {
        locked.push_back(x);
        converged = true;
      } else {
        start = x;
      }
    }
    if (!converged) throw ConvergenceError("Lanczos did not converge for eigenpair " + std::to_string(target), last_residual);
  }

  // Rayleigh-Ritz over the locked vectors.
  const int m = static_cast<int>(locked.size());
  MatrixX<Scalar> basis(dim, m);
  for (int i = 0; i < m; ++i) basis.col(i) = locked[i];
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(basis);
  basis = qr.householderQ() * MatrixX<Scalar>::Identity(dim, m);
  MatrixX<Scalar> hb(dim, m);
  for (int i = 0; i < m; ++i) {
    VectorX<Scalar> col = basis.col(i);
    apply(col, w);
    hb.col(i) = w;
  }
  MatrixX<Scalar> proj = basis.adjoint() * hb;
  proj = 0.5 * (proj + proj.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(proj);
  EigenPairs<Scalar> out;
  out.values = es.eigenvalues();
  out.vectors = basis * es.eigenvectors();
  const MatrixX<Scalar> hv = hb * es.eigenvectors();
  out.residuals.resize(m);
  for (int i = 0; i < m; ++i) out.residuals(i) = (hv.col(i) - out.values(i) * out.vectors.col(i)).norm();
  return out;
}

/// Lowest k eigenpairs of a sparse Hermitian matrix.
template <class Scalar>
EigenPairs<Scalar> eigensolve(const Eigen::SparseMatrix<Scalar>& h, int k, const SolverOptions& opts = {}) {
  check_hermitian(h, opts.hermiticity_tol);
  const Eigen::Index dim = h.rows();
  if (k < 1 || k > dim) throw ArgumentError("requested eigenpair count out of range");
  const double norm = detail::inf_norm(h);
  if (static_cast<std::size_t>(dim) <= opts.dense_limit) {
    const MatrixX<Scalar> dense(h);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(dense);
    EigenPairs<Scalar> out;
    out.values = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
    out.residuals.resize(k);
    for (int i = 0; i < k; ++i) {
      out.residuals(i) = (dense * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm();
      if (out.residuals(i) > 1e-10 * std::max(1.0, norm)) {
        throw ConvergenceError("dense eigensolver residual above tolerance", out.residuals(i));
      }
    }
    return out;
  }
  LinearOperator<Scalar> apply = [&h](const VectorX<Scalar>& x, VectorX<Scalar>& y) { y = h * x; };
  return lanczos_lowest<Scalar>(apply, dim, k, norm, opts);
}

// ============================================================================
// Ground space
// ============================================================================

struct GroundSpaceReport {
  double e0 = 0.0;
  int degeneracy = 0;
  Eigen::MatrixXd vectors;                ///< orthonormal columns spanning the ground space
  double gap = std::numeric_limits<double>::infinity();
  std::optional<SpinValue> s_tot;         ///< empty: mixed or not computed
  bool spin_computed = false;
  std::vector<double> s_squared_values;   ///< eigenvalues of S² projected on the ground space
  Eigen::VectorXd spectrum_head;

  std::string s_tot_str() const {
    if (!spin_computed) return "n/a";
    return s_tot ? s_tot->str() : "mixed";
  }
};

struct GroundSpaceOptions {
  double cluster_tol = 1e-8;
  int spectrum_head = 8;
  double spin_tol = 1e-6;
  SolverOptions solver{};
};

/// Degeneracy by relative clustering: λ − e0 ≤ cluster_tol · max(1, |e0|).
/// An eigenvalue within [0.5, 2]× of that threshold raises
/// AmbiguousDegeneracyError rather than being silently assigned.
inline GroundSpaceReport ground_space(const RealSparse& h, const GroundSpaceOptions& opts = {},
                                      const RealSparse* s_squared = nullptr) {
  if (!(opts.cluster_tol > 0.0)) throw ArgumentError("cluster_tol must be positive");
  const int dim = static_cast<int>(h.rows());
  int k = std::min(dim, std::max(2, opts.spectrum_head));
  if (static_cast<std::size_t>(dim) <= opts.solver.dense_limit) k = dim;
  EigenPairs<double> pairs;
  int cluster = 0;
  double threshold = 0.0;
  while (true) {
    pairs = eigensolve<double>(h, k, opts.solver);
    const double e0 = pairs.values(0);
    threshold = opts.cluster_tol * std::max(1.0, std::abs(e0));
    cluster = 0;
    for (int i = 0; i < k; ++i) {
      const double d = pairs.values(i) - e0;
      if (d >= 0.5 * threshold && d <= 2.0 * threshold) {
        throw AmbiguousDegeneracyError(
            "eigenvalue " + std::to_string(i) + " lies within [0.5, 2] x the clustering threshold (" +
            std::to_string(d) + " vs " + std::to_string(threshold) + "); change cluster_tol");
      }
      if (d <= threshold) ++cluster;
    }
    if (cluster < k || k == dim) break;
    k = std::min(dim, 2 * k);
  }
  GroundSpaceReport r;
  r.e0 = pairs.values(0);
  r.degeneracy = cluster;
  r.vectors = pairs.vectors.leftCols(cluster);
  r.gap = (cluster < pairs.values.size()) ? pairs.values(cluster) - r.e0
                                          : std::numeric_limits<double>::infinity();
  r.spectrum_head = pairs.values.head(std::min<Eigen::Index>(pairs.values.size(), opts.spectrum_head));
  if (s_squared) {
    r.spin_computed = true;
    const Eigen::MatrixXd proj = r.vectors.transpose() * ((*s_squared) * r.vectors);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (proj + proj.transpose()));
    for (int i = 0; i < cluster; ++i) r.s_squared_values.push_back(es.eigenvalues()(i));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (hi - lo <= opts.spin_tol) r.s_tot = SpinValue::from_casimir(0.5 * (lo + hi), opts.spin_tol);
  }
  return r;
}

// ============================================================================
// Real-time evolution
// ============================================================================

/// exp(−i t H) ψ by short-iteration Lanczos with adaptive substeps.
inline Eigen::VectorXcd krylov_evolve(const RealSparse& h, const Eigen::VectorXcd& psi, double t,
                                      double tol = 1e-12, int krylov_dim = 40) {
  Eigen::VectorXcd v = psi;
  if (t == 0.0 || psi.norm() == 0.0) return v;
  const double norm = std::max(1.0, detail::inf_norm(h));
  double remaining = std::abs(t);
  const double direction = (t > 0) ? 1.0 : -1.0;
  double step = std::min(remaining, 4.0 / norm);
  while (remaining > 0.0) {
    step = std::min(step, remaining);
    const double beta0 = v.norm();
    std::vector<Eigen::VectorXcd> q{v / beta0};
    std::vector<double> a;
    std::vector<double> b;
    Eigen::VectorXcd w;
    for (int j = 0; j < krylov_dim; ++j) {
      w = h * q[j];
      a.push_back(std::real(q[j].dot(w)));
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& qi : q) w -= qi * qi.dot(w);
      const double bn = w.norm();
      b.push_back(bn);
      if (bn < 1e-14 * norm) break;
      q.push_back(w / bn);
    }
    const int m = static_cast<int>(a.size());
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = a[i];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = b[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    auto propagate = [&](double dt) {
      Eigen::VectorXcd phase(m);
      for (int i = 0; i < m; ++i) phase(i) = std::exp(Complex(0.0, -direction * dt * es.eigenvalues()(i)));
      const Eigen::VectorXcd e1 = es.eigenvectors().row(0).transpose().cast<Complex>();
      return Eigen::VectorXcd(es.eigenvectors().cast<Complex>() * phase.cwiseProduct(e1));
    };
    // Error estimate: weight on the last Krylov direction times the next β.
    Eigen::VectorXcd coeffs = propagate(step);
    const bool exhausted = (static_cast<int>(q.size()) == m);
    double err = exhausted ? 0.0 : beta0 * b.back() * std::abs(coeffs(m - 1));
    while (err > tol * step && step > 1e-6 / norm) {
      step *= 0.5;
      coeffs = propagate(step);
      err = exhausted ? 0.0 : beta0 * b.back() * std::abs(coeffs(m - 1));
    }
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(v.size());
    for (int i = 0; i < m; ++i) next += (beta0 * coeffs(i)) * q[i];
    v = next;
    remaining -= step;
    if (err < 0.1 * tol * step) step *= 1.5;
  }
  return v;
}

}  // namespace hubbard_phonon
