// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file lattice_fermions.hpp
 * @brief Fixed-N_e occupation basis, CAR operators and the Hubbard Hamiltonian.
 *
 * Spin-orbitals are numbered 2x + s with s = 0 for spin up and s = 1 for spin
 * down. A configuration is a 64-bit word; bit 2x+s set means c†_{x,s} applied.
 * Fermionic signs follow the Jordan-Wigner convention: creating or destroying
 * orbital k picks up (-1)^(number of occupied orbitals below k). This fixes all
 * matrix signs reproducibly and is the wire-level convention of the CLI.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "hubbard_phonon/common.hpp"

namespace hubbard_phonon {

enum class Spin : int { Up = 0, Down = 1 };

inline constexpr int kMaxSites = 32;

inline constexpr int orbital_index(int site, Spin s) { return 2 * site + static_cast<int>(s); }

struct OccupationState {
  std::uint64_t bits = 0;

  bool occupied(int orbital) const { return (bits >> orbital) & 1u; }
  int count() const { return std::popcount(bits); }
  /// Electrons on site x: 0, 1 or 2.
  int site_occupation(int x) const {
    return static_cast<int>((bits >> (2 * x)) & 1u) + static_cast<int>((bits >> (2 * x + 1)) & 1u);
  }
  constexpr auto operator<=>(const OccupationState&) const = default;
};

namespace detail {

inline void check_site_spin(int x, int n_sites) {
  if (n_sites < 1 || n_sites > kMaxSites) throw ArgumentError("n_sites out of range [1, 32]");
  if (x < 0 || x >= n_sites) {
    throw ArgumentError("site index " + std::to_string(x) + " out of range for " +
                        std::to_string(n_sites) + " sites");
  }
}

inline int sign_below(std::uint64_t bits, int orbital) {
  const std::uint64_t mask = (orbital == 0) ? 0u : ((std::uint64_t{1} << orbital) - 1u);
  return (std::popcount(bits & mask) % 2 == 0) ? 1 : -1;
}

}  // namespace detail

using SignedState = std::pair<OccupationState, int>;

/// c†_{x,s}|state⟩; empty when the orbital is already occupied.
inline std::optional<SignedState> apply_c_dagger(OccupationState state, int x, Spin s,
                                                 int n_sites) {
  detail::check_site_spin(x, n_sites);
  const int k = orbital_index(x, s);
  if (state.occupied(k)) return std::nullopt;
  const int sign = detail::sign_below(state.bits, k);
  return SignedState{OccupationState{state.bits | (std::uint64_t{1} << k)}, sign};
}

/// c_{x,s}|state⟩; empty when the orbital is empty.
inline std::optional<SignedState> apply_c(OccupationState state, int x, Spin s, int n_sites) {
  detail::check_site_spin(x, n_sites);
  const int k = orbital_index(x, s);
  if (!state.occupied(k)) return std::nullopt;
  const int sign = detail::sign_below(state.bits, k);
  return SignedState{OccupationState{state.bits & ~(std::uint64_t{1} << k)}, sign};
}

// ============================================================================
// Hopping matrix
// ============================================================================

/// Real symmetric |Λ|×|Λ| hopping matrix; diagonal entries are on-site potentials.
class HoppingMatrix {
 public:
  explicit HoppingMatrix(int n_sites) {
    if (n_sites < 1 || n_sites > kMaxSites) throw ArgumentError("n_sites out of range [1, 32]");
    t_ = Eigen::MatrixXd::Zero(n_sites, n_sites);
  }

  /// Requires exact symmetry of `m`.
  static HoppingMatrix from_dense(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ArgumentError("hopping matrix must be square");
    HoppingMatrix h(static_cast<int>(m.rows()));
    for (int x = 0; x < m.rows(); ++x) {
      for (int y = 0; y < m.cols(); ++y) {
        if (m(x, y) != m(y, x)) {
          throw ArgumentError("hopping matrix is not symmetric at (" + std::to_string(x) + "," +
                              std::to_string(y) + ")");
        }
      }
    }
    h.t_ = m;
    return h;
  }

  /// Nearest-neighbour chain with amplitude t on every bond.
  static HoppingMatrix chain(int n_sites, double t, bool periodic = false) {
    HoppingMatrix h(n_sites);
    for (int x = 0; x + 1 < n_sites; ++x) h.set(x, x + 1, t);
    if (periodic && n_sites > 2) h.set(n_sites - 1, 0, t);
    return h;
  }

  void set(int x, int y, double t) {
    detail::check_site_spin(x, size());
    detail::check_site_spin(y, size());
    t_(x, y) = t;
    t_(y, x) = t;
  }

  double operator()(int x, int y) const { return t_(x, y); }
  int size() const { return static_cast<int>(t_.rows()); }
  const Eigen::MatrixXd& matrix() const { return t_; }

  /// Connectivity of the bond graph {(x,y) : x ≠ y, t_xy ≠ 0}.
  bool is_connected() const {
    const int n = size();
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
      const int x = frontier.front();
      frontier.pop();
      for (int y = 0; y < n; ++y) {
        if (y != x && !seen[y] && t_(x, y) != 0.0) {
          seen[y] = true;
          ++reached;
          frontier.push(y);
        }
      }
    }
    return reached == n;
  }

 private:
  Eigen::MatrixXd t_;
};

// ============================================================================
// Sector basis
// ============================================================================

inline std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<std::size_t>(std::llround(r));
}

/// All configurations with n_e electrons on 2·n_sites spin-orbitals, in
/// ascending order of their bit word.
class SectorBasis {
 public:
  static constexpr std::size_t kDefaultDimensionCap = 200000;

  SectorBasis(int n_sites, int n_e, std::size_t cap = kDefaultDimensionCap)
      : n_sites_(n_sites), n_e_(n_e) {
    if (n_sites < 1 || n_sites > kMaxSites) throw ArgumentError("n_sites out of range [1, 32]");
    if (n_e < 0 || n_e > 2 * n_sites) {
      throw ArgumentError("electron number must satisfy 0 <= n_e <= 2*n_sites (n_e=" +
                          std::to_string(n_e) + ", n_sites=" + std::to_string(n_sites) + ")");
    }
    const std::size_t dim = binomial(2 * n_sites, n_e);
    if (dim > cap) throw SizingError("fermion sector", dim, cap);
    states_.reserve(dim);
    const int n_orb = 2 * n_sites;
    if (n_e == 0) {
      states_.push_back(OccupationState{0});
    } else {
      // Gosper's hack: next word with the same popcount.
      std::uint64_t w = (n_e == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n_e) - 1u);
      const std::uint64_t limit = (n_orb == 64) ? 0 : (std::uint64_t{1} << n_orb);
      while (true) {
        states_.push_back(OccupationState{w});
        const std::uint64_t c = w & (~w + 1u);
        const std::uint64_t r = w + c;
        if (r == 0) break;
        w = (((r ^ w) >> 2) / c) | r;
        if (limit != 0 && w >= limit) break;
      }
    }
  }

  int n_sites() const { return n_sites_; }
  int n_e() const { return n_e_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<OccupationState>& states() const { return states_; }
  const OccupationState& operator[](std::size_t i) const { return states_[i]; }

  std::optional<std::size_t> index_of(OccupationState s) const {
    const auto it = std::lower_bound(states_.begin(), states_.end(), s);
    if (it == states_.end() || *it != s) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
  }

  /// Site occupations ν_x(c) ∈ {0,1,2} of basis state i.
  std::vector<int> site_occupations(std::size_t i) const {
    std::vector<int> nu(n_sites_);
    for (int x = 0; x < n_sites_; ++x) nu[x] = states_[i].site_occupation(x);
    return nu;
  }

 private:
  int n_sites_;
  int n_e_;
  std::vector<OccupationState> states_;
};

inline SectorBasis build_sector_basis(int n_sites, int n_e,
                                      std::size_t cap = SectorBasis::kDefaultDimensionCap) {
  return SectorBasis(n_sites, n_e, cap);
}

// ============================================================================
// Operators on a sector
// ============================================================================

using OperatorMatrix = RealSparse;

/// Σ_{x,y,s} m_{x,y} c†_{x,s} c_{y,s} restricted to the sector.
inline OperatorMatrix build_one_body(const SectorBasis& basis, const Eigen::MatrixXd& m) {
  const int n = basis.n_sites();
  if (m.rows() != n || m.cols() != n) throw ArgumentError("one-body matrix size mismatch");
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const OccupationState c = basis[j];
    for (int s = 0; s < 2; ++s) {
      const Spin spin = static_cast<Spin>(s);
      for (int y = 0; y < n; ++y) {
        const auto annihilated = apply_c(c, y, spin, n);
        if (!annihilated) continue;
        for (int x = 0; x < n; ++x) {
          if (m(x, y) == 0.0) continue;
          const auto created = apply_c_dagger(annihilated->first, x, spin, n);
          if (!created) continue;
          const auto i = basis.index_of(created->first);
          trips.emplace_back(static_cast<int>(*i), static_cast<int>(j),
                             m(x, y) * annihilated->second * created->second);
        }
      }
    }
  }
  OperatorMatrix out(static_cast<int>(basis.size()), static_cast<int>(basis.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  out.prune(0.0);
  return out;
}

/// Σ_x n_{x,+} n_{x,-} (diagonal).
inline OperatorMatrix build_double_occupancy(const SectorBasis& basis) {
  const int dim = static_cast<int>(basis.size());
  OperatorMatrix d(dim, dim);
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < dim; ++i) {
    int doubles = 0;
    for (int x = 0; x < basis.n_sites(); ++x) doubles += (basis[i].site_occupation(x) == 2);
    if (doubles) trips.emplace_back(i, i, static_cast<double>(doubles));
  }
  d.setFromTriplets(trips.begin(), trips.end());
  return d;
}

/// dΓ_e(T) + u Σ_x n_{x,+} n_{x,-}.
inline OperatorMatrix build_hubbard(const SectorBasis& basis, const HoppingMatrix& t, double u) {
  if (t.size() != basis.n_sites()) {
    throw ArgumentError("hopping matrix has " + std::to_string(t.size()) +
                        " sites but the basis has " + std::to_string(basis.n_sites()));
  }
  OperatorMatrix h = build_one_body(basis, t.matrix());
  if (u != 0.0) h += u * build_double_occupancy(basis);
  h.prune(0.0);
  return h;
}

struct NumberOperators {
  std::vector<OperatorMatrix> site;  ///< n_x for each site
  OperatorMatrix double_occupancy;   ///< Σ_x n_{x,+} n_{x,-}
};

inline NumberOperators number_operators(const SectorBasis& basis) {
  const int dim = static_cast<int>(basis.size());
  NumberOperators out;
  for (int x = 0; x < basis.n_sites(); ++x) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < dim; ++i) {
      const int nu = basis[i].site_occupation(x);
      if (nu) trips.emplace_back(i, i, static_cast<double>(nu));
    }
    OperatorMatrix n(dim, dim);
    n.setFromTriplets(trips.begin(), trips.end());
    out.site.push_back(std::move(n));
  }
  out.double_occupancy = build_double_occupancy(basis);
  return out;
}

/// Total-spin operators with the on-site definition
/// Ŝ^(i) = ½ Σ_x Σ_{s,t} c†_{x,s} σ^(i)_{s,t} c_{x,t}.
struct SpinOperators {
  OperatorMatrix s_plus;     ///< Σ_x c†_{x,↑} c_{x,↓}
  OperatorMatrix s_minus;    ///< transpose of s_plus
  OperatorMatrix s1;         ///< (S⁺ + S⁻)/2
  ComplexSparse s2;          ///< (S⁺ − S⁻)/(2i), purely imaginary
  OperatorMatrix s3;         ///< (N↑ − N↓)/2
  OperatorMatrix s_squared;  ///< S⁻S⁺ + S³(S³ + 1), assembled in ladder form
};

inline SpinOperators build_spin_operators(const SectorBasis& basis) {
  const int n = basis.n_sites();
  const int dim = static_cast<int>(basis.size());
  std::vector<Eigen::Triplet<double>> plus_trips;
  std::vector<Eigen::Triplet<double>> z_trips;
  for (int j = 0; j < dim; ++j) {
    const OccupationState c = basis[j];
    double sz = 0.0;
    for (int x = 0; x < n; ++x) {
      sz += 0.5 * (static_cast<int>(c.occupied(orbital_index(x, Spin::Up))) -
                   static_cast<int>(c.occupied(orbital_index(x, Spin::Down))));
      const auto lowered = apply_c(c, x, Spin::Down, n);
      if (!lowered) continue;
      const auto raised = apply_c_dagger(lowered->first, x, Spin::Up, n);
      if (!raised) continue;
      plus_trips.emplace_back(static_cast<int>(*basis.index_of(raised->first)), j,
                              static_cast<double>(lowered->second * raised->second));
    }
    if (sz != 0.0) z_trips.emplace_back(j, j, sz);
  }
  SpinOperators ops;
  ops.s_plus.resize(dim, dim);
  ops.s_plus.setFromTriplets(plus_trips.begin(), plus_trips.end());
  ops.s_minus = ops.s_plus.transpose();
  ops.s3.resize(dim, dim);
  ops.s3.setFromTriplets(z_trips.begin(), z_trips.end());
  ops.s1 = 0.5 * (ops.s_plus + ops.s_minus);
  const ComplexSparse diff = (ops.s_plus - ops.s_minus).cast<Complex>();
  ops.s2 = Complex(0.0, -0.5) * diff;
  ops.s_squared = OperatorMatrix(ops.s_minus * ops.s_plus) + OperatorMatrix(ops.s3 * ops.s3) + ops.s3;
  ops.s_squared.prune(0.0);
  return ops;
}

/// Maximal total spin for n_e electrons on n_sites sites.
inline SpinValue s_max(int n_e, int n_sites) {
  if (n_sites < 1) throw ArgumentError("n_sites must be positive");
  if (n_e < 0 || n_e > 2 * n_sites) {
    throw ArgumentError("electron number must satisfy 0 <= n_e <= 2*n_sites");
  }
  return SpinValue{n_e <= n_sites ? n_e : 2 * n_sites - n_e};
}

// ============================================================================
// Full Fock space (all electron numbers), for CAR checks on small lattices
// ============================================================================

/// Dense c†_{x,s} on the 4^n_sites dimensional Fock space (basis index = bit word).
inline Eigen::MatrixXd fock_creation_matrix(int n_sites, int x, Spin s) {
  if (n_sites > 5) throw SizingError("full Fock space", std::size_t{1} << (2 * n_sites), 1024);
  const int dim = 1 << (2 * n_sites);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const auto r = apply_c_dagger(OccupationState{static_cast<std::uint64_t>(j)}, x, s, n_sites);
    if (r) m(static_cast<int>(r->first.bits), j) = r->second;
  }
  return m;
}

/// Largest entry of {c_a, c_b†} − δ_ab and {c_a, c_b} over all orbital pairs.
inline double car_residual(int n_sites) {
  const int n_orb = 2 * n_sites;
  std::vector<Eigen::MatrixXd> cdag;
  for (int k = 0; k < n_orb; ++k) cdag.push_back(fock_creation_matrix(n_sites, k / 2, static_cast<Spin>(k % 2)));
  const int dim = static_cast<int>(cdag[0].rows());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
  double worst = 0.0;
  for (int a = 0; a < n_orb; ++a) {
    const Eigen::MatrixXd ca = cdag[a].transpose();
    for (int b = 0; b < n_orb; ++b) {
      const Eigen::MatrixXd mixed = ca * cdag[b] + cdag[b] * ca - (a == b ? id : Eigen::MatrixXd::Zero(dim, dim));
      const Eigen::MatrixXd same = ca * cdag[b].transpose() + cdag[b].transpose() * ca;
      worst = std::max({worst, mixed.cwiseAbs().maxCoeff(), same.cwiseAbs().maxCoeff()});
    }
  }
  return worst;
}

}  // namespace hubbard_phonon
