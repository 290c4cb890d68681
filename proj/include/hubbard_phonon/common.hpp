// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hubbard_phonon {

using Complex = std::complex<double>;

using RealSparse = Eigen::SparseMatrix<double>;
using ComplexSparse = Eigen::SparseMatrix<Complex>;

// ============================================================================
// Errors
// ============================================================================

/// Root of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad index, mismatched sizes, or a violated precondition on an argument.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A Hilbert-space dimension exceeds the configured cap.
class SizingError : public Error {
 public:
  SizingError(const std::string& what, std::size_t dimension, std::size_t cap)
      : Error(what + ": dimension " + std::to_string(dimension) + " exceeds cap " +
              std::to_string(cap)),
        dimension_(dimension),
        cap_(cap) {}
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t dimension_;
  std::size_t cap_;
};

/// Input fails a structural check (e.g. a matrix that should be Hermitian).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// An eigenvalue sits too close to the degeneracy threshold to classify.
class AmbiguousDegeneracyError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a physical state is violated (e.g. not occupation-definite).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

enum class DivergenceClass { Regular, LogSingular, PowerSingular };

inline const char* to_string(DivergenceClass c) {
  switch (c) {
    case DivergenceClass::Regular:
      return "Regular";
    case DivergenceClass::LogSingular:
      return "LogSingular";
    case DivergenceClass::PowerSingular:
      return "PowerSingular";
  }
  return "?";
}

/// Requested integral diverges at the infrared end.
class InfraredDivergenceError : public Error {
 public:
  InfraredDivergenceError(const std::string& what, DivergenceClass cls)
      : Error(what + " [" + to_string(cls) + "]"), cls_(cls) {}
  DivergenceClass divergence_class() const noexcept { return cls_; }

 private:
  DivergenceClass cls_;
};

/// Quadrature rule could not be built or failed to converge.
class DiscretizationError : public Error {
 public:
  using Error::Error;
};

// ============================================================================
// Half-integer spin values
// ============================================================================

/// Non-negative half-integer stored as twice its value.
struct SpinValue {
  int twice = 0;

  constexpr double value() const { return 0.5 * twice; }
  constexpr double casimir() const { return value() * (value() + 1.0); }
  constexpr auto operator<=>(const SpinValue&) const = default;

  std::string str() const {
    return (twice % 2 == 0) ? std::to_string(twice / 2) : std::to_string(twice) + "/2";
  }

  /// Inverts S(S+1) = casimir when casimir lies within `tol` of such a value.
  static std::optional<SpinValue> from_casimir(double casimir, double tol = 1e-6) {
    if (casimir < -tol) return std::nullopt;
    const double s = 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * std::max(casimir, 0.0)));
    const int twice = static_cast<int>(std::lround(2.0 * s));
    const SpinValue candidate{twice};
    if (std::abs(candidate.casimir() - casimir) <= tol) return candidate;
    return std::nullopt;
  }
};

}  // namespace hubbard_phonon
