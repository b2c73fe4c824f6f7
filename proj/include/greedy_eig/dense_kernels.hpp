#pragma once

// Small dense symmetric kernels: full eigendecomposition, smallest generalized
// eigenpair, SPD and symmetric-indefinite solves. Matrices here are at most
// max_j N_j or (n+1) in size.

#include "greedy_eig/errors.hpp"
#include "greedy_eig/types.hpp"

namespace geig {

/// Relative pivot / definiteness tolerance, measured against the largest
/// diagonal magnitude.
inline constexpr double kPivotTolerance = 1e-12;

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

EigenDecomposition sym_eig_full(const Matrix& s);

struct SmallestEigenpair {
  double tau = 0.0;
  Vector c;  // c^T B c = 1
};

/// Smallest eigenpair of A c = tau B c via Cholesky congruence L^{-1} A L^{-T}.
/// Throws IllConditionedGram when B is not numerically SPD.
SmallestEigenpair gen_sym_eig_smallest(const Matrix& a, const Matrix& b);

/// Cholesky factorization with the relative pivot guard.
/// Throws IllConditionedGram on failure.
Eigen::LLT<Matrix> spd_factor(const Matrix& s);

Vector spd_solve(const Matrix& s, const Vector& rhs);

/// Solve for symmetric, possibly indefinite S. Throws SingularSystem when an
/// eigenvalue of S is below 1e-12 * max|eigenvalue|.
Vector sym_indefinite_solve(const Matrix& s, const Vector& rhs);

}  // namespace geig
