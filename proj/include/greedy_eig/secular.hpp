#pragma once

// Reduction of the per-direction quotient
//
//   (S^T A S + 2 a^T S + alpha) / (S^T B S + 2 b^T S + 1)
//
// to L(T) = (T^T C T + 2 c^T T + gamma) / (T^T T + delta), and the solution of
// min L through the secular equation rho * delta = f(rho),
// f(rho) = sum_i c_i^2 / (rho - kappa_i) + gamma.

#include "greedy_eig/errors.hpp"
#include "greedy_eig/types.hpp"

namespace geig {

struct SecularProblem {
  Vector kappa;  // ascending eigenvalues of C
  Vector c;      // coordinates of the linear term in the eigenbasis of C
  double gamma = 0.0;
  double delta = 1.0;

  /// Indices i with |c_i| > 1e-14 * ||c||.
  std::vector<Index> active_poles() const;
  /// f(rho) = sum_i c_i^2 / (rho - kappa_i) + gamma.
  double f(double rho) const;
  /// M(rho) = L(T(rho)) with t_i(rho) = c_i / (rho - kappa_i).
  double m_of_rho(double rho) const;
  /// L(T) with T given in eigen-coordinates t.
  double quotient(const Vector& t) const;
};

struct SecularReduction {
  SecularProblem problem;
  Matrix chol_l;   // B = L L^T
  Vector shift;    // w = B^{-1} b, so S = L^{-T} T - w
  Matrix basis;    // orthonormal eigenvectors of C (columns)

  /// S for eigen-coordinates t.
  Vector to_original(const Vector& t) const;
  /// Eigen-coordinates t for S.
  Vector to_reduced(const Vector& s) const;
};

SecularReduction reduce(const Matrix& a_eff, const Matrix& b_eff, const Vector& a_lin,
                        const Vector& b_lin, double alpha);

inline constexpr double kSecularTolerance = 1e-12;

/// Smallest root of rho * delta = f(rho), bracketed below the smallest active
/// pole. Safeguarded Newton; falls back to bisection when a step leaves the
/// bracket or stalls.
double solve_secular(const SecularProblem& p, double tol = kSecularTolerance);

/// t_i = c_i / (rho - kappa_i) (0 for inactive coordinates), mapped back to S.
Vector recover_minimizer(const SecularReduction& r, double rho_m);

/// Eigen-coordinates of the minimizer.
Vector minimizer_coordinates(const SecularProblem& p, double rho_m);

}  // namespace geig
