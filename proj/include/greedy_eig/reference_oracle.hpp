#pragma once

// Dense ground truth for small instances: exact Kronecker expansion, full
// generalized eigendecomposition, and the error metrics reported in traces.

#include "greedy_eig/tensor_core.hpp"

#include <cstdint>
#include <memory>

namespace geig {

/// Largest product of sizes the oracle accepts: 4096, or the value of
/// GREEDY_EIG_ORACLE_LIMIT when set (unsafe: memory and time grow as N^2 / N^3).
Index oracle_limit();

struct DenseOperator {
  Matrix a;  // sum_k D^{k,1} (x) ... (x) D^{k,d}, first dimension slowest
  Matrix m;  // M_1 (x) ... (x) M_d
  bool identity_mass = false;
};

/// Throws TooLargeForOracle beyond oracle_limit().
DenseOperator dense_assemble(const KroneckerSumOperator& op, const MetricSet& m);

/// kron(x, y) with x's index slowest.
Matrix kron(const Matrix& x, const Matrix& y);

struct GeneralizedEigensystem {
  Vector values;   // ascending
  Matrix vectors;  // M-orthonormal columns
};

/// Full solution of A v = mu M v (LAPACK divide and conquer on the Cholesky-reduced matrix).
GeneralizedEigensystem dense_eigensystem(const DenseOperator& dense);

struct DenseReference {
  double mu1 = 0.0;
  /// H-orthonormal basis of the eigenspace of mu1.
  Matrix eigenspace;
  Vector full_spectrum;
  /// mu_2* - mu_1, with mu_2* the smallest eigenvalue outside the eigenspace
  /// (+infinity when there is none).
  double gap = 0.0;
  std::shared_ptr<const DenseOperator> dense;
  double nu = 0.0;
};

inline constexpr double kDefaultDegeneracyTol = 1e-8;

/// Eigenspace collects every eigenvalue within degeneracy_tol * (1 + |mu1|) of mu1.
DenseReference dense_reference(const KroneckerSumOperator& op, const MetricSet& m,
                               double degeneracy_tol = kDefaultDegeneracyTol);

struct ErrorMetrics {
  double err_lambda = 0.0;
  /// |(I - P) u|_H for H-normalized u.
  double err_vec_h = 0.0;
  /// Equals d_a_to_F.
  double err_vec_a = 0.0;
  /// |w - u|_a for w = P u / |P u|_H, with |x|_a^2 = a(x,x) + nu <x,x>.
  double d_a_to_F = 0.0;
};

/// u is normalized in H before measuring.
ErrorMetrics error_metrics(const Vector& u_dense, double lambda, const DenseReference& ref);
ErrorMetrics error_metrics(const TensorSum& u, double lambda, const DenseReference& ref,
                           const Sizes& sizes);

/// Max relative error between central differences of J along 20 seeded
/// rank-one directions and the exact derivative
///   J'(v) w = 2 (a(v,w) - J(v) <v,w>) / <v,v>.
/// Errors are relative to max(|J'(v) w|, 1e-6 |J(v)| |w| / |v|), so exact
/// critical points compare on an absolute scale.
double grad_check_rayleigh(const KroneckerSumOperator& op, const MetricSet& m, const TensorSum& v,
                           double h_step = 1e-5, std::uint64_t seed = 0);

}  // namespace geig
