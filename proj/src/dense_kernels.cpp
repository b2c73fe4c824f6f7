#include "greedy_eig/dense_kernels.hpp"

#include <cmath>

namespace geig {

namespace {

void require_square(const Matrix& s, const char* what) {
  if (s.rows() != s.cols()) throw StructuralError(std::string(what) + " must be square");
}

}  // namespace

EigenDecomposition sym_eig_full(const Matrix& s) {
  require_square(s, "matrix");
  if (!s.allFinite()) throw KernelFailure("matrix has non-finite entries");
  if (s.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw KernelFailure("symmetric eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

Eigen::LLT<Matrix> spd_factor(const Matrix& s) {
  require_square(s, "matrix");
  if (s.rows() == 0) throw IllConditionedGram("empty matrix");
  const double scale = s.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !s.allFinite()) throw IllConditionedGram("matrix is zero or non-finite");
  Eigen::LLT<Matrix> llt(0.5 * (s + s.transpose()));
  if (llt.info() != Eigen::Success) throw IllConditionedGram("Cholesky factorization failed");
  const Vector diag = llt.matrixLLT().diagonal();
  const double min_pivot = diag.cwiseAbs2().minCoeff();
  if (min_pivot <= kPivotTolerance * scale)
    throw IllConditionedGram("Cholesky pivot " + std::to_string(min_pivot) +
                             " below tolerance relative to " + std::to_string(scale));
  return llt;
}

SmallestEigenpair gen_sym_eig_smallest(const Matrix& a, const Matrix& b) {
  require_square(a, "A");
  require_square(b, "B");
  if (a.rows() != b.rows()) throw StructuralError("A and B sizes differ");
  const auto llt = spd_factor(b);
  const auto l = llt.matrixL();
  // C = L^{-1} A L^{-T}
  Matrix c = l.solve(0.5 * (a + a.transpose()));
  c = l.solve(c.transpose()).transpose();
  const auto eig = sym_eig_full(c);
  SmallestEigenpair out;
  out.tau = eig.values[0];
  out.c = llt.matrixU().solve(Vector(eig.vectors.col(0)));
  return out;
}

Vector spd_solve(const Matrix& s, const Vector& rhs) {
  if (rhs.size() != s.rows()) throw StructuralError("right-hand side size differs");
  return spd_factor(s).solve(rhs);
}

Vector sym_indefinite_solve(const Matrix& s, const Vector& rhs) {
  require_square(s, "matrix");
  if (rhs.size() != s.rows()) throw StructuralError("right-hand side size differs");
  const auto eig = sym_eig_full(s);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw SingularSystem("matrix is zero");
  const double min_abs = eig.values.cwiseAbs().minCoeff();
  if (min_abs <= kPivotTolerance * scale)
    throw SingularSystem("eigenvalue " + std::to_string(min_abs) +
                         " below tolerance relative to " + std::to_string(scale));
  const Vector coords = eig.vectors.transpose() * rhs;
  return eig.vectors * coords.cwiseQuotient(eig.values);
}

}  // namespace geig
