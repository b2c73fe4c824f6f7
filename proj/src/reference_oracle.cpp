#include "greedy_eig/reference_oracle.hpp"

#include "greedy_eig/rng.hpp"

#include <lapacke.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <string>

namespace geig {

Index oracle_limit() {
  const char* env = std::getenv("GREEDY_EIG_ORACLE_LIMIT");
  if (env == nullptr || *env == '\0') return 4096;
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(env, &end, 10);
  if (errno != 0 || *end != '\0' || v <= 0)
    throw InvalidSpec(std::string("GREEDY_EIG_ORACLE_LIMIT is not a positive integer: ") + env);
  return static_cast<Index>(v);
}

Matrix kron(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

namespace {

Matrix kron_all(const std::vector<const Matrix*>& factors) {
  Matrix out = Matrix::Ones(1, 1);
  for (const Matrix* f : factors) out = kron(out, *f);
  return out;
}

bool is_identity(const Matrix& x) { return x.isIdentity(0.0); }

}  // namespace

DenseOperator dense_assemble(const KroneckerSumOperator& op, const MetricSet& m) {
  check_conformant(op, m);
  Index total = 1;
  const Index limit = oracle_limit();
  for (Index n : op.sizes()) {
    total *= n;
    if (total > limit)
      throw TooLargeForOracle("dense size exceeds the oracle limit of " + std::to_string(limit));
  }
  DenseOperator out;
  out.a = Matrix::Zero(total, total);
  for (Index k = 0; k < op.num_terms(); ++k) {
    std::vector<const Matrix*> f;
    for (Index j = 0; j < op.dims(); ++j) f.push_back(&op.factor(k, j));
    out.a += kron_all(f);
  }
  out.a = 0.5 * (out.a + out.a.transpose());
  std::vector<const Matrix*> masses;
  out.identity_mass = true;
  for (Index j = 0; j < m.dims(); ++j) {
    masses.push_back(&m.mass(j));
    out.identity_mass = out.identity_mass && is_identity(m.mass(j));
  }
  out.m = out.identity_mass ? Matrix(Matrix::Identity(total, total)) : kron_all(masses);
  return out;
}

GeneralizedEigensystem dense_eigensystem(const DenseOperator& dense) {
  const Index n = dense.a.rows();
  GeneralizedEigensystem out;
  out.vectors = dense.a;
  out.values.resize(n);
  const auto ln = static_cast<lapack_int>(n);
  lapack_int info = 0;
  if (dense.identity_mass) {
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', ln, out.vectors.data(), ln, out.values.data());
  } else {
    Matrix b = dense.m;
    info = LAPACKE_dsygvd(LAPACK_COL_MAJOR, 1, 'V', 'L', ln, out.vectors.data(), ln, b.data(), ln,
                          out.values.data());
  }
  if (info != 0) throw KernelFailure("dense eigensolver failed, info = " + std::to_string(info));
  return out;
}

DenseReference dense_reference(const KroneckerSumOperator& op, const MetricSet& m,
                               double degeneracy_tol) {
  auto dense = std::make_shared<DenseOperator>(dense_assemble(op, m));
  const auto sys = dense_eigensystem(*dense);
  DenseReference ref;
  ref.full_spectrum = sys.values;
  ref.mu1 = sys.values[0];
  const double window = degeneracy_tol * (1.0 + std::abs(ref.mu1));
  Index mult = 1;
  while (mult < sys.values.size() && sys.values[mult] - ref.mu1 <= window) ++mult;
  ref.eigenspace = sys.vectors.leftCols(mult);
  ref.gap = mult < sys.values.size() ? sys.values[mult] - ref.mu1 : kInfinity;
  ref.dense = std::move(dense);
  ref.nu = m.nu();
  return ref;
}

ErrorMetrics error_metrics(const Vector& u_dense, double lambda, const DenseReference& ref) {
  const auto& d = *ref.dense;
  if (u_dense.size() != d.a.rows()) throw StructuralError("vector does not match the oracle size");
  const Vector mu = d.m * u_dense;
  const double nrm = std::sqrt(u_dense.dot(mu));
  if (!(nrm > 0.0)) throw DegenerateIterate("error metrics of the zero vector");
  const Vector u = u_dense / nrm;

  ErrorMetrics e;
  e.err_lambda = std::abs(lambda - ref.mu1);
  // Components on the H-orthonormal eigenspace basis, then the H-orthogonal remainder.
  const Vector coeff = ref.eigenspace.transpose() * (mu / nrm);
  const Vector pu = ref.eigenspace * coeff;
  // Evaluated directly rather than as sqrt(1 - |coeff|^2), which cancels.
  const Vector rem = u - pu;
  e.err_vec_h = std::sqrt(std::max(0.0, rem.dot(d.m * rem)));
  // w = P u / |P u|; when u is orthogonal to the eigenspace every unit w is
  // equally close, so the first basis vector stands in.
  const double pn = coeff.norm();
  const Vector w = pn > 0.0 ? Vector(pu / pn) : Vector(ref.eigenspace.col(0));
  const Vector diff = w - u;
  const double an = diff.dot(d.a * diff) + ref.nu * diff.dot(d.m * diff);
  e.d_a_to_F = std::sqrt(std::max(0.0, an));
  e.err_vec_a = e.d_a_to_F;
  return e;
}

ErrorMetrics error_metrics(const TensorSum& u, double lambda, const DenseReference& ref,
                           const Sizes& sizes) {
  return error_metrics(u.to_dense(sizes), lambda, ref);
}

double grad_check_rayleigh(const KroneckerSumOperator& op, const MetricSet& m, const TensorSum& v,
                           double h_step, std::uint64_t seed) {
  check_shape(v, op.sizes());
  const double vv = h_inner(v, v, m);
  const double jv = rayleigh(op, m, v);
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> f;
    for (Index j = 0; j < op.dims(); ++j) f.push_back(rng.normal_vector(op.size(j)));
    const TensorSum w(RankOne(std::move(f)));
    const double ww = h_inner(w, w, m);
    const double analytic = 2.0 * (a_inner(op, v, w) - jv * h_inner(v, w, m)) / vv;
    const double jp = rayleigh(op, m, v.plus(w.scaled(h_step)));
    const double jm = rayleigh(op, m, v.plus(w.scaled(-h_step)));
    const double fd = (jp - jm) / (2.0 * h_step);
    const double scale =
        std::max(std::abs(analytic), 1e-6 * std::abs(jv) * std::sqrt(ww / vv));
    worst = std::max(worst, std::abs(fd - analytic) / scale);
  }
  return worst;
}

}  // namespace geig
