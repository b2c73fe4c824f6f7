#include "greedy_eig/tensor_core.hpp"

#include <cmath>
#include <string>

namespace geig {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Structural: return "StructuralError";
    case ErrorCode::DegenerateIterate: return "DegenerateIterate";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::KernelFailure: return "KernelFailure";
    case ErrorCode::IllConditionedGram: return "IllConditionedGram";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::PoleCollision: return "PoleCollision";
    case ErrorCode::AdmFailure: return "AdmFailure";
    case ErrorCode::NuTooSmall: return "NuTooSmall";
    case ErrorCode::ExplicitStepFailure: return "ExplicitStepFailure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Version: return "VersionError";
    case ErrorCode::TooLargeForOracle: return "TooLargeForOracle";
  }
  return "Error";
}

// -- FactorMatrix / operator / metric -----------------------------------------

FactorMatrix::FactorMatrix(Matrix entries, FactorSymmetry symmetry) : symmetry_(symmetry) {
  if (entries.rows() != entries.cols() || entries.rows() == 0)
    throw StructuralError("factor matrix must be square and non-empty");
  if (!entries.allFinite()) throw StructuralError("factor matrix has non-finite entries");
  if (symmetry == FactorSymmetry::Symmetric)
    entries_ = 0.5 * (entries + entries.transpose());
  else
    entries_ = 0.5 * (entries - entries.transpose());
}

FactorMatrix FactorMatrix::identity(Index n) { return FactorMatrix(Matrix::Identity(n, n)); }

KroneckerSumOperator::KroneckerSumOperator(Sizes sizes, std::vector<Term> terms)
    : sizes_(std::move(sizes)), terms_(std::move(terms)) {
  if (sizes_.size() < 1) throw StructuralError("operator needs at least one dimension");
  for (Index n : sizes_)
    if (n < 1) throw StructuralError("dimension sizes must be positive");
  if (terms_.empty()) throw StructuralError("operator needs at least one Kronecker term");
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& t = terms_[k];
    if (t.size() != sizes_.size())
      throw StructuralError("term " + std::to_string(k) + " has " + std::to_string(t.size()) +
                            " factors, expected " + std::to_string(sizes_.size()));
    int skew = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (t[j].size() != sizes_[j])
        throw StructuralError("term " + std::to_string(k) + " factor " + std::to_string(j) +
                              " does not conform to size " + std::to_string(sizes_[j]));
      skew += t[j].is_skew() ? 1 : 0;
    }
    if (skew % 2 != 0)
      throw StructuralError("term " + std::to_string(k) +
                            " has an odd number of skew factors (operator not symmetric)");
  }
}

MetricSet::MetricSet(std::vector<FactorMatrix> masses, double nu)
    : masses_(std::move(masses)), nu_(nu) {
  if (!std::isfinite(nu)) throw StructuralError("metric shift nu must be finite");
  chol_.reserve(masses_.size());
  for (std::size_t j = 0; j < masses_.size(); ++j) {
    if (masses_[j].is_skew()) throw StructuralError("mass factors must be symmetric");
    auto llt = std::make_shared<Eigen::LLT<Matrix>>(masses_[j].matrix());
    if (llt->info() != Eigen::Success)
      throw StructuralError("mass factor " + std::to_string(j) + " is not positive definite");
    chol_.push_back(std::move(llt));
  }
}

MetricSet MetricSet::identity(const Sizes& sizes, double nu) {
  std::vector<FactorMatrix> masses;
  masses.reserve(sizes.size());
  for (Index n : sizes) masses.push_back(FactorMatrix::identity(n));
  return MetricSet(std::move(masses), nu);
}

MetricSet MetricSet::with_nu(double nu) const {
  MetricSet out = *this;
  if (!std::isfinite(nu)) throw StructuralError("metric shift nu must be finite");
  out.nu_ = nu;
  return out;
}

Vector MetricSet::solve_mass(Index j, const Vector& b) const {
  return chol_[static_cast<std::size_t>(j)]->solve(b);
}

void check_conformant(const KroneckerSumOperator& op, const MetricSet& m) {
  if (m.dims() != op.dims()) throw StructuralError("metric and operator dimension counts differ");
  for (Index j = 0; j < op.dims(); ++j)
    if (m.mass(j).rows() != op.size(j))
      throw StructuralError("mass factor " + std::to_string(j) + " does not conform");
}

// -- RankOne / TensorSum -----------------------------------------------------

bool RankOne::is_zero() const {
  for (const auto& f : factors)
    if (f.squaredNorm() == 0.0) return true;
  return factors.empty();
}

Sizes RankOne::shape() const {
  Sizes s;
  for (const auto& f : factors) s.push_back(f.size());
  return s;
}

Vector RankOne::to_dense() const {
  Vector out = Vector::Ones(1);
  for (const auto& f : factors) {
    Vector next(out.size() * f.size());
    for (Index i = 0; i < out.size(); ++i) next.segment(i * f.size(), f.size()) = out[i] * f;
    out = std::move(next);
  }
  return out;
}

TensorSum TensorSum::scaled(double t) const {
  TensorSum out = *this;
  for (auto& term : out.terms) term.coef *= t;
  return out;
}

TensorSum TensorSum::plus(const TensorSum& other) const {
  TensorSum out = *this;
  out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
  return out;
}

Vector TensorSum::to_dense(const Sizes& sizes) const {
  Index total = 1;
  for (Index n : sizes) total *= n;
  Vector out = Vector::Zero(total);
  for (const auto& t : terms) out += t.coef * t.z.to_dense();
  return out;
}

void check_shape(const RankOne& z, const Sizes& sizes) {
  if (z.factors.size() != sizes.size())
    throw StructuralError("rank-one element has " + std::to_string(z.factors.size()) +
                          " factors, expected " + std::to_string(sizes.size()));
  for (std::size_t j = 0; j < sizes.size(); ++j)
    if (z.factors[j].size() != sizes[j])
      throw StructuralError("factor " + std::to_string(j) + " has length " +
                            std::to_string(z.factors[j].size()) + ", expected " +
                            std::to_string(sizes[j]));
}

void check_shape(const TensorSum& u, const Sizes& sizes) {
  for (const auto& t : u.terms) check_shape(t.z, sizes);
}

namespace {

void check_pair(const RankOne& x, const RankOne& y) {
  if (x.factors.size() != y.factors.size()) throw StructuralError("tensor orders differ");
  for (std::size_t j = 0; j < x.factors.size(); ++j)
    if (x.factors[j].size() != y.factors[j].size())
      throw StructuralError("factor " + std::to_string(j) + " lengths differ");
}

}  // namespace

double h_inner(const RankOne& x, const RankOne& y, const MetricSet& m) {
  check_pair(x, y);
  if (m.dims() != x.dims()) throw StructuralError("metric order differs from tensor order");
  double p = 1.0;
  for (Index j = 0; j < x.dims(); ++j) {
    if (m.mass(j).rows() != x[j].size()) throw StructuralError("metric factor does not conform");
    p *= x[j].dot(m.mass(j) * y[j]);
  }
  return p;
}

double a_inner(const KroneckerSumOperator& op, const RankOne& x, const RankOne& y) {
  check_pair(x, y);
  check_shape(x, op.sizes());
  double s = 0.0;
  for (Index k = 0; k < op.num_terms(); ++k) {
    double p = 1.0;
    for (Index j = 0; j < op.dims() && p != 0.0; ++j) p *= x[j].dot(op.factor(k, j) * y[j]);
    s += p;
  }
  return s;
}

double h_inner(const TensorSum& u, const TensorSum& v, const MetricSet& m) {
  double s = 0.0;
  for (const auto& tu : u.terms)
    for (const auto& tv : v.terms) s += tu.coef * tv.coef * h_inner(tu.z, tv.z, m);
  return s;
}

double a_inner(const KroneckerSumOperator& op, const TensorSum& u, const TensorSum& v) {
  double s = 0.0;
  for (const auto& tu : u.terms)
    for (const auto& tv : v.terms) s += tu.coef * tv.coef * a_inner(op, tu.z, tv.z);
  return s;
}

double rayleigh(const KroneckerSumOperator& op, const MetricSet& m, const TensorSum& u) {
  const double h = h_inner(u, u, m);
  if (u.empty() || h <= 0.0) return kInfinity;
  return a_inner(op, u, u) / h;
}

TensorSum normalize(const TensorSum& u, const MetricSet& m) {
  const double h = h_inner(u, u, m);
  if (!(h >= 1e-28)) throw DegenerateIterate("cannot normalize a (numerically) zero tensor");
  return u.scaled(1.0 / std::sqrt(h));
}

// -- images ----------------------------------------------------------------------

std::shared_ptr<const ImagedRankOne> image(const KroneckerSumOperator& op, const MetricSet& m,
                                           RankOne z) {
  check_shape(z, op.sizes());
  auto out = std::make_shared<ImagedRankOne>();
  const auto d = static_cast<std::size_t>(op.dims());
  const auto K = static_cast<std::size_t>(op.num_terms());
  out->op.assign(K, std::vector<Vector>(d));
  out->dual_op.assign(K, std::vector<Vector>(d));
  out->mass.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto jj = static_cast<Index>(j);
    out->mass[j] = m.mass(jj) * z[jj];
    for (std::size_t k = 0; k < K; ++k) {
      out->op[k][j] = op.factor(static_cast<Index>(k), jj) * z[jj];
      out->dual_op[k][j] = m.solve_mass(jj, out->op[k][j]);
    }
  }
  out->z = std::move(z);
  return out;
}

double a_inner(const ImagedRankOne& x, const ImagedRankOne& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < y.op.size(); ++k) {
    double p = 1.0;
    for (std::size_t j = 0; j < y.op[k].size(); ++j) p *= x.z.factors[j].dot(y.op[k][j]);
    s += p;
  }
  return s;
}

double h_inner(const ImagedRankOne& x, const ImagedRankOne& y) {
  double p = 1.0;
  for (std::size_t j = 0; j < y.mass.size(); ++j) p *= x.z.factors[j].dot(y.mass[j]);
  return p;
}

double aa_inner(const ImagedRankOne& x, const ImagedRankOne& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.op.size(); ++k)
    for (std::size_t l = 0; l < y.dual_op.size(); ++l) {
      double p = 1.0;
      for (std::size_t j = 0; j < x.op[k].size(); ++j) p *= x.op[k][j].dot(y.dual_op[l][j]);
      s += p;
    }
  return s;
}

// -- context projection ------------------------------------------------------------

ContextProjection::ContextProjection(const KroneckerSumOperator& op, const MetricSet& m,
                                     const TensorSum& u) {
  check_conformant(op, m);
  for (const auto& t : u.terms) {
    coefs_.push_back(t.coef);
    elements_.push_back(image(op, m, t.z));
  }
  for (std::size_t l = 0; l < elements_.size(); ++l)
    for (std::size_t p = 0; p < elements_.size(); ++p) {
      alpha_ += coefs_[l] * coefs_[p] * a_inner(*elements_[l], *elements_[p]);
      beta_ += coefs_[l] * coefs_[p] * h_inner(*elements_[l], *elements_[p]);
    }
}

ContextProjection::ContextProjection(std::vector<double> coefs,
                                     std::vector<std::shared_ptr<const ImagedRankOne>> elements,
                                     double alpha, double beta)
    : coefs_(std::move(coefs)), elements_(std::move(elements)), alpha_(alpha), beta_(beta) {
  if (coefs_.size() != elements_.size())
    throw StructuralError("context coefficient count differs from element count");
}

double ContextProjection::a_with(const KroneckerSumOperator& op, const RankOne& x) const {
  double s = 0.0;
  for (std::size_t l = 0; l < elements_.size(); ++l) {
    const auto& e = *elements_[l];
    for (Index k = 0; k < op.num_terms(); ++k) {
      double p = coefs_[l];
      for (Index j = 0; j < op.dims(); ++j)
        p *= x[j].dot(e.op[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
      s += p;
    }
  }
  return s;
}

double ContextProjection::h_with(const MetricSet& m, const RankOne& x) const {
  double s = 0.0;
  for (std::size_t l = 0; l < elements_.size(); ++l) {
    const auto& e = *elements_[l];
    double p = coefs_[l];
    for (Index j = 0; j < m.dims(); ++j) p *= x[j].dot(e.mass[static_cast<std::size_t>(j)]);
    s += p;
  }
  return s;
}

// -- direction reduction -----------------------------------------------------------

DirectionData reduce_direction(const KroneckerSumOperator& op, const MetricSet& m,
                               const RankOne& frozen, Index j, const ContextProjection& context) {
  check_conformant(op, m);
  check_shape(frozen, op.sizes());
  const Index d = op.dims();
  if (j < 0 || j >= d) throw StructuralError("direction index out of range");
  for (Index i = 0; i < d; ++i)
    if (i != j && frozen[i].squaredNorm() == 0.0)
      throw DegenerateDirection("frozen factor " + std::to_string(i) + " is zero");

  const Index n = op.size(j);
  DirectionData out;
  out.a_mat = Matrix::Zero(n, n);
  out.m_mat = m.mass(j);
  out.b = Vector::Zero(n);
  out.mvec = Vector::Zero(n);
  out.alpha = context.alpha();
  out.beta = context.beta();

  for (Index i = 0; i < d; ++i)
    if (i != j) out.m_mat *= frozen[i].dot(m.mass(i) * frozen[i]);

  for (Index k = 0; k < op.num_terms(); ++k) {
    double w = 1.0;
    for (Index i = 0; i < d && w != 0.0; ++i)
      if (i != j) w *= frozen[i].dot(op.factor(k, i) * frozen[i]);
    if (w != 0.0) out.a_mat += w * op.factor(k, j);
  }
  out.a_mat = 0.5 * (out.a_mat + out.a_mat.transpose());

  for (std::size_t l = 0; l < context.size(); ++l) {
    const auto& e = context.element(l);
    const double c = context.coef(l);
    for (Index k = 0; k < op.num_terms(); ++k) {
      const auto& img = e.op[static_cast<std::size_t>(k)];
      double w = c;
      for (Index i = 0; i < d && w != 0.0; ++i)
        if (i != j) w *= frozen[i].dot(img[static_cast<std::size_t>(i)]);
      if (w != 0.0) out.b += w * img[static_cast<std::size_t>(j)];
    }
    double w = c;
    for (Index i = 0; i < d && w != 0.0; ++i)
      if (i != j) w *= frozen[i].dot(e.mass[static_cast<std::size_t>(i)]);
    if (w != 0.0) out.mvec += w * e.mass[static_cast<std::size_t>(j)];
  }
  return out;
}

DirectionData reduce_direction(const KroneckerSumOperator& op, const MetricSet& m,
                               const RankOne& frozen, Index j, const TensorSum& context) {
  return reduce_direction(op, m, frozen, j, ContextProjection(op, m, context));
}

}  // namespace geig
