#pragma once

// Kronecker-structured operators and factored rank-one / low-rank tensors.
//
// A tensor of order d lives in R^{N_1} (x) ... (x) R^{N_d}; it is never stored
// densely here. Every inner product is evaluated factor by factor:
//   a(x, y)   = sum_k prod_j x_j^T D^{k,j} y_j
//   <x, y>    = prod_j x_j^T M_j y_j
// for rank-one x = x_1 (x) ... (x) x_d, and extended bilinearly to sums.

#include "greedy_eig/errors.hpp"
#include "greedy_eig/types.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace geig {

enum class FactorSymmetry { Symmetric, Skew };

/// Square factor of a Kronecker term. Projected on construction onto its
/// symmetric part (default) or its skew part.
class FactorMatrix {
 public:
  explicit FactorMatrix(Matrix entries, FactorSymmetry symmetry = FactorSymmetry::Symmetric);

  static FactorMatrix identity(Index n);

  const Matrix& matrix() const { return entries_; }
  Index size() const { return entries_.rows(); }
  FactorSymmetry symmetry() const { return symmetry_; }
  bool is_skew() const { return symmetry_ == FactorSymmetry::Skew; }

 private:
  Matrix entries_;
  FactorSymmetry symmetry_;
};

/// A = sum_{k=1}^K D^{k,1} (x) ... (x) D^{k,d}.
///
/// Each term holds an even number of skew factors, so A is symmetric.
class KroneckerSumOperator {
 public:
  using Term = std::vector<FactorMatrix>;

  KroneckerSumOperator(Sizes sizes, std::vector<Term> terms);

  Index dims() const { return static_cast<Index>(sizes_.size()); }
  const Sizes& sizes() const { return sizes_; }
  Index size(Index j) const { return sizes_[static_cast<std::size_t>(j)]; }
  Index num_terms() const { return static_cast<Index>(terms_.size()); }
  const Term& term(Index k) const { return terms_[static_cast<std::size_t>(k)]; }
  const std::vector<Term>& terms() const { return terms_; }
  const Matrix& factor(Index k, Index j) const {
    return terms_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)].matrix();
  }

 private:
  Sizes sizes_;
  std::vector<Term> terms_;
};

/// Mass matrices M_1..M_d (SPD) defining <u,v> = u^T (M_1 (x) ... (x) M_d) v,
/// and the shift nu defining <u,v>_a = a(u,v) + nu <u,v>.
class MetricSet {
 public:
  MetricSet(std::vector<FactorMatrix> masses, double nu = 0.0);

  static MetricSet identity(const Sizes& sizes, double nu = 0.0);

  Index dims() const { return static_cast<Index>(masses_.size()); }
  const Matrix& mass(Index j) const { return masses_[static_cast<std::size_t>(j)].matrix(); }
  const std::vector<FactorMatrix>& masses() const { return masses_; }
  double nu() const { return nu_; }
  MetricSet with_nu(double nu) const;

  /// x = M_j^{-1} b through the cached Cholesky factor.
  Vector solve_mass(Index j, const Vector& b) const;

 private:
  std::vector<FactorMatrix> masses_;
  std::vector<std::shared_ptr<const Eigen::LLT<Matrix>>> chol_;
  double nu_;
};

/// z = r^(1) (x) ... (x) r^(d). Any zero factor gives the zero tensor.
struct RankOne {
  std::vector<Vector> factors;

  RankOne() = default;
  explicit RankOne(std::vector<Vector> f) : factors(std::move(f)) {}

  Index dims() const { return static_cast<Index>(factors.size()); }
  Vector& operator[](Index j) { return factors[static_cast<std::size_t>(j)]; }
  const Vector& operator[](Index j) const { return factors[static_cast<std::size_t>(j)]; }
  bool is_zero() const;
  /// Dense vector, first dimension slowest (the kron(r1, r2, ...) ordering).
  Vector to_dense() const;
  Sizes shape() const;
};

/// u = sum_k c_k z_k. The empty sum is the zero tensor.
struct TensorSum {
  struct Term {
    double coef = 0.0;
    RankOne z;
  };
  std::vector<Term> terms;

  TensorSum() = default;
  explicit TensorSum(RankOne z, double coef = 1.0) { terms.push_back({coef, std::move(z)}); }

  bool empty() const { return terms.empty(); }
  std::size_t rank() const { return terms.size(); }
  TensorSum& add(double coef, RankOne z) {
    terms.push_back({coef, std::move(z)});
    return *this;
  }
  TensorSum scaled(double t) const;
  /// Concatenation: the tensor this + other.
  TensorSum plus(const TensorSum& other) const;
  Vector to_dense(const Sizes& sizes) const;
};

// -- factored forms ---------------------------------------------------------

double h_inner(const RankOne& x, const RankOne& y, const MetricSet& m);
double a_inner(const KroneckerSumOperator& op, const RankOne& x, const RankOne& y);

double h_inner(const TensorSum& u, const TensorSum& v, const MetricSet& m);
double a_inner(const KroneckerSumOperator& op, const TensorSum& u, const TensorSum& v);

/// J(u) = a(u,u) / <u,u>; +infinity for the zero tensor.
double rayleigh(const KroneckerSumOperator& op, const MetricSet& m, const TensorSum& u);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// u / ||u||. Throws DegenerateIterate when ||u|| < 1e-14.
TensorSum normalize(const TensorSum& u, const MetricSet& m);

/// Throws StructuralError unless every factor of z conforms to `sizes`.
void check_shape(const RankOne& z, const Sizes& sizes);
void check_shape(const TensorSum& u, const Sizes& sizes);
/// Throws StructuralError unless op and m describe the same space.
void check_conformant(const KroneckerSumOperator& op, const MetricSet& m);

// -- contraction machinery --------------------------------------------------

/// A rank-one element together with the images of its factors under every
/// operator factor, mass factor, and M_j^{-1} D^{k,j}. Built once per element
/// so that later contractions cost O(N) per factor instead of O(N^2).
struct ImagedRankOne {
  RankOne z;
  std::vector<std::vector<Vector>> op;       // [k][j] = D^{k,j} z_j
  std::vector<Vector> mass;                  // [j]    = M_j z_j
  std::vector<std::vector<Vector>> dual_op;  // [k][j] = M_j^{-1} D^{k,j} z_j
};

std::shared_ptr<const ImagedRankOne> image(const KroneckerSumOperator& op, const MetricSet& m,
                                           RankOne z);

/// a(x, y) and <x, y> from precomputed images.
double a_inner(const ImagedRankOne& x, const ImagedRankOne& y);
double h_inner(const ImagedRankOne& x, const ImagedRankOne& y);
/// x^T A M^{-1} A y, the Gram entry behind the H-dual residual norm.
double aa_inner(const ImagedRankOne& x, const ImagedRankOne& y);

/// Factored context u = sum_l c_l z_l with images, alpha = a(u,u), beta = <u,u>.
class ContextProjection {
 public:
  ContextProjection() = default;
  ContextProjection(const KroneckerSumOperator& op, const MetricSet& m, const TensorSum& u);
  ContextProjection(std::vector<double> coefs,
                    std::vector<std::shared_ptr<const ImagedRankOne>> elements, double alpha,
                    double beta);

  bool empty() const { return elements_.empty(); }
  std::size_t size() const { return elements_.size(); }
  double coef(std::size_t l) const { return coefs_[l]; }
  const ImagedRankOne& element(std::size_t l) const { return *elements_[l]; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  /// a(u, x) and <u, x> for a rank-one x.
  double a_with(const KroneckerSumOperator& op, const RankOne& x) const;
  double h_with(const MetricSet& m, const RankOne& x) const;

 private:
  std::vector<double> coefs_;
  std::vector<std::shared_ptr<const ImagedRankOne>> elements_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

/// Per-direction reduced data. Writing z(s) for `frozen` with s in slot j:
///   a(z(s), z(t)) = s^T a_mat t      <z(s), z(t)> = s^T m_mat t
///   a(u, z(s))    = b^T s            <u, z(s)>    = mvec^T s
///   alpha = a(u,u), beta = <u,u>
struct DirectionData {
  Matrix a_mat;
  Matrix m_mat;
  Vector b;
  Vector mvec;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Throws DegenerateDirection when a frozen factor (slot != j) is zero.
DirectionData reduce_direction(const KroneckerSumOperator& op, const MetricSet& m,
                               const RankOne& frozen, Index j, const ContextProjection& context);

DirectionData reduce_direction(const KroneckerSumOperator& op, const MetricSet& m,
                               const RankOne& frozen, Index j, const TensorSum& context);

}  // namespace geig
