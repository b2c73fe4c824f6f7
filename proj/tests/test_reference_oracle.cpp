#include "greedy_eig/greedy.hpp"
#include "greedy_eig/problems.hpp"
#include "greedy_eig/reference_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace geig;
using namespace geig::test;

namespace {

// Scoped override of the oracle size guard.
struct LimitOverride {
  explicit LimitOverride(const char* v) { setenv("GREEDY_EIG_ORACLE_LIMIT", v, 1); }
  ~LimitOverride() { unsetenv("GREEDY_EIG_ORACLE_LIMIT"); }
};

}  // namespace

TEST_CASE("dense assembly of the identity operator") {
  const Sizes sizes{3, 4};
  const KroneckerSumOperator op(sizes, {{FactorMatrix::identity(3), FactorMatrix::identity(4)}});
  const auto d = dense_assemble(op, MetricSet::identity(sizes));
  CHECK(d.a.isIdentity(0.0));
  CHECK(d.identity_mass);
}

TEST_CASE("Kronecker-sum spectrum is the set of pairwise sums") {
  Rng rng(3);
  const Matrix d = random_symmetric(rng, 4);
  const auto p = gen_separable({d, d});
  const auto ref = dense_reference(p.op, p.m);
  Eigen::SelfAdjointEigenSolver<Matrix> one(d);
  std::vector<double> sums;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) sums.push_back(one.eigenvalues()[i] + one.eigenvalues()[j]);
  std::sort(sums.begin(), sums.end());
  for (Index i = 0; i < 16; ++i) CHECK(ref.full_spectrum[i] == doctest::Approx(sums[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("dense assembly matches an independent expansion") {
  Rng rng(5);
  std::vector<KroneckerSumOperator::Term> terms;
  for (int k = 0; k < 3; ++k)
    terms.push_back({FactorMatrix(random_symmetric(rng, 8)), FactorMatrix(random_symmetric(rng, 8))});
  terms.push_back({FactorMatrix(rng.normal_matrix(8, 8), FactorSymmetry::Skew),
                   FactorMatrix(rng.normal_matrix(8, 8), FactorSymmetry::Skew)});
  const KroneckerSumOperator op({8, 8}, terms);
  const MetricSet m({FactorMatrix(random_spd(rng, 8)), FactorMatrix(random_spd(rng, 8))});
  const auto d = dense_assemble(op, m);
  CHECK((d.a - dense_a(op)).norm() <= 1e-12 * d.a.norm());
  CHECK((d.m - dense_m(m)).norm() <= 1e-12 * d.m.norm());
  CHECK_FALSE(d.identity_mass);

  // Self-consistency: V diag(mu) V^T with M-orthonormal V reproduces A.
  const auto sys = dense_eigensystem(d);
  const Matrix mv = d.m * sys.vectors;
  const Matrix back = mv * sys.values.asDiagonal() * mv.transpose();
  CHECK((back - d.a).norm() <= 1e-9 * d.a.norm());
  CHECK((sys.vectors.transpose() * d.m * sys.vectors - Matrix::Identity(64, 64)).norm() <= 1e-10);
}

TEST_CASE("kron orders the first factor slowest") {
  Matrix x(1, 2), y(2, 1);
  x << 1, 2;
  y << 3, 4;
  Matrix expect(2, 2);
  expect << 3, 6, 4, 8;
  CHECK(kron(x, y) == expect);
}

TEST_CASE("reference on a separable diagonal case") {
  const Matrix d = Vector((Vector(2) << 1, 2).finished()).asDiagonal();
  const auto p = gen_separable({d, d});
  const auto ref = dense_reference(p.op, p.m);
  CHECK(ref.mu1 == doctest::Approx(2.0));
  CHECK(ref.eigenspace.cols() == 1);
  CHECK(ref.gap == doctest::Approx(1.0));
}

TEST_CASE("reference eigenspace dimension follows the degenerate generator") {
  for (int mult : {1, 2, 3}) {
    const auto p = gen_degenerate_lowest({6, 6}, mult, 4);
    const auto ref = dense_reference(p.op, p.m);
    CHECK(ref.eigenspace.cols() == mult);
    CHECK(ref.mu1 == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("mu1 is below the rank-one value on random instances") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = gen_random_kronecker(2, {7, 9}, 2, seed);
    const auto ref = dense_reference(p.op, p.m);
    const auto s = initialize(p.op, p.m, GreedyConfig{});
    CHECK(ref.mu1 <= s.lambda + 1e-12);
    CHECK(ref.mu1 == doctest::Approx(smallest_gen_eig(dense_a(p.op), dense_m(p.m))).epsilon(1e-12));
  }
}

TEST_CASE("error metrics: eigenvector, orthogonal vector, scaling") {
  const auto p = gen_random_kronecker(2, {5, 5}, 2, 2);
  const auto ref = dense_reference(p.op, p.m);
  const Vector w = ref.eigenspace.col(0);
  auto e = error_metrics(w, ref.mu1, ref);
  CHECK(e.err_lambda <= 1e-10);
  CHECK(e.err_vec_h <= 1e-10);
  CHECK(e.d_a_to_F <= 1e-10);
  e = error_metrics(Vector(-3.0 * w), ref.mu1, ref);
  CHECK(e.err_vec_h <= 1e-10);
  CHECK(e.d_a_to_F <= 1e-10);

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(dense_a(p.op), dense_m(p.m));
  const Vector v2 = es.eigenvectors().col(1);
  e = error_metrics(v2, es.eigenvalues()[1], ref);
  CHECK(e.err_vec_h == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(e.err_lambda == doctest::Approx(es.eigenvalues()[1] - ref.mu1).epsilon(1e-10));
  // |w - v2|_a^2 = mu1 + mu2 for a(.,.)-orthogonal unit eigenvectors.
  CHECK(e.d_a_to_F == doctest::Approx(std::sqrt(ref.mu1 + es.eigenvalues()[1])).epsilon(1e-10));
  CHECK_THROWS_AS(error_metrics(Vector(Vector::Zero(25)), 0.0, ref), DegenerateIterate);
  CHECK_THROWS_AS(error_metrics(Vector(Vector::Ones(3)), 0.0, ref), StructuralError);
}

TEST_CASE("error metrics measure the distance to a degenerate eigenspace") {
  const auto p = gen_degenerate_lowest({5, 5}, 2, 3);
  const auto ref = dense_reference(p.op, p.m);
  REQUIRE(ref.eigenspace.cols() == 2);
  const Vector mix = 0.6 * ref.eigenspace.col(0) - 0.8 * ref.eigenspace.col(1);
  const auto e = error_metrics(mix, ref.mu1, ref);
  CHECK(e.err_vec_h <= 1e-10);
  CHECK(e.d_a_to_F <= 1e-10);
}

TEST_CASE("error along a run decays monotonically in lambda") {
  const auto p = gen_random_kronecker(2, {8, 8}, 2, 3);
  const auto ref = dense_reference(p.op, p.m);
  GreedyConfig cfg;
  cfg.max_iter = 30;
  const auto r = run(p.op, p.m, cfg, [&](const GreedyState& s, TraceRow& row) {
    const auto e = error_metrics(s.u(), s.lambda, ref, p.op.sizes());
    row.err_lambda = e.err_lambda;
    row.err_vec_h = e.err_vec_h;
  });
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    CHECK(*r.trace[i].err_lambda <= *r.trace[i - 1].err_lambda + 1e-10);
  CHECK(*r.trace.back().err_vec_h < *r.trace.front().err_vec_h);
}

TEST_CASE("oracle size guard and its override") {
  const auto p = gen_random_kronecker(2, {65, 65}, 1, 1);
  CHECK(oracle_limit() == 4096);
  CHECK_THROWS_AS(dense_assemble(p.op, p.m), TooLargeForOracle);
  {
    LimitOverride o("10");
    CHECK(oracle_limit() == 10);
    const auto q = gen_random_kronecker(2, {4, 4}, 1, 1);
    CHECK_THROWS_AS(dense_assemble(q.op, q.m), TooLargeForOracle);
  }
  {
    LimitOverride o("abc");
    CHECK_THROWS_AS(oracle_limit(), InvalidSpec);
  }
}

TEST_CASE("gradient check of the Rayleigh quotient") {
  const auto p = gen_random_kronecker(2, {6, 5}, 2, 4);
  Rng rng(8);
  for (int i = 0; i < 5; ++i) {
    TensorSum v(random_rank_one(rng, {6, 5}));
    v.add(0.5, random_rank_one(rng, {6, 5}));
    CHECK(grad_check_rayleigh(p.op, p.m, v, 1e-5, static_cast<std::uint64_t>(i)) <= 1e-6);
  }
  // At an eigenvector the derivative vanishes in every direction.
  const auto ref = dense_reference(p.op, p.m);
  const auto w = from_dense_2d(ref.eigenspace.col(0), 6, 5);
  const double jw = rayleigh(p.op, p.m, w);
  for (int i = 0; i < 20; ++i) {
    TensorSum dir(random_rank_one(rng, {6, 5}));
    dir = dir.scaled(1.0 / std::sqrt(h_inner(dir, dir, p.m)));
    const double analytic = 2.0 * (a_inner(p.op, w, dir) - jw * h_inner(w, dir, p.m));
    CHECK(std::abs(analytic) <= 1e-10 * jw);
    const double h = 1e-4;
    const double fd = (rayleigh(p.op, p.m, w.plus(dir.scaled(h))) -
                       rayleigh(p.op, p.m, w.plus(dir.scaled(-h)))) / (2.0 * h);
    CHECK(std::abs(fd) <= 1e-6 * jw);
  }
}

TEST_CASE("the derivative annihilates the radial direction") {
  const auto p = gen_random_kronecker(2, {4, 4}, 2, 6);
  Rng rng(1);
  const TensorSum v(random_rank_one(rng, {4, 4}));
  CHECK(rayleigh(p.op, p.m, v.scaled(1.2)) == doctest::Approx(rayleigh(p.op, p.m, v)).epsilon(1e-14));
  const double radial = 2.0 * (a_inner(p.op, v, v) - rayleigh(p.op, p.m, v) * h_inner(v, v, p.m)) /
                        h_inner(v, v, p.m);
  CHECK(std::abs(radial) <= 1e-12 * rayleigh(p.op, p.m, v));
}
