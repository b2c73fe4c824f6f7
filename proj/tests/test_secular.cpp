#include "greedy_eig/secular.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace geig;
using namespace geig::test;

namespace {

double direct_quotient(const Matrix& a, const Matrix& b, const Vector& al, const Vector& bl,
                       double alpha, const Vector& s) {
  return (s.dot(a * s) + 2.0 * al.dot(s) + alpha) / (s.dot(b * s) + 2.0 * bl.dot(s) + 1.0);
}

struct Instance {
  Matrix a, b;
  Vector al, bl;
  double alpha;
};

// Quotient data as produced by a context u and a direction: the denominator is
// |u + z(s)|^2 with |u| = 1, so 1 - bl^T B^-1 bl > 0.
Instance random_instance(Rng& rng, Index n) {
  Instance in;
  in.a = random_symmetric(rng, n);
  in.b = random_spd(rng, n);
  const Vector w = rng.normal_vector(n);
  in.bl = 0.5 * in.b * w / std::sqrt(w.dot(in.b * w));
  in.al = rng.normal_vector(n);
  in.alpha = rng.normal() * 3.0;
  return in;
}

}  // namespace

TEST_CASE("reduction with identity metric and no coupling is the identity map") {
  Rng rng(1);
  const Matrix a = random_symmetric(rng, 4);
  const Vector al = rng.normal_vector(4);
  const auto r = reduce(a, Matrix::Identity(4, 4), al, Vector::Zero(4), 2.5);
  CHECK(r.problem.gamma == doctest::Approx(2.5));
  CHECK(r.problem.delta == doctest::Approx(1.0));
  const Vector s = rng.normal_vector(4);
  CHECK((r.to_original(r.to_reduced(s)) - s).norm() <= 1e-13);
  CHECK((r.to_reduced(s).norm() - s.norm()) == doctest::Approx(0.0).epsilon(1e-13));
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  CHECK((r.problem.kappa - es.eigenvalues()).norm() <= 1e-12);
}

TEST_CASE("reduced quotient equals the original one") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto in = random_instance(rng, 5);
    const auto r = reduce(in.a, in.b, in.al, in.bl, in.alpha);
    const double delta_ref = 1.0 - in.bl.dot(in.b.ldlt().solve(in.bl));
    CHECK(r.problem.delta == doctest::Approx(delta_ref).epsilon(1e-12));
    for (int k = 0; k < 20; ++k) {
      const Vector s = rng.normal_vector(5);
      const double q = direct_quotient(in.a, in.b, in.al, in.bl, in.alpha, s);
      CHECK(rel_diff(r.problem.quotient(r.to_reduced(s)), q) <= 1e-11);
    }
  }
}

TEST_CASE("reduction rejects a non-positive delta") {
  const Matrix b = Matrix::Identity(2, 2);
  const Vector bl = (Vector(2) << 1.0, 0.5).finished();
  CHECK_THROWS_AS(reduce(Matrix::Identity(2, 2), b, Vector::Zero(2), bl, 1.0), DegenerateDenominator);
}

TEST_CASE("pole-free secular equation") {
  SecularProblem p;
  p.kappa = (Vector(2) << 0.0, 1.0).finished();
  p.c = Vector::Zero(2);
  p.gamma = 3.0;
  p.delta = 2.0;
  CHECK(solve_secular(p) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(minimizer_coordinates(p, 1.5).norm() == 0.0);
}

TEST_CASE("two-pole secular equation against bisection") {
  SecularProblem p;
  p.kappa = (Vector(2) << 0.0, 2.0).finished();
  p.c = (Vector(2) << 1.0, 1.0).finished();
  p.gamma = 0.0;
  p.delta = 1.0;
  const double rho = solve_secular(p);
  CHECK(rho > -1.2);
  CHECK(rho < -1.0);
  CHECK(std::abs(rho - secular_bisection(p.kappa, p.c, p.gamma, p.delta)) <= 1e-12);
  // The minimizer attains the root: L(T(rho_m)) = rho_m.
  CHECK(p.quotient(minimizer_coordinates(p, rho)) == doctest::Approx(rho).epsilon(1e-12));
}

TEST_CASE("inactive coordinates stay at zero") {
  SecularProblem p;
  p.kappa = (Vector(3) << -1.0, 0.5, 2.0).finished();
  p.c = (Vector(3) << 0.0, 1.0, 0.3).finished();
  p.gamma = 1.0;
  p.delta = 1.0;
  CHECK(p.active_poles() == std::vector<Index>{1, 2});
  const double rho = solve_secular(p);
  CHECK(std::abs(rho - secular_bisection(p.kappa, p.c, p.gamma, p.delta)) <= 1e-11);
  CHECK(rho < 0.5);
  CHECK(minimizer_coordinates(p, rho)[0] == 0.0);
}

TEST_CASE("pole-free minimizer is the stationary point S = -B^-1 b") {
  Rng rng(8);
  auto in = random_instance(rng, 4);
  const Vector w = in.b.ldlt().solve(in.bl);
  // With a_lin = A w the reduced linear term vanishes.
  in.al = in.a * w;
  const auto r = reduce(in.a, in.b, in.al, in.bl, in.alpha);
  CHECK(r.problem.c.norm() <= 1e-12 * (1.0 + in.a.norm() * w.norm()));
  const double rho = solve_secular(r.problem);
  CHECK(rho == doctest::Approx(r.problem.gamma / r.problem.delta).epsilon(1e-13));
  CHECK((recover_minimizer(r, rho) + w).norm() <= 1e-12 * (1.0 + w.norm()));
}

TEST_CASE("random secular problems: root, fixed point and global optimality") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto p = random_secular(rng);
    const double rho = solve_secular(p);
    const double ref = secular_bisection(p.kappa, p.c, p.gamma, p.delta);
    CHECK(std::abs(rho - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    CHECK(rel_diff(p.m_of_rho(rho), rho) <= 1e-10);
    // L(T) >= rho_m for random T: the root is the global minimum.
    double lowest = kInfinity;
    for (int k = 0; k < 500; ++k) lowest = std::min(lowest, p.quotient(rng.normal_vector(p.c.size()) * 3.0));
    CHECK(lowest >= rho - 1e-10 * std::max(1.0, std::abs(rho)));
  }
}

TEST_CASE("f decreases between consecutive active poles") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_secular(rng);
    const auto act = p.active_poles();
    for (std::size_t k = 0; k + 1 < act.size(); ++k) {
      const double lo = p.kappa[act[k]], hi = p.kappa[act[k + 1]];
      if (hi - lo < 1e-8) continue;
      double prev = kInfinity;
      for (int i = 1; i < 100; ++i) {
        const double f = p.f(lo + (hi - lo) * i / 100.0);
        CHECK(f < prev);
        prev = f;
      }
    }
  }
}

TEST_CASE("rho_m is below M(rho) on a wide grid") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    const auto p = random_secular(rng);
    const double rho = solve_secular(p);
    const double kn = p.kappa.norm();
    const double lo = p.kappa.minCoeff() - 10.0 * kn, hi = p.kappa.maxCoeff() + 10.0 * kn;
    for (int i = 0; i < 1000; ++i) {
      const double r = lo + (hi - lo) * (i + 0.5) / 1000.0;
      if (((p.kappa.array() - r).abs() < 1e-9).any()) continue;
      CHECK(rho <= p.m_of_rho(r) + 1e-10 * std::max(1.0, std::abs(rho)));
    }
  }
}

TEST_CASE("solver rejects malformed problems") {
  SecularProblem p;
  p.kappa = Vector::Zero(2);
  p.c = Vector::Ones(3);
  CHECK_THROWS_AS(solve_secular(p), StructuralError);
  p.c = Vector::Ones(2);
  p.delta = 0.0;
  CHECK_THROWS_AS(solve_secular(p), DegenerateDenominator);
}
