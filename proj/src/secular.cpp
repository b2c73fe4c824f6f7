#include "greedy_eig/secular.hpp"

#include "greedy_eig/dense_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geig {

std::vector<Index> SecularProblem::active_poles() const {
  std::vector<Index> out;
  const double cn = c.norm();
  if (!(cn > 0.0)) return out;
  for (Index i = 0; i < c.size(); ++i)
    if (std::abs(c[i]) > 1e-14 * cn) out.push_back(i);
  return out;
}

double SecularProblem::f(double rho) const {
  double s = gamma;
  for (Index i : active_poles()) s += c[i] * c[i] / (rho - kappa[i]);
  return s;
}

Vector minimizer_coordinates(const SecularProblem& p, double rho) {
  Vector t = Vector::Zero(p.c.size());
  for (Index i : p.active_poles()) t[i] = p.c[i] / (rho - p.kappa[i]);
  return t;
}

double SecularProblem::quotient(const Vector& t) const {
  const double num = t.dot(kappa.cwiseProduct(t)) + 2.0 * c.dot(t) + gamma;
  return num / (t.squaredNorm() + delta);
}

double SecularProblem::m_of_rho(double rho) const {
  return quotient(minimizer_coordinates(*this, rho));
}

namespace {

struct Active {
  std::vector<double> kappa;
  std::vector<double> c2;
  double gamma;
  double delta;

  // g(rho) = rho delta - f(rho); strictly increasing and convex below the
  // smallest pole.
  double g(double rho) const {
    double s = rho * delta - gamma;
    for (std::size_t i = 0; i < kappa.size(); ++i) s -= c2[i] / (rho - kappa[i]);
    return s;
  }
  double dg(double rho) const {
    double s = delta;
    for (std::size_t i = 0; i < kappa.size(); ++i) {
      const double r = rho - kappa[i];
      s += c2[i] / (r * r);
    }
    return s;
  }
};

}  // namespace

double solve_secular(const SecularProblem& p, double tol) {
  if (!(p.delta > 0.0)) throw DegenerateDenominator("secular problem requires delta > 0");
  if (p.kappa.size() != p.c.size()) throw StructuralError("kappa and c sizes differ");
  const auto idx = p.active_poles();
  if (idx.empty()) return p.gamma / p.delta;

  Active a{{}, {}, p.gamma, p.delta};
  for (Index i : idx) {
    a.kappa.push_back(p.kappa[i]);
    a.c2.push_back(p.c[i] * p.c[i]);
  }
  const double pole = *std::min_element(a.kappa.begin(), a.kappa.end());

  double hi = pole - 1e-12 * (1.0 + std::abs(pole));
  double g_hi = a.g(hi);
  if (g_hi <= 0.0) return hi;  // root sits within the pole gap

  double lo = std::min(p.gamma / p.delta, pole - 1.0);
  double width = std::max(pole - lo, 1.0);
  double g_lo = a.g(lo);
  for (int it = 0; g_lo >= 0.0 && it < 2100; ++it) {
    width *= 2.0;
    lo = pole - width;
    g_lo = a.g(lo);
  }
  if (g_lo >= 0.0) throw KernelFailure("secular bracket: no sign change below the smallest pole");
  if (g_lo == 0.0) return lo;

  // Initial guess from the dominant pole alone: rho delta - gamma = c^2 / (rho - pole).
  double c2_pole = 0.0;
  for (std::size_t i = 0; i < a.kappa.size(); ++i)
    if (a.kappa[i] == pole) c2_pole += a.c2[i];
  const double bq = p.gamma + p.delta * pole;
  const double disc = (p.gamma - p.delta * pole) * (p.gamma - p.delta * pole) +
                      4.0 * p.delta * c2_pole;
  double rho = (bq - std::sqrt(disc)) / (2.0 * p.delta);
  if (!(rho > lo && rho < hi)) rho = 0.5 * (lo + hi);
  double g_rho = a.g(rho);

  // g is convex and increasing on (lo, hi): Newton from the right of the root
  // stays inside the bracket; any step leaving it is replaced by bisection.
  for (int it = 0; it < 500; ++it) {
    if (std::abs(g_rho) <= tol * std::max(1.0, std::abs(rho) * p.delta)) return rho;
    if (g_rho > 0.0)
      hi = rho;
    else
      lo = rho;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(rho)))
      return rho;
    double next = rho - g_rho / a.dg(rho);
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    rho = next;
    g_rho = a.g(rho);
  }
  return rho;
}

Vector SecularReduction::to_original(const Vector& t) const {
  const Vector tt = basis * t;
  return Vector(chol_l.transpose().triangularView<Eigen::Upper>().solve(tt)) - shift;
}

Vector SecularReduction::to_reduced(const Vector& s) const {
  const Vector tt = chol_l.transpose() * (s + shift);
  return basis.transpose() * tt;
}

SecularReduction reduce(const Matrix& a_eff, const Matrix& b_eff, const Vector& a_lin,
                        const Vector& b_lin, double alpha) {
  const Index n = a_eff.rows();
  if (a_eff.cols() != n || b_eff.rows() != n || b_eff.cols() != n || a_lin.size() != n ||
      b_lin.size() != n)
    throw StructuralError("secular reduction inputs do not conform");

  const auto llt = spd_factor(b_eff);
  SecularReduction r;
  r.chol_l = llt.matrixL();
  r.shift = llt.solve(b_lin);
  const double delta = 1.0 - b_lin.dot(r.shift);
  if (!(delta > 1e-14))
    throw DegenerateDenominator("delta = " + std::to_string(delta) +
                                " (context nearly representable in this direction)");

  const Matrix a_sym = 0.5 * (a_eff + a_eff.transpose());
  const auto l = r.chol_l.triangularView<Eigen::Lower>();
  Matrix c = l.solve(a_sym);
  c = l.solve(c.transpose()).transpose();
  const Vector aw = a_sym * r.shift;
  const Vector cvec = l.solve(a_lin - aw);

  const auto eig = sym_eig_full(c);
  r.basis = eig.vectors;
  r.problem.kappa = eig.values;
  r.problem.c = eig.vectors.transpose() * cvec;
  r.problem.gamma = alpha + r.shift.dot(aw) - 2.0 * a_lin.dot(r.shift);
  r.problem.delta = delta;
  return r;
}

Vector recover_minimizer(const SecularReduction& r, double rho_m) {
  const auto& p = r.problem;
  for (Index i : p.active_poles())
    if (std::abs(rho_m - p.kappa[i]) < 1e-14 * std::max(1.0, std::abs(p.kappa[i])))
      throw PoleCollision("rho_m coincides with active pole " + std::to_string(i));
  return r.to_original(minimizer_coordinates(p, rho_m));
}

}  // namespace geig
