#include "greedy_eig/adm.hpp"

#include "greedy_eig/dense_kernels.hpp"
#include "greedy_eig/rng.hpp"
#include "greedy_eig/secular.hpp"

#include <cmath>
#include <limits>

namespace geig {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Rayleigh: return "rayleigh";
    case Variant::Residual: return "residual";
    case Variant::Explicit: return "explicit";
  }
  return "unknown";
}

void rebalance(RankOne& z) {
  const auto d = z.factors.size();
  if (d == 0) return;
  double log_scale = 0.0;
  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) {
    norms[j] = z.factors[j].norm();
    if (!(norms[j] > 0.0)) return;
    log_scale += std::log(norms[j]);
  }
  const double target = std::exp(log_scale / static_cast<double>(d));
  for (std::size_t j = 0; j < d; ++j) z.factors[j] *= target / norms[j];
}

double rank_one_change(const RankOne& now, const RankOne& before, bool up_to_sign) {
  const bool zn = now.is_zero();
  const bool zb = before.is_zero();
  if (zn || zb) return (zn && zb) ? 0.0 : 1.0;
  double log_now = 0.0;
  double log_before = 0.0;
  double diff = 0.0;
  int sign = 1;
  for (std::size_t j = 0; j < now.factors.size(); ++j) {
    const double a = now.factors[j].norm();
    const double b = before.factors[j].norm();
    log_now += std::log(a);
    log_before += std::log(b);
    const Vector ua = now.factors[j] / a;
    Vector ub = before.factors[j] / b;
    if (ua.dot(ub) < 0.0) {
      ub = -ub;
      sign = -sign;
    }
    diff = std::max(diff, (ua - ub).norm());
  }
  if (!up_to_sign && sign < 0) return 2.0;
  const double sn = std::exp(log_now);
  const double sb = std::exp(log_before);
  return std::max(diff, std::abs(sn - sb) / std::max(sn, sb));
}

namespace {

enum class Kind { Initial, Rayleigh, Residual, Explicit };

RankOne random_start(const Sizes& sizes, std::uint64_t seed) {
  Rng rng(seed);
  RankOne z;
  for (Index n : sizes) {
    Vector f = rng.normal_vector(n);
    z.factors.push_back(f / f.norm());
  }
  return z;
}

class Sweeper {
 public:
  Sweeper(Kind kind, const KroneckerSumOperator& op, const MetricSet& m,
          const ContextProjection& ctx, double lambda)
      : kind_(kind), op_(op), m_(m), ctx_(ctx), lambda_(lambda) {
    check_conformant(op, m);
    if (kind != Kind::Initial && !(ctx.beta() > 0.0))
      throw DegenerateIterate("ADM step requires a non-zero context");
  }

  AdmOutcome run(const AdmConfig& cfg) {
    if (cfg.max_sweeps < 1) throw StructuralError("max_sweeps must be >= 1");
    if (!(cfg.tol_sweep > 0.0)) throw StructuralError("tol_sweep must be > 0");
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.restart_attempts; ++attempt) {
      RankOne start;
      if (attempt == 0 && cfg.start) {
        start = *cfg.start;
        check_shape(start, op_.sizes());
      } else {
        start = random_start(op_.sizes(), mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(attempt)));
      }
      try {
        return sweep(std::move(start), cfg);
      } catch (const DegenerateDirection& e) {
        last_error = e.what();
      } catch (const DegenerateDenominator& e) {
        last_error = e.what();
      } catch (const IllConditionedGram& e) {
        last_error = e.what();
      } catch (const PoleCollision& e) {
        last_error = e.what();
      }
    }
    throw AdmFailure("no admissible ADM run after " + std::to_string(cfg.restart_attempts + 1) +
                     " attempts; last error: " + last_error);
  }

  double objective(const RankOne& z) const {
    const double azz = a_inner(op_, z, z);
    const double hzz = h_inner(z, z, m_);
    if (kind_ == Kind::Initial) return hzz > 0.0 ? azz / hzz : kInfinity;
    const double auz = ctx_.a_with(op_, z);
    const double huz = ctx_.h_with(m_, z);
    if (kind_ == Kind::Residual) {
      const double nu = m_.nu();
      return 0.5 * (ctx_.alpha() + 2.0 * auz + azz + nu * (ctx_.beta() + 2.0 * huz + hzz)) -
             (lambda_ + nu) * huz;
    }
    return (ctx_.alpha() + 2.0 * auz + azz) / (ctx_.beta() + 2.0 * huz + hzz);
  }

 private:
  struct Update {
    Vector s;
    double objective;
  };

  static double quotient(const DirectionData& dd, const Vector& s) {
    return (dd.alpha + 2.0 * dd.b.dot(s) + s.dot(dd.a_mat * s)) /
           (dd.beta + 2.0 * dd.mvec.dot(s) + s.dot(dd.m_mat * s));
  }

  double residual_energy(const DirectionData& dd, const Vector& s) const {
    const double nu = m_.nu();
    return 0.5 * (dd.alpha + 2.0 * dd.b.dot(s) + s.dot(dd.a_mat * s) +
                  nu * (dd.beta + 2.0 * dd.mvec.dot(s) + s.dot(dd.m_mat * s))) -
           (lambda_ + nu) * dd.mvec.dot(s);
  }

  Update solve_direction(const DirectionData& dd, const Vector& current) const {
    switch (kind_) {
      case Kind::Initial: {
        SmallestEigenpair ep;
        try {
          ep = gen_sym_eig_smallest(dd.a_mat, dd.m_mat);
        } catch (const IllConditionedGram& e) {
          throw DegenerateDirection(e.what());
        }
        if (ep.c.dot(dd.m_mat * current) < 0.0) ep.c = -ep.c;
        return {ep.c, ep.tau};
      }
      case Kind::Rayleigh: {
        const double inv = 1.0 / dd.beta;
        const auto red = reduce(dd.a_mat * inv, dd.m_mat * inv, dd.b * inv, dd.mvec * inv,
                                dd.alpha * inv);
        const double rho = solve_secular(red.problem);
        Vector s = recover_minimizer(red, rho);
        double obj = quotient(dd, s);
        const double before = quotient(dd, current);
        // Keep the current factor when the update would not improve (roundoff
        // or a thresholded pole); preserves coordinate-descent monotonicity.
        if (!(obj <= before) && std::isfinite(before)) return {current, before};
        return {std::move(s), obj};
      }
      case Kind::Residual: {
        const Matrix shifted = dd.a_mat + m_.nu() * dd.m_mat;
        const Vector rhs = lambda_ * dd.mvec - dd.b;
        Vector s;
        try {
          s = spd_solve(shifted, rhs);
        } catch (const IllConditionedGram& e) {
          throw NuTooSmall(std::string("shifted direction form is not SPD (nu = ") +
                           std::to_string(m_.nu()) + "): " + e.what());
        }
        return {s, residual_energy(dd, s)};
      }
      case Kind::Explicit: {
        const Matrix shifted = dd.a_mat - lambda_ * dd.m_mat;
        const Vector rhs = lambda_ * dd.mvec - dd.b;
        Vector s;
        try {
          s = sym_indefinite_solve(shifted, rhs);
        } catch (const SingularSystem& e) {
          throw ExplicitStepFailure(std::string("singular explicit direction system: ") + e.what());
        }
        return {s, quotient(dd, s)};
      }
    }
    throw StructuralError("unknown ADM kind");
  }

  AdmOutcome sweep(RankOne z, const AdmConfig& cfg) const {
    if (z.is_zero()) throw DegenerateDirection("start element is zero");
    rebalance(z);
    if (kind_ == Kind::Initial) z = normalized(z);

    AdmOutcome out;
    double obj = objective(z);
    const Index d = op_.dims();
    const double zero_floor = 1e-15 * std::sqrt(ctx_.beta());

    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
      const RankOne before = z;
      const double obj_before = obj;
      for (Index j = 0; j < d; ++j) {
        const auto dd = reduce_direction(op_, m_, z, j, ctx_);
        auto up = solve_direction(dd, z[j]);
        z[j] = std::move(up.s);
        obj = up.objective;
        out.history.push_back(obj);
        if (kind_ != Kind::Initial && std::sqrt(std::max(0.0, h_inner(z, z, m_))) <= zero_floor) {
          // u_prev is (numerically) a fixed point: the correction vanishes.
          for (auto& f : z.factors) f.setZero();
          out.z = std::move(z);
          out.sweeps_used = sweep;
          out.converged = true;
          out.objective = objective(out.z);
          return out;
        }
        rebalance(z);
      }
      if (kind_ == Kind::Initial) z = normalized(z);
      out.sweeps_used = sweep;
      const double change = rank_one_change(z, before, kind_ == Kind::Initial);
      const bool flat = kind_ != Kind::Explicit &&
                        std::abs(obj - obj_before) <=
                            64.0 * std::numeric_limits<double>::epsilon() *
                                std::max(1.0, std::abs(obj));
      if (change < cfg.tol_sweep || flat) {
        out.converged = true;
        break;
      }
    }
    out.objective = objective(z);
    out.z = std::move(z);
    return out;
  }

  RankOne normalized(RankOne z) const {
    const double h = h_inner(z, z, m_);
    if (!(h > 0.0)) throw DegenerateDirection("rank-one iterate vanished");
    const double s = std::pow(h, -0.5 / static_cast<double>(z.dims()));
    for (auto& f : z.factors) f *= s;
    return z;
  }

  Kind kind_;
  const KroneckerSumOperator& op_;
  const MetricSet& m_;
  const ContextProjection& ctx_;
  double lambda_;
};

}  // namespace

AdmOutcome adm_initial_guess(const KroneckerSumOperator& op, const MetricSet& m,
                             const AdmConfig& cfg) {
  const ContextProjection none;
  return Sweeper(Kind::Initial, op, m, none, 0.0).run(cfg);
}

AdmOutcome adm_rayleigh_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const ContextProjection& u_prev, const AdmConfig& cfg) {
  return Sweeper(Kind::Rayleigh, op, m, u_prev, 0.0).run(cfg);
}

AdmOutcome adm_residual_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const ContextProjection& u_prev, double lambda_prev,
                             const AdmConfig& cfg) {
  return Sweeper(Kind::Residual, op, m, u_prev, lambda_prev).run(cfg);
}

AdmOutcome adm_explicit_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const ContextProjection& u_prev, double lambda_prev,
                             const AdmConfig& cfg) {
  return Sweeper(Kind::Explicit, op, m, u_prev, lambda_prev).run(cfg);
}

AdmOutcome adm_rayleigh_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const TensorSum& u_prev, const AdmConfig& cfg) {
  return adm_rayleigh_step(op, m, ContextProjection(op, m, u_prev), cfg);
}

AdmOutcome adm_residual_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const TensorSum& u_prev, double lambda_prev, const AdmConfig& cfg) {
  return adm_residual_step(op, m, ContextProjection(op, m, u_prev), lambda_prev, cfg);
}

AdmOutcome adm_explicit_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const TensorSum& u_prev, double lambda_prev, const AdmConfig& cfg) {
  return adm_explicit_step(op, m, ContextProjection(op, m, u_prev), lambda_prev, cfg);
}

double direction_residual(Variant variant, const KroneckerSumOperator& op, const MetricSet& m,
                          const ContextProjection& u_prev, double lambda_prev, const RankOne& z) {
  if (z.is_zero()) return 0.0;
  double worst = 0.0;
  for (Index j = 0; j < op.dims(); ++j) {
    const auto dd = reduce_direction(op, m, z, j, u_prev);
    const Vector& s = z[j];
    Vector r;
    double scale = 0.0;
    switch (variant) {
      case Variant::Rayleigh: {
        const double q = (dd.alpha + 2.0 * dd.b.dot(s) + s.dot(dd.a_mat * s)) /
                         (dd.beta + 2.0 * dd.mvec.dot(s) + s.dot(dd.m_mat * s));
        r = (dd.a_mat - q * dd.m_mat) * s + dd.b - q * dd.mvec;
        scale = (dd.a_mat * s).norm() + dd.b.norm() + std::abs(q) * ((dd.m_mat * s).norm() + dd.mvec.norm());
        break;
      }
      case Variant::Residual: {
        r = (dd.a_mat + m.nu() * dd.m_mat) * s - (lambda_prev * dd.mvec - dd.b);
        scale = (dd.a_mat * s).norm() + std::abs(m.nu()) * (dd.m_mat * s).norm() +
                std::abs(lambda_prev) * dd.mvec.norm() + dd.b.norm();
        break;
      }
      case Variant::Explicit: {
        r = (dd.a_mat - lambda_prev * dd.m_mat) * s + dd.b - lambda_prev * dd.mvec;
        scale = (dd.a_mat * s).norm() + std::abs(lambda_prev) * (dd.m_mat * s).norm() +
                dd.b.norm() + std::abs(lambda_prev) * dd.mvec.norm();
        break;
      }
    }
    worst = std::max(worst, scale > 0.0 ? r.norm() / scale : r.norm());
  }
  return worst;
}

}  // namespace geig
