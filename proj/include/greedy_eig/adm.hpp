#pragma once

// Alternating Direction Method (ADM) inner solvers. Each solver sweeps over the
// d directions, replacing one factor of the rank-one element at a time by the
// solution of a small N_j x N_j problem:
//
//   initial guess  min J(z)            -> smallest generalized eigenpair
//   Rayleigh step  min J(u + z)        -> secular equation
//   residual step  min 1/2|u+z|_a^2 - (lambda+nu)<u,z>   -> SPD solve
//   explicit step  a(u+z, dz) = lambda <u+z, dz>          -> indefinite solve

#include "greedy_eig/tensor_core.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace geig {

enum class Variant { Rayleigh, Residual, Explicit };

std::string_view to_string(Variant v);

struct AdmConfig {
  int max_sweeps = 50;
  /// Relative iterate change that ends the sweeps.
  double tol_sweep = 1e-10;
  int restart_attempts = 3;
  std::uint64_t rng_seed = 0;
  /// Start factors; seeded random factors when empty.
  std::optional<RankOne> start;
};

struct AdmOutcome {
  RankOne z;
  int sweeps_used = 0;
  bool converged = false;
  double objective = 0.0;
  /// Objective after every single direction update, in order.
  std::vector<double> history;
};

/// argmin over rank-one z of J(z), H-normalized.
AdmOutcome adm_initial_guess(const KroneckerSumOperator& op, const MetricSet& m,
                             const AdmConfig& cfg);

/// argmin over rank-one z of J(u_prev + z). Objective is J(u_prev + z).
AdmOutcome adm_rayleigh_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const ContextProjection& u_prev, const AdmConfig& cfg);

/// argmin over rank-one z of 1/2 |u_prev + z|_a^2 - (lambda_prev + nu) <u_prev, z>,
/// with nu = m.nu(). Throws NuTooSmall when the shifted contracted form is not SPD.
AdmOutcome adm_residual_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const ContextProjection& u_prev, double lambda_prev,
                             const AdmConfig& cfg);

/// Rank-one z solving a(u+z, dz) - lambda_prev <u+z, dz> = 0 on the tangent
/// space. Throws ExplicitStepFailure on a singular direction system.
/// converged = false when the sweeps hit max_sweeps without settling.
AdmOutcome adm_explicit_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const ContextProjection& u_prev, double lambda_prev,
                             const AdmConfig& cfg);

AdmOutcome adm_rayleigh_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const TensorSum& u_prev, const AdmConfig& cfg);
AdmOutcome adm_residual_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const TensorSum& u_prev, double lambda_prev, const AdmConfig& cfg);
AdmOutcome adm_explicit_step(const KroneckerSumOperator& op, const MetricSet& m,
                             const TensorSum& u_prev, double lambda_prev, const AdmConfig& cfg);

/// Largest relative norm, over directions j, of the gradient of the variant's
/// direction problem at z (with all other factors of z frozen):
///   Rayleigh: (A_j - J M_j) s + b - J m,  J = J(u + z)
///   Residual: (A_j + nu M_j) s - (lambda m - b)
///   Explicit: (A_j - lambda M_j) s + b - lambda m
/// Zero at an exact ADM fixed point.
double direction_residual(Variant variant, const KroneckerSumOperator& op, const MetricSet& m,
                          const ContextProjection& u_prev, double lambda_prev, const RankOne& z);

/// Scale factors to equal Euclidean norms (same tensor).
void rebalance(RankOne& z);

/// Relative change between two rank-one elements measured factor by factor
/// after sign alignment. `up_to_sign` ignores a global sign flip.
double rank_one_change(const RankOne& now, const RankOne& before, bool up_to_sign);

}  // namespace geig
