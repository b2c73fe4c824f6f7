#pragma once

// Outer greedy drivers. Each iteration adds one rank-one correction z_n found
// by an ADM step and updates
//   pure:        u_n = (u_{n-1} + z_n) / |u_{n-1} + z_n|
//   orthogonal:  u_n = argmin J over span(u_0, z_1, ..., z_n), <u_{n-1}, u_n> > 0
// with lambda_n = a(u_n, u_n).
//
// The iterate is stored as coefficients over the raw basis (u_0, z_1, ..., z_n)
// together with the Gram matrices of a(.,.), <.,.> and A M^{-1} A on it, so
// every quantity of the trace is computed without dense assembly.

#include "greedy_eig/adm.hpp"
#include "greedy_eig/tensor_core.hpp"

#include <functional>
#include <optional>
#include <string>

namespace geig {

struct GreedyConfig {
  Variant variant = Variant::Rayleigh;
  bool orthogonal = false;
  /// Shift of the residual functional (Residual variant only).
  double nu = 0.0;
  int max_iter = 100;
  /// Stop when |lambda_{n-1} - lambda_n| < tol_lambda * max(1, |lambda_n|) three times in a row.
  double tol_lambda = 1e-14;
  /// Stop when the H-dual eigen-residual is <= tol_residual * max(1, |lambda_n|).
  double tol_residual = 1e-7;
  AdmConfig adm;
  std::uint64_t rng_seed = 0;
  /// Start each step's ADM from the previous correction instead of seeded random factors.
  bool warm_start = false;
  /// Seeded ADM starts for the rank-one initial guess; the lowest J wins.
  int init_starts = 16;

  void validate() const;
};

std::string variant_name(Variant v, bool orthogonal);

enum class StopReason {
  Running,
  InitialGuessIsEigenvector,
  ResidualConverged,
  Stagnated,
  FixedPoint,
  MaxIterations,
  StepFailure,
};

std::string_view to_string(StopReason r);

/// True for every reason that counts as a successful termination.
bool is_converged(StopReason r);

struct TraceRow {
  int n = 0;
  double lambda = 0.0;
  double lambda_decrease = 0.0;
  double z_norm_a = 0.0;
  double euler_residual = 0.0;
  double eig_residual_h = 0.0;
  double alpha_n = 1.0;
  /// Same-iteration pure-update value (equals lambda for pure variants).
  double lambda_pure = 0.0;
  int adm_sweeps = 0;
  bool adm_converged = true;
  std::optional<double> err_lambda;
  std::optional<double> err_vec_h;
  std::optional<double> err_vec_a;
  double wall_time_ms = 0.0;
};

using ConvergenceTrace = std::vector<TraceRow>;

struct GreedyState {
  int n = 0;
  std::vector<std::shared_ptr<const ImagedRankOne>> basis;
  Matrix gram_a;
  Matrix gram_h;
  Matrix gram_aa;
  Vector coefs;
  double lambda = 0.0;
  ConvergenceTrace trace;
  StopReason reason = StopReason::Running;
  std::string diagnostic;

  TensorSum u() const;
  ContextProjection context() const;
  double norm_h() const;
  /// sqrt of (A u - lambda M u)^T M^{-1} (A u - lambda M u) for the stored u.
  double eig_residual_h() const;
  /// The latest correction z_n (last basis element), if any.
  const RankOne* last_correction() const;
};

/// State whose iterate is the given rank-one element, H-normalized.
GreedyState make_state(const KroneckerSumOperator& op, const MetricSet& m, const RankOne& u0);

/// Appends z to the basis and extends the Gram matrices; coefficients get a 0.
void append_element(GreedyState& state, const KroneckerSumOperator& op, const MetricSet& m,
                    RankOne z);

/// u_0 from the rank-one Rayleigh minimizer; stops with InitialGuessIsEigenvector
/// when (u_0, lambda_0) already is an eigenpair to tol_residual.
GreedyState initialize(const KroneckerSumOperator& op, const MetricSet& m, const GreedyConfig& cfg);

/// One greedy iteration (pure or orthogonal per cfg).
GreedyState step(const GreedyState& state, const KroneckerSumOperator& op, const MetricSet& m,
                 const GreedyConfig& cfg);

/// Re-optimizes the coefficients over the whole basis through the smallest
/// generalized eigenpair of (gram_a, gram_h). On an ill-conditioned Gram the
/// element with the smallest pivot is dropped and the solve retried once.
GreedyState orthogonal_update(const GreedyState& state, const KroneckerSumOperator& op,
                              const MetricSet& m, const GreedyConfig& cfg);

struct GreedyResult {
  double lambda = 0.0;
  TensorSum u;
  ConvergenceTrace trace;
  StopReason reason = StopReason::Running;
  std::string diagnostic;
  int iterations = 0;
};

/// Called after each trace row is produced (including n = 0); may fill the
/// err_* columns.
using TraceObserver = std::function<void(const GreedyState&, TraceRow&)>;

GreedyResult run(const KroneckerSumOperator& op, const MetricSet& m, const GreedyConfig& cfg,
                 const TraceObserver& observer = {});

/// Smallest eigenvalue over directions of the contracted operator at u_0,
/// used to warn when the residual shift nu risks an indefinite form.
double estimate_min_contracted_eigenvalue(const KroneckerSumOperator& op, const MetricSet& m,
                                          const RankOne& z);

}  // namespace geig
