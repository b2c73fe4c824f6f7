#include "greedy_eig/greedy.hpp"

#include "greedy_eig/dense_kernels.hpp"
#include "greedy_eig/rng.hpp"

#include <chrono>
#include <cmath>

namespace geig {

void GreedyConfig::validate() const {
  if (max_iter < 1) throw InvalidSpec("max_iter must be >= 1");
  if (!(tol_lambda > 0.0) || !(tol_residual > 0.0)) throw InvalidSpec("tolerances must be > 0");
  if (!(nu >= 0.0)) throw InvalidSpec("nu must be >= 0");
  if (adm.max_sweeps < 1) throw InvalidSpec("adm.max_sweeps must be >= 1");
  if (!(adm.tol_sweep > 0.0)) throw InvalidSpec("adm.tol_sweep must be > 0");
  if (adm.restart_attempts < 0) throw InvalidSpec("adm.restart_attempts must be >= 0");
  if (init_starts < 1) throw InvalidSpec("init_starts must be >= 1");
}

std::string variant_name(Variant v, bool orthogonal) {
  switch (v) {
    case Variant::Rayleigh: return orthogonal ? "ORaGA" : "PRaGA";
    case Variant::Residual: return orthogonal ? "OReGA" : "PReGA";
    case Variant::Explicit: return orthogonal ? "OEGA" : "PEGA";
  }
  return "unknown";
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Running: return "Running";
    case StopReason::InitialGuessIsEigenvector: return "InitialGuessIsEigenvector";
    case StopReason::ResidualConverged: return "ResidualConverged";
    case StopReason::Stagnated: return "Stagnated";
    case StopReason::FixedPoint: return "FixedPoint";
    case StopReason::MaxIterations: return "MaxIterations";
    case StopReason::StepFailure: return "StepFailure";
  }
  return "Unknown";
}

bool is_converged(StopReason r) {
  return r == StopReason::InitialGuessIsEigenvector || r == StopReason::ResidualConverged ||
         r == StopReason::Stagnated || r == StopReason::FixedPoint;
}

// -- state -------------------------------------------------------------------

TensorSum GreedyState::u() const {
  TensorSum out;
  for (std::size_t l = 0; l < basis.size(); ++l)
    if (coefs[static_cast<Index>(l)] != 0.0) out.add(coefs[static_cast<Index>(l)], basis[l]->z);
  return out;
}

ContextProjection GreedyState::context() const {
  std::vector<double> c(coefs.data(), coefs.data() + coefs.size());
  return ContextProjection(std::move(c), basis, coefs.dot(gram_a * coefs),
                           coefs.dot(gram_h * coefs));
}

double GreedyState::norm_h() const { return std::sqrt(std::max(0.0, coefs.dot(gram_h * coefs))); }

double GreedyState::eig_residual_h() const {
  const double aa = coefs.dot(gram_aa * coefs);
  const double a = coefs.dot(gram_a * coefs);
  const double h = coefs.dot(gram_h * coefs);
  return std::sqrt(std::max(0.0, aa - 2.0 * lambda * a + lambda * lambda * h));
}

const RankOne* GreedyState::last_correction() const {
  if (basis.size() < 2) return nullptr;
  return &basis.back()->z;
}

void append_element(GreedyState& state, const KroneckerSumOperator& op, const MetricSet& m,
                    RankOne z) {
  auto e = image(op, m, std::move(z));
  const Index n = static_cast<Index>(state.basis.size());
  state.basis.push_back(e);
  auto grow = [n](Matrix& g) {
    Matrix next = Matrix::Zero(n + 1, n + 1);
    next.topLeftCorner(n, n) = g;
    g = std::move(next);
  };
  grow(state.gram_a);
  grow(state.gram_h);
  grow(state.gram_aa);
  for (Index l = 0; l <= n; ++l) {
    const auto& x = *state.basis[static_cast<std::size_t>(l)];
    const double ga = a_inner(x, *e);
    const double gh = h_inner(x, *e);
    const double gaa = aa_inner(x, *e);
    state.gram_a(l, n) = state.gram_a(n, l) = ga;
    state.gram_h(l, n) = state.gram_h(n, l) = gh;
    state.gram_aa(l, n) = state.gram_aa(n, l) = gaa;
  }
  Vector c = Vector::Zero(n + 1);
  c.head(n) = state.coefs;
  state.coefs = std::move(c);
}

GreedyState make_state(const KroneckerSumOperator& op, const MetricSet& m, const RankOne& u0) {
  check_conformant(op, m);
  GreedyState s;
  s.coefs = Vector(0);
  append_element(s, op, m, u0);
  const double h = s.gram_h(0, 0);
  if (!(h > 1e-28)) throw DegenerateIterate("initial element is zero");
  s.coefs[0] = 1.0 / std::sqrt(h);
  s.lambda = s.gram_a(0, 0) / h;
  return s;
}

namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

MetricSet effective_metric(const MetricSet& m, const GreedyConfig& cfg) {
  return cfg.variant == Variant::Residual ? m.with_nu(cfg.nu) : m;
}

AdmConfig step_adm_config(const GreedyState& state, const GreedyConfig& cfg) {
  AdmConfig adm = cfg.adm;
  adm.rng_seed = mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(state.n + 1));
  adm.start.reset();
  if (cfg.warm_start)
    if (const RankOne* prev = state.last_correction(); prev && !prev->is_zero()) adm.start = *prev;
  return adm;
}

bool residual_small(double residual, double lambda, const GreedyConfig& cfg) {
  return residual <= cfg.tol_residual * std::max(1.0, std::abs(lambda));
}

// Removes basis element `drop` from state (coefficients, Gram rows/columns).
void remove_element(GreedyState& s, Index drop) {
  const Index n = static_cast<Index>(s.basis.size());
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i)
    if (i != drop) keep.push_back(i);
  auto shrink = [&keep](const Matrix& g) {
    Matrix out(static_cast<Index>(keep.size()), static_cast<Index>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = 0; b < keep.size(); ++b)
        out(static_cast<Index>(a), static_cast<Index>(b)) = g(keep[a], keep[b]);
    return out;
  };
  s.gram_a = shrink(s.gram_a);
  s.gram_h = shrink(s.gram_h);
  s.gram_aa = shrink(s.gram_aa);
  Vector c(static_cast<Index>(keep.size()));
  std::vector<std::shared_ptr<const ImagedRankOne>> b;
  for (std::size_t a = 0; a < keep.size(); ++a) {
    c[static_cast<Index>(a)] = s.coefs[keep[a]];
    b.push_back(s.basis[static_cast<std::size_t>(keep[a])]);
  }
  s.coefs = std::move(c);
  s.basis = std::move(b);
}

// Element with the smallest pivot of a diagonally pivoted LDL^T of the
// correlation matrix of gram_h (ties resolve toward later elements).
Index smallest_pivot(const Matrix& gram_h) {
  const Vector d = gram_h.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix corr = d.asDiagonal() * gram_h * d.asDiagonal();
  Eigen::LDLT<Matrix> ldlt(corr);
  const auto& p = ldlt.transpositionsP();
  Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(corr.rows(), 0, static_cast<int>(corr.rows()) - 1);
  perm = p.transpose() * perm;
  const Vector piv = ldlt.vectorD();
  Index worst = 0;
  for (Index i = 1; i < piv.size(); ++i)
    if (std::abs(piv[i]) < std::abs(piv[worst])) worst = i;
  return perm[worst];
}

// Smallest eigenpair of (ga, gh) after scaling both to unit diagonal of gh, so
// the pivot test measures linear dependence rather than the (shrinking) norms
// of late corrections.
SmallestEigenpair scaled_smallest(const Matrix& ga, const Matrix& gh) {
  const Vector d = gh.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  SmallestEigenpair ep =
      gen_sym_eig_smallest(d.asDiagonal() * ga * d.asDiagonal(), d.asDiagonal() * gh * d.asDiagonal());
  ep.c = d.asDiagonal() * ep.c;
  return ep;
}

}  // namespace

GreedyState orthogonal_update(const GreedyState& state, const KroneckerSumOperator&,
                              const MetricSet&, const GreedyConfig&) {
  if (state.basis.empty()) throw StructuralError("orthogonal update needs a non-empty basis");
  GreedyState out = state;
  const Vector prev = state.coefs;  // u_{n-1} over the full basis
  const Matrix gram_h_full = state.gram_h;

  Index dropped = -1;
  SmallestEigenpair ep;
  try {
    ep = scaled_smallest(out.gram_a, out.gram_h);
  } catch (const IllConditionedGram&) {
    dropped = smallest_pivot(out.gram_h);
    remove_element(out, dropped);
    ep = scaled_smallest(out.gram_a, out.gram_h);  // a second failure propagates
  }
  // Sign rule <u_{n-1}, u_n> > 0, evaluated on the full basis.
  Vector full = Vector::Zero(prev.size());
  for (Index i = 0, k = 0; i < prev.size(); ++i)
    if (i != dropped) full[i] = ep.c[k++];
  const double overlap = prev.dot(gram_h_full * full);
  out.coefs = overlap <= 0.0 ? Vector(-ep.c) : ep.c;
  out.lambda = out.coefs.dot(out.gram_a * out.coefs);
  return out;
}

GreedyState initialize(const KroneckerSumOperator& op, const MetricSet& m, const GreedyConfig& cfg) {
  cfg.validate();
  check_conformant(op, m);
  const double t0 = now_ms();
  // Alternating minimization of J over rank-one tensors has non-global fixed
  // points; several seeded starts approximate argmin over the dictionary.
  AdmOutcome outcome;
  int sweeps = 0;
  for (int s = 0; s < cfg.init_starts; ++s) {
    AdmConfig adm = cfg.adm;
    adm.rng_seed = s == 0 ? mix_seed(cfg.rng_seed, 0) : mix_seed(mix_seed(cfg.rng_seed, 0), s);
    auto o = adm_initial_guess(op, m, adm);
    sweeps += o.sweeps_used;
    if (s == 0 || o.objective < outcome.objective) outcome = std::move(o);
  }
  outcome.sweeps_used = sweeps;
  GreedyState s = make_state(op, m, outcome.z);
  TraceRow row;
  row.n = 0;
  row.lambda = s.lambda;
  row.lambda_pure = s.lambda;
  row.eig_residual_h = s.eig_residual_h();
  row.adm_sweeps = outcome.sweeps_used;
  row.adm_converged = outcome.converged;
  row.wall_time_ms = now_ms() - t0;
  s.trace.push_back(row);
  if (residual_small(row.eig_residual_h, s.lambda, cfg)) {
    s.reason = StopReason::InitialGuessIsEigenvector;
    s.diagnostic = "rank-one initial guess is an eigenvector";
  }
  return s;
}

GreedyState step(const GreedyState& state, const KroneckerSumOperator& op, const MetricSet& m_in,
                 const GreedyConfig& cfg) {
  const double t0 = now_ms();
  const MetricSet m = effective_metric(m_in, cfg);
  const double nu = m.nu();
  const ContextProjection ctx = state.context();
  const AdmConfig adm = step_adm_config(state, cfg);

  GreedyState out = state;
  out.n = state.n + 1;
  TraceRow row;
  row.n = out.n;

  AdmOutcome outcome;
  try {
    switch (cfg.variant) {
      case Variant::Rayleigh: outcome = adm_rayleigh_step(op, m, ctx, adm); break;
      case Variant::Residual: outcome = adm_residual_step(op, m, ctx, state.lambda, adm); break;
      case Variant::Explicit: outcome = adm_explicit_step(op, m, ctx, state.lambda, adm); break;
    }
  } catch (const Error& e) {
    out.n = state.n;
    out.reason = StopReason::StepFailure;
    out.diagnostic = e.what();
    return out;
  }
  if (cfg.variant == Variant::Explicit && !outcome.converged) {
    out.n = state.n;
    out.reason = StopReason::StepFailure;
    out.diagnostic = "ExplicitStepFailure: explicit ADM did not settle within " +
                     std::to_string(adm.max_sweeps) + " sweeps";
    return out;
  }
  row.adm_sweeps = outcome.sweeps_used;
  row.adm_converged = outcome.converged;

  if (outcome.z.is_zero()) {
    row.lambda = row.lambda_pure = state.lambda;
    row.eig_residual_h = state.eig_residual_h();
    row.wall_time_ms = now_ms() - t0;
    out.trace.push_back(row);
    out.reason = StopReason::FixedPoint;
    out.diagnostic = "correction vanished: u_{n-1} is a fixed point";
    return out;
  }

  append_element(out, op, m, outcome.z);
  const Index last = static_cast<Index>(out.basis.size()) - 1;
  const Vector prev = out.coefs;  // u_{n-1}, padded

  // Pure update.
  Vector pure = prev;
  pure[last] = 1.0;
  const double norm2 = pure.dot(out.gram_h * pure);
  if (!(norm2 >= 1e-24)) {
    out = state;
    out.reason = StopReason::StepFailure;
    out.diagnostic = "DegenerateIterate: |u_{n-1} + z_n| below 1e-12";
    return out;
  }
  const double norm = std::sqrt(norm2);
  pure /= norm;
  const double lambda_pure = pure.dot(out.gram_a * pure);

  const double zz_a = out.gram_a(last, last);
  const double zz_h = out.gram_h(last, last);
  const double z_norm_h = std::sqrt(zz_h);
  const Vector ga_col = out.gram_a.col(last);
  const Vector gh_col = out.gram_h.col(last);
  double euler = 0.0;
  switch (cfg.variant) {
    case Variant::Rayleigh:
      euler = std::abs(pure.dot(ga_col) - lambda_pure * pure.dot(gh_col));
      break;
    case Variant::Residual: {
      const double a_sum = prev.dot(ga_col) + zz_a;
      const double h_sum = prev.dot(gh_col) + zz_h;
      euler = std::abs(a_sum + nu * h_sum - (state.lambda + nu) * prev.dot(gh_col));
      break;
    }
    case Variant::Explicit: {
      const double a_sum = prev.dot(ga_col) + zz_a;
      const double h_sum = prev.dot(gh_col) + zz_h;
      euler = std::abs(a_sum - state.lambda * h_sum);
      break;
    }
  }
  row.euler_residual = z_norm_h > 0.0 ? euler / z_norm_h : 0.0;
  row.z_norm_a = std::sqrt(std::max(0.0, zz_a + nu * zz_h));
  row.alpha_n = 1.0 / norm;
  row.lambda_pure = lambda_pure;

  out.coefs = pure;
  out.lambda = lambda_pure;
  if (cfg.orthogonal) {
    out.coefs = prev;
    try {
      GreedyState o = orthogonal_update(out, op, m, cfg);
      o.trace = out.trace;
      out = std::move(o);
    } catch (const IllConditionedGram& e) {
      out = state;
      out.reason = StopReason::StepFailure;
      out.diagnostic = std::string("orthogonal update failed twice: ") + e.what();
      return out;
    }
  }
  out.n = state.n + 1;
  row.lambda = out.lambda;
  row.lambda_decrease = state.lambda - out.lambda;
  row.eig_residual_h = out.eig_residual_h();
  row.wall_time_ms = now_ms() - t0;
  out.trace.push_back(row);
  return out;
}

GreedyResult run(const KroneckerSumOperator& op, const MetricSet& m, const GreedyConfig& cfg,
                 const TraceObserver& observer) {
  GreedyState state = initialize(op, m, cfg);
  if (observer) observer(state, state.trace.back());
  int small_decreases = 0;
  while (state.reason == StopReason::Running && state.n < cfg.max_iter) {
    const std::size_t rows = state.trace.size();
    state = step(state, op, m, cfg);
    if (state.trace.size() > rows && observer) observer(state, state.trace.back());
    if (state.reason != StopReason::Running) break;
    const auto& row = state.trace.back();
    if (residual_small(row.eig_residual_h, state.lambda, cfg)) {
      state.reason = StopReason::ResidualConverged;
      break;
    }
    const double scale = std::max(1.0, std::abs(state.lambda));
    small_decreases = std::abs(row.lambda_decrease) < cfg.tol_lambda * scale ? small_decreases + 1 : 0;
    if (small_decreases >= 3) {
      state.reason = StopReason::Stagnated;
      break;
    }
  }
  if (state.reason == StopReason::Running) state.reason = StopReason::MaxIterations;

  GreedyResult result;
  result.lambda = state.lambda;
  result.u = state.u();
  result.trace = std::move(state.trace);
  result.reason = state.reason;
  result.diagnostic = std::move(state.diagnostic);
  result.iterations = state.n;
  return result;
}

double estimate_min_contracted_eigenvalue(const KroneckerSumOperator& op, const MetricSet& m,
                                          const RankOne& z) {
  double best = kInfinity;
  const ContextProjection none;
  for (Index j = 0; j < op.dims(); ++j) {
    const auto dd = reduce_direction(op, m, z, j, none);
    best = std::min(best, gen_sym_eig_smallest(dd.a_mat, dd.m_mat).tau);
  }
  return best;
}

}  // namespace geig
