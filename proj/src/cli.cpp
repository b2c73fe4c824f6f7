#include "greedy_eig/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

namespace geig {

using nlohmann::json;

VariantSpec parse_variant_name(std::string_view name) {
  for (auto v : {Variant::Rayleigh, Variant::Residual, Variant::Explicit})
    for (bool orth : {false, true})
      if (variant_name(v, orth) == name) return {v, orth};
  throw InvalidSpec("unknown variant '" + std::string(name) +
                    "' (expected PRaGA, PReGA, PEGA, ORaGA, OReGA or OEGA)");
}

namespace {

void allow_keys(const json& obj, const char* where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw InvalidSpec(std::string(where) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw InvalidSpec("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw InvalidSpec("matrix must be a non-empty array of rows");
  const Index n = static_cast<Index>(rows.size());
  Matrix x(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n)
      throw InvalidSpec("matrix must be square");
    for (Index j = 0; j < n; ++j) x(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return x;
}

ProblemSpec problem_from_json(const json& p, const std::filesystem::path& base) {
  allow_keys(p, "problem",
             {"kind", "sizes", "K", "seed", "one_body", "multiplicity", "degenerate", "trap", "path"});
  ProblemSpec s;
  if (!p.contains("kind")) throw InvalidSpec("problem.kind is required");
  s.kind = problem_kind_from_string(p.at("kind").get<std::string>());
  if (p.contains("sizes"))
    for (const auto& n : p.at("sizes")) s.sizes.push_back(n.get<Index>());
  read(p, "K", s.k_terms);
  read(p, "seed", s.seed);
  read(p, "multiplicity", s.multiplicity);
  if (p.contains("one_body"))
    for (const auto& m : p.at("one_body")) s.one_body.push_back(matrix_from_json(m));
  if (p.contains("degenerate")) {
    const auto& d = p.at("degenerate");
    allow_keys(d, "problem.degenerate", {"mu1", "gap", "spread"});
    read(d, "mu1", s.degenerate.mu1);
    read(d, "gap", s.degenerate.gap);
    read(d, "spread", s.degenerate.spread);
  }
  if (p.contains("trap")) {
    const auto& t = p.at("trap");
    allow_keys(t, "problem.trap",
               {"mu_02", "mu_11", "mu_20", "M_shift", "modes_per_dim", "rotation_seed"});
    read(t, "mu_02", s.trap.mu_02);
    read(t, "mu_11", s.trap.mu_11);
    read(t, "mu_20", s.trap.mu_20);
    read(t, "M_shift", s.trap.m_shift);
    read(t, "modes_per_dim", s.trap.modes_per_dim);
    if (t.contains("rotation_seed")) s.trap.rotation_seed = t.at("rotation_seed").get<std::uint64_t>();
  }
  if (p.contains("path")) s.path = resolve(base, p.at("path").get<std::string>());
  return s;
}

GreedyConfig solver_from_json(const json& s) {
  allow_keys(s, "solver",
             {"variant", "nu", "max_iter", "tol_lambda", "tol_residual", "rng_seed", "warm_start", "adm"});
  GreedyConfig c;
  if (s.contains("variant")) {
    const auto v = parse_variant_name(s.at("variant").get<std::string>());
    c.variant = v.variant;
    c.orthogonal = v.orthogonal;
  }
  read(s, "nu", c.nu);
  read(s, "max_iter", c.max_iter);
  read(s, "tol_lambda", c.tol_lambda);
  read(s, "tol_residual", c.tol_residual);
  read(s, "rng_seed", c.rng_seed);
  read(s, "warm_start", c.warm_start);
  if (s.contains("adm")) {
    const auto& a = s.at("adm");
    allow_keys(a, "solver.adm", {"max_sweeps", "tol_sweep", "restart_attempts"});
    read(a, "max_sweeps", c.adm.max_sweeps);
    read(a, "tol_sweep", c.adm.tol_sweep);
    read(a, "restart_attempts", c.adm.restart_attempts);
  }
  c.validate();
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed config: ") + e.what(), e.byte);
  }
  try {
    allow_keys(root, "config", {"problem", "solver", "variants", "output", "oracle"});
    RunConfig rc;
    if (!root.contains("problem")) throw InvalidSpec("config.problem is required");
    rc.problem = problem_from_json(root.at("problem"), base_dir);
    if (root.contains("solver")) rc.solver = solver_from_json(root.at("solver"));
    if (root.contains("variants"))
      for (const auto& v : root.at("variants")) {
        rc.variants.push_back(v.get<std::string>());
        parse_variant_name(rc.variants.back());
      }
    if (root.contains("output")) {
      const auto& o = root.at("output");
      allow_keys(o, "output", {"trace", "result"});
      if (o.contains("trace")) rc.trace_path = resolve(base_dir, o.at("trace").get<std::string>());
      if (o.contains("result")) rc.result_path = resolve(base_dir, o.at("result").get<std::string>());
    }
    if (root.contains("oracle")) {
      const auto& o = root.at("oracle");
      if (o.is_boolean()) {
        rc.oracle = o.get<bool>();
      } else {
        allow_keys(o, "oracle", {"enabled", "degeneracy_tol"});
        read(o, "enabled", rc.oracle);
        read(o, "degeneracy_tol", rc.degeneracy_tol);
      }
    }
    return rc;
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("config value has the wrong type: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidSpec("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

int exit_code_for(StopReason reason) {
  if (is_converged(reason)) return kExitOk;
  if (reason == StopReason::MaxIterations) return kExitIterationCap;
  return kExitStepFailure;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

RunConfig load_with_overrides(const CommandOptions& opts) {
  if (opts.config.empty()) throw InvalidSpec("--config is required");
  RunConfig rc = load_run_config(opts.config);
  if (opts.seed) {
    rc.problem.seed = *opts.seed;
    rc.solver.rng_seed = *opts.seed;
  }
  return rc;
}

// Runs one variant, filling err_* columns from the oracle when present and
// warning when the residual shift looks too small.
GreedyResult solve_one(const Problem& prob, const GreedyConfig& cfg, const DenseReference* ref,
                       std::ostream& log) {
  const Sizes sizes = prob.op.sizes();
  auto observer = [&](const GreedyState& state, TraceRow& row) {
    if (row.n == 0 && cfg.variant == Variant::Residual) {
      const double est = estimate_min_contracted_eigenvalue(prob.op, prob.m, state.basis[0]->z);
      if (est + cfg.nu <= 0.0)
        log << "warning: nu = " << cfg.nu << " may leave the shifted form indefinite "
            << "(smallest contracted eigenvalue at u0 is " << est << ")\n";
    }
    if (ref == nullptr) return;
    const auto e = error_metrics(state.u(), state.lambda, *ref, sizes);
    row.err_lambda = e.err_lambda;
    row.err_vec_h = e.err_vec_h;
    row.err_vec_a = e.err_vec_a;
  };
  return run(prob.op, prob.m, cfg, observer);
}

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InvalidSpec& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const VersionError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const TooLargeForOracle& e) {
    log << "error: " << e.what() << " (disable the oracle or raise GREEDY_EIG_ORACLE_LIMIT)\n";
    return kExitInvalid;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitStepFailure;
  }
}

}  // namespace

std::string trace_csv_header() {
  return "n,lambda_n,lambda_decrease,z_norm_a,euler_residual,eig_residual_h,alpha_n,"
         "err_lambda,err_vec_h,err_vec_a,wall_time_ms\n";
}

std::string trace_csv_row(const TraceRow& r) {
  std::string s = std::to_string(r.n);
  for (const std::string& f :
       {fmt(r.lambda), fmt(r.lambda_decrease), fmt(r.z_norm_a), fmt(r.euler_residual),
        fmt(r.eig_residual_h), fmt(r.alpha_n), fmt(r.err_lambda), fmt(r.err_vec_h),
        fmt(r.err_vec_a), fmt(r.wall_time_ms)})
    s += "," + f;
  return s + "\n";
}

int cmd_gen(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig rc = load_with_overrides(opts);
    const std::filesystem::path out = opts.out.value_or("operator.geig");
    const Problem prob = build_problem(rc.problem);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_operator(prob.op, prob.m, out);
    log << "wrote " << out.string() << " (" << to_string(rc.problem.kind) << ", K = "
        << prob.op.num_terms() << ")\n";
    return kExitOk;
  });
}

int cmd_solve(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig rc = load_with_overrides(opts);
    std::filesystem::path trace = opts.out ? *opts.out : rc.trace_path;
    if (trace.empty()) trace = "trace.csv";
    std::filesystem::path result_path = rc.result_path;
    if (result_path.empty() || opts.out) result_path = trace.string() + ".result.json";

    const Problem prob = build_problem(rc.problem);
    std::optional<DenseReference> ref;
    if (rc.oracle) ref = dense_reference(prob.op, prob.m, rc.degeneracy_tol);

    const GreedyResult res = solve_one(prob, rc.solver, ref ? &*ref : nullptr, log);

    std::string csv = trace_csv_header();
    for (const auto& row : res.trace) csv += trace_csv_row(row);
    write_file(trace, csv);

    json out = {{"variant", variant_name(rc.solver.variant, rc.solver.orthogonal)},
                {"reason", std::string(to_string(res.reason))},
                {"converged", is_converged(res.reason)},
                {"lambda", res.lambda},
                {"iterations", res.iterations},
                {"diagnostic", res.diagnostic}};
    if (ref) {
      out["mu1"] = ref->mu1;
      out["eigenspace_dim"] = ref->eigenspace.cols();
      if (!res.trace.empty() && res.trace.back().err_lambda) {
        out["err_lambda"] = *res.trace.back().err_lambda;
        out["err_vec_h"] = *res.trace.back().err_vec_h;
        out["err_vec_a"] = *res.trace.back().err_vec_a;
      }
    }
    write_file(result_path, out.dump(2) + "\n");

    const int code = exit_code_for(res.reason);
    log << variant_name(rc.solver.variant, rc.solver.orthogonal) << ": " << to_string(res.reason)
        << " after " << res.iterations << " iterations, lambda = " << fmt(res.lambda);
    if (ref) log << ", mu1 = " << fmt(ref->mu1);
    log << "\n";
    if (!res.diagnostic.empty()) log << "diagnostic: " << res.diagnostic << "\n";
    return code;
  });
}

int cmd_compare(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig rc = load_with_overrides(opts);
    if (rc.variants.empty()) throw InvalidSpec("compare needs a non-empty 'variants' list");
    std::vector<std::string> names = rc.variants;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());

    std::filesystem::path out_path = opts.out ? *opts.out : rc.trace_path;
    if (out_path.empty()) out_path = "compare.csv";

    const Problem prob = build_problem(rc.problem);
    std::optional<DenseReference> ref;
    if (rc.oracle) ref = dense_reference(prob.op, prob.m, rc.degeneracy_tol);

    std::string csv =
        "variant,reason,n,lambda_n,lambda_pure,lambda_decrease,z_norm_a,euler_residual,"
        "eig_residual_h,alpha_n,err_lambda,err_vec_h,err_vec_a,wall_time_ms\n";
    for (const auto& name : names) {
      GreedyConfig cfg = rc.solver;
      const auto vs = parse_variant_name(name);
      cfg.variant = vs.variant;
      cfg.orthogonal = vs.orthogonal;
      try {
        const GreedyResult res = solve_one(prob, cfg, ref ? &*ref : nullptr, log);
        const std::string reason(to_string(res.reason));
        for (const auto& r : res.trace) {
          csv += name + "," + reason + "," + std::to_string(r.n);
          for (const std::string& f :
               {fmt(r.lambda), fmt(r.lambda_pure), fmt(r.lambda_decrease), fmt(r.z_norm_a),
                fmt(r.euler_residual), fmt(r.eig_residual_h), fmt(r.alpha_n), fmt(r.err_lambda),
                fmt(r.err_vec_h), fmt(r.err_vec_a), fmt(r.wall_time_ms)})
            csv += "," + f;
          csv += "\n";
        }
        log << name << ": " << reason << " after " << res.iterations << " iterations, lambda = "
            << fmt(res.lambda) << "\n";
      } catch (const Error& e) {
        // The failure is recorded as a row and the remaining variants still run.
        csv += name + "," + std::string(to_string(e.code())) + ",,,,,,,,,,,,\n";
        log << name << ": failed: " << e.what() << "\n";
      }
    }
    write_file(out_path, csv);
    return kExitOk;
  });
}

}  // namespace geig
