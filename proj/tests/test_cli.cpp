#include "greedy_eig/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geig;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "geig_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// Drops the trailing wall_time_ms column, the only non-reproducible one.
std::string without_timing(const fs::path& p) {
  std::string out;
  for (auto row : read_csv(p)) {
    row.pop_back();
    for (const auto& c : row) out += c + ",";
    out += "\n";
  }
  return out;
}

CommandOptions opts(const fs::path& config, const std::string& out) {
  CommandOptions o;
  o.config = config;
  o.out = work_dir() / out;
  return o;
}

const char* kSmall = R"({
  "problem": {"kind": "RandomKronecker", "sizes": [8, 8], "K": 2, "seed": 1},
  "solver": {"variant": "PRaGA", "rng_seed": 1}
})";

}  // namespace

TEST_CASE("config parsing") {
  const auto rc = parse_run_config(R"({
    "problem": {"kind": "DegenerateLowest", "sizes": [6, 6], "seed": 3, "multiplicity": 2,
                "degenerate": {"mu1": 2.0, "gap": 0.5, "spread": 4.0}},
    "solver": {"variant": "OReGA", "nu": 3.5, "max_iter": 17, "tol_lambda": 1e-13,
               "tol_residual": 1e-9, "rng_seed": 5, "warm_start": true,
               "adm": {"max_sweeps": 20, "tol_sweep": 1e-9, "restart_attempts": 1}},
    "variants": ["PRaGA", "OEGA"],
    "output": {"trace": "t.csv", "result": "r.json"},
    "oracle": {"enabled": false, "degeneracy_tol": 1e-6}
  })", "/base");
  CHECK(rc.problem.kind == ProblemKind::DegenerateLowest);
  CHECK(rc.problem.multiplicity == 2);
  CHECK(rc.problem.degenerate.gap == 0.5);
  CHECK(rc.solver.variant == Variant::Residual);
  CHECK(rc.solver.orthogonal);
  CHECK(rc.solver.nu == 3.5);
  CHECK(rc.solver.max_iter == 17);
  CHECK(rc.solver.warm_start);
  CHECK(rc.solver.adm.max_sweeps == 20);
  CHECK(rc.variants.size() == 2);
  CHECK(rc.trace_path == fs::path("/base/t.csv"));
  CHECK_FALSE(rc.oracle);
  CHECK(rc.degeneracy_tol == 1e-6);
  CHECK(parse_run_config(R"({"problem": {"kind": "Separable", "sizes": [3, 3]}, "oracle": false})").oracle ==
        false);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_run_config(R"({"problem": {"kind": "Separable", "sizes": [3, 3]}, "extra": 1})"),
                  InvalidSpec);
  CHECK_THROWS_AS(parse_run_config(R"({"problem": {"kind": "Separable", "sizes": [3, 3], "seeed": 1}})"),
                  InvalidSpec);
  CHECK_THROWS_AS(parse_run_config(R"({"problem": {"kind": "Separable"}, "solver": {"variant": "XYZ"}})"),
                  InvalidSpec);
  CHECK_THROWS_AS(parse_run_config(R"({"problem": {"kind": "Separable", "sizes": "three"}})"), InvalidSpec);
  CHECK_THROWS_AS(parse_run_config(R"({"solver": {}})"), InvalidSpec);
  try {
    parse_run_config("{\"problem\": {\"kind\": ");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("variant names parse") {
  CHECK(parse_variant_name("PEGA").variant == Variant::Explicit);
  CHECK(parse_variant_name("ORaGA").orthogonal);
  CHECK_THROWS_AS(parse_variant_name("praga"), InvalidSpec);
}

TEST_CASE("exit codes by stop reason") {
  CHECK(exit_code_for(StopReason::ResidualConverged) == kExitOk);
  CHECK(exit_code_for(StopReason::InitialGuessIsEigenvector) == kExitOk);
  CHECK(exit_code_for(StopReason::Stagnated) == kExitOk);
  CHECK(exit_code_for(StopReason::FixedPoint) == kExitOk);
  CHECK(exit_code_for(StopReason::MaxIterations) == kExitIterationCap);
  CHECK(exit_code_for(StopReason::StepFailure) == kExitStepFailure);
}

TEST_CASE("gen writes a loadable operator") {
  std::ostringstream log;
  const auto cfg = write_config("toy.json", R"({"problem": {"kind": "RandomKronecker", "sizes": [51, 51], "K": 2, "seed": 1}})");
  CHECK(cmd_gen(opts(cfg, "toy.geig"), log) == kExitOk);
  const auto p = load_operator(work_dir() / "toy.geig");
  CHECK(p.op.sizes() == Sizes{51, 51});
  const auto sep = write_config("sep.json", R"({"problem": {"kind": "Separable", "sizes": [4, 4, 4], "seed": 2}})");
  CHECK(cmd_gen(opts(sep, "sep.geig"), log) == kExitOk);
  const auto bad = write_config("bad.json", R"({"problem": {"kind": "RandomKronecker", "sizes": [1]}})");
  CHECK(cmd_gen(opts(bad, "bad.geig"), log) == kExitInvalid);
  CHECK(cmd_gen(opts(work_dir() / "missing.json", "x.geig"), log) == kExitInvalid);
}

TEST_CASE("solve on a seeded 8x8 instance converges and reports oracle errors") {
  std::ostringstream log;
  const auto cfg = write_config("small.json", kSmall);
  CHECK(cmd_solve(opts(cfg, "small.csv"), log) == kExitOk);
  const auto rows = read_csv(work_dir() / "small.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == std::vector<std::string>{"n", "lambda_n", "lambda_decrease", "z_norm_a",
                                            "euler_residual", "eig_residual_h", "alpha_n",
                                            "err_lambda", "err_vec_h", "err_vec_a",
                                            "wall_time_ms"});
  CHECK(std::stod(rows.back()[7]) <= 1e-8);
  const auto result = json::parse(slurp(work_dir() / "small.csv.result.json"));
  CHECK(result["converged"].get<bool>());
  CHECK(result["err_lambda"].get<double>() <= 1e-8);
  CHECK(result["iterations"].get<int>() == static_cast<int>(rows.size()) - 2);
}

TEST_CASE("solve without oracle leaves the error columns empty") {
  std::ostringstream log;
  const auto cfg = write_config("noor.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [6, 6], "K": 2, "seed": 2},
    "solver": {"variant": "ORaGA"}, "oracle": false})");
  CHECK(cmd_solve(opts(cfg, "noor.csv"), log) == kExitOk);
  const auto rows = read_csv(work_dir() / "noor.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][7].empty());
    CHECK(rows[i][9].empty());
  }
}

TEST_CASE("solve exit codes: iteration cap, step failure, invalid") {
  std::ostringstream log;
  const auto cap = write_config("cap.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [8, 8], "K": 2, "seed": 1},
    "solver": {"variant": "PRaGA", "max_iter": 2}})");
  CHECK(cmd_solve(opts(cap, "cap.csv"), log) == kExitIterationCap);

  const auto pega = write_config("pega.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [8, 8], "K": 2, "seed": 1},
    "solver": {"variant": "PEGA", "rng_seed": 1}})");
  std::ostringstream plog;
  CHECK(cmd_solve(opts(pega, "pega.csv"), plog) == kExitStepFailure);
  CHECK(plog.str().find("diagnostic") != std::string::npos);
  CHECK(json::parse(slurp(work_dir() / "pega.csv.result.json"))["diagnostic"].get<std::string>() != "");

  const auto unknown = write_config("unknown.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [8, 8]}, "solver": {"variant": "PRaGA", "tolerance": 1}})");
  CHECK(cmd_solve(opts(unknown, "u.csv"), log) == kExitInvalid);
  const auto malformed = write_config("malformed.json", "{ \"problem\": ");
  CHECK(cmd_solve(opts(malformed, "m.csv"), log) == kExitInvalid);
  const auto big = write_config("big.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [70, 70], "K": 1}, "solver": {"max_iter": 1}})");
  CHECK(cmd_solve(opts(big, "big.csv"), log) == kExitInvalid);
  const auto badfile = write_config("badfile.json", R"({"problem": {"kind": "FromFile", "path": "nothing.geig"}})");
  CHECK(cmd_solve(opts(badfile, "bf.csv"), log) == kExitInvalid);
}

TEST_CASE("solve on the excited trap exits 0 with a reported gap to mu1") {
  std::ostringstream log;
  const auto cfg = write_config("trap.json", R"({
    "problem": {"kind": "ExcitedTrap", "trap": {"mu_02": 1, "mu_11": 2, "mu_20": 6, "M_shift": 10, "modes_per_dim": 4}},
    "solver": {"variant": "PRaGA"}})");
  CHECK(cmd_solve(opts(cfg, "trap.csv"), log) == kExitOk);
  const auto result = json::parse(slurp(work_dir() / "trap.csv.result.json"));
  CHECK(result["err_lambda"].get<double>() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("solve from an operator file") {
  std::ostringstream log;
  const auto gen = write_config("g.json", R"({"problem": {"kind": "RandomKronecker", "sizes": [6, 5], "seed": 4}})");
  REQUIRE(cmd_gen(opts(gen, "g.geig"), log) == kExitOk);
  const auto cfg = write_config("ff.json", R"({"problem": {"kind": "FromFile", "path": "g.geig"}})");
  CHECK(cmd_solve(opts(cfg, "ff.csv"), log) == kExitOk);
}

TEST_CASE("repeated solves produce identical CSV apart from timings") {
  std::ostringstream log;
  const auto cfg = write_config("rep.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [7, 7], "K": 2, "seed": 5},
    "solver": {"variant": "OReGA"}})");
  CHECK(cmd_solve(opts(cfg, "rep1.csv"), log) == kExitOk);
  CHECK(cmd_solve(opts(cfg, "rep2.csv"), log) == kExitOk);
  CHECK(without_timing(work_dir() / "rep1.csv") == without_timing(work_dir() / "rep2.csv"));
  // --seed changes the problem.
  auto o = opts(cfg, "rep3.csv");
  o.seed = 6;
  CHECK(cmd_solve(o, log) == kExitOk);
  CHECK(without_timing(work_dir() / "rep1.csv") != without_timing(work_dir() / "rep3.csv"));
}

TEST_CASE("compare: long CSV, orthogonal dominance, failures as rows") {
  std::ostringstream log;
  const auto cfg = write_config("cmp.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [8, 8], "K": 2, "seed": 1},
    "solver": {"max_iter": 40},
    "variants": ["PRaGA", "ORaGA", "PEGA", "PRaGA"]})");
  CHECK(cmd_compare(opts(cfg, "cmp.csv"), log) == kExitOk);
  const auto rows = read_csv(work_dir() / "cmp.csv");
  CHECK(rows[0][0] == "variant");
  std::map<std::string, int> count;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ++count[rows[i][0]];
    if (rows[i][0] == "ORaGA") CHECK(std::stod(rows[i][3]) <= std::stod(rows[i][4]) + 1e-10);
  }
  CHECK(count.size() == 3);
  CHECK(count["PRaGA"] > 1);
  CHECK(count["ORaGA"] > 1);
  CHECK(count["PEGA"] >= 1);
  // Variant blocks are ordered by name.
  CHECK(rows[1][0] == "ORaGA");

  const auto empty = write_config("empty.json", R"({
    "problem": {"kind": "RandomKronecker", "sizes": [8, 8]}, "variants": []})");
  CHECK(cmd_compare(opts(empty, "e.csv"), log) == kExitInvalid);
}

TEST_CASE("trace row formatting round-trips doubles") {
  TraceRow r;
  r.n = 3;
  r.lambda = 0.1 + 0.2;
  r.err_lambda = 1e-300;
  const std::string s = trace_csv_row(r);
  CHECK(s.rfind("3,", 0) == 0);
  CHECK(std::stod(s.substr(2, s.find(',', 2) - 2)) == r.lambda);
  CHECK(trace_csv_header().find("wall_time_ms") != std::string::npos);
}
