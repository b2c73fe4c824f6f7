#pragma once

// Command implementations behind the greedy-eig executable. Each returns the
// process exit code:
//   0 converged (or all compare variants ran), 2 invalid/parse error,
//   3 iteration cap reached, 4 step failure.

#include "greedy_eig/greedy.hpp"
#include "greedy_eig/problems.hpp"
#include "greedy_eig/reference_oracle.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace geig {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitIterationCap = 3;
inline constexpr int kExitStepFailure = 4;

struct VariantSpec {
  Variant variant = Variant::Rayleigh;
  bool orthogonal = false;
};

/// "PRaGA", "PReGA", "PEGA", "ORaGA", "OReGA", "OEGA".
VariantSpec parse_variant_name(std::string_view name);

struct RunConfig {
  ProblemSpec problem;
  GreedyConfig solver;
  /// Variant list for compare.
  std::vector<std::string> variants;
  std::filesystem::path trace_path;
  std::filesystem::path result_path;
  bool oracle = true;
  double degeneracy_tol = kDefaultDegeneracyTol;
};

/// Parses the JSON config. Unknown keys raise InvalidSpec; malformed JSON
/// raises ParseError carrying the byte offset. Relative file paths resolve
/// against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  /// Overrides problem.seed and solver.rng_seed.
  std::optional<std::uint64_t> seed;
};

int cmd_gen(const CommandOptions& opts, std::ostream& log);
int cmd_solve(const CommandOptions& opts, std::ostream& log);
int cmd_compare(const CommandOptions& opts, std::ostream& log);

/// Header and row formatting of the solve trace CSV.
std::string trace_csv_header();
std::string trace_csv_row(const TraceRow& row);

int exit_code_for(StopReason reason);

}  // namespace geig
