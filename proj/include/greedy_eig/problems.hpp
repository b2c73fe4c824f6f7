#pragma once

// Deterministic test operators and the binary operator file format.
//
// File layout (all integers and floats little-endian):
//   "GEIG"  u32 version  u32 d  u64 sizes[d]  u64 K
//   K x d factor blocks:  u8 tag (0 symmetric, 1 skew)  f64 entries[N_j * N_j] row-major
//   d mass blocks:        u8 tag (always 0)             f64 entries[N_j * N_j] row-major
//   f64 nu
// A JSON sidecar (<path>.json) mirrors the metadata.

#include "greedy_eig/tensor_core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace geig {

inline constexpr std::uint32_t kOperatorFormatVersion = 1;

struct Problem {
  KroneckerSumOperator op;
  MetricSet m;
};

/// K terms of seeded SPD factors Q diag(U[0.5, 10]) Q^T; identity metric.
Problem gen_random_kronecker(Index d, const Sizes& sizes, Index k_terms, std::uint64_t seed);

/// sum_j I (x) ... (x) D_j (x) ... (x) I; identity metric.
Problem gen_separable(const std::vector<Matrix>& one_body);

/// Seeded symmetric one-body matrices (same law as gen_random_kronecker factors).
Problem gen_separable_seeded(const Sizes& sizes, std::uint64_t seed);

struct DegenerateParams {
  double mu1 = 1.0;
  /// Smallest distance from mu1 to the rest of the spectrum.
  double gap = 1.0;
  /// The remaining eigenvalues are drawn in [mu1 + gap, mu1 + gap + spread].
  double spread = 9.0;
};

/// Two-dimensional operator with prescribed lowest eigenvalue of the given
/// multiplicity (1..4), synthesized densely as V diag(mu) V^T and emitted as
/// the exact Kronecker sum over the N_1^2 block pattern
///   E_aa (x) B_aa,  (E_ab + E_ba) (x) sym(B_ab),  (E_ab - E_ba) (x) skew(B_ab).
Problem gen_degenerate_lowest(const Sizes& sizes, int multiplicity, std::uint64_t seed,
                              const DegenerateParams& params = {});

struct TrapParams {
  double mu_02 = 1.0;
  double mu_11 = 2.0;
  double mu_20 = 6.0;
  double m_shift = 10.0;
  Index modes_per_dim = 4;
  /// When set, each dimension is rotated by a seeded orthogonal matrix.
  std::optional<std::uint64_t> rotation_seed;
};

struct TrapCertificate {
  double mu_00 = 0.0;
  double mu_22 = 0.0;
  /// min over the (theta, phi) grid of J(z_theta_phi) - mu_11 (must be >= 0).
  double grid_margin = 0.0;
  /// (mu_22 - mu_11)(mu_00 - mu_11) - (mu_11 - mu_02)^2 (must be > 0).
  double discriminant_margin = 0.0;
};

/// Eigenvalue mu_{k,l} used by the trap on the truncated basis.
double trap_eigenvalue(const TrapParams& p, Index k, Index l);

/// Checks every condition; throws InvalidSpec naming the first violated one.
TrapCertificate certify_trap(const TrapParams& p);

/// Two-dimensional operator with eigenvectors (e0 (x) e2 +- e2 (x) e0)/sqrt(2)
/// (eigenvalues mu_02, mu_20) and e_k (x) e_l (mu_{k,l}) otherwise. Its best
/// rank-one Rayleigh quotient is mu_11, reached at e1 (x) e1, while the
/// smallest eigenvalue is mu_02.
Problem gen_excited_trap(const TrapParams& p);

// -- specs -------------------------------------------------------------------

enum class ProblemKind { RandomKronecker, Separable, DegenerateLowest, ExcitedTrap, FromFile };

std::string_view to_string(ProblemKind k);
ProblemKind problem_kind_from_string(std::string_view s);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::RandomKronecker;
  Sizes sizes;
  Index k_terms = 2;
  std::uint64_t seed = 0;
  /// Separable: explicit one-body matrices; seeded ones when empty.
  std::vector<Matrix> one_body;
  int multiplicity = 2;
  DegenerateParams degenerate;
  TrapParams trap;
  std::filesystem::path path;

  void validate() const;
};

Problem build_problem(const ProblemSpec& spec);

// -- serialization -----------------------------------------------------------

void save_operator(const KroneckerSumOperator& op, const MetricSet& m,
                   const std::filesystem::path& path);
Problem load_operator(const std::filesystem::path& path);

std::string serialize_operator(const KroneckerSumOperator& op, const MetricSet& m);
/// Throws ParseError (with byte offset) or VersionError.
Problem deserialize_operator(const std::string& bytes);

}  // namespace geig
