#include "greedy_eig/problems.hpp"

#include "greedy_eig/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace geig {

namespace {

Matrix random_orthogonal(Rng& rng, Index n) {
  const Matrix g = rng.normal_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix column signs so Q does not depend on the QR sign convention.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  return q;
}

Matrix random_spd(Rng& rng, Index n) {
  const Matrix q = random_orthogonal(rng, n);
  Vector lam(n);
  for (Index i = 0; i < n; ++i) lam[i] = rng.uniform(0.5, 10.0);
  const Matrix s = q * lam.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

Matrix unit(Index n, Index a, Index b) {
  Matrix e = Matrix::Zero(n, n);
  e(a, b) = 1.0;
  return e;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSpec(what);
}

}  // namespace

Problem gen_random_kronecker(Index d, const Sizes& sizes, Index k_terms, std::uint64_t seed) {
  require(d >= 1 && static_cast<Index>(sizes.size()) == d, "sizes must list d dimensions");
  require(k_terms >= 1, "K must be >= 1");
  for (Index n : sizes) require(n >= 2, "every size must be >= 2");
  Rng rng(seed);
  std::vector<KroneckerSumOperator::Term> terms;
  for (Index k = 0; k < k_terms; ++k) {
    KroneckerSumOperator::Term t;
    for (Index j = 0; j < d; ++j) t.emplace_back(random_spd(rng, sizes[static_cast<std::size_t>(j)]));
    terms.push_back(std::move(t));
  }
  return {KroneckerSumOperator(sizes, std::move(terms)), MetricSet::identity(sizes)};
}

Problem gen_separable(const std::vector<Matrix>& one_body) {
  require(!one_body.empty(), "separable operator needs at least one one-body matrix");
  Sizes sizes;
  for (const auto& dj : one_body) {
    require(dj.rows() == dj.cols() && dj.rows() >= 1, "one-body matrices must be square");
    require(dj.isApprox(dj.transpose(), 1e-12) || dj.isZero(), "one-body matrices must be symmetric");
    sizes.push_back(dj.rows());
  }
  std::vector<KroneckerSumOperator::Term> terms;
  for (std::size_t j = 0; j < one_body.size(); ++j) {
    KroneckerSumOperator::Term t;
    for (std::size_t i = 0; i < one_body.size(); ++i)
      t.push_back(i == j ? FactorMatrix(one_body[j]) : FactorMatrix::identity(sizes[i]));
    terms.push_back(std::move(t));
  }
  return {KroneckerSumOperator(sizes, std::move(terms)), MetricSet::identity(sizes)};
}

Problem gen_separable_seeded(const Sizes& sizes, std::uint64_t seed) {
  require(!sizes.empty(), "sizes must not be empty");
  for (Index n : sizes) require(n >= 2, "every size must be >= 2");
  Rng rng(seed);
  std::vector<Matrix> one_body;
  for (Index n : sizes) one_body.push_back(random_spd(rng, n));
  return gen_separable(one_body);
}

Problem gen_degenerate_lowest(const Sizes& sizes, int multiplicity, std::uint64_t seed,
                              const DegenerateParams& params) {
  require(sizes.size() == 2, "degenerate generator supports d = 2 only");
  for (Index n : sizes) require(n >= 2, "every size must be >= 2");
  const Index n1 = sizes[0];
  const Index n2 = sizes[1];
  const Index total = n1 * n2;
  require(multiplicity >= 1 && multiplicity <= 4, "multiplicity must be in 1..4");
  require(multiplicity < total, "multiplicity must be smaller than the dimension");
  require(params.gap > 0.0 && params.spread >= 0.0, "gap must be > 0 and spread >= 0");

  Rng rng(seed);
  const Matrix v = random_orthogonal(rng, total);
  Vector lam(total);
  for (Index i = 0; i < total; ++i)
    lam[i] = i < multiplicity ? params.mu1 : params.mu1 + params.gap + params.spread * rng.uniform();
  Matrix full = v * lam.asDiagonal() * v.transpose();
  full = 0.5 * (full + full.transpose());

  std::vector<KroneckerSumOperator::Term> terms;
  for (Index a = 0; a < n1; ++a) {
    const Matrix baa = full.block(a * n2, a * n2, n2, n2);
    terms.push_back({FactorMatrix(unit(n1, a, a)), FactorMatrix(baa)});
    for (Index b = a + 1; b < n1; ++b) {
      const Matrix bab = full.block(a * n2, b * n2, n2, n2);
      const Matrix e = unit(n1, a, b);
      terms.push_back({FactorMatrix(e + e.transpose()), FactorMatrix(bab)});
      terms.push_back({FactorMatrix(e - e.transpose(), FactorSymmetry::Skew),
                       FactorMatrix(bab, FactorSymmetry::Skew)});
    }
  }
  return {KroneckerSumOperator(sizes, std::move(terms)), MetricSet::identity(sizes)};
}

double trap_eigenvalue(const TrapParams& p, Index k, Index l) {
  if (k == 0 && l == 2) return p.mu_02;
  if (k == 2 && l == 0) return p.mu_20;
  if (k == 1 && l == 1) return p.mu_11;
  const double n = static_cast<double>(p.modes_per_dim);
  const double w = (1.0 + k * k) * (1.0 + l * l);
  // Middle of the admissible band [M + w/2, M + w], with a small index-dependent
  // offset that keeps all eigenvalues distinct.
  return p.m_shift + 0.75 * w + 0.01 * static_cast<double>(k * p.modes_per_dim + l + 1) / (n * n + 1.0);
}

TrapCertificate certify_trap(const TrapParams& p) {
  require(p.modes_per_dim >= 3, "modes_per_dim must be >= 3");
  require(0.0 < p.mu_02, "violated 0 < mu_02");
  require(p.mu_02 < p.mu_11, "violated mu_02 < mu_11");
  require(p.mu_11 < p.mu_20, "violated mu_11 < mu_20");
  require(p.mu_20 < p.m_shift, "violated mu_20 < M_shift");
  require(p.mu_20 > p.mu_02 + 2.0 * p.mu_11, "violated mu_20 > mu_02 + 2 mu_11");

  TrapCertificate c;
  c.mu_00 = trap_eigenvalue(p, 0, 0);
  c.mu_22 = trap_eigenvalue(p, 2, 2);
  c.discriminant_margin =
      (c.mu_22 - p.mu_11) * (c.mu_00 - p.mu_11) - (p.mu_11 - p.mu_02) * (p.mu_11 - p.mu_02);
  require(c.discriminant_margin > 0.0,
          "violated (mu_11 - mu_02)^2 < (mu_22 - mu_11)(mu_00 - mu_11)");

  // J((cos t e0 + sin t e2) (x) (cos f e0 + sin f e2)) >= mu_11 on a grid of
  // [0, pi)^2 (J is pi-periodic in each angle).
  constexpr int kGrid = 360;
  c.grid_margin = kInfinity;
  for (int a = 0; a < kGrid; ++a) {
    const double t = std::numbers::pi * a / kGrid;
    const double ct = std::cos(t), st = std::sin(t);
    for (int b = 0; b < kGrid; ++b) {
      const double f = std::numbers::pi * b / kGrid;
      const double cf = std::cos(f), sf = std::sin(f);
      const double plus = ct * sf + cf * st;
      const double minus = ct * sf - cf * st;
      const double j = ct * ct * cf * cf * c.mu_00 + st * st * sf * sf * c.mu_22 +
                       0.5 * plus * plus * p.mu_02 + 0.5 * minus * minus * p.mu_20;
      c.grid_margin = std::min(c.grid_margin, j - p.mu_11);
    }
  }
  require(c.grid_margin >= 0.0, "grid check found J(z_theta_phi) < mu_11");

  // Every other eigenvalue must stay above mu_20 so that e1 (x) e1 is the
  // rank-one minimizer and mu_02 the ground state.
  for (Index k = 0; k < p.modes_per_dim; ++k)
    for (Index l = 0; l < p.modes_per_dim; ++l) {
      const bool special = (k == 0 && l == 2) || (k == 2 && l == 0) || (k == 1 && l == 1);
      if (!special) require(trap_eigenvalue(p, k, l) > p.mu_20, "truncated modes must exceed mu_20");
    }
  return c;
}

Problem gen_excited_trap(const TrapParams& p) {
  certify_trap(p);
  const Index n = p.modes_per_dim;
  const double avg = 0.5 * (p.mu_02 + p.mu_20);
  const double coupling = 0.25 * (p.mu_02 - p.mu_20);

  std::vector<Matrix> q(2, Matrix::Identity(n, n));
  if (p.rotation_seed) {
    Rng rng(*p.rotation_seed);
    q[0] = random_orthogonal(rng, n);
    q[1] = random_orthogonal(rng, n);
  }
  auto rot = [&q](int j, const Matrix& x) -> Matrix { return q[j] * x * q[j].transpose(); };

  std::vector<KroneckerSumOperator::Term> terms;
  for (Index k = 0; k < n; ++k) {
    Vector diag(n);
    for (Index l = 0; l < n; ++l) diag[l] = trap_eigenvalue(p, k, l);
    if (k == 0) diag[2] = avg;
    if (k == 2) diag[0] = avg;
    terms.push_back({FactorMatrix(rot(0, unit(n, k, k))), FactorMatrix(rot(1, diag.asDiagonal()))});
  }
  // (mu_02 - mu_20)/2 (E02 (x) E20 + E20 (x) E02) = coupling (S (x) S - W (x) W).
  const Matrix e = unit(n, 0, 2);
  const Matrix s = e + e.transpose();
  const Matrix w = e - e.transpose();
  terms.push_back({FactorMatrix(rot(0, coupling * s)), FactorMatrix(rot(1, s))});
  terms.push_back({FactorMatrix(rot(0, -coupling * w), FactorSymmetry::Skew),
                   FactorMatrix(rot(1, w), FactorSymmetry::Skew)});
  const Sizes sizes{n, n};
  return {KroneckerSumOperator(sizes, std::move(terms)), MetricSet::identity(sizes)};
}

// -- specs -------------------------------------------------------------------

std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::RandomKronecker: return "RandomKronecker";
    case ProblemKind::Separable: return "Separable";
    case ProblemKind::DegenerateLowest: return "DegenerateLowest";
    case ProblemKind::ExcitedTrap: return "ExcitedTrap";
    case ProblemKind::FromFile: return "FromFile";
  }
  return "Unknown";
}

ProblemKind problem_kind_from_string(std::string_view s) {
  for (auto k : {ProblemKind::RandomKronecker, ProblemKind::Separable,
                 ProblemKind::DegenerateLowest, ProblemKind::ExcitedTrap, ProblemKind::FromFile})
    if (to_string(k) == s) return k;
  throw InvalidSpec("unknown problem kind '" + std::string(s) + "'");
}

void ProblemSpec::validate() const {
  switch (kind) {
    case ProblemKind::RandomKronecker:
    case ProblemKind::DegenerateLowest:
      require(!sizes.empty(), "sizes must not be empty");
      for (Index n : sizes) require(n >= 2, "every size must be >= 2");
      require(k_terms >= 1, "K must be >= 1");
      break;
    case ProblemKind::Separable:
      if (one_body.empty()) {
        require(!sizes.empty(), "sizes must not be empty");
        for (Index n : sizes) require(n >= 2, "every size must be >= 2");
      }
      break;
    case ProblemKind::ExcitedTrap: certify_trap(trap); break;
    case ProblemKind::FromFile: require(!path.empty(), "FromFile needs a path"); break;
  }
}

Problem build_problem(const ProblemSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ProblemKind::RandomKronecker:
      return gen_random_kronecker(static_cast<Index>(spec.sizes.size()), spec.sizes, spec.k_terms,
                                  spec.seed);
    case ProblemKind::Separable:
      return spec.one_body.empty() ? gen_separable_seeded(spec.sizes, spec.seed)
                                   : gen_separable(spec.one_body);
    case ProblemKind::DegenerateLowest:
      return gen_degenerate_lowest(spec.sizes, spec.multiplicity, spec.seed, spec.degenerate);
    case ProblemKind::ExcitedTrap: return gen_excited_trap(spec.trap);
    case ProblemKind::FromFile: return load_operator(spec.path);
  }
  throw InvalidSpec("unhandled problem kind");
}

// -- serialization -----------------------------------------------------------

namespace {

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void block(const FactorMatrix& f) {
    u8(f.is_skew() ? 1 : 0);
    const Matrix& x = f.matrix();
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) f64(x(i, j));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return s_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("truncated file while reading ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(s_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(s_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(s_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  Matrix matrix(Index n, const char* what) {
    need(static_cast<std::size_t>(n * n) * 8, what);
    Matrix x(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) x(i, j) = f64(what);
    return x;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_operator(const KroneckerSumOperator& op, const MetricSet& m) {
  check_conformant(op, m);
  Writer w;
  w.bytes("GEIG", 4);
  w.u32(kOperatorFormatVersion);
  w.u32(static_cast<std::uint32_t>(op.dims()));
  for (Index n : op.sizes()) w.u64(static_cast<std::uint64_t>(n));
  w.u64(static_cast<std::uint64_t>(op.num_terms()));
  for (const auto& t : op.terms())
    for (const auto& f : t) w.block(f);
  for (const auto& mj : m.masses()) w.block(mj);
  w.f64(m.nu());
  return w.take();
}

Problem deserialize_operator(const std::string& bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (bytes.compare(0, 4, "GEIG") != 0) throw ParseError("bad magic (expected GEIG)", 0);
  for (int i = 0; i < 4; ++i) r.u8("magic");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kOperatorFormatVersion)
    throw VersionError("operator file format " + std::to_string(version) + " (at byte " +
                       std::to_string(version_at) + "); this build reads format " +
                       std::to_string(kOperatorFormatVersion));
  const std::size_t d_at = r.offset();
  const std::uint32_t d = r.u32("d");
  if (d < 1 || d > 64) throw ParseError("implausible dimension count " + std::to_string(d), d_at);
  Sizes sizes;
  std::uint64_t block_bytes = 0;
  for (std::uint32_t j = 0; j < d; ++j) {
    const std::size_t at = r.offset();
    const std::uint64_t n = r.u64("sizes");
    if (n < 1 || n > (1u << 20)) throw ParseError("implausible size " + std::to_string(n), at);
    sizes.push_back(static_cast<Index>(n));
    block_bytes += 1 + 8 * n * n;
  }
  const std::size_t k_at = r.offset();
  const std::uint64_t k = r.u64("K");
  if (k < 1 || k > r.remaining() / block_bytes)
    throw ParseError("term count " + std::to_string(k) + " inconsistent with file length", k_at);

  std::vector<KroneckerSumOperator::Term> terms;
  for (std::uint64_t t = 0; t < k; ++t) {
    KroneckerSumOperator::Term term;
    for (std::uint32_t j = 0; j < d; ++j) {
      const std::size_t at = r.offset();
      const std::uint8_t tag = r.u8("symmetry tag");
      if (tag > 1) throw ParseError("bad symmetry tag " + std::to_string(tag), at);
      Matrix x = r.matrix(sizes[j], "factor block");
      try {
        term.emplace_back(std::move(x), tag == 1 ? FactorSymmetry::Skew : FactorSymmetry::Symmetric);
      } catch (const Error& e) {
        throw ParseError(std::string("invalid factor block: ") + e.what(), at);
      }
    }
    terms.push_back(std::move(term));
  }
  std::vector<FactorMatrix> masses;
  for (std::uint32_t j = 0; j < d; ++j) {
    const std::size_t at = r.offset();
    const std::uint8_t tag = r.u8("mass tag");
    if (tag != 0) throw ParseError("mass blocks must be symmetric", at);
    Matrix x = r.matrix(sizes[j], "mass block");
    try {
      masses.emplace_back(std::move(x));
    } catch (const Error& e) {
      throw ParseError(std::string("invalid mass block: ") + e.what(), at);
    }
  }
  const std::size_t nu_at = r.offset();
  const double nu = r.f64("nu");
  if (r.remaining() != 0) throw ParseError("trailing bytes after nu", r.offset());
  try {
    KroneckerSumOperator op(sizes, std::move(terms));
    MetricSet m(std::move(masses), nu);
    return {std::move(op), std::move(m)};
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent operator: ") + e.what(), nu_at);
  }
}

void save_operator(const KroneckerSumOperator& op, const MetricSet& m,
                   const std::filesystem::path& path) {
  const std::string bytes = serialize_operator(op, m);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
  }
  int skew_terms = 0;
  for (const auto& t : op.terms())
    for (const auto& f : t)
      if (f.is_skew()) {
        ++skew_terms;
        break;
      }
  nlohmann::json meta = {{"format", "GEIG"},
                         {"version", kOperatorFormatVersion},
                         {"d", op.dims()},
                         {"sizes", op.sizes()},
                         {"K", op.num_terms()},
                         {"terms_with_skew_factors", skew_terms},
                         {"nu", m.nu()},
                         {"bytes", bytes.size()}};
  std::ofstream side(path.string() + ".json", std::ios::trunc);
  side << meta.dump(2) << "\n";
}

Problem load_operator(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_operator(ss.str());
}

}  // namespace geig
