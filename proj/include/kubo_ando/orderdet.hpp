#pragma once

// Order determination by the norm of a symmetric connection.
//
// For A, B positive definite and sigma a nontrivial symmetric connection,
//
//   A <= B   iff   ||A sigma X|| <= ||B sigma X||  for all X in the algebra of B - A.
//
// This header checks both sides numerically. The forward side samples
// positive functions of B - A; the reverse side searches for a witness
// X = s P + s delta I with P a spectral projection of B - A below -eps.
// Around the search sit the supporting scans: compressions by spectral
// projections, the norm limit ||X_s + s P|| - s -> ||P X P||, the closed
// form of ||A sigma P|| when f(0+) = 0, and the large-s limit
// ||A sigma (sP + s delta I)|| - beta s (1 + delta) -> (alpha + gamma) ||PAP||.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kubo_ando/errors.hpp"
#include "kubo_ando/loewner.hpp"
#include "kubo_ando/matcore.hpp"
#include "kubo_ando/means.hpp"
#include "kubo_ando/random.hpp"

namespace kubo_ando {

inline constexpr double kLimitTolerance = 1e-6;

/// 1e-9 (1 + max(||A||, ||B||, ||X||)). The ||X|| term keeps the slack
/// proportional to eigensolver noise once s grows large.
inline double norm_tolerance(double norm_a, double norm_b, double norm_x = 0.0) {
  return 1e-9 * (1.0 + std::max({norm_a, norm_b, norm_x}));
}

/// Witness grid.
inline const std::vector<double>& witness_eps_fractions() {
  static const std::vector<double> v = {0.9, 0.5, 0.1};
  return v;
}
inline const std::vector<double>& witness_deltas() {
  static const std::vector<double> v = {0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0};
  return v;
}
inline constexpr int kWitnessMaxExponent = 30;

/// 2^0, 2^1, ..., 2^max_exponent.
inline std::vector<double> power_of_two_grid(int max_exponent, int step = 1) {
  std::vector<double> g;
  for (int k = 0; k <= max_exponent; k += step) g.push_back(std::ldexp(1.0, k));
  return g;
}

/// s (P + delta I), built on P's eigenbasis so the zero block is exact.
inline PsdMatrix projection_pencil(const OrthProjection& p, double s, double delta) {
  SpectralDecomposition sd = p.spectrum();
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    sd.eigenvalues(i) = s * ((sd.eigenvalues(i) > 0.5 ? 1.0 : 0.0) + delta);
  }
  return PsdMatrix::from_spectrum(sd);
}

// ---------------------------------------------------------------------------
// Positive elements of the algebra generated by D

/// g(D) for a scalar g that is nonnegative on the spectrum of D.
template <class G>
PsdMatrix gamma_element(const SymMatrix& d, G&& g) {
  SpectralDecomposition sd = sym_eig(d);
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    const double v = g(sd.eigenvalues(i));
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("gamma element function negative or undefined at " + detail::format_double(sd.eigenvalues(i)));
    }
    sd.eigenvalues(i) = v;
  }
  return PsdMatrix::from_spectrum(sd);
}

/// `count` matrices g(D) with g(t) = p(t / (1 + ||D||))^2 + c for random
/// polynomials p of degree <= 3 (coefficients uniform in [-1, 1]) and
/// constants c uniform in [0.05, 1].
inline std::vector<PsdMatrix> sample_gamma_positive(const SymMatrix& d, std::uint64_t rng_seed, int count) {
  if (count < 1) throw InputError("sample count must be at least 1");
  const SpectralDecomposition sd = sym_eig(d);
  const double scale = 1.0 + sd.norm();
  Rng rng(rng_seed);
  std::vector<PsdMatrix> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int degree = rng.integer(0, 3);
    std::vector<double> coeff(static_cast<std::size_t>(degree) + 1);
    for (auto& c : coeff) c = rng.uniform(-1.0, 1.0);
    const double c0 = rng.uniform(0.05, 1.0);
    SpectralDecomposition g = sd;
    for (Eigen::Index k = 0; k < g.eigenvalues.size(); ++k) {
      const double t = sd.eigenvalues(k) / scale;
      double p = 0.0;
      for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) p = p * t + *it;
      g.eigenvalues(k) = p * p + c0;
    }
    out.push_back(PsdMatrix::from_spectrum(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Compressions by spectral projections

struct Prop2Entry {
  double eps = 0.0;
  int rank = 0;
  double norm_pap = 0.0;
  double norm_pbp = 0.0;
  double max_lambda_a = 0.0;
  double max_lambda_b = 0.0;
  bool norm_ok = true;       // ||PAP|| <= ||PBP||
  bool inclusion_ok = true;  // max-lambda for A <= max-lambda for B
};

struct Prop2Report {
  bool loewner = false;
  bool norm_criterion = true;
  bool inclusion_criterion = true;
  std::vector<Prop2Entry> entries;

  bool consistent() const { return loewner == norm_criterion && loewner == inclusion_criterion; }
};

/// eps values {0.9, 0.5, 0.1} x |lambda_min(B - A)| when B - A has negative
/// spectrum; empty otherwise.
inline std::vector<double> default_eps_grid(const SymMatrix& a, const SymMatrix& b) {
  const double lmin = min_eigenvalue(b - a);
  std::vector<double> out;
  if (lmin < 0.0) {
    for (double frac : witness_eps_fractions()) out.push_back(frac * -lmin);
  }
  return out;
}

/// Evaluates the three order criteria: A <= B; ||PAP|| <= ||PBP||; and
/// inclusion of {lambda : lambda P <= P.P} sets, for the spectral
/// projections P of B - A on (-inf, -eps), eps in `eps_grid`.
inline Prop2Report prop2_criteria(const PsdMatrix& a, const PsdMatrix& b, const std::vector<double>& eps_grid) {
  SymMatrix::check_same_dim(a, b);
  const double tol = norm_tolerance(a.norm(), b.norm());
  Prop2Report report;
  report.loewner = loewner_leq(a, b, tol);
  const SpectralDecomposition d = sym_eig(b - a);
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) throw InputError("eps grid values must be positive");
    const OrthProjection p = spectral_projection(d, Interval::below(-eps));
    if (p.is_zero()) continue;
    Prop2Entry e;
    e.eps = eps;
    e.rank = p.rank();
    const Matrix pm = p.matrix();
    e.norm_pap = operator_norm(SymMatrix::symmetrized(pm * a.matrix() * pm));
    e.norm_pbp = operator_norm(SymMatrix::symmetrized(pm * b.matrix() * pm));
    e.max_lambda_a = compression_max_lambda(a, p);
    e.max_lambda_b = compression_max_lambda(b, p);
    e.norm_ok = e.norm_pap <= e.norm_pbp + tol;
    e.inclusion_ok = e.max_lambda_a <= e.max_lambda_b + tol;
    report.norm_criterion = report.norm_criterion && e.norm_ok;
    report.inclusion_criterion = report.inclusion_criterion && e.inclusion_ok;
    report.entries.push_back(e);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Limit scans

/// A scanned quantity against its predicted limit. Converged when the last
/// three values lie within tol_limit of each other; the extrapolation is
/// the last value.
struct LimitScan {
  std::vector<double> s_values;
  std::vector<double> values;
  double target = 0.0;
  double extrapolated = 0.0;
  bool converged = false;
  std::optional<double> settled_from;  // first s from which every value is within tol_limit of extrapolated

  double error() const { return std::abs(extrapolated - target); }
};

namespace detail {

inline void check_s_grid(const std::vector<double>& s_grid) {
  if (s_grid.size() < 4) throw InputError("scan grid needs at least 4 points");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    if (!(s_grid[i] > 0.0) || (i > 0 && !(s_grid[i] > s_grid[i - 1]))) {
      throw InputError("scan grid must be positive and strictly ascending");
    }
  }
}

inline void finish_scan(LimitScan& scan, double tol_limit) {
  const auto& v = scan.values;
  const std::size_t m = v.size();
  scan.extrapolated = v.back();
  scan.converged = m >= 3 &&
                   std::max({v[m - 1], v[m - 2], v[m - 3]}) - std::min({v[m - 1], v[m - 2], v[m - 3]}) <= tol_limit;
  scan.settled_from.reset();
  for (std::size_t k = m; k-- > 0;) {
    if (std::abs(v[k] - scan.extrapolated) > tol_limit) break;
    scan.settled_from = scan.s_values[k];
  }
}

// ||X + sP|| - s for X positive semidefinite, without the cancellation of
// subtracting s from an eigenvalue near s. With v the top eigenvector of
// X + sP, the Rayleigh quotient gives
//   lambda - s = (v'Xv - s |(I - P)v|^2) / v'v,
// whose error is quadratic in the eigenvector error.
inline double shifted_top_eigenvalue(const Matrix& x, const Matrix& pm, double s) {
  const Matrix m = 0.5 * (x + x.transpose()) + s * pm;
  const SpectralDecomposition sd = eigen_decompose(m);
  const Vector v = sd.basis.col(sd.dim() - 1);
  const Vector off = v - pm * v;
  return (v.dot(x * v) - s * off.squaredNorm()) / v.squaredNorm();
}

}  // namespace detail

/// values[k] = ||X_{s_k} + s_k P|| - s_k, target ||P X P|| for the stated
/// norm limit X of the family (positive semidefinite members).
template <class Family>
LimitScan prop3_limit_scan(Family&& family, const SymMatrix& x_limit, const OrthProjection& p,
                           const std::vector<double>& s_grid, double tol_limit = kLimitTolerance) {
  detail::check_s_grid(s_grid);
  SymMatrix::check_same_dim(x_limit, p);
  LimitScan scan;
  scan.s_values = s_grid;
  const Matrix& pm = p.matrix();
  scan.target = operator_norm(SymMatrix::symmetrized(pm * x_limit.matrix() * pm));
  for (double s : s_grid) {
    const SymMatrix xs = family(s);
    SymMatrix::check_same_dim(xs, p);
    scan.values.push_back(detail::shifted_top_eigenvalue(xs.matrix(), pm, s));
  }
  detail::finish_scan(scan, tol_limit);
  return scan;
}

/// h(x) = f(x) - f(0+) - f°(0+) x, the part of f with h(0+) = h°(0+) = 0.
/// Built from the boundary values alone, so no measure is needed.
inline RepresentingFunction nonaffine_part(const RepresentingFunction& f) {
  if (f.at_0plus() == 0.0 && f.transpose_at_0plus() == 0.0) return f;
  auto fe = f.function();
  return {[fe, a = f.at_0plus(), b = f.transpose_at_0plus()](double x) { return fe(x) - a - b * x; }, 0.0, 0.0,
          "h(" + f.label() + ")"};
}

/// ||A sigma P|| for f(0+) = 0 in closed form: f°(1 / max{lambda : lambda P <= P A^{-1} P}).
inline double prop4_norm(const RepresentingFunction& f, const SpdMatrix& a, const OrthProjection& p) {
  if (f.at_0plus() != 0.0) throw PreconditionError(f.label() + ": closed-form norm needs f(0+) = 0");
  const double f1 = f(1.0);
  if (std::abs(f(2.0) - 2.0 * f1) <= 1e-12 * f1 && std::abs(f(0.5) - 0.5 * f1) <= 1e-12 * f1) {
    throw PreconditionError(f.label() + ": closed-form norm needs a non-affine f");
  }
  if (p.is_zero()) throw InputError("closed-form norm needs a nonzero projection");
  const double lambda = compression_max_lambda(a.inverse(), p);
  const double c = 1.0 / lambda;
  return c * f(1.0 / c);  // f°(c)
}

namespace detail {

inline const BorelMeasure& exact_measure_with_atom(const Connection& conn, std::string_view what) {
  if (!conn.measure) throw PreconditionError(conn.label() + ": " + std::string(what) + " needs a Loewner measure");
  if (!(conn.measure->atom0() > 0.0)) {
    throw PreconditionError(conn.label() + ": " + std::string(what) + " needs f(0+) > 0");
  }
  return *conn.measure;
}

}  // namespace detail

/// values[k] = ||A sigma (s_k P + s_k delta I)|| - beta s_k (1 + delta),
/// target (alpha + gamma) ||PAP|| with gamma the integral of (1 + t) over
/// (0, inf). Needs an exact (non-quadrature) measure with an atom at 0: a
/// quadrature measure only carries a truncation of the first moment.
inline LimitScan case2a_limit_scan(const Connection& conn, const SpdMatrix& a, const OrthProjection& p, double delta,
                                   const std::vector<double>& s_grid, double tol_limit = 1e-5) {
  const BorelMeasure& m = detail::exact_measure_with_atom(conn, "the first-moment limit scan");
  if (m.quadrature()) {
    throw PreconditionError(conn.label() + ": the first-moment limit scan needs an exact measure");
  }
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  if (p.is_zero()) throw InputError("limit scan needs a nonzero projection");
  detail::check_s_grid(s_grid);
  SymMatrix::check_same_dim(a, p);
  const double alpha = m.atom0();
  const double beta = m.atom_inf();
  const double gamma = m.interior_gamma();
  LimitScan scan;
  scan.s_values = s_grid;
  const Matrix& pm = p.matrix();
  scan.target = (alpha + gamma) * operator_norm(SymMatrix::symmetrized(pm * a.matrix() * pm));
  for (double s : s_grid) {
    const PsdMatrix x = projection_pencil(p, s, delta);
    scan.values.push_back(connection_eval(conn.f, a, x).norm() - beta * s * (1.0 + delta));
  }
  detail::finish_scan(scan, tol_limit);
  return scan;
}

/// Divergence scan for alpha > 0: values[k] = ||A sigma_h (s_k P)|| -
/// ||B sigma_h (s_k P)|| with h = f - alpha - alpha x. When c_A > c_B the
/// values grow without bound for an infinite first moment and eventually
/// exceed target = ||alpha B||.
struct Case2bScan {
  LimitScan scan;
  double c_a = 0.0;  // 1 / max{lambda : lambda P <= P A^{-1} P}
  double c_b = 0.0;
  bool exceeds = false;  // final value above ||alpha B||
};

inline Case2bScan case2b_divergence_scan(const Connection& conn, const SpdMatrix& a, const SpdMatrix& b,
                                         const OrthProjection& p, const std::vector<double>& s_grid) {
  const BorelMeasure& m = detail::exact_measure_with_atom(conn, "the divergence scan");
  if (p.is_zero()) throw InputError("divergence scan needs a nonzero projection");
  detail::check_s_grid(s_grid);
  const HSplit split = split_h(conn.f, m);
  const auto h = split.h_function("h(" + conn.label() + ")");
  if (!h) throw PreconditionError(conn.label() + ": h vanishes, nothing diverges");
  Case2bScan out;
  out.c_a = 1.0 / compression_max_lambda(a.inverse(), p);
  out.c_b = 1.0 / compression_max_lambda(b.inverse(), p);
  out.scan.s_values = s_grid;
  out.scan.target = split.alpha * b.norm();
  for (double s : s_grid) {
    const PsdMatrix x = projection_pencil(p, s, 0.0);
    out.scan.values.push_back(connection_eval(*h, a, x).norm() - connection_eval(*h, b, x).norm());
  }
  detail::finish_scan(out.scan, kLimitTolerance);
  out.exceeds = out.scan.values.back() > out.scan.target;
  return out;
}

// ---------------------------------------------------------------------------
// Norm domination and witnesses

struct NormViolation {
  std::size_t index = 0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  double tolerance = 0.0;
};

namespace detail {

inline void check_commutes(const PsdMatrix& x, const SymMatrix& d, double d_norm) {
  const double defect = commutator_defect(x, d);
  if (defect > 1e-9 * (1.0 + x.norm()) * (1.0 + d_norm)) {
    throw InputError("X does not commute with B - A (defect " + format_double(defect) + ")");
  }
}

}  // namespace detail

/// First X with ||A sigma X|| > ||B sigma X|| + tol, if any. Each X must
/// commute with B - A. Without an explicit `tol` the scale-aware
/// norm_tolerance(||A||, ||B||, ||X||) is used.
inline std::optional<NormViolation> find_norm_violation(const Connection& conn, const SpdMatrix& a, const SpdMatrix& b,
                                                        const std::vector<PsdMatrix>& xs,
                                                        std::optional<double> tol = std::nullopt) {
  SymMatrix::check_same_dim(a, b);
  const SymMatrix d = b - a;
  const double d_norm = operator_norm(d);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const PsdMatrix& x = xs[i];
    SymMatrix::check_same_dim(a, x);
    detail::check_commutes(x, d, d_norm);
    const double na = connection_eval(conn.f, a, x).norm();
    const double nb = connection_eval(conn.f, b, x).norm();
    const double t = tol ? *tol : norm_tolerance(a.norm(), b.norm(), x.norm());
    if (na > nb + t) return NormViolation{i, na, nb, t};
  }
  return std::nullopt;
}

/// True iff ||A sigma X|| <= ||B sigma X|| + tol for every X.
inline bool norm_dominates(const Connection& conn, const SpdMatrix& a, const SpdMatrix& b,
                           const std::vector<PsdMatrix>& xs, std::optional<double> tol = std::nullopt) {
  return !find_norm_violation(conn, a, b, xs, tol).has_value();
}

/// X = s P + s delta I with ||A sigma X|| - ||B sigma X|| = margin > 10 tolerance.
struct WitnessReport {
  OrthProjection projection;
  double eps = 0.0;  // P projects onto the spectrum of B - A below -eps
  double s = 0.0;
  double delta = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;

  PsdMatrix x() const { return projection_pencil(projection, s, delta); }

  void validate() const {
    if (!(margin > 10.0 * tolerance)) throw InconsistencyError("witness margin does not exceed 10 x tolerance");
    if (!(eps > 0.0) || projection.is_zero()) throw InconsistencyError("witness projection is degenerate");
  }
};

inline void require_symmetric(const Connection& conn) {
  if (!conn.symmetric()) throw PreconditionError(conn.label() + " is not a symmetric connection");
}

/// Searches eps over {0.9, 0.5, 0.1} x |lambda_min(B - A)|, then delta over
/// {0, 1e-6, 1e-3, 0.1, 0.5, 1} and s over 2^0..2^30, returning the first
/// X = s P + s delta I whose margin exceeds 10 x tolerance. Absent when
/// A <= B. Exhausting the grid raises SearchFailureError with the scan table.
inline std::optional<WitnessReport> witness_search(const Connection& conn, const SpdMatrix& a, const SpdMatrix& b) {
  require_symmetric(conn);
  SymMatrix::check_same_dim(a, b);
  const double tol_ab = norm_tolerance(a.norm(), b.norm());
  const SpectralDecomposition d = sym_eig(b - a);
  if (d.min() >= -tol_ab) return std::nullopt;

  std::ostringstream table;
  table << std::setprecision(10) << "eps,delta,s,norm_a,norm_b,margin,threshold\n";
  for (double frac : witness_eps_fractions()) {
    const double eps = frac * -d.min();
    std::optional<OrthProjection> p;
    try {
      p = spectral_projection(d, Interval::below(-eps));
    } catch (const BoundaryAmbiguityError&) {
      table << eps << ",boundary-ambiguous\n";
      continue;
    }
    if (p->is_zero()) continue;
    for (double delta : witness_deltas()) {
      for (int k = 0; k <= kWitnessMaxExponent; ++k) {
        const double s = std::ldexp(1.0, k);
        const PsdMatrix x = projection_pencil(*p, s, delta);
        const double na = connection_eval(conn.f, a, x).norm();
        const double nb = connection_eval(conn.f, b, x).norm();
        const double tol = norm_tolerance(a.norm(), b.norm(), x.norm());
        const double margin = na - nb;
        table << eps << ',' << delta << ',' << s << ',' << na << ',' << nb << ',' << margin << ',' << 10.0 * tol
              << '\n';
        if (margin > 10.0 * tol) {
          WitnessReport w{*p, eps, s, delta, na, nb, margin, tol};
          w.validate();
          return w;
        }
      }
    }
  }
  throw SearchFailureError(conn.label() + ": witness grid exhausted although A is not <= B", table.str());
}

struct OrderVerdict {
  bool loewner = false;
  bool norm_dominated = true;
  std::optional<WitnessReport> witness;
  std::string mean_label;
  int samples_used = 0;

  void validate() const {
    if (witness && norm_dominated) throw InconsistencyError("verdict has a witness but claims norm domination");
    if (loewner && witness) throw InconsistencyError("verdict has a witness for an ordered pair");
    if (witness) witness->validate();
  }
};

/// The probe family used alongside random samples: s (P + delta I) for
/// every spectral projection P of D onto (-inf, c) with c in a spectral gap,
/// s in {2^0, 2^5, ..., 2^30} and delta on the witness grid.
inline std::vector<PsdMatrix> projection_family(const SymMatrix& d) {
  const SpectralDecomposition sd = sym_eig(d);
  std::vector<PsdMatrix> out;
  for (Eigen::Index i = 0; i + 1 < sd.eigenvalues.size(); ++i) {
    const double lo = sd.eigenvalues(i);
    const double hi = sd.eigenvalues(i + 1);
    if (hi - lo <= 4.0 * kEndpointClearance) continue;
    const OrthProjection p = spectral_projection(sd, Interval::below(0.5 * (lo + hi)));
    for (double delta : witness_deltas()) {
      for (double s : power_of_two_grid(kWitnessMaxExponent, 5)) out.push_back(projection_pencil(p, s, delta));
    }
  }
  return out;
}

/// Both sides of the equivalence for one pair: the eigenvalue test, norm
/// domination over `sample_budget` random positive functions of B - A plus
/// the projection family, and a witness search when A is not <= B.
/// Disagreement raises TheoremViolationError.
inline OrderVerdict order_determination_check(const Connection& conn, const SpdMatrix& a, const SpdMatrix& b,
                                              int sample_budget, std::uint64_t rng_seed) {
  require_symmetric(conn);
  SymMatrix::check_same_dim(a, b);
  OrderVerdict v;
  v.mean_label = conn.label();
  const double tol_ab = norm_tolerance(a.norm(), b.norm());
  v.loewner = loewner_leq(a, b, tol_ab);

  const SymMatrix d = b - a;
  std::vector<PsdMatrix> xs = sample_gamma_positive(d, rng_seed, sample_budget);
  for (auto& x : projection_family(d)) xs.push_back(std::move(x));
  const auto violation = find_norm_violation(conn, a, b, xs);
  v.samples_used = static_cast<int>(violation ? violation->index + 1 : xs.size());
  v.norm_dominated = !violation.has_value();

  auto diagnostic = [&] {
    std::ostringstream os;
    os.precision(17);
    os << "mean " << conn.label() << "\nA =\n" << a.matrix() << "\nB =\n" << b.matrix();
    if (violation) {
      os << "\nviolation at sample " << violation->index << ": ||A s X|| = " << violation->norm_a
         << ", ||B s X|| = " << violation->norm_b << ", tol = " << violation->tolerance;
    }
    return os.str();
  };

  if (v.loewner && !v.norm_dominated) {
    throw TheoremViolationError("ordered pair violates norm domination", diagnostic());
  }
  if (!v.loewner) {
    try {
      v.witness = witness_search(conn, a, b);
    } catch (const SearchFailureError& e) {
      if (v.norm_dominated) throw TheoremViolationError("unordered pair with no norm violation", diagnostic() + "\n" + e.table());
    }
    if (v.witness) v.norm_dominated = false;
  }
  v.validate();
  return v;
}

}  // namespace kubo_ando
