#pragma once

// Representing functions of Kubo-Ando connections and their evaluation by
// functional calculus:
//
//   A sigma B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kubo_ando/errors.hpp"
#include "kubo_ando/matcore.hpp"
#include "kubo_ando/measure.hpp"

namespace kubo_ando {

/// 64 log-spaced points on [1e-6, 1e6].
inline const std::vector<double>& standard_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g(64);
    for (int i = 0; i < 64; ++i) g[i] = std::pow(10.0, -6.0 + 12.0 * i / 63.0);
    return g;
  }();
  return grid;
}

inline constexpr double kSymmetryTolerance = 1e-10;

/// A positive, nondecreasing, concave function on (0, inf), standing in for
/// an operator monotone function. Operator monotonicity itself is not
/// checked; only the grid invariants are.
class RepresentingFunction {
 public:
  using Fn = std::function<double(double)>;

  RepresentingFunction(Fn eval, double at_0plus, double transpose_at_0plus, std::string label)
      : eval_(std::move(eval)),
        at_0plus_(at_0plus),
        transpose_at_0plus_(transpose_at_0plus),
        label_(std::move(label)) {
    if (!eval_) throw InputError("representing function has no evaluator");
    if (!(at_0plus_ >= 0.0) || !(transpose_at_0plus_ >= 0.0)) {
      throw DomainError(label_ + ": boundary values f(0+), f°(0+) must be nonnegative");
    }
    validate_shape();
    normalized_ = std::abs(eval_(1.0) - 1.0) <= 1e-12;
    symmetric_ = symmetric_on(standard_grid());
  }

  /// f(x) for x > 0; f(0+) at x = 0.
  double operator()(double x) const {
    if (x > 0.0) return eval_(x);
    if (x == 0.0) return at_0plus_;
    throw DomainError(label_ + " evaluated at negative argument");
  }

  const Fn& function() const { return eval_; }
  double at_0plus() const { return at_0plus_; }
  double transpose_at_0plus() const { return transpose_at_0plus_; }
  bool symmetric() const { return symmetric_; }
  bool normalized() const { return normalized_; }
  const std::string& label() const { return label_; }

  bool symmetric_on(const std::vector<double>& grid) const {
    for (double x : grid) {
      const double fx = eval_(x);
      if (std::abs(fx - x * eval_(1.0 / x)) > kSymmetryTolerance * (1.0 + fx)) return false;
    }
    return true;
  }

 private:
  void validate_shape() const {
    const auto& g = standard_grid();
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      v[i] = eval_(g[i]);
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
        throw DomainError(label_ + ": not positive and finite at x = " + detail::format_double(g[i]));
      }
    }
    double prev_slope = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      if (v[i + 1] < v[i] - 1e-9 * v[i]) {
        throw DomainError(label_ + ": decreasing near x = " + detail::format_double(g[i]));
      }
      // Concavity: the next value may not exceed the chord extrapolated from
      // the previous interval.
      if (i > 0 && v[i + 1] > v[i] + prev_slope * (g[i + 1] - g[i]) + 1e-9 * v[i + 1]) {
        throw DomainError(label_ + ": not concave near x = " + detail::format_double(g[i]));
      }
      prev_slope = (v[i + 1] - v[i]) / (g[i + 1] - g[i]);
    }
  }

  Fn eval_;
  double at_0plus_;
  double transpose_at_0plus_;
  std::string label_;
  bool normalized_ = false;
  bool symmetric_ = false;
};

namespace detail {

inline std::string format_short(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace detail

/// Power-mean representing function f_p, -1 <= p <= 1:
/// ((1 + t^p)/2)^{1/p}, and sqrt(t) at p = 0.
inline RepresentingFunction make_power_fn(double p) {
  if (!(p >= -1.0 && p <= 1.0)) {
    throw DomainError("power-mean exponent " + detail::format_short(p) + " outside [-1, 1]");
  }
  const std::string label = "power:" + detail::format_short(p);
  if (p == 0.0) return {[](double t) { return std::sqrt(t); }, 0.0, 0.0, label};
  if (p == 1.0) return {[](double t) { return (1.0 + t) / 2.0; }, 0.5, 0.5, label};
  if (p == -1.0) return {[](double t) { return 2.0 * t / (1.0 + t); }, 0.0, 0.0, label};
  // f_p(0+) = 2^{-1/p} for p > 0 and 0 for p < 0; f_p is symmetric, so
  // the transpose has the same boundary value.
  const double at0 = p > 0.0 ? std::pow(2.0, -1.0 / p) : 0.0;
  return {[p](double t) { return std::pow((1.0 + std::pow(t, p)) / 2.0, 1.0 / p); }, at0, at0, label};
}

/// x -> x f(1/x), the representing function of the reversed connection.
inline RepresentingFunction transpose_fn(const RepresentingFunction& f) {
  auto inner = f.function();
  return {[inner](double x) { return x * inner(1.0 / x); }, f.transpose_at_0plus(), f.at_0plus(),
          "transpose(" + f.label() + ")"};
}

/// |f(x) - x f(1/x)| <= 1e-10 (1 + f(x)) on every grid point.
inline bool check_symmetric(const RepresentingFunction& f, const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("symmetry check needs a nonempty grid");
  for (double x : grid) {
    if (!(x > 0.0)) throw DomainError("symmetry grid points must be positive");
  }
  return f.symmetric_on(grid);
}

/// w f + (1 - w) g.
inline RepresentingFunction mix_fn(double w, const RepresentingFunction& f, const RepresentingFunction& g) {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("mixing weight must lie in [0, 1]");
  auto fe = f.function();
  auto ge = g.function();
  return {[w, fe, ge](double x) { return w * fe(x) + (1.0 - w) * ge(x); },
          w * f.at_0plus() + (1.0 - w) * g.at_0plus(),
          w * f.transpose_at_0plus() + (1.0 - w) * g.transpose_at_0plus(),
          "mix:" + detail::format_short(w) + ":" + f.label() + ":" + g.label()};
}

/// A connection: its representing function and, when known, its Loewner
/// measure.
struct Connection {
  RepresentingFunction f;
  std::optional<BorelMeasure> measure;

  const std::string& label() const { return f.label(); }
  bool symmetric() const { return f.symmetric(); }
};

// ---------------------------------------------------------------------------
// Evaluation

/// A sigma B for A positive definite and B positive semidefinite. When B is
/// singular (smallest eigenvalue below the definite floor), its eigenvalues
/// at the zero tolerance are set to exactly 0; the inner matrix
/// A^{-1/2} B A^{-1/2} then has the same kernel dimension k (congruence) and
/// its k smallest eigenvalues are mapped to f(0+).
inline PsdMatrix connection_eval(const RepresentingFunction& f, const SpdMatrix& a, const PsdMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  const Matrix ah = a.sqrt_matrix();
  const Matrix aih = a.inv_sqrt_matrix();
  Eigen::Index kernel = 0;
  Matrix bm = b.matrix();
  if (b.min_eigenvalue() < kPdFloor) {
    const double b_zero = psd_tolerance(b.norm());
    Vector clamped = b.spectrum().eigenvalues;
    while (kernel < b.dim() && clamped(kernel) <= b_zero) clamped(kernel++) = 0.0;
    bm = b.spectrum().synthesize(clamped);
  }
  const SpectralDecomposition inner = sym_eig(SymMatrix::symmetrized(aih * bm * aih));
  Vector values(inner.eigenvalues.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double mu = inner.eigenvalues(i);
    values(i) = (i < kernel || mu <= 0.0) ? f.at_0plus() : f(mu);
    if (!std::isfinite(values(i))) {
      throw DomainError(f.label() + " undefined at eigenvalue " + detail::format_double(mu));
    }
  }
  return PsdMatrix(SymMatrix::symmetrized(ah * inner.synthesize(values) * ah));
}

inline PsdMatrix connection_eval(const Connection& c, const SpdMatrix& a, const PsdMatrix& b) {
  return connection_eval(c.f, a, b);
}

namespace detail {

// M + eps I on the spectrum of M (negative noise clamped to zero).
inline SpdMatrix shift_up(const PsdMatrix& m, double eps) {
  SpectralDecomposition s = m.spectrum();
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) s.eigenvalues(i) = std::max(s.eigenvalues(i), 0.0) + eps;
  return SpdMatrix::from_spectrum(std::move(s));
}

}  // namespace detail

inline constexpr int kMaxHalvings = 60;
inline constexpr double kExtensionTolerance = 1e-9;

/// Iterates (A + eps I) sigma (B + eps I) for eps = 1, 1/2, 1/4, ... until two
/// successive iterates are within 1e-9 in norm.
struct ExtensionTrace {
  std::vector<double> eps;
  std::vector<PsdMatrix> iterates;
  bool converged = false;
};

inline ExtensionTrace extension_sequence(const RepresentingFunction& f, const PsdMatrix& a, const PsdMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  ExtensionTrace trace;
  for (int k = 0; k <= kMaxHalvings; ++k) {
    const double eps = std::ldexp(1.0, -k);
    // The shifted matrices must stay positive definite at the library's floor.
    if (std::max(a.min_eigenvalue(), 0.0) + eps < kPdFloor || std::max(b.min_eigenvalue(), 0.0) + eps < kPdFloor) break;
    trace.eps.push_back(eps);
    trace.iterates.push_back(connection_eval(f, detail::shift_up(a, eps), detail::shift_up(b, eps)));
    const std::size_t m = trace.iterates.size();
    if (m >= 2) {
      const double diff = operator_norm(trace.iterates[m - 1] - trace.iterates[m - 2]);
      if (diff <= kExtensionTolerance) {
        trace.converged = true;
        break;
      }
    }
  }
  return trace;
}

/// Extension of sigma to pairs of positive semidefinite matrices, the
/// downward limit of (A + eps I) sigma (B + eps I). When either argument is
/// positive definite the closed formula is exact and is used directly
/// (through the transpose when only B is definite).
inline PsdMatrix connection_eval_psd(const RepresentingFunction& f, const PsdMatrix& a, const PsdMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  if (a.min_eigenvalue() >= kPdFloor) return connection_eval(f, SpdMatrix(a), b);
  if (b.min_eigenvalue() >= kPdFloor) return connection_eval(transpose_fn(f), SpdMatrix(b), a);
  const ExtensionTrace trace = extension_sequence(f, a, b);
  if (!trace.converged) {
    std::string msg = f.label() + ": extension did not converge after " +
                      std::to_string(trace.iterates.size()) + " iterates";
    const std::size_t m = trace.iterates.size();
    if (m >= 2) {
      std::ostringstream os;
      os.precision(17);
      os << "; last two iterates:\n" << trace.iterates[m - 2].matrix() << "\n--\n" << trace.iterates[m - 1].matrix();
      msg += os.str();
    }
    throw ConvergenceError(msg);
  }
  return trace.iterates.back();
}

/// Parallel sum (A^{-1} + B^{-1})^{-1}.
inline SpdMatrix parallel_sum(const SpdMatrix& a, const SpdMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  return SpdMatrix(SymMatrix::symmetrized(a.inverse().matrix() + b.inverse().matrix())).inverse();
}

/// A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
inline SpdMatrix geometric_mean(const SpdMatrix& a, const SpdMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  const Matrix ah = a.sqrt_matrix();
  const Matrix aih = a.inv_sqrt_matrix();
  const PsdMatrix inner(SymMatrix::symmetrized(aih * b.matrix() * aih));
  const SymMatrix root = apply_fn(inner, [](double x) { return std::sqrt(x); });
  return SpdMatrix(SymMatrix::symmetrized(ah * root.matrix() * ah));
}

}  // namespace kubo_ando
