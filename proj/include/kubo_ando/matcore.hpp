#pragma once

// Dense real symmetric matrices with positivity classes, and the spectral
// machinery everything else is built on: eigendecomposition, functional
// calculus, operator norm, Loewner-order tests, spectral projections and
// compressions.
//
// The eigendecomposition is the only spectral primitive. Matrix functions,
// projections and norms all read the same eigenpairs, so f(A), the
// projections of A and ||A|| are mutually consistent to rounding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kubo_ando/errors.hpp"

namespace kubo_ando {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kMaxDimension = 256;
inline constexpr double kAsymmetryTolerance = 1e-12;  // relative to max|entry|
inline constexpr double kPdFloor = 1e-12;             // smallest admissible eigenvalue of an SPD matrix
inline constexpr double kProjectionTolerance = 1e-10;
inline constexpr double kEndpointClearance = 1e-8;

// Scale-aware slack for "eigenvalue >= 0".
inline double psd_tolerance(double norm) { return 1e-9 * (1.0 + norm); }

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

namespace detail {

inline void check_dimension(Eigen::Index rows, Eigen::Index cols) {
  if (rows != cols) {
    throw InputError("matrix must be square, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  if (rows < 1 || rows > kMaxDimension) {
    throw InputError("matrix dimension " + std::to_string(rows) + " outside [1, " +
                     std::to_string(kMaxDimension) + "]");
  }
}

inline void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw InputError("matrix has non-finite entries");
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

/// Eigenvalues in ascending order with an orthonormal eigenvector basis.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix basis;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  double min() const { return eigenvalues(0); }
  double max() const { return eigenvalues(eigenvalues.size() - 1); }
  double norm() const { return std::max(std::abs(min()), std::abs(max())); }

  Matrix reconstruct() const { return basis * eigenvalues.asDiagonal() * basis.transpose(); }

  /// Q diag(values) Q^T for a replacement spectrum.
  Matrix synthesize(const Vector& values) const {
    return basis * values.asDiagonal() * basis.transpose();
  }

  /// Reorders eigenpairs so eigenvalues ascend.
  SpectralDecomposition sorted() const {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(eigenvalues.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(),
                     [this](Eigen::Index x, Eigen::Index y) { return eigenvalues(x) < eigenvalues(y); });
    SpectralDecomposition out{Vector(eigenvalues.size()), Matrix(basis.rows(), basis.cols())};
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      out.eigenvalues(k) = eigenvalues(order[i]);
      out.basis.col(k) = basis.col(order[i]);
    }
    return out;
  }
};

namespace detail {

inline SpectralDecomposition eigen_decompose(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw InputError("symmetric eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline Vector eigenvalues_only(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw InputError("symmetric eigensolver did not converge");
  }
  return solver.eigenvalues();
}

}  // namespace detail

/// A real symmetric n x n matrix, 1 <= n <= 256.
///
/// The public constructor is for external data: it symmetrizes via
/// (M + M^T)/2 and rejects inputs whose asymmetry exceeds
/// 1e-12 * max|entry|. Results computed inside the library go through
/// `symmetrized`, which records the defect without bounding it.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m) : SymMatrix(symmetrized(m)) {
    if (defect_ > kAsymmetryTolerance * max_abs(m)) {
      throw InputError("matrix is not symmetric (defect " + detail::format_double(defect_) + ")");
    }
  }

  static SymMatrix symmetrized(const Matrix& m) {
    detail::check_dimension(m.rows(), m.cols());
    detail::check_finite(m);
    const double defect = max_abs(m - m.transpose());
    return SymMatrix(Matrix(0.5 * (m + m.transpose())), defect, Trusted{});
  }

  static SymMatrix identity(int n) { return symmetrized(Matrix::Identity(n, n)); }
  static SymMatrix zero(int n) { return symmetrized(Matrix::Zero(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return symmetrized(Matrix(d.asDiagonal())); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double asymmetry_defect() const { return defect_; }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    check_same_dim(a, b);
    return symmetrized(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    check_same_dim(a, b);
    return symmetrized(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double c, const SymMatrix& a) { return symmetrized(c * a.m_); }

  static void check_same_dim(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
      throw InputError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()));
    }
  }

 protected:
  struct Trusted {};
  SymMatrix(Matrix m, double defect, Trusted) : m_(std::move(m)), defect_(defect) {}

  Matrix m_;
  double defect_ = 0.0;
};

/// Symmetric matrix whose eigenvalues are all >= -1e-9 (1 + ||M||).
/// Keeps its eigendecomposition.
class PsdMatrix : public SymMatrix {
 public:
  explicit PsdMatrix(const SymMatrix& m)
      : PsdMatrix(m, detail::eigen_decompose(m.matrix())) {}
  explicit PsdMatrix(const Matrix& m) : PsdMatrix(SymMatrix(m)) {}

  /// Builds Q diag(values) Q^T and keeps the given spectrum (re-sorted).
  /// `basis` must be orthogonal.
  static PsdMatrix from_spectrum(const SpectralDecomposition& s) {
    SpectralDecomposition sorted = s.sorted();
    SymMatrix m = SymMatrix::symmetrized(sorted.reconstruct());
    return PsdMatrix(m, std::move(sorted));
  }

  const SpectralDecomposition& spectrum() const { return spectrum_; }
  double norm() const { return spectrum_.norm(); }
  double min_eigenvalue() const { return spectrum_.min(); }
  double max_eigenvalue() const { return spectrum_.max(); }

  /// Smallest eigenvalue is zero at working tolerance.
  bool is_singular() const { return min_eigenvalue() <= psd_tolerance(norm()); }

 protected:
  PsdMatrix(const SymMatrix& m, SpectralDecomposition s) : SymMatrix(m), spectrum_(std::move(s)) {
    if (spectrum_.min() < -psd_tolerance(spectrum_.norm())) {
      throw InputError("matrix is not positive semidefinite (min eigenvalue " +
                       detail::format_double(spectrum_.min()) + ")");
    }
  }

  SpectralDecomposition spectrum_;
};

/// Symmetric matrix with every eigenvalue >= 1e-12.
class SpdMatrix : public PsdMatrix {
 public:
  explicit SpdMatrix(const SymMatrix& m) : SpdMatrix(PsdMatrix(m)) {}
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}
  explicit SpdMatrix(const PsdMatrix& m) : PsdMatrix(m) {
    if (min_eigenvalue() < kPdFloor) {
      throw InputError("matrix is not positive definite (min eigenvalue " +
                       detail::format_double(min_eigenvalue()) + ")");
    }
  }

  static SpdMatrix from_spectrum(const SpectralDecomposition& s) {
    return SpdMatrix(PsdMatrix::from_spectrum(s));
  }

  static SpdMatrix identity(int n) { return SpdMatrix(SymMatrix::identity(n)); }

  /// c * M for c > 0, sharing the eigenbasis.
  SpdMatrix scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw InputError("SPD scaling factor must be positive and finite");
    }
    SpectralDecomposition s = spectrum_;
    s.eigenvalues *= c;
    return SpdMatrix(SymMatrix::symmetrized(c * m_), std::move(s));
  }

  Matrix sqrt_matrix() const { return spectrum_.synthesize(spectrum_.eigenvalues.cwiseSqrt()); }
  Matrix inv_sqrt_matrix() const {
    return spectrum_.synthesize(spectrum_.eigenvalues.cwiseSqrt().cwiseInverse());
  }

  SpdMatrix inverse() const {
    SpectralDecomposition s;
    s.eigenvalues = spectrum_.eigenvalues.cwiseInverse().reverse();
    s.basis = spectrum_.basis.rowwise().reverse();
    return from_spectrum(std::move(s));
  }

 private:
  SpdMatrix(const SymMatrix& m, SpectralDecomposition s) : PsdMatrix(m, std::move(s)) {}
};

/// Orthogonal projection: P^2 = P, eigenvalues in {0, 1}.
class OrthProjection : public PsdMatrix {
 public:
  explicit OrthProjection(const SymMatrix& m) : PsdMatrix(m) {
    const double idem = max_abs(m_ * m_ - m_);
    if (idem > kProjectionTolerance) {
      throw InputError("not a projection: max|P^2 - P| = " + detail::format_double(idem));
    }
    rank_ = 0;
    for (Eigen::Index i = 0; i < spectrum_.eigenvalues.size(); ++i) {
      const double l = spectrum_.eigenvalues(i);
      if (std::abs(l - 1.0) <= kProjectionTolerance) {
        ++rank_;
      } else if (std::abs(l) > kProjectionTolerance) {
        throw InputError("projection eigenvalue " + detail::format_double(l) + " not in {0,1}");
      }
    }
  }

  /// Projection onto the span of orthonormal columns of `u` (n x k).
  static OrthProjection onto(const Matrix& u, int n) {
    if (u.rows() != n) throw InputError("projection basis has wrong row count");
    SpectralDecomposition s;
    const Eigen::Index k = u.cols();
    s.eigenvalues = Vector::Zero(n);
    s.eigenvalues.tail(k).setOnes();
    s.basis = Matrix(n, n);
    s.basis.rightCols(k) = u;
    if (k < n) {
      // Orthonormal complement of span(u), from the eigenvectors of I - UU^T
      // belonging to eigenvalue 1.
      const Matrix comp = Matrix::Identity(n, n) - u * u.transpose();
      const SpectralDecomposition cs = detail::eigen_decompose(comp);
      s.basis.leftCols(n - k) = cs.basis.rightCols(n - k);
    }
    return OrthProjection(PsdMatrix::from_spectrum(std::move(s)), static_cast<int>(k));
  }

  static OrthProjection zero(int n) { return onto(Matrix(n, 0), n); }

  int rank() const { return rank_; }
  bool is_zero() const { return rank_ == 0; }

  /// Orthonormal basis of range(P), n x rank.
  Matrix range_basis() const { return spectrum_.basis.rightCols(rank_); }

 private:
  OrthProjection(const PsdMatrix& m, int rank) : PsdMatrix(m), rank_(rank) {}
  int rank_ = 0;
};

// ---------------------------------------------------------------------------
// Operations

inline SpectralDecomposition sym_eig(const SymMatrix& m) { return detail::eigen_decompose(m.matrix()); }
inline const SpectralDecomposition& sym_eig(const PsdMatrix& m) { return m.spectrum(); }

namespace detail {

template <class F>
Vector map_spectrum(const Vector& eigenvalues, F&& phi, std::optional<double> at_zero,
                    bool clamp_nonpositive) {
  Vector out(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues(i);
    double v;
    if (clamp_nonpositive && l <= 0.0) {
      v = at_zero ? *at_zero : static_cast<double>(phi(0.0));
    } else {
      v = static_cast<double>(phi(l));
    }
    if (!std::isfinite(v)) {
      throw DomainError("function undefined at eigenvalue " + format_double(l));
    }
    out(i) = v;
  }
  return out;
}

}  // namespace detail

/// Q diag(phi(lambda_i)) Q^T. `phi` may throw DomainError or return a
/// non-finite value; both surface as DomainError naming the eigenvalue.
template <class F>
SymMatrix apply_fn(const SymMatrix& m, F&& phi) {
  const SpectralDecomposition s = sym_eig(m);
  return SymMatrix::symmetrized(
      s.synthesize(detail::map_spectrum(s.eigenvalues, phi, std::nullopt, false)));
}

/// PSD variant: eigenvalues in [-tol, 0] are taken as exactly 0 and mapped
/// to `at_zero` when given (a right-limit), else to phi(0).
template <class F>
SymMatrix apply_fn(const PsdMatrix& m, F&& phi, std::optional<double> at_zero = std::nullopt) {
  const SpectralDecomposition& s = m.spectrum();
  return SymMatrix::symmetrized(
      s.synthesize(detail::map_spectrum(s.eigenvalues, phi, at_zero, true)));
}

inline double operator_norm(const SymMatrix& m) {
  const Vector l = detail::eigenvalues_only(m.matrix());
  return std::max(std::abs(l(0)), std::abs(l(l.size() - 1)));
}
inline double operator_norm(const PsdMatrix& m) { return m.norm(); }

inline double min_eigenvalue(const SymMatrix& m) { return detail::eigenvalues_only(m.matrix())(0); }

/// A <= B in the Loewner order: lambda_min(B - A) >= -tol.
inline bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  SymMatrix::check_same_dim(a, b);
  return min_eigenvalue(b - a) >= -tol;
}

/// Max-entry size of the commutator AB - BA.
inline double commutator_defect(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  return max_abs(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

/// Real interval with optional infinite ends.
struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool lower_closed = false;
  bool upper_closed = false;

  static Interval open(double a, double b) { return {a, b, false, false}; }
  static Interval closed(double a, double b) { return {a, b, true, true}; }
  static Interval below(double x) { return {-std::numeric_limits<double>::infinity(), x, false, false}; }
  static Interval above(double x) { return {x, std::numeric_limits<double>::infinity(), false, false}; }

  bool contains(double x) const {
    const bool lo = lower_closed ? x >= lower : x > lower;
    const bool hi = upper_closed ? x <= upper : x < upper;
    return lo && hi;
  }
};

/// Projection onto the eigenvectors whose eigenvalues lie in `iv`.
/// Finite endpoints closer than 1e-8 to an eigenvalue are rejected.
inline OrthProjection spectral_projection(const SpectralDecomposition& s, const Interval& iv) {
  const int n = s.dim();
  std::vector<Eigen::Index> picked;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = s.eigenvalues(i);
    for (double end : {iv.lower, iv.upper}) {
      if (std::isfinite(end) && std::abs(l - end) <= kEndpointClearance) {
        throw BoundaryAmbiguityError("eigenvalue " + detail::format_double(l) +
                                     " lies within 1e-8 of interval endpoint " +
                                     detail::format_double(end));
      }
    }
    if (iv.contains(l)) picked.push_back(i);
  }
  Matrix u(n, static_cast<Eigen::Index>(picked.size()));
  for (std::size_t k = 0; k < picked.size(); ++k) u.col(static_cast<Eigen::Index>(k)) = s.basis.col(picked[k]);
  return OrthProjection::onto(u, n);
}

inline OrthProjection spectral_projection(const SymMatrix& m, const Interval& iv) {
  return spectral_projection(sym_eig(m), iv);
}

/// max{lambda >= 0 : lambda P <= PAP}, i.e. the smallest eigenvalue of the
/// compression of A to range(P).
inline double compression_max_lambda(const PsdMatrix& a, const OrthProjection& p) {
  SymMatrix::check_same_dim(a, p);
  if (p.is_zero()) throw InputError("compression_max_lambda needs a nonzero projection");
  const Matrix u = p.range_basis();
  const Matrix c = u.transpose() * a.matrix() * u;
  const Vector l = detail::eigenvalues_only(0.5 * (c + c.transpose()));
  return std::max(0.0, l(0));
}

}  // namespace kubo_ando
