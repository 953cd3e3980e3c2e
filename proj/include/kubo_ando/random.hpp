#pragma once

// Seeded generators for matrices and matrix pairs. Every trial draws from
// its own engine seeded by (master_seed, trial_index), so results do not
// depend on the order in which trials run.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>

#include "kubo_ando/errors.hpp"
#include "kubo_ando/matcore.hpp"

namespace kubo_ando {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// mt19937_64 with uniform draws built from raw bits, so sequences are
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  int integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

  Matrix uniform_matrix(int rows, int cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
    }
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

/// M M^T + 0.1 I with M uniform in [-1, 1].
inline SpdMatrix random_spd(int n, Rng& rng) {
  const Matrix m = rng.uniform_matrix(n, n, -1.0, 1.0);
  return SpdMatrix(SymMatrix::symmetrized(m * m.transpose() + 0.1 * Matrix::Identity(n, n)));
}

inline SymMatrix random_symmetric(int n, Rng& rng) {
  return SymMatrix::symmetrized(rng.uniform_matrix(n, n, -1.0, 1.0));
}

/// Random PSD matrix scaled to operator norm 1.
inline PsdMatrix random_unit_psd(int n, Rng& rng) {
  const Matrix m = rng.uniform_matrix(n, n, -1.0, 1.0);
  const PsdMatrix raw(SymMatrix::symmetrized(m * m.transpose()));
  return PsdMatrix(SymMatrix::symmetrized(raw.matrix() / raw.norm()));
}

/// Plane rotation by `theta` in coordinates (i, j) of R^n.
inline Matrix givens(int n, int i, int j, double theta) {
  Matrix g = Matrix::Identity(n, n);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  g(i, i) = c;
  g(j, j) = c;
  g(i, j) = -s;
  g(j, i) = s;
  return g;
}

/// Product of Givens rotations over all coordinate pairs with uniform angles.
inline Matrix random_rotation(int n, Rng& rng) {
  Matrix q = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) q = q * givens(n, i, j, rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  return q;
}

enum class PairKind { ordered, unordered, congruent_diagonal };

inline std::string_view to_string(PairKind k) {
  switch (k) {
    case PairKind::ordered: return "ordered";
    case PairKind::unordered: return "unordered";
    case PairKind::congruent_diagonal: return "congruent-diagonal";
  }
  return "?";
}

inline PairKind parse_pair_kind(std::string_view s) {
  if (s == "ordered") return PairKind::ordered;
  if (s == "unordered") return PairKind::unordered;
  if (s == "congruent-diagonal") return PairKind::congruent_diagonal;
  throw InputError("unknown pair kind '" + std::string(s) + "'");
}

struct MatrixPair {
  SpdMatrix a;
  SpdMatrix b;
};

/// Test pairs:
///   ordered             B = A + C C^T, so A <= B;
///   unordered           B - A has an eigenvalue below -0.1 and one above 0.1;
///   congruent-diagonal  A = G diag(2, 1, ...) G^T, B = G diag(1, 2, ...) G^T
///                       for a random rotation G.
inline MatrixPair generate_pair(int n, std::uint64_t seed, PairKind kind) {
  if (n < 2) throw InputError("pair generation needs n >= 2");
  Rng rng(seed);
  switch (kind) {
    case PairKind::ordered: {
      SpdMatrix a = random_spd(n, rng);
      const Matrix c = rng.uniform_matrix(n, n, -1.0, 1.0);
      SpdMatrix b(SymMatrix::symmetrized(a.matrix() + c * c.transpose()));
      return {std::move(a), std::move(b)};
    }
    case PairKind::unordered: {
      for (int attempt = 0; attempt < 10000; ++attempt) {
        SpdMatrix a = random_spd(n, rng);
        SpdMatrix b = random_spd(n, rng);
        const Vector d = detail::eigenvalues_only((b - a).matrix());
        if (d(0) < -0.1 && d(n - 1) > 0.1) return {std::move(a), std::move(b)};
      }
      throw InputError("could not draw an unordered pair");
    }
    case PairKind::congruent_diagonal: {
      const Matrix g = n == 2 ? givens(2, 0, 1, rng.uniform(0.0, 2.0 * std::numbers::pi)) : random_rotation(n, rng);
      Vector da(n), db(n);
      da(0) = 2.0;
      da(1) = 1.0;
      db(0) = 1.0;
      db(1) = 2.0;
      for (int i = 2; i < n; ++i) {
        da(i) = rng.uniform(0.5, 3.0);
        db(i) = rng.uniform(0.5, 3.0);
      }
      SpdMatrix a(SymMatrix::symmetrized(g * da.asDiagonal() * g.transpose()));
      SpdMatrix b(SymMatrix::symmetrized(g * db.asDiagonal() * g.transpose()));
      return {std::move(a), std::move(b)};
    }
  }
  throw InputError("unknown pair kind");
}

}  // namespace kubo_ando
