#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "kubo_ando/matcore.hpp"
#include "kubo_ando/random.hpp"

namespace kubo_ando::testing {

inline ::testing::AssertionResult MatrixNear(const Matrix& actual, const Matrix& expected, double tol) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    return ::testing::AssertionFailure() << "shape mismatch";
  }
  const double err = max_abs(actual - expected);
  if (err <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "max|diff| = " << err << " > " << tol << "\nactual:\n"
                                       << actual << "\nexpected:\n" << expected;
}

inline Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

// G diag(d) G^T for the 2x2 rotation G(theta).
inline Matrix rotated_diag(double theta, double d0, double d1) {
  const Matrix g = givens(2, 0, 1, theta);
  return g * diag({d0, d1}) * g.transpose();
}

}  // namespace kubo_ando::testing
