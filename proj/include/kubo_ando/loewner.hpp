#pragma once

// The measure side of a connection. A finite measure m on [0, inf] defines
//
//   f(x) = integral of x (1 + t) / (x + t) dm(t)
//   A sigma B = m({0}) A + m({inf}) B + integral over (0, inf) of ((1 + t)/t) (tA : B) dm(t)
//
// and both are evaluated here term by term over the atoms and nodes.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "kubo_ando/errors.hpp"
#include "kubo_ando/matcore.hpp"
#include "kubo_ando/means.hpp"
#include "kubo_ando/measure.hpp"

namespace kubo_ando {

inline double measure_eval_fn(const BorelMeasure& m, double x) {
  if (!(x > 0.0)) throw DomainError("measure function evaluated at non-positive x");
  double value = m.atom0() + m.atom_inf() * x;
  for (const auto& nd : m.nodes()) value += nd.w * (x * (1.0 + nd.t) / (x + nd.t));
  return value;
}

/// A Borel subset of [0, inf] given as a union of intervals. The atom at 0
/// belongs to the set iff some interval contains 0; likewise for +inf (an
/// interval whose upper end is +inf and closed).
using BorelSet = std::vector<Interval>;

inline bool contains(const BorelSet& set, double t) {
  for (const auto& iv : set) {
    if (iv.contains(t)) return true;
  }
  return false;
}

/// x -> integral over `set` of x (1 + t)/(x + t) dm(t). An endpoint that
/// coincides with a node location is rejected: the caller must place
/// boundaries between nodes.
inline std::function<double(double)> restricted_fn(const BorelMeasure& m, const BorelSet& set) {
  for (const auto& iv : set) {
    for (double end : {iv.lower, iv.upper}) {
      if (!std::isfinite(end) || end == 0.0) continue;
      for (const auto& nd : m.nodes()) {
        if (std::abs(nd.t - end) <= 1e-12 * (1.0 + nd.t)) {
          throw InputError("set boundary " + detail::format_double(end) + " splits the node at t = " +
                           detail::format_double(nd.t));
        }
      }
    }
  }
  const double atom0 = contains(set, 0.0) ? m.atom0() : 0.0;
  const double atom_inf = contains(set, std::numeric_limits<double>::infinity()) ? m.atom_inf() : 0.0;
  std::vector<MeasureNode> kept;
  for (const auto& nd : m.nodes()) {
    if (contains(set, nd.t)) kept.push_back(nd);
  }
  return [atom0, atom_inf, kept = std::move(kept)](double x) {
    if (!(x > 0.0)) throw DomainError("restricted function evaluated at non-positive x");
    double value = atom0 + atom_inf * x;
    for (const auto& nd : kept) value += nd.w * (x * (1.0 + nd.t) / (x + nd.t));
    return value;
  };
}

/// The connection built from a measure, summed over atoms and nodes with
/// parallel sums.
inline SpdMatrix measure_connection_eval(const BorelMeasure& m, const SpdMatrix& a, const SpdMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  m.require_positive_mass();
  Matrix out = m.atom0() * a.matrix() + m.atom_inf() * b.matrix();
  if (!m.nodes().empty()) {
    // tA : B = ((tA)^{-1} + B^{-1})^{-1}, inverted on raw spectra: far-out
    // quadrature nodes give terms well below the SPD floor.
    const Matrix a_inv = a.inverse().matrix();
    const Matrix b_inv = b.inverse().matrix();
    for (const auto& nd : m.nodes()) {
      const SpectralDecomposition s = detail::eigen_decompose(a_inv / nd.t + b_inv);
      out += nd.w * ((1.0 + nd.t) / nd.t) * s.synthesize(s.eigenvalues.cwiseInverse());
    }
  }
  return SpdMatrix(SymMatrix::symmetrized(out));
}

/// Tolerance to which a measure is expected to reproduce its function.
inline double measure_tolerance(const BorelMeasure& m) { return m.quadrature() ? 1e-6 : 1e-9; }

/// f = alpha + beta x + h(x), with h carried by the interior of m.
struct HSplit {
  double alpha = 0.0;
  double beta = 0.0;
  std::function<double(double)> h;
  BorelMeasure m_h;

  /// h as a representing function; absent when h vanishes identically.
  std::optional<RepresentingFunction> h_function(const std::string& label) const {
    if (m_h.is_zero()) return std::nullopt;
    return RepresentingFunction(h, 0.0, 0.0, label);
  }
};

/// Splits off the affine part of f using the atoms of its measure m. Fails
/// with InconsistencyError when m does not reproduce f on the standard grid
/// or h dips below zero.
inline HSplit split_h(const RepresentingFunction& f, const BorelMeasure& m) {
  const double tol = measure_tolerance(m);
  for (double x : standard_grid()) {
    const double fx = f(x);
    if (std::abs(measure_eval_fn(m, x) - fx) > tol * (1.0 + fx)) {
      throw InconsistencyError(f.label() + ": measure does not reproduce the function at x = " +
                               detail::format_double(x));
    }
  }
  HSplit split;
  split.alpha = m.atom0();
  split.beta = m.atom_inf();
  auto fe = f.function();
  split.h = [fe, a = split.alpha, b = split.beta](double x) { return fe(x) - a - b * x; };
  split.m_h = m.interior();
  for (double x : standard_grid()) {
    if (split.h(x) < -1e-10 * (1.0 + f(x))) {
      throw InconsistencyError(f.label() + ": h is negative at x = " + detail::format_double(x));
    }
  }
  return split;
}

/// The integrals of t and of 1/t over [0, inf]; an atom at inf (resp. 0)
/// makes the first (resp. second) infinite.
struct SymmetryIntegrals {
  double moment = 0.0;
  double inverse_moment = 0.0;

  bool both_finite() const { return std::isfinite(moment) && std::isfinite(inverse_moment); }

  /// Equality within 1e-9 relative; two infinities compare equal.
  bool balanced() const {
    if (!both_finite()) return std::isinf(moment) && std::isinf(inverse_moment);
    return std::abs(moment - inverse_moment) <= 1e-9 * std::max(std::abs(moment), std::abs(inverse_moment));
  }
};

inline SymmetryIntegrals symmetry_integrals(const BorelMeasure& m) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  SymmetryIntegrals out;
  for (const auto& nd : m.nodes()) {
    out.moment += nd.w * nd.t;
    out.inverse_moment += nd.w / nd.t;
  }
  if (m.atom_inf() > 0.0) out.moment = inf;
  if (m.atom0() > 0.0) out.inverse_moment = inf;
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature measures

/// Nodes for an absolutely continuous measure with density `density` on
/// (0, inf): t = u/(1 - u) maps (0, 1) onto (0, inf), then Gauss-Legendre
/// with N points on u. Nodes where the density vanishes are dropped.
template <int N = 64, class Density>
BorelMeasure gauss_legendre_measure(Density&& density, double atom0 = 0.0, double atom_inf = 0.0) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& abscissa = rule::abscissa();
  const auto& weights = rule::weights();
  std::vector<MeasureNode> nodes;
  auto add = [&](double x, double wx) {
    const double u = 0.5 * (x + 1.0);
    const double t = u / (1.0 - u);
    const double w = 0.5 * wx * density(t) / ((1.0 - u) * (1.0 - u));
    if (w > 0.0) nodes.push_back({t, w});
  };
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    add(abscissa[i], weights[i]);
    if (abscissa[i] != 0.0) add(-abscissa[i], weights[i]);
  }
  return {atom0, atom_inf, std::move(nodes), true};
}

/// Loewner measure of sqrt(x). Its density is t^{-1/2} / (pi (1 + t)) dt,
/// which in u = log t becomes 1/(2 pi cosh(u/2)) du; a trapezoid rule with
/// step 1/2 on |u| <= 80 reproduces sqrt(x) on [1e-6, 1e6] to ~1e-14 relative.
inline BorelMeasure geometric_mean_measure() {
  constexpr double h = 0.5;
  constexpr int half_width = 160;
  std::vector<MeasureNode> nodes;
  nodes.reserve(2 * half_width + 1);
  for (int k = -half_width; k <= half_width; ++k) {
    const double u = k * h;
    nodes.push_back({std::exp(u), h / (2.0 * std::numbers::pi * std::cosh(0.5 * u))});
  }
  return {0.0, 0.0, std::move(nodes), true};
}

}  // namespace kubo_ando
