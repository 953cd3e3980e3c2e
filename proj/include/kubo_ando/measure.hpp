#pragma once

// Finite positive Borel measures on [0, inf]: an atom at 0, an atom at inf,
// and finitely many weighted nodes on (0, inf). Discrete measures are exact;
// continuous ones are carried as quadrature nodes and flagged as such.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kubo_ando/errors.hpp"

namespace kubo_ando {

struct MeasureNode {
  double t = 1.0;
  double w = 0.0;
  friend bool operator==(const MeasureNode&, const MeasureNode&) = default;
};

class BorelMeasure {
 public:
  BorelMeasure() = default;

  // Nodes are sorted by location. Locations must be distinct, positive and
  // finite; weights positive and finite; atoms nonnegative and finite.
  // Zero total mass is allowed here (the interior part of an affine
  // function's measure is zero); `require_positive_mass` enforces the
  // stricter condition where a measure must represent a function.
  BorelMeasure(double atom0, double atom_inf, std::vector<MeasureNode> nodes, bool quadrature = false)
      : atom0_(atom0), atom_inf_(atom_inf), nodes_(std::move(nodes)), quadrature_(quadrature) {
    if (!(atom0_ >= 0.0) || !std::isfinite(atom0_) || !(atom_inf_ >= 0.0) || !std::isfinite(atom_inf_)) {
      throw InputError("measure atoms must be nonnegative and finite");
    }
    std::sort(nodes_.begin(), nodes_.end(),
              [](const MeasureNode& a, const MeasureNode& b) { return a.t < b.t; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& nd = nodes_[i];
      if (!(nd.t > 0.0) || !std::isfinite(nd.t)) {
        throw InputError("measure node locations must be positive and finite");
      }
      if (!(nd.w > 0.0) || !std::isfinite(nd.w)) {
        throw InputError("measure node weights must be positive and finite");
      }
      if (i > 0 && nodes_[i - 1].t == nd.t) throw InputError("measure node locations must be distinct");
    }
  }

  /// Unit point mass; t may be 0 or +inf.
  static BorelMeasure dirac(double t, double mass = 1.0) {
    if (t == 0.0) return {mass, 0.0, {}};
    if (std::isinf(t) && t > 0) return {0.0, mass, {}};
    return {0.0, 0.0, {{t, mass}}};
  }

  double atom0() const { return atom0_; }
  double atom_inf() const { return atom_inf_; }
  const std::vector<MeasureNode>& nodes() const { return nodes_; }
  bool quadrature() const { return quadrature_; }

  double total_mass() const {
    double s = atom0_ + atom_inf_;
    for (const auto& nd : nodes_) s += nd.w;
    return s;
  }
  bool is_zero() const { return total_mass() == 0.0; }

  void require_positive_mass() const {
    if (!(total_mass() > 0.0)) throw InputError("measure must have positive total mass");
  }

  /// Restriction to (0, inf): both atoms dropped.
  BorelMeasure interior() const { return {0.0, 0.0, nodes_, quadrature_}; }

  /// Integral of t over (0, inf). For quadrature measures this is the
  /// integral of the truncated representation only.
  double interior_moment() const {
    double s = 0.0;
    for (const auto& nd : nodes_) s += nd.w * nd.t;
    return s;
  }

  /// Integral of (1 + t) over (0, inf).
  double interior_gamma() const {
    double s = 0.0;
    for (const auto& nd : nodes_) s += nd.w * (1.0 + nd.t);
    return s;
  }

  friend bool operator==(const BorelMeasure&, const BorelMeasure&) = default;

 private:
  double atom0_ = 0.0;
  double atom_inf_ = 0.0;
  std::vector<MeasureNode> nodes_;
  bool quadrature_ = false;
};

/// w * a + (1 - w) * b, merging nodes at equal locations.
inline BorelMeasure mix(double w, const BorelMeasure& a, const BorelMeasure& b) {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("mixing weight must lie in [0, 1]");
  std::vector<MeasureNode> nodes;
  auto add = [&nodes](const BorelMeasure& m, double c) {
    if (c == 0.0) return;
    for (const auto& nd : m.nodes()) nodes.push_back({nd.t, c * nd.w});
  };
  add(a, w);
  add(b, 1.0 - w);
  std::sort(nodes.begin(), nodes.end(), [](const MeasureNode& x, const MeasureNode& y) { return x.t < y.t; });
  std::vector<MeasureNode> merged;
  for (const auto& nd : nodes) {
    if (!merged.empty() && merged.back().t == nd.t) {
      merged.back().w += nd.w;
    } else {
      merged.push_back(nd);
    }
  }
  return {w * a.atom0() + (1.0 - w) * b.atom0(), w * a.atom_inf() + (1.0 - w) * b.atom_inf(),
          std::move(merged), a.quadrature() || b.quadrature()};
}

}  // namespace kubo_ando
