#pragma once

// Built-in connections and the selector grammar used on the command line:
//
//   power:<p> | arithmetic | geometric | harmonic | mix:<w>:<name1>:<name2>
//
// Names inside a mix may themselves be any selector, e.g.
// "mix:0.5:arithmetic:power:0.5".

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kubo_ando/errors.hpp"
#include "kubo_ando/loewner.hpp"
#include "kubo_ando/means.hpp"
#include "kubo_ando/measure.hpp"

namespace kubo_ando {

/// Pairs f with a measure after checking that the measure reproduces f on
/// the standard grid and that its atoms match f(0+) and f°(0+).
inline Connection make_connection(RepresentingFunction f, std::optional<BorelMeasure> measure = std::nullopt) {
  if (measure) {
    measure->require_positive_mass();
    if (std::abs(measure->atom0() - f.at_0plus()) > 1e-12 ||
        std::abs(measure->atom_inf() - f.transpose_at_0plus()) > 1e-12) {
      throw InconsistencyError(f.label() + ": measure atoms do not match f(0+), f°(0+)");
    }
    const double tol = measure_tolerance(*measure);
    for (double x : standard_grid()) {
      const double fx = f(x);
      if (std::abs(measure_eval_fn(*measure, x) - fx) > tol * (1.0 + fx)) {
        throw InconsistencyError(f.label() + ": measure does not reproduce the function at x = " +
                                 detail::format_double(x));
      }
    }
  }
  return Connection{std::move(f), std::move(measure)};
}

namespace catalog {

inline Connection arithmetic() {
  RepresentingFunction f = make_power_fn(1.0);
  return make_connection(RepresentingFunction(f.function(), 0.5, 0.5, "arithmetic"), BorelMeasure(0.5, 0.5, {}));
}

inline Connection harmonic() {
  RepresentingFunction f = make_power_fn(-1.0);
  return make_connection(RepresentingFunction(f.function(), 0.0, 0.0, "harmonic"), BorelMeasure::dirac(1.0));
}

inline Connection geometric() {
  RepresentingFunction f = make_power_fn(0.0);
  return make_connection(RepresentingFunction(f.function(), 0.0, 0.0, "geometric"), geometric_mean_measure());
}

/// Power mean f_p. Measures are attached only for p in {-1, 0, 1}.
inline Connection power(double p) {
  RepresentingFunction f = make_power_fn(p);
  if (p == 1.0) return make_connection(std::move(f), arithmetic().measure);
  if (p == -1.0) return make_connection(std::move(f), harmonic().measure);
  if (p == 0.0) return make_connection(std::move(f), geometric().measure);
  return make_connection(std::move(f));
}

/// w a + (1 - w) b; the measure is mixed when both sides carry one.
inline Connection mix(double w, const Connection& a, const Connection& b) {
  std::optional<BorelMeasure> m;
  if (a.measure && b.measure) m = kubo_ando::mix(w, *a.measure, *b.measure);
  return make_connection(mix_fn(w, a.f, b.f), std::move(m));
}

namespace detail {

inline double parse_number(std::string_view token, std::string_view selector) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, value);
  if (token.empty() || res.ec != std::errc{} || res.ptr != last) {
    throw InputError("bad number '" + std::string(token) + "' in mean selector '" + std::string(selector) + "'");
  }
  return value;
}

inline Connection parse_tokens(const std::vector<std::string_view>& tokens, std::size_t& pos,
                               std::string_view selector) {
  if (pos >= tokens.size()) throw InputError("truncated mean selector '" + std::string(selector) + "'");
  const std::string_view head = tokens[pos++];
  if (head == "arithmetic") return arithmetic();
  if (head == "geometric") return geometric();
  if (head == "harmonic") return harmonic();
  if (head == "power") {
    if (pos >= tokens.size()) throw InputError("power selector needs an exponent");
    return power(parse_number(tokens[pos++], selector));
  }
  if (head == "mix") {
    if (pos >= tokens.size()) throw InputError("mix selector needs a weight");
    const double w = parse_number(tokens[pos++], selector);
    if (!(w >= 0.0 && w <= 1.0)) throw InputError("mix weight outside [0, 1]");
    Connection a = parse_tokens(tokens, pos, selector);
    Connection b = parse_tokens(tokens, pos, selector);
    return mix(w, a, b);
  }
  throw InputError("unknown mean '" + std::string(head) + "' in selector '" + std::string(selector) + "'");
}

}  // namespace detail

/// Parses a selector string; unknown names raise InputError.
inline Connection parse(std::string_view selector) {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = selector.find(':', start);
    tokens.push_back(selector.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  std::size_t pos = 0;
  Connection c = detail::parse_tokens(tokens, pos, selector);
  if (pos != tokens.size()) throw InputError("trailing tokens in mean selector '" + std::string(selector) + "'");
  return c;
}

/// The symmetric means exercised by the theorem round-trip: the five
/// principal power means, one mixture with finite first moment (alpha > 0)
/// and one whose interior measure has infinite first moment.
inline const std::vector<std::string>& theorem_means() {
  static const std::vector<std::string> names = {
      "power:-1", "power:-0.5", "power:0", "power:0.5", "power:1",
      "mix:0.5:arithmetic:harmonic", "mix:0.5:arithmetic:geometric"};
  return names;
}

}  // namespace catalog
}  // namespace kubo_ando
