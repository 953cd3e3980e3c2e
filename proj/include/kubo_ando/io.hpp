#pragma once

// Exchange formats.
//
//   matrix   {"n": int, "entries": [row-major n*n numbers]}
//   measure  {"atom0": num, "atomInf": num, "nodes": [[t, w], ...], "quadrature": bool}
//   scans    CSV with header "s,value,target"
//
// Verdicts and witnesses serialize to JSON objects with sorted keys.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kubo_ando/errors.hpp"
#include "kubo_ando/matcore.hpp"
#include "kubo_ando/measure.hpp"
#include "kubo_ando/orderdet.hpp"

namespace kubo_ando::io {

using json = nlohmann::json;

inline json matrix_to_json(const SymMatrix& m) {
  const int n = m.dim();
  json entries = json::array();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) entries.push_back(m(i, j));
  }
  return {{"n", n}, {"entries", std::move(entries)}};
}

/// Reads, symmetrizes and validates a matrix.
inline SymMatrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("entries")) {
    throw InputError("matrix JSON needs keys \"n\" and \"entries\"");
  }
  if (!j["n"].is_number_integer()) throw InputError("matrix JSON \"n\" must be an integer");
  const auto n = j["n"].get<long long>();
  if (n < 1 || n > kMaxDimension) throw InputError("matrix JSON \"n\" outside [1, 256]");
  const json& e = j["entries"];
  if (!e.is_array() || static_cast<long long>(e.size()) != n * n) {
    throw InputError("matrix JSON \"entries\" must hold n*n numbers");
  }
  Matrix m(n, n);
  for (long long k = 0; k < n * n; ++k) {
    if (!e[static_cast<std::size_t>(k)].is_number()) throw InputError("matrix JSON entries must be numbers");
    m(k / n, k % n) = e[static_cast<std::size_t>(k)].get<double>();
  }
  return SymMatrix(m);
}

inline json measure_to_json(const BorelMeasure& m) {
  json nodes = json::array();
  for (const auto& nd : m.nodes()) nodes.push_back(json::array({nd.t, nd.w}));
  return {{"atom0", m.atom0()}, {"atomInf", m.atom_inf()}, {"nodes", std::move(nodes)}, {"quadrature", m.quadrature()}};
}

inline BorelMeasure measure_from_json(const json& j) {
  if (!j.is_object()) throw InputError("measure JSON must be an object");
  auto number = [&j](const char* key) {
    if (!j.contains(key)) return 0.0;
    if (!j[key].is_number()) throw InputError(std::string("measure JSON \"") + key + "\" must be a number");
    return j[key].get<double>();
  };
  std::vector<MeasureNode> nodes;
  if (j.contains("nodes")) {
    if (!j["nodes"].is_array()) throw InputError("measure JSON \"nodes\" must be an array");
    for (const auto& nd : j["nodes"]) {
      if (!nd.is_array() || nd.size() != 2 || !nd[0].is_number() || !nd[1].is_number()) {
        throw InputError("measure JSON nodes must be [t, w] pairs");
      }
      nodes.push_back({nd[0].get<double>(), nd[1].get<double>()});
    }
  }
  const bool quadrature = j.contains("quadrature") && j["quadrature"].get<bool>();
  BorelMeasure m(number("atom0"), number("atomInf"), std::move(nodes), quadrature);
  m.require_positive_mass();
  return m;
}

inline json witness_to_json(const WitnessReport& w) {
  w.validate();
  return {{"P", matrix_to_json(w.projection)},
          {"rank", w.projection.rank()},
          {"eps", w.eps},
          {"s", w.s},
          {"delta", w.delta},
          {"norm_A", w.norm_a},
          {"norm_B", w.norm_b},
          {"margin", w.margin},
          {"tol_norm", w.tolerance}};
}

/// Re-validates the verdict invariants before writing.
inline json verdict_to_json(const OrderVerdict& v) {
  v.validate();
  json j = {{"loewner", v.loewner},
            {"norm_dominated", v.norm_dominated},
            {"mean", v.mean_label},
            {"samples_used", v.samples_used}};
  j["witness"] = v.witness ? witness_to_json(*v.witness) : json(nullptr);
  return j;
}

inline std::string format_csv_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Columns s, value, target.
inline std::string scan_to_csv(const LimitScan& scan) {
  std::string out = "s,value,target\n";
  for (std::size_t k = 0; k < scan.values.size(); ++k) {
    out += format_csv_number(scan.s_values[k]) + "," + format_csv_number(scan.values[k]) + "," +
           format_csv_number(scan.target) + "\n";
  }
  return out;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace kubo_ando::io
