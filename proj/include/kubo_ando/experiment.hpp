#pragma once

// Batch driver behind the command-line tool. A command plus its settings
// forms an ExperimentConfig; run() executes it and writes JSON (verdicts,
// evaluations) or CSV (scans). Exit status: 0 clean, 1 invariant or theorem
// violation, 2 invalid configuration.
//
// Every trial seeds its own generator from (master_seed, trial_index), and
// records are emitted in trial-index order, so outputs are byte-identical
// for any --jobs value. Timings appear only with --timings.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kubo_ando/acceptance.hpp"
#include "kubo_ando/catalog.hpp"
#include "kubo_ando/errors.hpp"
#include "kubo_ando/io.hpp"
#include "kubo_ando/orderdet.hpp"
#include "kubo_ando/parallel.hpp"
#include "kubo_ando/random.hpp"

namespace kubo_ando {

class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultMasterSeed = 1;

/// KA_MASTER_SEED when set to an unsigned integer, else 1.
inline std::uint64_t default_master_seed() {
  const char* env = std::getenv("KA_MASTER_SEED");
  if (env == nullptr || *env == '\0') return kDefaultMasterSeed;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || *env == '-') throw UsageError("KA_MASTER_SEED must be an unsigned integer");
  return v;
}

struct ExperimentConfig {
  std::string command;
  std::string mean = "geometric";
  int n = 3;
  int trials = 1;
  std::uint64_t master_seed = kDefaultMasterSeed;
  std::optional<std::string> a_path;
  std::optional<std::string> b_path;
  std::optional<std::string> p_path;
  std::optional<std::string> measure_path;
  std::string output;         // empty: standard output
  std::string pair = "mixed"; // ordered | unordered | congruent-diagonal | mixed
  int samples = 200;
  int jobs = 1;
  bool timings = false;
  std::optional<double> tol_limit;
  double delta = 0.5;
  int max_exponent = 30;
};

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c = {"eval", "check-order", "witness", "scan-prop3", "scan-e1", "selftest"};
  return c;
}

/// Throws UsageError on any invalid setting.
inline void validate(const ExperimentConfig& c) {
  if (!known_commands().count(c.command)) throw UsageError("unknown command '" + c.command + "'");
  if (c.trials < 1) throw UsageError("--trials must be at least 1");
  if (c.n < 2 || c.n > kMaxDimension) throw UsageError("--n must lie in [2, 256]");
  if (c.samples < 1) throw UsageError("--samples must be at least 1");
  if (c.jobs < 1) throw UsageError("--jobs must be at least 1");
  if (c.tol_limit && !(*c.tol_limit > 0.0)) throw UsageError("--tol-limit must be positive");
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) throw UsageError("--delta must be positive");
  if (c.max_exponent < 3 || c.max_exponent > 60) throw UsageError("--max-exponent must lie in [3, 60]");
  if (c.pair != "mixed") {
    try {
      parse_pair_kind(c.pair);
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
  }
  if (c.a_path.has_value() != c.b_path.has_value() && c.command != "scan-e1") {
    throw UsageError("--A and --B must be given together");
  }
  try {
    catalog::parse(c.mean);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

/// One check-order trial.
struct TrialRecord {
  int trial_index = 0;
  std::uint64_t seed = 0;
  std::string pair;
  OrderVerdict verdict;
  double timing_ms = 0.0;

  nlohmann::json to_json(bool with_timing) const {
    nlohmann::json j = io::verdict_to_json(verdict);
    j["trial_index"] = trial_index;
    j["seed"] = seed;
    j["pair"] = pair;
    if (with_timing) j["timing_ms"] = timing_ms;
    return j;
  }
};

namespace detail {

inline PairKind trial_kind(const std::string& pair, int trial_index) {
  if (pair == "mixed") return trial_index % 2 == 0 ? PairKind::ordered : PairKind::unordered;
  return parse_pair_kind(pair);
}

inline PsdMatrix read_psd(const std::string& path) { return PsdMatrix(io::matrix_from_json(io::read_json_file(path))); }

inline SpdMatrix read_spd(const std::string& path) { return SpdMatrix(io::matrix_from_json(io::read_json_file(path))); }

// Pair from --A/--B, or generated from the master seed.
inline MatrixPair config_pair(const ExperimentConfig& c, PairKind fallback) {
  if (c.a_path) return {read_spd(*c.a_path), read_spd(*c.b_path)};
  const std::string kind = c.pair == "mixed" ? std::string(to_string(fallback)) : c.pair;
  return generate_pair(c.n, derive_seed(c.master_seed, 0), parse_pair_kind(kind));
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct Outcome {
  int status = 0;
  std::string text;
  std::string note;  // diagnostics for stderr
};

inline Outcome run_eval(const ExperimentConfig& c) {
  const Connection conn = catalog::parse(c.mean);
  PsdMatrix a = c.a_path ? read_psd(*c.a_path) : PsdMatrix(config_pair(c, PairKind::unordered).a);
  PsdMatrix b = c.b_path ? read_psd(*c.b_path) : PsdMatrix(config_pair(c, PairKind::unordered).b);
  const PsdMatrix result = connection_eval_psd(conn.f, a, b);
  nlohmann::json j;
  j["command"] = "eval";
  j["mean"] = conn.label();
  j["A"] = io::matrix_to_json(a);
  j["B"] = io::matrix_to_json(b);
  j["result"] = io::matrix_to_json(result);
  std::optional<BorelMeasure> m = conn.measure;
  if (c.measure_path) m = io::measure_from_json(io::read_json_file(*c.measure_path));
  const bool definite = a.min_eigenvalue() >= kPdFloor && b.min_eigenvalue() >= kPdFloor;
  if (m && definite) {
    const SpdMatrix via_measure = measure_connection_eval(*m, SpdMatrix(a), SpdMatrix(b));
    j["measure_result"] = io::matrix_to_json(via_measure);
    j["dual_path_error"] = operator_norm(via_measure - result);
  }
  return {0, dump(j), {}};
}

inline Outcome run_check_order(const ExperimentConfig& c) {
  const Connection conn = catalog::parse(c.mean);
  require_symmetric(conn);
  const int trials = c.a_path ? 1 : c.trials;
  const auto records = parallel_map(trials, c.jobs, [&](int i) {
    TrialRecord r;
    r.trial_index = i;
    r.seed = derive_seed(c.master_seed, static_cast<std::uint64_t>(i));
    const auto start = std::chrono::steady_clock::now();
    MatrixPair pair = [&] {
      if (c.a_path) {
        r.pair = "input";
        return MatrixPair{read_spd(*c.a_path), read_spd(*c.b_path)};
      }
      const PairKind kind = trial_kind(c.pair, i);
      r.pair = std::string(to_string(kind));
      return generate_pair(c.n, r.seed, kind);
    }();
    r.verdict = order_determination_check(conn, pair.a, pair.b, c.samples, derive_seed(r.seed, 1));
    r.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
  });
  nlohmann::json j;
  j["command"] = "check-order";
  j["mean"] = conn.label();
  j["master_seed"] = c.master_seed;
  j["n"] = c.n;
  j["samples"] = c.samples;
  j["trials"] = nlohmann::json::array();
  for (const auto& r : records) j["trials"].push_back(r.to_json(c.timings));
  return {0, dump(j), {}};
}

inline Outcome run_witness(const ExperimentConfig& c) {
  const Connection conn = catalog::parse(c.mean);
  const MatrixPair pair = config_pair(c, PairKind::unordered);
  nlohmann::json j;
  j["command"] = "witness";
  j["mean"] = conn.label();
  j["loewner"] = loewner_leq(pair.a, pair.b, norm_tolerance(pair.a.norm(), pair.b.norm()));
  const auto w = witness_search(conn, pair.a, pair.b);
  j["witness"] = w ? io::witness_to_json(*w) : nlohmann::json(nullptr);
  return {0, dump(j), {}};
}

// CSV of one or more scans; a trial column is prepended when there are
// several. Status 1 when a scan has settled away from its target; a scan
// that has not settled on the grid only earns a note.
inline Outcome scans_to_csv(const std::vector<LimitScan>& scans, double tol) {
  Outcome out;
  if (scans.size() == 1) {
    out.text = io::scan_to_csv(scans[0]);
  } else {
    out.text = "trial,s,value,target\n";
    for (std::size_t t = 0; t < scans.size(); ++t) {
      const LimitScan& sc = scans[t];
      for (std::size_t k = 0; k < sc.values.size(); ++k) {
        out.text += std::to_string(t) + "," + io::format_csv_number(sc.s_values[k]) + "," +
                    io::format_csv_number(sc.values[k]) + "," + io::format_csv_number(sc.target) + "\n";
      }
    }
  }
  for (std::size_t t = 0; t < scans.size(); ++t) {
    if (!scans[t].converged) {
      out.note += "trial " + std::to_string(t) + ": not settled on the grid, extend --max-exponent\n";
    } else if (scans[t].error() > tol) {
      out.status = 1;
      out.note += "trial " + std::to_string(t) + ": settled at " + io::format_csv_number(scans[t].extrapolated) +
                  " but the target is " + io::format_csv_number(scans[t].target) + "\n";
    }
  }
  return out;
}

inline OrthProjection config_projection(const ExperimentConfig& c, int n, Rng& rng) {
  if (c.p_path) return OrthProjection(io::matrix_from_json(io::read_json_file(*c.p_path)));
  return acceptance::detail::random_projection(n, rng);
}

inline Outcome run_scan_prop3(const ExperimentConfig& c) {
  const double tol = c.tol_limit.value_or(kLimitTolerance);
  const auto grid = power_of_two_grid(c.max_exponent);
  const auto scans = parallel_map(c.trials, c.jobs, [&](int i) {
    Rng rng(derive_seed(c.master_seed, static_cast<std::uint64_t>(i)));
    const PsdMatrix x = c.a_path ? read_psd(*c.a_path) : random_unit_psd(c.n, rng);
    const OrthProjection p = config_projection(c, x.dim(), rng);
    return prop3_limit_scan([&](double) { return SymMatrix(x); }, x, p, grid, tol);
  });
  return scans_to_csv(scans, tol);
}

inline Outcome run_scan_e1(const ExperimentConfig& c) {
  const double tol = c.tol_limit.value_or(1e-5);
  const Connection conn = catalog::parse(c.mean);
  const auto grid = power_of_two_grid(c.max_exponent);
  const auto scans = parallel_map(c.trials, c.jobs, [&](int i) {
    Rng rng(derive_seed(c.master_seed, static_cast<std::uint64_t>(i)));
    const SpdMatrix a = c.a_path ? read_spd(*c.a_path) : random_spd(c.n, rng);
    const OrthProjection p = config_projection(c, a.dim(), rng);
    return case2a_limit_scan(conn, a, p, c.delta, grid, tol);
  });
  return scans_to_csv(scans, tol);
}

inline Outcome run_selftest(const ExperimentConfig& c) {
  const acceptance::Report r = acceptance::run(c.master_seed, c.jobs);
  Outcome out;
  for (const auto& crit : r.criteria) out.text += acceptance::format_line(crit) + "\n";
  out.text += "master seed " + std::to_string(c.master_seed) + ", result hash " + acceptance::hex64(r.hash) + "\n";
  out.status = r.all_passed() ? 0 : 1;
  return out;
}

}  // namespace detail

/// Validates and executes `config`, writing artifacts to config.output (or
/// `out`) and diagnostics to `err`. Returns the exit status.
inline int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  detail::Outcome result;
  try {
    validate(config);
    if (config.command == "eval") result = detail::run_eval(config);
    else if (config.command == "check-order") result = detail::run_check_order(config);
    else if (config.command == "witness") result = detail::run_witness(config);
    else if (config.command == "scan-prop3") result = detail::run_scan_prop3(config);
    else if (config.command == "scan-e1") result = detail::run_scan_e1(config);
    else result = detail::run_selftest(config);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const TheoremViolationError& e) {
    err << "theorem violation: " << e.what() << "\n" << e.diagnostic() << "\n";
    return 1;
  } catch (const SearchFailureError& e) {
    err << "search failure: " << e.what() << "\n" << e.table();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (config.output.empty()) {
    out << result.text;
  } else {
    std::ofstream file(config.output, std::ios::binary);
    if (!file) {
      err << "input error: cannot write " << config.output << "\n";
      return 2;
    }
    file << result.text;
  }
  err << result.note;
  if (result.status != 0) err << config.command << ": invariant check failed\n";
  return result.status;
}

}  // namespace kubo_ando
