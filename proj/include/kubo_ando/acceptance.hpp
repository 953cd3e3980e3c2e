#pragma once

// The acceptance suite: ten property checks at desk scale, each reduced to
// a pass flag, a one-line summary and a canonical string of the numbers it
// measured. The canonical strings are hashed (FNV-1a) so two runs can be
// compared bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "kubo_ando/catalog.hpp"
#include "kubo_ando/loewner.hpp"
#include "kubo_ando/matcore.hpp"
#include "kubo_ando/means.hpp"
#include "kubo_ando/orderdet.hpp"
#include "kubo_ando/parallel.hpp"
#include "kubo_ando/random.hpp"

namespace kubo_ando::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string summary;
  std::string canonical;
};

struct Report {
  std::vector<CriterionResult> criteria;
  std::uint64_t hash = 0;

  bool all_passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
  }
};

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

// Per-trial outcome: failure count, worst observed figure, canonical text.
struct Trial {
  int failures = 0;
  double worst = 0.0;
  double worst_aux = 0.0;
  std::string canonical;
  std::string note;  // first failure description
};

inline void fail(Trial& t, const std::string& what) {
  if (t.failures++ == 0) t.note = what;
}

struct Tally {
  int failures = 0;
  double worst = 0.0;
  std::string canonical;
  std::string first_failure;
};

inline Tally tally(const std::vector<Trial>& trials) {
  Tally out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    out.failures += t.failures;
    out.worst = std::max(out.worst, t.worst);
    out.canonical += t.canonical;
    out.canonical += '\n';
    if (t.failures > 0 && out.first_failure.empty()) out.first_failure = "trial " + std::to_string(i) + ": " + t.note;
  }
  return out;
}

inline std::uint64_t trial_seed(std::uint64_t master, int criterion, int trial) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(criterion)), static_cast<std::uint64_t>(trial));
}

inline std::vector<Connection> theorem_connections() {
  std::vector<Connection> out;
  for (const auto& name : catalog::theorem_means()) out.push_back(catalog::parse(name));
  return out;
}

inline CriterionResult finish(int id, std::string title, const Tally& t, std::string summary) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  r.passed = t.failures == 0;
  r.summary = std::move(summary);
  if (!r.passed) r.summary += "; " + std::to_string(t.failures) + " failure(s), first " + t.first_failure;
  r.canonical = t.canonical;
  return r;
}

// Nonzero spectral projection of a random symmetric matrix below 0; the
// identity when that part of the spectrum is empty.
inline OrthProjection random_projection(int n, Rng& rng) {
  const OrthProjection p = spectral_projection(random_symmetric(n, rng), Interval::below(0.0));
  return p.is_zero() ? OrthProjection(SymMatrix::identity(n)) : p;
}

}  // namespace detail

// 1. Kubo-Ando axioms (i), (ii) and the downward continuity (iii).
inline CriterionResult axioms(std::uint64_t master, int jobs) {
  const auto means = detail::theorem_connections();
  const auto trials = parallel_map(200, jobs, [&](int i) {
    detail::Trial t;
    Rng rng(detail::trial_seed(master, 1, i));
    const int n = rng.integer(2, 8);
    const SpdMatrix a = random_spd(n, rng);
    const SpdMatrix b = random_spd(n, rng);
    const Matrix e = rng.uniform_matrix(n, n, -1.0, 1.0);
    const Matrix g = rng.uniform_matrix(n, n, -1.0, 1.0);
    const SpdMatrix c(SymMatrix::symmetrized(a.matrix() + e * e.transpose()));
    const SpdMatrix d(SymMatrix::symmetrized(b.matrix() + g * g.transpose()));
    const SymMatrix raw = random_symmetric(n, rng);
    const Matrix cm = raw.matrix() + (std::max(0.0, -min_eigenvalue(raw)) + 0.1) * Matrix::Identity(n, n);
    const SpdMatrix cac(SymMatrix::symmetrized(cm * a.matrix() * cm));
    const SpdMatrix cbc(SymMatrix::symmetrized(cm * b.matrix() * cm));
    for (const auto& conn : means) {
      const PsdMatrix ab = connection_eval(conn, a, b);
      const PsdMatrix cd = connection_eval(conn, c, d);
      const double gap_i = min_eigenvalue(cd - ab) / (1.0 + cd.norm());
      if (gap_i < -1e-8) detail::fail(t, conn.label() + " monotonicity");

      const SymMatrix lhs = SymMatrix::symmetrized(cm * ab.matrix() * cm);
      const PsdMatrix rhs = connection_eval(conn, cac, cbc);
      const double gap_ii = min_eigenvalue(rhs - lhs) / (1.0 + rhs.norm());
      if (gap_ii < -1e-8) detail::fail(t, conn.label() + " transformer inequality");

      const ExtensionTrace trace = extension_sequence(conn.f, a, b);
      if (!trace.converged) detail::fail(t, conn.label() + " halving did not converge");
      double worst_step = 0.0;
      for (std::size_t k = 1; k < trace.iterates.size(); ++k) {
        const PsdMatrix& prev = trace.iterates[k - 1];
        worst_step = std::min(worst_step, min_eigenvalue(prev - trace.iterates[k]) / (1.0 + prev.norm()));
      }
      if (worst_step < -1e-8) detail::fail(t, conn.label() + " halving not decreasing");
      const double limit_err = operator_norm(trace.iterates.back() - ab) / (1.0 + ab.norm());
      if (limit_err > 1e-8) detail::fail(t, conn.label() + " halving limit off by " + detail::sci(limit_err));
      t.worst = std::max({t.worst, -gap_i, -gap_ii, -worst_step, limit_err});
      t.canonical += detail::num(ab.norm()) + ',' + detail::num(gap_i) + ',' + detail::num(gap_ii) + ',' +
                     std::to_string(trace.iterates.size()) + ';';
    }
    return t;
  });
  const auto tl = detail::tally(trials);
  return detail::finish(1, "Kubo-Ando axioms (i), (ii), (iii)", tl,
                        "200 trials x 7 means, worst relative defect " + detail::sci(tl.worst) + " (limit 1e-8)");
}

// 2. I sigma B = f(B).
inline CriterionResult identity_left(std::uint64_t master, int jobs) {
  const auto means = detail::theorem_connections();
  const auto trials = parallel_map(static_cast<int>(means.size()) * 50, jobs, [&](int i) {
    detail::Trial t;
    const Connection& conn = means[static_cast<std::size_t>(i / 50)];
    Rng rng(detail::trial_seed(master, 2, i));
    const int n = rng.integer(2, 8);
    const SpdMatrix b = random_spd(n, rng);
    const PsdMatrix lhs = connection_eval(conn, SpdMatrix::identity(n), b);
    const SymMatrix rhs = apply_fn(b, [&](double x) { return conn.f(x); });
    t.worst = max_abs(lhs.matrix() - rhs.matrix());
    if (t.worst > 1e-10) detail::fail(t, conn.label() + " deviation " + detail::sci(t.worst));
    t.canonical = detail::num(t.worst);
    return t;
  });
  const auto tl = detail::tally(trials);
  return detail::finish(2, "Identity I sigma B = f(B)", tl,
                        "50 trials x 7 means, max deviation " + detail::sci(tl.worst) + " (limit 1e-10)");
}

// 3. Measure formula against functional calculus.
inline CriterionResult dual_path(std::uint64_t master, int jobs) {
  struct Case {
    Connection conn;
    double limit;
  };
  const std::vector<Case> cases = {{catalog::arithmetic(), 1e-12},
                                   {catalog::harmonic(), 1e-12},
                                   {catalog::parse("mix:0.5:arithmetic:harmonic"), 1e-9},
                                   {catalog::parse("mix:0.25:arithmetic:harmonic"), 1e-9},
                                   {catalog::parse("mix:0.5:arithmetic:geometric"), 1e-9}};
  const auto trials = parallel_map(100, jobs, [&](int i) {
    detail::Trial t;
    Rng rng(detail::trial_seed(master, 3, i));
    const int n = rng.integer(2, 8);
    const SpdMatrix a = random_spd(n, rng);
    const SpdMatrix b = random_spd(n, rng);
    for (const auto& c : cases) {
      const double err = max_abs(measure_connection_eval(*c.conn.measure, a, b).matrix() -
                                 connection_eval(c.conn, a, b).matrix());
      if (err > c.limit) detail::fail(t, c.conn.label() + " off by " + detail::sci(err));
      (c.limit < 1e-10 ? t.worst : t.worst_aux) = std::max(c.limit < 1e-10 ? t.worst : t.worst_aux, err);
      t.canonical += detail::num(err) + ';';
    }
    return t;
  });
  double worst_mix = 0.0;
  for (const auto& t : trials) worst_mix = std::max(worst_mix, t.worst_aux);
  const auto tl = detail::tally(trials);
  return detail::finish(3, "Dual-path agreement", tl,
                        "100 trials, arithmetic/harmonic max " + detail::sci(tl.worst) + " (limit 1e-12), mixtures max " +
                            detail::sci(worst_mix) + " (limit 1e-9)");
}

// 4. The two measures given in closed form reproduce their functions.
inline CriterionResult measure_identities() {
  const BorelMeasure harmonic = BorelMeasure::dirac(1.0);
  const BorelMeasure arithmetic(0.5, 0.5, {});
  detail::Trial t;
  for (double x : standard_grid()) {
    const double eh = std::abs(measure_eval_fn(harmonic, x) - 2.0 * x / (1.0 + x));
    const double ea = std::abs(measure_eval_fn(arithmetic, x) - (1.0 + x) / 2.0);
    t.worst = std::max({t.worst, eh, ea});
    if (eh > 1e-14 || ea > 1e-14) detail::fail(t, "x = " + detail::num(x));
    t.canonical += detail::num(eh) + ',' + detail::num(ea) + ';';
  }
  const auto tl = detail::tally({t});
  return detail::finish(4, "Measure identities delta_1 and (delta_0 + delta_inf)/2", tl,
                        "64 grid points, max deviation " + detail::sci(tl.worst) + " (limit 1e-14)");
}

// 5. Order criteria by compressions agree with the eigenvalue test.
inline CriterionResult prop2(std::uint64_t master, int jobs) {
  const auto trials = parallel_map(200, jobs, [&](int i) {
    detail::Trial t;
    const std::uint64_t seed = detail::trial_seed(master, 5, i);
    Rng rng(seed);
    const int n = rng.integer(2, 8);
    const PairKind kind = i % 2 == 0 ? PairKind::ordered : PairKind::unordered;
    const MatrixPair pair = generate_pair(n, derive_seed(seed, 1), kind);
    const Prop2Report r = prop2_criteria(pair.a, pair.b, default_eps_grid(pair.a, pair.b));
    if (!r.consistent()) detail::fail(t, "criteria disagree");
    if (r.loewner != (kind == PairKind::ordered)) detail::fail(t, "eigenvalue test contradicts construction");
    t.canonical = std::string(r.loewner ? "1" : "0") + (r.norm_criterion ? "1" : "0") +
                  (r.inclusion_criterion ? "1" : "0") + ',' + std::to_string(r.entries.size());
    for (const auto& e : r.entries) t.canonical += ',' + detail::num(e.norm_pap - e.norm_pbp);
    return t;
  });
  const auto tl = detail::tally(trials);
  int agree = 0;
  for (const auto& t : trials) agree += t.failures == 0;
  return detail::finish(5, "Compression criteria equivalence", tl,
                        std::to_string(agree) + "/200 pairs with identical verdicts (100 ordered, 100 unordered)");
}

// 6. ||X_s + sP|| - s -> ||PXP||.
inline CriterionResult prop3(std::uint64_t master, int jobs) {
  const std::vector<double> grid = power_of_two_grid(20);
  const auto trials = parallel_map(50, jobs, [&](int i) {
    detail::Trial t;
    Rng rng(detail::trial_seed(master, 6, i));
    const int n = rng.integer(2, 8);
    // Constant family: a vanishing perturbation of size 1/s would by itself
    // sit at the 1e-6 threshold at s = 2^20.
    const PsdMatrix x = random_unit_psd(n, rng);
    const OrthProjection p = detail::random_projection(n, rng);
    const LimitScan scan = prop3_limit_scan([&](double) { return SymMatrix(x); }, x, p, grid);
    t.worst = std::abs(scan.values.back() - scan.target);
    if (t.worst > 1e-6) detail::fail(t, "error " + detail::sci(t.worst) + " at s = 2^20");
    t.canonical = detail::num(scan.target) + ',' + detail::num(scan.values.back()) + ',' +
                  detail::num(scan.settled_from.value_or(0.0));
    return t;
  });
  const auto tl = detail::tally(trials);
  return detail::finish(6, "Norm limit ||X_s + sP|| - s -> ||PXP||", tl,
                        "50 scans, max |value - ||PXP||| at s = 2^20: " + detail::sci(tl.worst) + " (limit 1e-6)");
}

// 7. Closed form of ||A sigma P||. Applied to h = f - f(0+) - f°(0+)x,
// which is f itself for the means with f(0+) = 0.
inline CriterionResult prop4(std::uint64_t master, int jobs) {
  const std::vector<std::string> names = {"geometric", "harmonic", "power:-0.5", "power:0.5"};
  std::vector<RepresentingFunction> hs;
  for (const auto& name : names) hs.push_back(nonaffine_part(catalog::parse(name).f));
  const auto trials = parallel_map(static_cast<int>(names.size()) * 50, jobs, [&](int i) {
    detail::Trial t;
    const RepresentingFunction& h = hs[static_cast<std::size_t>(i / 50)];
    Rng rng(detail::trial_seed(master, 7, i));
    const int n = rng.integer(2, 8);
    const SpdMatrix a = random_spd(n, rng);
    const OrthProjection p = detail::random_projection(n, rng);
    const double closed = prop4_norm(h, a, p);
    const double direct = connection_eval(h, a, p).norm();
    t.worst = std::abs(closed - direct);
    if (t.worst > 1e-8) detail::fail(t, h.label() + " off by " + detail::sci(t.worst));
    t.canonical = detail::num(closed) + ',' + detail::num(direct);
    return t;
  });
  const auto tl = detail::tally(trials);
  return detail::finish(7, "Closed-form norm of A sigma P", tl,
                        "50 (A, P) x {geometric, harmonic, power:-0.5, power:0.5 via h}, max deviation " +
                            detail::sci(tl.worst) + " (limit 1e-8)");
}

// 8. ||A sigma (sP + s delta I)|| - beta s (1 + delta) -> (alpha + gamma) ||PAP||.
inline CriterionResult first_moment_limit(std::uint64_t master, int jobs) {
  const std::vector<Connection> means = {catalog::arithmetic(), catalog::parse("mix:0.5:arithmetic:harmonic"),
                                         catalog::parse("mix:0.25:arithmetic:harmonic")};
  const std::vector<double> grid = power_of_two_grid(30);
  const auto trials = parallel_map(static_cast<int>(means.size()) * 20, jobs, [&](int i) {
    detail::Trial t;
    const Connection& conn = means[static_cast<std::size_t>(i / 20)];
    Rng rng(detail::trial_seed(master, 8, i));
    const int n = rng.integer(2, 8);
    const SpdMatrix a = random_spd(n, rng);
    const OrthProjection p = detail::random_projection(n, rng);
    const double delta = rng.uniform(0.1, 1.0);
    const LimitScan scan = case2a_limit_scan(conn, a, p, delta, grid);
    t.worst = scan.error();
    if (t.worst > 1e-5) detail::fail(t, conn.label() + " off by " + detail::sci(t.worst));
    t.canonical = detail::num(scan.target) + ',' + detail::num(scan.extrapolated);
    return t;
  });
  const auto tl = detail::tally(trials);
  return detail::finish(8, "Large-s limit (alpha + gamma)||PAP||", tl,
                        "20 instances x {arithmetic, mix:0.5:arithmetic:harmonic, mix:0.25:arithmetic:harmonic}, "
                        "max error " + detail::sci(tl.worst) + " (limit 1e-5)");
}

// 9. The round trip: witnesses for unordered pairs, no violations for
// ordered ones.
inline CriterionResult theorem_round_trip(std::uint64_t master, int jobs) {
  const auto means = detail::theorem_connections();
  const int per_kind = 100;
  const int total = 2 * per_kind * static_cast<int>(means.size());
  const auto trials = parallel_map(total, jobs, [&](int i) {
    detail::Trial t;
    const int pair_index = i / static_cast<int>(means.size());
    const Connection& conn = means[static_cast<std::size_t>(i % static_cast<int>(means.size()))];
    const bool ordered = pair_index >= per_kind;
    const std::uint64_t seed = detail::trial_seed(master, 9, pair_index);
    Rng rng(seed);
    const int n = rng.integer(2, 8);
    const MatrixPair pair = generate_pair(n, derive_seed(seed, 1), ordered ? PairKind::ordered : PairKind::unordered);
    try {
      const OrderVerdict v = order_determination_check(conn, pair.a, pair.b, ordered ? 1000 : 100, derive_seed(seed, 2));
      if (ordered) {
        if (!v.loewner || !v.norm_dominated) detail::fail(t, conn.label() + " ordered pair flagged");
        t.canonical = "o," + std::to_string(v.samples_used);
      } else if (!v.witness) {
        detail::fail(t, conn.label() + " no witness");
      } else {
        const WitnessReport& w = *v.witness;
        // Independent re-evaluation of the certificate.
        const PsdMatrix x = w.x();
        const double margin = connection_eval(conn, pair.a, x).norm() - connection_eval(conn, pair.b, x).norm();
        if (!(margin > 10.0 * w.tolerance)) detail::fail(t, conn.label() + " witness margin not reproduced");
        t.canonical = "u," + detail::num(w.eps) + ',' + detail::num(w.s) + ',' + detail::num(w.delta) + ',' +
                      detail::num(w.margin);
      }
    } catch (const TheoremViolationError& e) {
      detail::fail(t, conn.label() + " theorem violation: " + e.what());
    } catch (const SearchFailureError& e) {
      detail::fail(t, conn.label() + " search failure: " + e.what());
    }
    return t;
  });
  const auto tl = detail::tally(trials);
  int witnesses = 0;
  int dominated = 0;
  const int half = per_kind * static_cast<int>(means.size());
  for (int i = 0; i < total; ++i) (i < half ? witnesses : dominated) += trials[static_cast<std::size_t>(i)].failures == 0;
  return detail::finish(9, "Order determination round trip", tl,
                        std::to_string(witnesses) + "/" + std::to_string(half) + " unordered (pair, mean) with witness, " +
                            std::to_string(dominated) + "/" + std::to_string(half) +
                            " ordered without violation over 1000 samples each");
}

/// Criteria 1-9 and their combined hash.
inline Report run_core(std::uint64_t master, int jobs) {
  Report r;
  r.criteria.push_back(axioms(master, jobs));
  r.criteria.push_back(identity_left(master, jobs));
  r.criteria.push_back(dual_path(master, jobs));
  r.criteria.push_back(measure_identities());
  r.criteria.push_back(prop2(master, jobs));
  r.criteria.push_back(prop3(master, jobs));
  r.criteria.push_back(prop4(master, jobs));
  r.criteria.push_back(first_moment_limit(master, jobs));
  r.criteria.push_back(theorem_round_trip(master, jobs));
  std::uint64_t h = fnv1a("kubo-ando-acceptance");
  for (const auto& c : r.criteria) {
    h = fnv1a(std::to_string(c.id) + (c.passed ? ":pass:" : ":fail:") + c.canonical + "\n", h);
  }
  r.hash = h;
  return r;
}

/// The full suite. Criterion 10 reruns 1-9 with the same seed on a
/// different thread count and compares hashes.
inline Report run(std::uint64_t master, int jobs) {
  Report r = run_core(master, jobs);
  const int other_jobs = jobs > 1 ? 1 : std::max(2, default_jobs());
  const Report again = run_core(master, other_jobs);
  CriterionResult c;
  c.id = 10;
  c.title = "Determinism under a fixed master seed";
  c.passed = again.hash == r.hash;
  c.summary = "hash " + hex64(r.hash) + " with " + std::to_string(jobs) + " thread(s), " + hex64(again.hash) + " with " +
              std::to_string(other_jobs);
  r.criteria.push_back(c);
  return r;
}

inline std::string format_line(const CriterionResult& c) {
  return std::string(c.passed ? "PASS" : "FAIL") + "  [" + std::to_string(c.id) + "] " + c.title + ": " + c.summary;
}

}  // namespace kubo_ando::acceptance
