#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kubo_ando/catalog.hpp"
#include "kubo_ando/orderdet.hpp"
#include "kubo_ando/random.hpp"
#include "test_support.hpp"

namespace {

using namespace kubo_ando;
using kubo_ando::testing::diag;
using kubo_ando::testing::MatrixNear;
using kubo_ando::testing::rotated_diag;

OrthProjection first_axis(int n = 2) {
  Vector d = Vector::Zero(n);
  d(0) = 1.0;
  return OrthProjection(SymMatrix::diagonal(d));
}

TEST(SampleGammaPositive, Examples) {
  const SymMatrix d(diag({-0.5, 2.0}));
  const PsdMatrix c = gamma_element(d, [](double) { return 3.0; });
  EXPECT_TRUE(MatrixNear(c.matrix(), 3.0 * Matrix::Identity(2, 2), 1e-14));
  const PsdMatrix g = gamma_element(d, [](double t) { return (t + 0.5) * (t + 0.5) + 1.0; });
  EXPECT_TRUE(MatrixNear(g.matrix(), diag({1.0, 2.5 * 2.5 + 1.0}), 1e-14));
  EXPECT_THROW(gamma_element(d, [](double t) { return t; }), DomainError);
}

TEST(SampleGammaPositive, CommutingPsdAndSeeded) {
  Rng rng(71);
  const SymMatrix d = random_symmetric(6, rng);
  const auto xs = sample_gamma_positive(d, 99, 200);
  ASSERT_EQ(xs.size(), 200u);
  for (const auto& x : xs) {
    EXPECT_LE(commutator_defect(x, d), 1e-9);
    EXPECT_GE(x.min_eigenvalue(), 0.05 - 1e-12);
  }
  const auto again = sample_gamma_positive(d, 99, 200);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xs[i].matrix(), again[i].matrix());
  EXPECT_THROW(sample_gamma_positive(d, 1, 0), InputError);
}

TEST(Prop2, DiagonalExample) {
  const PsdMatrix a(diag({2.0, 1.0}));
  const PsdMatrix b(diag({1.0, 2.0}));
  const Prop2Report r = prop2_criteria(a, b, {0.5});
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_TRUE(MatrixNear(spectral_projection(b - a, Interval::below(-0.5)).matrix(), diag({1.0, 0.0}), 0.0));
  EXPECT_DOUBLE_EQ(r.entries[0].norm_pap, 2.0);
  EXPECT_DOUBLE_EQ(r.entries[0].norm_pbp, 1.0);
  EXPECT_DOUBLE_EQ(r.entries[0].max_lambda_a, 2.0);
  EXPECT_DOUBLE_EQ(r.entries[0].max_lambda_b, 1.0);
  EXPECT_FALSE(r.loewner);
  EXPECT_FALSE(r.norm_criterion);
  EXPECT_FALSE(r.inclusion_criterion);
  EXPECT_TRUE(r.consistent());
}

TEST(Prop2, EquivalenceOnSeededPairs) {
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t seed = derive_seed(72, static_cast<std::uint64_t>(trial));
    Rng rng(seed);
    const int n = rng.integer(2, 8);
    const PairKind kind = trial % 2 == 0 ? PairKind::ordered : PairKind::unordered;
    const MatrixPair pair = generate_pair(n, seed, kind);
    const Prop2Report r = prop2_criteria(pair.a, pair.b, default_eps_grid(pair.a, pair.b));
    EXPECT_TRUE(r.consistent()) << "trial " << trial;
    EXPECT_EQ(r.loewner, kind == PairKind::ordered);
    if (kind == PairKind::ordered) {
      for (const auto& e : r.entries) EXPECT_LE(e.norm_pap, e.norm_pbp);
    }
  }
}

TEST(Prop3, Examples) {
  const std::vector<double> grid = power_of_two_grid(20);
  const OrthProjection p = first_axis();
  const SymMatrix x(diag({3.0, 1.0}));
  const LimitScan scan = prop3_limit_scan([&](double) { return x; }, x, p, grid);
  for (double v : scan.values) EXPECT_NEAR(v, 3.0, 1e-9);
  EXPECT_TRUE(scan.converged);
  EXPECT_DOUBLE_EQ(scan.target, 3.0);

  Rng rng(73);
  const PsdMatrix y = random_unit_psd(4, rng);
  const OrthProjection id(SymMatrix::identity(4));
  const LimitScan full = prop3_limit_scan([&](double) { return SymMatrix(y); }, y, id, grid);
  for (double v : full.values) EXPECT_NEAR(v, y.norm(), 1e-6);

  EXPECT_THROW(prop3_limit_scan([&](double) { return x; }, x, p, {1.0, 2.0, 4.0}), InputError);
  EXPECT_THROW(prop3_limit_scan([&](double) { return x; }, x, p, {1.0, 2.0, 2.0, 4.0}), InputError);
}

TEST(Prop3, VanishingPerturbationAndSeededConvergence) {
  const std::vector<double> grid = power_of_two_grid(30);
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(derive_seed(74, static_cast<std::uint64_t>(trial)));
    const int n = rng.integer(2, 8);
    const PsdMatrix x = random_unit_psd(n, rng);
    const PsdMatrix r = random_unit_psd(n, rng);
    OrthProjection p = spectral_projection(random_symmetric(n, rng), Interval::below(0.0));
    if (p.is_zero()) p = OrthProjection(SymMatrix::identity(n));
    const LimitScan scan =
        prop3_limit_scan([&](double s) { return SymMatrix(x + (1.0 / s) * r); }, x, p, grid);
    EXPECT_TRUE(scan.converged) << trial;
    EXPECT_LE(scan.error(), 1e-6) << trial;
    ASSERT_TRUE(scan.settled_from.has_value());
    // Direct independent check at s = 2^20 with the unperturbed family.
    const double s = std::ldexp(1.0, 20);
    const double direct = operator_norm(SymMatrix::symmetrized(x.matrix() + s * p.matrix())) - s;
    const double pxp = operator_norm(SymMatrix::symmetrized(p.matrix() * x.matrix() * p.matrix()));
    EXPECT_LE(std::abs(direct - pxp), 1e-6) << trial;
  }
}

TEST(Prop4, Examples) {
  const SpdMatrix a(diag({4.0, 9.0}));
  const OrthProjection p = first_axis();
  EXPECT_NEAR(prop4_norm(make_power_fn(0.0), a, p), 2.0, 1e-14);
  EXPECT_NEAR(prop4_norm(make_power_fn(-1.0), a, p), 1.6, 1e-14);
  // Direct paths: entrywise sqrt(4 * 1) and 2 * 4 * 1 / 5.
  EXPECT_NEAR(connection_eval(make_power_fn(0.0), a, p).norm(), 2.0, 1e-14);
  EXPECT_NEAR(connection_eval(make_power_fn(-1.0), a, p).norm(), 1.6, 1e-14);

  Rng rng(75);
  const OrthProjection q = spectral_projection(random_symmetric(4, rng), Interval::below(0.0));
  ASSERT_FALSE(q.is_zero());
  for (double pw : {-1.0, -0.5, 0.0}) EXPECT_NEAR(prop4_norm(make_power_fn(pw), SpdMatrix::identity(4), q), 1.0, 1e-12);
}

TEST(Prop4, Preconditions) {
  const SpdMatrix a(diag({4.0, 9.0}));
  EXPECT_THROW(prop4_norm(make_power_fn(0.5), a, first_axis()), PreconditionError);
  EXPECT_THROW(prop4_norm(make_power_fn(1.0), a, first_axis()), PreconditionError);
  const RepresentingFunction linear([](double x) { return x; }, 0.0, 1.0, "linear");
  EXPECT_THROW(prop4_norm(linear, a, first_axis()), PreconditionError);
  EXPECT_THROW(prop4_norm(make_power_fn(0.0), a, OrthProjection::zero(2)), InputError);
}

TEST(Prop4, ClosedFormMatchesDirectNorm) {
  // Power means with p < 0 have f(0+) = 0; p = 0.5 has f(0+) = 1/4 and is
  // rejected by the precondition, so -0.5 stands in for the negative side.
  for (double pw : {0.0, -1.0, -0.5}) {
    const auto f = make_power_fn(pw);
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(derive_seed(76, static_cast<std::uint64_t>(trial)));
      const int n = rng.integer(2, 8);
      const SpdMatrix a = random_spd(n, rng);
      OrthProjection p = spectral_projection(random_symmetric(n, rng), Interval::below(0.0));
      if (p.is_zero()) p = OrthProjection(SymMatrix::identity(n));
      EXPECT_NEAR(prop4_norm(f, a, p), connection_eval(f, a, p).norm(), 1e-8) << pw << " " << trial;
    }
  }
}

TEST(Case2a, ArithmeticIsExact) {
  const SpdMatrix a(diag({3.0, 1.0}));
  const LimitScan scan = case2a_limit_scan(catalog::arithmetic(), a, first_axis(), 1.0, power_of_two_grid(30));
  for (double v : scan.values) EXPECT_NEAR(v, 1.5, 1e-6);
  EXPECT_DOUBLE_EQ(scan.target, 1.5);
  EXPECT_TRUE(scan.converged);
  // Scalar oracle at moderate s: ||diag(3 + 2s, 1 + s)|| / 2 - s.
  EXPECT_NEAR(scan.values[3], (3.0 + 16.0) / 2.0 - 8.0, 1e-13);
}

TEST(Case2a, MixtureLimit) {
  const SpdMatrix a(diag({3.0, 1.0}));
  const Connection c = catalog::parse("mix:0.5:arithmetic:harmonic");
  const LimitScan scan = case2a_limit_scan(c, a, first_axis(), 0.5, power_of_two_grid(30));
  EXPECT_DOUBLE_EQ(scan.target, 3.75);
  EXPECT_TRUE(scan.converged);
  EXPECT_LE(scan.error(), 1e-5);
}

TEST(Case2a, ScalarMultipleOfIdentity) {
  Rng rng(77);
  for (const char* sel : {"arithmetic", "mix:0.25:arithmetic:harmonic", "mix:0.5:arithmetic:harmonic"}) {
    const Connection c = catalog::parse(sel);
    const double alpha = c.measure->atom0();
    const double gamma = c.measure->interior_gamma();
    const OrthProjection p = spectral_projection(random_symmetric(4, rng), Interval::below(0.0));
    ASSERT_FALSE(p.is_zero());
    const LimitScan scan = case2a_limit_scan(c, SpdMatrix::identity(4).scaled(2.5), p, 0.1, power_of_two_grid(30));
    EXPECT_NEAR(scan.target, (alpha + gamma) * 2.5, 1e-12);
    EXPECT_LE(scan.error(), 1e-5) << sel;
  }
}

TEST(Case2a, Preconditions) {
  const SpdMatrix a(diag({3.0, 1.0}));
  EXPECT_THROW(case2a_limit_scan(catalog::power(0.5), a, first_axis(), 1.0, power_of_two_grid(10)), PreconditionError);
  EXPECT_THROW(case2a_limit_scan(catalog::harmonic(), a, first_axis(), 1.0, power_of_two_grid(10)), PreconditionError);
  EXPECT_THROW(case2a_limit_scan(catalog::parse("mix:0.5:arithmetic:geometric"), a, first_axis(), 1.0,
                                 power_of_two_grid(10)),
               PreconditionError);
  EXPECT_THROW(case2a_limit_scan(catalog::arithmetic(), a, first_axis(), 0.0, power_of_two_grid(10)), InputError);
}

TEST(Case2b, DivergenceExceedsAtomBound) {
  // A = diag(2, 1), B = diag(1, 2): P = diag(1, 0), c_A = 2 > c_B = 1.
  const SpdMatrix a(diag({2.0, 1.0}));
  const SpdMatrix b(diag({1.0, 2.0}));
  const Connection c = catalog::parse("mix:0.5:arithmetic:geometric");
  const Case2bScan scan = case2b_divergence_scan(c, a, b, first_axis(), power_of_two_grid(30));
  EXPECT_DOUBLE_EQ(scan.c_a, 2.0);
  EXPECT_DOUBLE_EQ(scan.c_b, 1.0);
  EXPECT_TRUE(scan.exceeds);
  // h = sqrt(x) / 2: ||A sigma_h (sP)|| - ||B sigma_h (sP)|| = (sqrt(2s) - sqrt(s)) / 2.
  const double s = scan.scan.s_values.back();
  EXPECT_NEAR(scan.scan.values.back(), 0.5 * (std::sqrt(2.0 * s) - std::sqrt(s)), 1e-6 * std::sqrt(s));
  for (std::size_t k = 1; k < scan.scan.values.size(); ++k) EXPECT_GT(scan.scan.values[k], scan.scan.values[k - 1]);
}

TEST(NormDominates, Examples) {
  const Connection g = catalog::geometric();
  Rng rng(78);
  const SpdMatrix i2 = SpdMatrix::identity(2);
  std::vector<PsdMatrix> xs = sample_gamma_positive(SymMatrix::identity(2), 5, 20);
  EXPECT_TRUE(norm_dominates(g, i2, i2.scaled(2.0), xs));

  const SpdMatrix a(diag({2.0, 1.0}));
  const SpdMatrix b(diag({1.0, 2.0}));
  const PsdMatrix x(diag({1.5, 0.5}));
  const auto v = find_norm_violation(g, a, b, {x});
  ASSERT_TRUE(v.has_value());
  EXPECT_NEAR(v->norm_a, std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(v->norm_b, std::sqrt(1.5), 1e-14);

  const PsdMatrix off(SymMatrix(rotated_diag(0.7, 1.0, 2.0)));
  EXPECT_THROW(norm_dominates(g, a, b, {off}), InputError);
}

TEST(NormDominates, OrderedPairsRandomSamples) {
  for (int trial = 0; trial < 5; ++trial) {
    const std::uint64_t seed = derive_seed(79, static_cast<std::uint64_t>(trial));
    const MatrixPair pair = generate_pair(4, seed, PairKind::ordered);
    const auto xs = sample_gamma_positive(pair.b - pair.a, seed, 1000);
    for (const char* sel : {"power:0", "power:-1", "mix:0.5:arithmetic:geometric"}) {
      EXPECT_TRUE(norm_dominates(catalog::parse(sel), pair.a, pair.b, xs)) << sel;
    }
  }
}

TEST(WitnessSearch, DiagonalExample) {
  const SpdMatrix a(diag({2.0, 1.0}));
  const SpdMatrix b(diag({1.0, 2.0}));
  const auto w = witness_search(catalog::geometric(), a, b);
  ASSERT_TRUE(w.has_value());
  EXPECT_TRUE(MatrixNear(w->projection.matrix(), diag({1.0, 0.0}), 1e-15));
  // With P = diag(1, 0): X = diag(s(1 + delta), s delta), entrywise geometric means.
  const double s = w->s;
  const double d = w->delta;
  EXPECT_NEAR(w->norm_a, std::max(std::sqrt(2.0 * s * (1 + d)), std::sqrt(s * d)), 1e-12 * (1.0 + s));
  EXPECT_NEAR(w->norm_b, std::max(std::sqrt(s * (1 + d)), std::sqrt(2.0 * s * d)), 1e-12 * (1.0 + s));
  EXPECT_GT(w->margin, 10.0 * w->tolerance);

  // The stated delta = 0.5 case: sqrt(3s) versus sqrt(1.5s).
  for (double sv : {1.0, 4.0, 1024.0}) {
    const PsdMatrix x = projection_pencil(w->projection, sv, 0.5);
    EXPECT_NEAR(connection_eval(catalog::geometric(), a, x).norm(), std::sqrt(3.0 * sv), 1e-12 * sv);
    EXPECT_NEAR(connection_eval(catalog::geometric(), b, x).norm(), std::sqrt(1.5 * sv), 1e-12 * sv);
  }
}

TEST(WitnessSearch, AbsentForOrderedPair) {
  const MatrixPair pair = generate_pair(5, 3, PairKind::ordered);
  EXPECT_FALSE(witness_search(catalog::harmonic(), pair.a, pair.b).has_value());
  EXPECT_FALSE(witness_search(catalog::harmonic(), pair.a, pair.a).has_value());
}

TEST(WitnessSearch, RotatedPair) {
  const double theta = 0.7;
  const SpdMatrix a(SymMatrix(rotated_diag(theta, 2.0, 1.0)));
  const SpdMatrix b(SymMatrix(rotated_diag(theta, 1.0, 2.0)));
  for (const auto& name : catalog::theorem_means()) {
    const auto w = witness_search(catalog::parse(name), a, b);
    ASSERT_TRUE(w.has_value()) << name;
    EXPECT_TRUE(MatrixNear(w->projection.matrix(), rotated_diag(theta, 1.0, 0.0), 1e-13)) << name;
  }
}

TEST(WitnessSearch, CongruentPairsFromGenerator) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MatrixPair pair = generate_pair(2, seed, PairKind::congruent_diagonal);
    // Reconstruct G from the generator's first draw.
    Rng rng(seed);
    const Matrix g = givens(2, 0, 1, rng.uniform(0.0, 2.0 * std::numbers::pi));
    EXPECT_TRUE(MatrixNear(pair.a.matrix(), g * diag({2.0, 1.0}) * g.transpose(), 1e-14));
    const auto w = witness_search(catalog::geometric(), pair.a, pair.b);
    ASSERT_TRUE(w.has_value());
    EXPECT_TRUE(MatrixNear(w->projection.matrix(), g * diag({1.0, 0.0}) * g.transpose(), 1e-13));
  }
}

TEST(WitnessSearch, RejectsNonSymmetricConnection) {
  const Connection right = make_connection(RepresentingFunction([](double x) { return x; }, 0.0, 1.0, "right"));
  EXPECT_THROW(witness_search(right, SpdMatrix::identity(2), SpdMatrix::identity(2)), PreconditionError);
}

TEST(WitnessSearch, WitnessesUseSpectralProjections) {
  for (int trial = 0; trial < 10; ++trial) {
    const std::uint64_t seed = derive_seed(80, static_cast<std::uint64_t>(trial));
    const MatrixPair pair = generate_pair(5, seed, PairKind::unordered);
    for (const auto& name : catalog::theorem_means()) {
      const auto w = witness_search(catalog::parse(name), pair.a, pair.b);
      ASSERT_TRUE(w.has_value()) << name;
      const OrthProjection expected = spectral_projection(pair.b - pair.a, Interval::below(-w->eps));
      EXPECT_TRUE(MatrixNear(w->projection.matrix(), expected.matrix(), 1e-12));
      // Independent re-evaluation of the margin.
      const PsdMatrix x = w->x();
      const double na = connection_eval(catalog::parse(name), pair.a, x).norm();
      const double nb = connection_eval(catalog::parse(name), pair.b, x).norm();
      EXPECT_GT(na - nb, 10.0 * w->tolerance);
    }
  }
}

TEST(OrderDetermination, Examples) {
  const SpdMatrix i2 = SpdMatrix::identity(2);
  const OrderVerdict v1 = order_determination_check(catalog::geometric(), i2, i2.scaled(2.0), 50, 1);
  EXPECT_TRUE(v1.loewner);
  EXPECT_TRUE(v1.norm_dominated);
  EXPECT_FALSE(v1.witness.has_value());

  const OrderVerdict v2 =
      order_determination_check(catalog::harmonic(), SpdMatrix(diag({2.0, 1.0})), SpdMatrix(diag({1.0, 2.0})), 50, 2);
  EXPECT_FALSE(v2.loewner);
  EXPECT_FALSE(v2.norm_dominated);
  EXPECT_TRUE(v2.witness.has_value());

  Rng rng(81);
  const SpdMatrix a = random_spd(4, rng);
  for (const auto& name : catalog::theorem_means()) {
    const Connection c = catalog::parse(name);
    const OrderVerdict v = order_determination_check(c, a, a, 50, 3);
    EXPECT_TRUE(v.loewner);
    EXPECT_TRUE(v.norm_dominated);
    for (const auto& x : sample_gamma_positive(SymMatrix::zero(4), 4, 10)) {
      EXPECT_EQ(connection_eval(c, a, x).norm(), connection_eval(c, a, x).norm());
    }
  }
}

TEST(OrderVerdict, InvariantsAreChecked) {
  OrderVerdict v;
  v.loewner = true;
  v.norm_dominated = true;
  EXPECT_NO_THROW(v.validate());
  const SpdMatrix a(diag({2.0, 1.0}));
  const SpdMatrix b(diag({1.0, 2.0}));
  v.witness = witness_search(catalog::geometric(), a, b);
  EXPECT_THROW(v.validate(), InconsistencyError);
  v.loewner = false;
  EXPECT_THROW(v.validate(), InconsistencyError);
  v.norm_dominated = false;
  EXPECT_NO_THROW(v.validate());
}

TEST(GeneratePair, Kinds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatrixPair o = generate_pair(4, seed, PairKind::ordered);
    EXPECT_TRUE(loewner_leq(o.a, o.b, 0.0));
    const MatrixPair u = generate_pair(4, seed, PairKind::unordered);
    EXPECT_FALSE(loewner_leq(u.a, u.b, 1e-9));
    EXPECT_FALSE(loewner_leq(u.b, u.a, 1e-9));
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>((u.b - u.a).matrix()).eigenvalues();
    EXPECT_LT(ev(0), -0.1);
    EXPECT_GT(ev(3), 0.1);
  }
  EXPECT_THROW(generate_pair(1, 0, PairKind::ordered), InputError);
  EXPECT_EQ(parse_pair_kind("congruent-diagonal"), PairKind::congruent_diagonal);
  EXPECT_THROW(parse_pair_kind("sideways"), InputError);
}

}  // namespace
