#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "sae/evidence.hpp"

using namespace sae;

namespace {

DirichletEvidence ev(Vector a) { return DirichletEvidence(std::move(a)); }

}  // namespace

TEST(Evidence, FromSimilarity) {
  EXPECT_EQ(evidence_from_similarity(Vector{0.0, 0.0}, 2.0, 1.0).alpha(), (Vector{2.0, 2.0}));
  const auto tiny = evidence_from_similarity(Vector{0.3, -0.2, 0.9}, 1e-12, 0.05);
  for (double a : tiny.alpha()) EXPECT_NEAR(a, 1.0, 1e-11);
  EXPECT_NEAR(vacuity(evidence_from_similarity(Vector{0.3, -0.2, 0.9}, 1e-6, 0.05)), 1.0, 1e-6);
}

TEST(Evidence, FromProbabilities) {
  // p = (0.5, 0.3, 0.2) through s = log p at tau = 1.
  const Vector s{std::log(0.5), std::log(0.3), std::log(0.2)};
  const auto e = evidence_from_similarity(s, 10.0, 1.0);
  EXPECT_NEAR(e.alpha()[0], 6.0, 1e-12);
  EXPECT_NEAR(e.alpha()[1], 4.0, 1e-12);
  EXPECT_NEAR(e.alpha()[2], 3.0, 1e-12);
}

TEST(Evidence, RejectsBadParameters) {
  EXPECT_THROW(evidence_from_similarity(Vector{0.0, 1.0}, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(evidence_from_similarity(Vector{0.0, 1.0}, -1.0, 1.0), InvalidArgument);
  EXPECT_THROW(evidence_from_similarity(Vector{0.0, 1.0}, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(ev({0.5, 2.0}), InvalidArgument);
  EXPECT_THROW(ev({2.0}), InvalidArgument);
}

TEST(Vacuity, KnownValues) {
  EXPECT_DOUBLE_EQ(vacuity(ev({1, 1, 1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(vacuity(ev({2, 2})), 0.5);
  EXPECT_NEAR(vacuity(ev({6, 4, 3})), 0.230769, 1e-6);
}

TEST(Belief, KnownValues) {
  EXPECT_EQ(belief_masses(ev({2, 2})), (Vector{0.25, 0.25}));
  EXPECT_EQ(belief_masses(ev({1, 1, 1})), (Vector{0.0, 0.0, 0.0}));
  const Vector b = belief_masses(ev({5, 1, 1}));
  EXPECT_NEAR(b[0], 4.0 / 7.0, 1e-15);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(b[2], 0.0);
}

TEST(Dissonance, KnownValues) {
  EXPECT_DOUBLE_EQ(dissonance(ev({2, 2})), 0.5);
  EXPECT_DOUBLE_EQ(dissonance(ev({5, 1, 1})), 0.0);
  EXPECT_NEAR(dissonance(ev({3, 3, 1})), 4.0 / 7.0, 1e-15);
  EXPECT_DOUBLE_EQ(dissonance(ev({1, 1, 1})), 0.0);
}

TEST(ExpectedProbability, KnownValues) {
  EXPECT_EQ(expected_probability(ev({1, 1})), (Vector{0.5, 0.5}));
  const Vector p = expected_probability(ev({6, 4, 3}));
  EXPECT_NEAR(p[0], 6.0 / 13.0, 1e-15);
  EXPECT_NEAR(p[1], 4.0 / 13.0, 1e-15);
  EXPECT_NEAR(p[2], 3.0 / 13.0, 1e-15);
  EXPECT_EQ(expected_probability(ev({2, 2, 2, 2})), (Vector{0.25, 0.25, 0.25, 0.25}));
}

TEST(Decompose, KnownValues) {
  const auto u0 = decompose(ev({1, 1, 1, 1}));
  EXPECT_EQ(u0.vacuity, 1.0);
  EXPECT_EQ(u0.dissonance, 0.0);
  EXPECT_EQ(u0.belief, Vector(4, 0.0));
  EXPECT_EQ(u0.expected_prob, Vector(4, 0.25));

  const auto u1 = decompose(ev({2, 2}));
  EXPECT_EQ(u1.vacuity, 0.5);
  EXPECT_EQ(u1.dissonance, 0.5);
  EXPECT_EQ(u1.belief, (Vector{0.25, 0.25}));

  const auto u2 = decompose(ev({5, 1, 1}));
  EXPECT_NEAR(u2.vacuity, 3.0 / 7.0, 1e-15);
  EXPECT_EQ(u2.dissonance, 0.0);
}

TEST(Evidence, PropertyRangesAndIdentities) {
  Rng rng(101);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    const double lambda = rng.uniform(1e-9, 100.0);
    const double tau = rng.uniform(0.01, 2.0);
    Vector s(k);
    for (double& v : s) v = rng.uniform(-1.0, 1.0);
    const auto e = evidence_from_similarity(s, lambda, tau);
    ASSERT_LT(std::abs(e.strength() - (lambda + static_cast<double>(k))), 1e-9);
    const auto u = decompose(e);
    ASSERT_GT(u.vacuity, 0.0);
    ASSERT_LE(u.vacuity, 1.0);
    ASSERT_GE(u.dissonance, 0.0);
    ASSERT_LE(u.dissonance, 1.0);
    double bsum = 0.0;
    for (double b : u.belief) bsum += b;
    ASSERT_NEAR(bsum + u.vacuity, 1.0, 1e-9);
  }
}

TEST(Evidence, VacuityDecreasesWithLambda) {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    Vector s(k);
    for (double& v : s) v = rng.uniform(-1.0, 1.0);
    double l1 = rng.uniform(0.0, 100.0) + 1e-6, l2 = rng.uniform(0.0, 100.0) + 1e-6;
    if (l1 == l2) continue;
    if (l1 > l2) std::swap(l1, l2);
    EXPECT_GT(vacuity(evidence_from_similarity(s, l1, 0.1)),
              vacuity(evidence_from_similarity(s, l2, 0.1)));
  }
}

TEST(Evidence, PermutationEquivariance) {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    Vector s(k);
    for (double& v : s) v = rng.uniform(-1.0, 1.0);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    Vector sp(k);
    for (std::size_t i = 0; i < k; ++i) sp[i] = s[perm[i]];
    const double lambda = rng.uniform(0.1, 50.0);
    const auto u = decompose(evidence_from_similarity(s, lambda, 0.2));
    const auto up = decompose(evidence_from_similarity(sp, lambda, 0.2));
    EXPECT_NEAR(u.vacuity, up.vacuity, 1e-15);
    EXPECT_NEAR(u.dissonance, up.dissonance, 1e-12);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_NEAR(up.belief[i], u.belief[perm[i]], 1e-15);
      EXPECT_NEAR(up.expected_prob[i], u.expected_prob[perm[i]], 1e-15);
    }
  }
}

TEST(Dissonance, MatchesNaiveOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    Vector s(k);
    for (double& v : s) v = rng.uniform(-1.0, 1.0);
    const auto e = evidence_from_similarity(s, rng.uniform(1e-6, 100.0), rng.uniform(0.01, 1.0));
    ASSERT_NEAR(dissonance(e), oracle::dissonance(e.alpha()), 1e-12);
  }
}

TEST(Dissonance, OracleAgreesOnExactZeros) {
  // Hand-built alphas with some classes at exactly zero evidence.
  const std::vector<Vector> cases = {{1, 1}, {3, 1}, {3, 3, 1}, {1, 7, 1, 7}, {2, 1, 1, 1, 9}};
  for (const auto& a : cases) EXPECT_NEAR(dissonance(ev(a)), oracle::dissonance(a), 1e-15);
}
