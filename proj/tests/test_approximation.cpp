#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "droplet/approximation.hpp"

namespace droplet {
namespace {

const Ratio kTwo = Ratio::make(2, 1);
constexpr double kAlpha12 = 1.5936242600400400923;

ProbMeasure exact_measure(int b, std::initializer_list<std::pair<Index, Rational>> w) {
  return ProbMeasure::exact(b, ProbMeasure::ExactWeights(w.begin(), w.end()));
}

// theta_j proportional to 2^{-j} on [1, 12], pushed to mean exactly 2.
ProbMeasure geometric_mean_two() {
  ProbMeasure::ExactWeights w;
  Rational total = 0;
  for (Index j = 1; j <= 12; ++j) {
    w[j] = Rational(1, BigInt(1) << j);
    total += w[j];
  }
  for (auto& [j, q] : w) q /= total;
  return adjust_mean(ProbMeasure::exact(1, std::move(w)), kTwo, 20);
}

TEST(BuildApproximation, PointMassIsFixed) {
  const auto theta = ProbMeasure::point_mass(1, 2);
  for (Index n : {2, 10, 64}) {
    const auto r = build_approximation(theta, ModelParams::with_m_function(1, kTwo, n));
    ASSERT_TRUE(r.above_threshold());
    EXPECT_EQ(*r.nu, OccupancyVector({{2, n}}));
    EXPECT_EQ(r.beta_m, 0);
    EXPECT_EQ(r.gamma_m, 0);
    EXPECT_EQ(r.prohorov_to_target, 0.0);
    EXPECT_TRUE(lemma_b3_bounds(r, theta));
  }
}

TEST(BuildApproximation, TwoPointHandSolved) {
  const auto theta = exact_measure(1, {{1, Rational(1, 2)}, {3, Rational(1, 2)}});
  const auto r = build_approximation(theta, ModelParams::make(1, kTwo, 8, 4));
  ASSERT_TRUE(r.above_threshold());
  // nu_3 = floor(8/2) = 4, then nu_1 + nu_2 = 4 and nu_1 + 2 nu_2 = 4.
  EXPECT_EQ(*r.nu, OccupancyVector({{1, 4}, {3, 4}}));
  EXPECT_EQ(r.nu_j_star_plus_one, 0);

  // With m = 2 the atom at 3 is cut and its mass moves to j* + 1.
  const auto cut = build_approximation(theta, ModelParams::make(1, kTwo, 8, 2));
  EXPECT_EQ(cut.beta_m, Rational(1, 2));
  EXPECT_EQ(cut.gamma_m, Rational(3, 2));
  EXPECT_EQ(cut.nu_j_star, 0);
  EXPECT_EQ(cut.nu_j_star_plus_one, 8);
  EXPECT_FALSE(cut.above_threshold());
}

TEST(BuildApproximation, Preconditions) {
  EXPECT_THROW(build_approximation(ProbMeasure::point_mass(1, 3), ModelParams::make(1, kTwo, 4, 2)),
               PreconditionError);
  EXPECT_THROW(build_approximation(ProbMeasure::point_mass(1, 2), ModelParams::make(1, kTwo, 4, 1)),
               PreconditionError);
  EXPECT_THROW(build_approximation(PoissonTail(1, kAlpha12).truncated(),
                                   ModelParams::make(1, kTwo, 4, 2)),
               PreconditionError);
}

TEST(LemmaB3, GeometricTailAtN100) {
  const auto theta = geometric_mean_two();
  ASSERT_EQ(theta.exact_mean(), 2);
  const auto r = build_approximation(theta, ModelParams::with_m_function(1, kTwo, 100));
  ASSERT_TRUE(r.above_threshold());
  const auto check = lemma_b3_check(r, theta);
  EXPECT_TRUE(check.j_star_upper);
  EXPECT_TRUE(check.j_star_lower);
  EXPECT_TRUE(check.j_star_plus_one_upper);
  EXPECT_TRUE(check.j_star_plus_one_middle);
  EXPECT_TRUE(check.j_star_plus_one_lower);
  EXPECT_TRUE(check.dominated);
}

TEST(LemmaB3, AnomalyWitnessForFixedCap) {
  // theta_2 = 0 but the atom at 7 lies beyond j* + m - 1 = 3, so its mass is
  // folded into nu_2 = 3N/4 at every N.
  const auto theta =
      exact_measure(1, {{1, Rational(3, 4)}, {3, Rational(1, 8)}, {7, Rational(1, 8)}});
  for (Index n = 8; n <= 400; n += 8) {
    const auto r = build_approximation(theta, ModelParams::make(1, kTwo, n, 3));
    ASSERT_TRUE(r.above_threshold());
    EXPECT_EQ(r.nu_j_star_plus_one, BigInt(3 * n / 4));
    EXPECT_GT(r.nu->count(2), 0);
    EXPECT_TRUE(lemma_b3_bounds(r, theta));
  }
}

TEST(Approximation, RhoTargetEntropyGapShrinks) {
  const auto target = rationalize_target(PoissonTail(1, kAlpha12), kTwo);
  ASSERT_EQ(target.measure.exact_mean(), 2);
  // N = 20 and N = 40 floor to the same proportions, so the gap is only
  // non-increasing between them.
  std::vector<double> gaps;
  for (Index n : {20, 40, 80, 160}) {
    const auto r = build_approximation(target.measure, ModelParams::with_m_function(1, kTwo, n));
    ASSERT_TRUE(r.above_threshold());
    EXPECT_TRUE(lemma_b3_bounds(r, target.measure));
    if (!gaps.empty()) {
      EXPECT_LE(r.entropy_gap, gaps.back() + 1e-15);
    }
    gaps.push_back(r.entropy_gap);
  }
  EXPECT_LT(gaps[2], gaps[0]);
  EXPECT_LT(gaps[3], gaps[2]);
}

TEST(Approximation, RandomTargetsAboveThreshold) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    ProbMeasure::ExactWeights w;
    Rational total = 0;
    for (Index j = 1; j <= 8; ++j) {
      const auto x = static_cast<int>(rng() % 10);
      if (x > 0) {
        w[j] = x;
        total += x;
      }
    }
    w[1] += 1;
    total += 1;
    for (auto& [j, q] : w) q /= total;
    const auto theta = adjust_mean(ProbMeasure::exact(1, std::move(w)), Ratio::make(5, 2), 12);
    std::vector<ApproximationReport> reports;
    for (Index n = 2; n <= 400; n *= 2) {
      reports.push_back(build_approximation(theta, ModelParams::with_m_function(1, Ratio::make(5, 2), n)));
    }
    const auto thr = detect_threshold(reports);
    ASSERT_TRUE(thr.has_value());
    for (const auto& r : reports) {
      if (r.params.N() < *thr) continue;
      ASSERT_TRUE(r.above_threshold()) << t << " N=" << r.params.N();
      EXPECT_TRUE(r.nu->admissible(r.params));
      EXPECT_TRUE(lemma_b3_bounds(r, theta)) << t << " N=" << r.params.N();
    }
  }
}

TEST(DenseFamily, LevelAndDistances) {
  const auto p = ModelParams::make(1, kTwo, 3, 3);
  EXPECT_EQ(dense_family_level(p).size(), 3u);
  const auto rho = PoissonTail(1, kAlpha12).truncated();
  EXPECT_LT(family_distance(rho, ModelParams::with_m_function(1, kTwo, 24)),
            family_distance(rho, ModelParams::with_m_function(1, kTwo, 8)));
  for (Index n : {2, 4, 8}) {
    EXPECT_EQ(family_distance(ProbMeasure::point_mass(1, 2), ModelParams::with_m_function(1, kTwo, n)), 0.0);
  }
  // Float weights with no denominator-N representation stay strictly apart.
  const double s = 1.0 / (2.0 + std::sqrt(2.0));
  const auto irr = ProbMeasure::floating(1, {{1, s}, {2, 1.0 - 2.0 * s}, {3, s}});
  for (Index n : {2, 4, 8}) {
    EXPECT_GT(family_distance(irr, ModelParams::with_m_function(1, kTwo, n)), 0.0);
  }
}

TEST(RationalizeTarget, ExactMeanAndSmallAdjustment) {
  for (int b : {0, 1, 2}) {
    const Ratio c = Ratio::make(2 * b + 3, 2);
    const PoissonTail rho(b, solve_alpha(b, c).alpha);
    const auto t = rationalize_target(rho, c);
    EXPECT_EQ(t.measure.exact_mean(), c.exact());
    EXPECT_LT(to_double(t.adjust_weight), 1e-10);
    EXPECT_LT(prohorov_distance(t.measure, rho), 1e-10);
  }
}

}  // namespace
}  // namespace droplet
