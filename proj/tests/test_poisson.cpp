#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "droplet/poisson.hpp"

namespace droplet {
namespace {

// Reference values computed offline with 40-digit arithmetic by bisection on
// alpha Z_{b-1}(alpha) / Z_b(alpha) = c.
struct AlphaOracle {
  int b;
  Ratio c;
  double alpha;
};
const std::vector<AlphaOracle> kAlphaOracles = {
    {1, Ratio::make(2, 1), 1.5936242600400400923},
    {1, Ratio::make(3, 2), 0.87421746579871707906},
    {1, Ratio::make(3, 1), 2.8214393721220788934},
    {1, Ratio::make(10, 1), 9.9995457944465351731},
    {2, Ratio::make(3, 1), 2.1491257999070625421},
    {2, Ratio::make(4, 1), 3.5935119694474260823},
    {3, Ratio::make(4, 1), 2.6879993454994913415},
    {3, Ratio::make(5, 1), 4.3403148617436154384},
    {2, Ratio::make(5, 2), 1.2299332003819575254},
};

// int_0^alpha x^{b-1} e^{-x} dx by composite 10-point Gauss-Legendre.
double lower_gamma_quadrature(int b, double alpha) {
  static const double nodes[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                  0.8650633666889845, 0.9739065285171717};
  static const double weights[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                    0.1494513491505806, 0.0666713443086881};
  const int panels = 400;
  const double h = alpha / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double x = mid + sign * nodes[i] * h / 2;
        s += weights[i] * std::pow(x, b - 1) * std::exp(-x);
      }
    }
    total += s * h / 2;
  }
  return total;
}

TEST(LogZ, Examples) {
  EXPECT_DOUBLE_EQ(log_Z(0, 1.0), 1.0);
  EXPECT_NEAR(log_Z(1, 1.0), 0.54132485461291810898, 1e-15);
  for (double a : {1e-3, 1e-5, 1e-8}) {
    EXPECT_NEAR(log_Z(2, a), 2 * std::log(a) - std::log(2.0), 2 * a);
  }
  EXPECT_THROW(log_Z(1, 0.0), PreconditionError);
  EXPECT_THROW(log_Z(1, -1.0), PreconditionError);
}

TEST(LogZ, SeriesMatchesQuadratureOfIncompleteGamma) {
  for (int b = 1; b <= 6; ++b) {
    for (double a = 0.01; a <= 50.0; a *= 1.37) {
      const double integral = lower_gamma_quadrature(b, a);
      const double ref = a + std::log(integral) - std::lgamma(b);
      EXPECT_NEAR(log_Z(b, a), ref, 1e-10 * std::max(1.0, std::abs(ref))) << b << " " << a;
      EXPECT_NEAR(log_Z_incomplete_gamma(b, a), ref, 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(LogZ, RelativeAccuracyOfZAtBothExtremes) {
  // Z_b and the incomplete-gamma route agree in relative terms, which is the
  // same as log Z agreeing absolutely.
  for (int b = 1; b <= 6; ++b) {
    for (double a : {1e-6, 1e-3, 0.5, 5.0, 30.0, 200.0}) {
      EXPECT_NEAR(log_Z(b, a), log_Z_incomplete_gamma(b, a), 1e-10);
    }
  }
}

TEST(GammaMean, UntruncatedIsIdentity) {
  for (double a : {0.1, 1.0, 7.5}) EXPECT_EQ(gamma_mean(0, a), a);
}

TEST(GammaMean, DefiningPropertyOfAlpha1Of2) {
  EXPECT_NEAR(gamma_mean(1, 1.5936242600400400923), 2.0, 1e-14);
}

TEST(GammaMean, TendsToBAtZero) {
  for (int b = 1; b <= 5; ++b) EXPECT_NEAR(gamma_mean(b, 1e-9), b, 1e-8);
}

TEST(GammaMean, StrictlyIncreasing) {
  for (int b = 1; b <= 5; ++b) {
    double prev = gamma_mean(b, 0.05);
    for (int i = 1; i < 100; ++i) {
      const double g = gamma_mean(b, 0.05 + 0.2 * i);
      EXPECT_GT(g, prev);
      prev = g;
    }
    EXPECT_GT(prev, 19.0);
  }
}

TEST(PoissonTail, NormalizedMeanAndTruncation) {
  for (int b = 0; b <= 5; ++b) {
    for (double a : {0.3, 2.0, 9.0, 25.0}) {
      const PoissonTail rho(b, a);
      double s = 0.0;
      for (double x : rho.components(rho.truncation())) s += x;
      EXPECT_NEAR(s, 1.0, 1e-14);
      EXPECT_NEAR(rho.truncated_mean(rho.truncation()), gamma_mean(b, a), 1e-10);
      EXPECT_LT(rho.weight(rho.truncation() + 1), 1e-15);
      EXPECT_EQ(rho.weight(b - 1), 0.0);
    }
  }
}

TEST(SolveAlpha, UntruncatedIsExact) {
  const auto r = solve_alpha(0, Ratio::make(7, 2));
  EXPECT_EQ(r.alpha, 3.5);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(SolveAlpha, MatchesHighPrecisionOracles) {
  for (const auto& o : kAlphaOracles) {
    const auto r = solve_alpha(o.b, o.c);
    EXPECT_NEAR(r.alpha, o.alpha, 1e-12) << o.b << " " << o.c.str();
    EXPECT_LE(r.residual, kDefaultAlphaTol);
    EXPECT_EQ(r.method, AlphaMethod::bisection);
  }
}

TEST(SolveAlpha, BoundsForB1C2) {
  const double a = solve_alpha(1, Ratio::make(2, 1)).alpha;
  EXPECT_GT(a, 1.0);
  EXPECT_LT(a, 2.0 * (1.0 - std::exp(-2.0)));
}

TEST(SolveAlpha, RejectsCAtOrBelowB) {
  EXPECT_THROW(solve_alpha(2, Ratio::make(2, 1)), PreconditionError);
  EXPECT_THROW(solve_alpha(3, Ratio::make(5, 2)), PreconditionError);
}

TEST(SolveAlpha, BoundsOnGrid) {
  for (int b = 1; b <= 5; ++b) {
    for (const Ratio c : {Ratio::make(2 * b + 1, 2), Ratio::make(b + 1, 1),
                          Ratio::make(2 * b + 1, 1), Ratio::make(10, 1)}) {
      if (c.value() <= b) continue;
      const double a = solve_alpha(b, c).alpha;
      const double cv = c.value();
      EXPECT_GT(a, cv - b);
      EXPECT_LT(a, cv);
      const double second = cv * (1.0 - std::pow(2.0, b) * std::exp(-(cv - b) / 2.0));
      if (second > 0.0) {
        EXPECT_GT(a, second);
      }
    }
  }
}

TEST(SolveAlpha, RatioToCApproachesOne) {
  for (int b = 1; b <= 3; ++b) {
    double prev = 1.0;
    for (Index c : {10, 20, 40}) {
      const double gap = std::abs(solve_alpha(b, Ratio::make(c, 1)).alpha / c - 1.0);
      EXPECT_LT(gap, prev);
      prev = gap;
    }
  }
}

TEST(IterateAlpha1, FirstSteps) {
  const Ratio c = Ratio::make(2, 1);
  const auto above = alpha1_iterates(c, IterationDirection::from_above, 1);
  ASSERT_EQ(above.size(), 2u);
  EXPECT_EQ(above[0], 2.0);
  EXPECT_NEAR(above[1], 2.0 * (1.0 - std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(above[1], 1.72933, 1e-5);
  const auto below = alpha1_iterates(c, IterationDirection::from_below, 1);
  EXPECT_NEAR(below[1], 1.0, 1e-15);  // c - 1
}

TEST(IterateAlpha1, SequencesBracketTheRoot) {
  for (const Ratio c : {Ratio::make(3, 2), Ratio::make(2, 1), Ratio::make(3, 1), Ratio::make(10, 1)}) {
    const double root = solve_alpha(1, c).alpha;
    const auto above = alpha1_iterates(c, IterationDirection::from_above, 100000);
    const auto below = alpha1_iterates(c, IterationDirection::from_below, 100000);
    for (std::size_t i = 1; i < above.size(); ++i) {
      EXPECT_LE(above[i], above[i - 1]);
      if (std::abs(above[i] - root) > 1e-13) {
        EXPECT_GT(above[i], root);
      }
    }
    for (std::size_t i = 1; i < below.size(); ++i) {
      EXPECT_GE(below[i], below[i - 1]);
      if (std::abs(below[i] - root) > 1e-13) {
        EXPECT_LT(below[i], root);
      }
    }
  }
}

TEST(IterateAlpha1, ThreeWayAgreement) {
  for (const Ratio c : {Ratio::make(3, 2), Ratio::make(2, 1), Ratio::make(3, 1), Ratio::make(10, 1)}) {
    const double bis = solve_alpha(1, c).alpha;
    const auto hi = iterate_alpha1(c, IterationDirection::from_above);
    const auto lo = iterate_alpha1(c, IterationDirection::from_below);
    EXPECT_NEAR(hi.alpha, bis, 1e-12);
    EXPECT_NEAR(lo.alpha, bis, 1e-12);
    EXPECT_EQ(hi.method, AlphaMethod::fixed_point_decreasing);
    EXPECT_EQ(lo.method, AlphaMethod::fixed_point_increasing);
    EXPECT_LE(hi.residual, 1e-12);
  }
  EXPECT_THROW(iterate_alpha1(Ratio::make(1, 1), IterationDirection::from_above), PreconditionError);
}

TEST(ConditionedPoisson, MatchesTruncatedFamily) {
  EXPECT_LT(conditioned_poisson_check(1, Ratio::make(2, 1), 30), 1e-12);
  EXPECT_LT(conditioned_poisson_check(3, Ratio::make(5, 1), 40), 1e-12);
  EXPECT_LT(conditioned_poisson_check(0, Ratio::make(2, 1), 30), 1e-15);
}

TEST(AlphaMonotoneInB, Examples) {
  EXPECT_TRUE(alpha_monotone_in_b(0, Ratio::make(2, 1)));
  EXPECT_TRUE(alpha_monotone_in_b(1, Ratio::make(3, 1)));
  EXPECT_TRUE(alpha_monotone_in_b(2, Ratio::make(4, 1)));
  EXPECT_THROW(alpha_monotone_in_b(1, Ratio::make(2, 1)), PreconditionError);
}

TEST(ProhorovToPoisson, AccountsForMassOffSupport) {
  const PoissonTail rho(1, 1.5936242600400400923);
  const auto delta2 = ProbMeasure::point_mass(1, 2);
  EXPECT_NEAR(prohorov_distance(delta2, rho), 1.0 - rho.weight(2), 1e-15);
  EXPECT_LT(prohorov_distance(rho.truncated(), rho), 1e-14);
}

}  // namespace
}  // namespace droplet
