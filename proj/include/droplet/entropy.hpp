#pragma once

// Relative entropy R(theta | rho_{b,alpha}), the shift identity, and the two
// constrained minimizations whose solutions are members of the Poisson family.

#include <cmath>
#include <limits>
#include <utility>

#include "droplet/model.hpp"
#include "droplet/poisson.hpp"

namespace droplet {

struct EntropyValue {
  double value = 0.0;  // +inf only for support below b, which is rejected
  Index finite_support_used = 0;

  bool is_infinite() const { return std::isinf(value); }
};

// R(theta | rho) = sum_j theta_j log(theta_j / rho_j), with 0 log 0 = 0.
inline EntropyValue relative_entropy(const ProbMeasure& theta, const PoissonTail& rho) {
  if (theta.min_support() < rho.b()) {
    throw PreconditionError("relative_entropy: theta has mass below b");
  }
  detail::CompensatedSum s;
  for (const auto& [j, x] : theta.weights()) {
    if (x > 0.0) s.add(x * (std::log(x) - rho.log_weight(j)));
  }
  // Nonnegative in exact arithmetic; clip rounding noise.
  return {std::max(0.0, s.value()), theta.max_support()};
}

// g(alpha,b,c) = log Z_b(alpha) - c log alpha - (log Z_b(a*) - c log a*),
// a* = alpha_b(c).  Equals R(rho_{a*} | rho_alpha) >= 0.
inline double g_shift(double alpha, int b, Ratio c) {
  const double astar = solve_alpha(b, c).alpha;
  const double cv = c.value();
  return (log_Z(b, alpha) - cv * std::log(alpha)) - (log_Z(b, astar) - cv * std::log(astar));
}

struct GShift {
  double g = 0.0;
  double alpha = 0.0;
  double alpha_star = 0.0;
  double entropy_at_alpha = 0.0;  // R(theta | rho_alpha)
  double entropy_at_star = 0.0;   // R(theta | rho_{alpha*})
  double residual = 0.0;          // |R_alpha - R_star - g|
};

inline constexpr double kShiftIdentityTol = 1e-9;

// Verifies R(theta|rho_alpha) = R(theta|rho_{alpha*}) + g(alpha,b,c) for a
// mean-c theta.  Throws std::logic_error if the residual exceeds 1e-9.
inline GShift entropy_shift(const ProbMeasure& theta, double alpha, int b, Ratio c) {
  if (theta.is_exact()) {
    detail::require(theta.exact_mean() == c.exact(), "entropy_shift: mean(theta) != c");
  } else {
    detail::require(std::abs(theta.mean() - c.value()) <= 1e-9,
                    "entropy_shift: mean(theta) != c");
  }
  GShift out;
  out.alpha = alpha;
  out.alpha_star = solve_alpha(b, c).alpha;
  out.g = g_shift(alpha, b, c);
  out.entropy_at_alpha = relative_entropy(theta, PoissonTail(b, alpha)).value;
  out.entropy_at_star = relative_entropy(theta, PoissonTail(b, out.alpha_star)).value;
  out.residual = std::abs(out.entropy_at_alpha - out.entropy_at_star - out.g);
  if (out.residual > kShiftIdentityTol) {
    throw std::logic_error("entropy_shift: identity residual " + std::to_string(out.residual));
  }
  return out;
}

struct ConstrainedMinimum {
  ProbMeasure minimizer;
  double value = 0.0;
  double alpha = 0.0;  // parameter of the minimizing Poisson-family member
};

// Minimizes R(theta | rho_{b,alpha}) over theta with mean c.  The Lagrange
// conditions log(theta_j/rho_j) = l0 + l1 j force theta_j proportional to
// (alpha e^{l1})^j / j!, i.e. a member of the same family; the mean
// constraint pins its parameter to alpha_b(c).  The minimizer is returned
// truncated where its tail drops below 1e-15, and the value is evaluated
// numerically against rho_alpha.
inline ConstrainedMinimum min_entropy_over_mean_c(int b, Ratio c, double alpha) {
  detail::require(alpha > 0.0, "min_entropy_over_mean_c: alpha must be positive");
  const double astar = solve_alpha(b, c).alpha;
  const PoissonTail tilted(b, astar);
  detail::require(static_cast<double>(tilted.truncation()) >= c.value(),
                  "min_entropy_over_mean_c: truncation below c is infeasible");
  ProbMeasure theta = tilted.truncated();
  const double value = relative_entropy(theta, PoissonTail(b, alpha)).value;
  return {std::move(theta), value, astar};
}

// Minimizes sum_j theta_j log(theta_j j!) over theta on [b, J] with total
// mass 1 and mean c.  The minimizer is theta_j proportional to a^j/j! on
// [b, J], with a chosen so the truncated mean is c; the minimum value is
// c log a - log sum_{b<=j<=J} a^j/j!.  When J == c the only feasible
// measure is the point mass at c.
inline ConstrainedMinimum min_theta_log_theta_jfact(int b, Ratio c, Index upto) {
  const double cv = c.value();
  detail::require(c.num > static_cast<std::int64_t>(b) * c.den,
                  "min_theta_log_theta_jfact: need c > b");
  detail::require(static_cast<double>(upto) >= cv,
                  "min_theta_log_theta_jfact: support [b, J] cannot reach mean c");
  if (Rational(upto) == c.exact()) {
    const double v = std::lgamma(static_cast<double>(upto) + 1.0);
    return {ProbMeasure::point_mass(b, upto), v, std::numeric_limits<double>::infinity()};
  }

  // log-weights j log a - log j!, normalized by log-sum-exp.
  auto weights_at = [&](double log_a, double* log_norm) {
    std::vector<double> lw;
    double top = -std::numeric_limits<double>::infinity();
    for (Index j = b; j <= upto; ++j) {
      lw.push_back(static_cast<double>(j) * log_a - std::lgamma(static_cast<double>(j) + 1.0));
      top = std::max(top, lw.back());
    }
    detail::CompensatedSum z;
    for (double x : lw) z.add(std::exp(x - top));
    const double ln = top + std::log(z.value());
    for (double& x : lw) x = std::exp(x - ln);
    if (log_norm != nullptr) *log_norm = ln;
    return lw;
  };
  auto mean_at = [&](double log_a) {
    const auto w = weights_at(log_a, nullptr);
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < w.size(); ++i) s.add(static_cast<double>(b + static_cast<Index>(i)) * w[i]);
    return s.value();
  };

  // The truncated mean increases from b to J in log a.
  double lo = -60.0;
  double hi = 60.0;
  while (mean_at(hi) < cv) hi *= 2.0;
  while (mean_at(lo) > cv) lo *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mean_at(mid) < cv ? lo : hi) = mid;
  }
  const double log_a = 0.5 * (lo + hi);
  double log_norm = 0.0;
  const auto w = weights_at(log_a, &log_norm);
  ProbMeasure::FloatWeights fw;
  for (std::size_t i = 0; i < w.size(); ++i) fw.emplace(b + static_cast<Index>(i), w[i]);
  ProbMeasure theta = ProbMeasure::floating(b, std::move(fw));
  detail::CompensatedSum v;
  for (const auto& [j, x] : theta.weights()) {
    if (x > 0.0) v.add(x * (std::log(x) + std::lgamma(static_cast<double>(j) + 1.0)));
  }
  return {std::move(theta), v.value(), std::exp(log_a)};
}

}  // namespace droplet
