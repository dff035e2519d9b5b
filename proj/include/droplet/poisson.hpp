#pragma once

// Truncated Poisson family rho_{b,alpha}, its normalizer Z_b, the mean
// function gamma_b and the solvers for alpha_b(c).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "droplet/error.hpp"
#include "droplet/model.hpp"

namespace droplet {

namespace detail {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// log of sum_{j>=b} alpha^j / j!, summed forward from the leading term.
inline double log_tail_series(int b, double alpha) {
  CompensatedSum s;
  double term = 1.0;
  s.add(term);
  for (int k = 1; k < 100000; ++k) {
    term *= alpha / static_cast<double>(b + k);
    s.add(term);
    if (term < 1e-18 * s.value() && static_cast<double>(b + k) > alpha) break;
  }
  return b * std::log(alpha) - std::lgamma(b + 1.0) + std::log(s.value());
}

// sum_{j<b} e^{-alpha} alpha^j / j!, i.e. P(Pois(alpha) < b).
inline double poisson_head_mass(int b, double alpha) {
  CompensatedSum s;
  for (int j = 0; j < b; ++j) {
    s.add(std::exp(j * std::log(alpha) - alpha - std::lgamma(j + 1.0)));
  }
  return s.value();
}

}  // namespace detail

// log Z_b(alpha), with Z_0 = e^alpha and Z_b = e^alpha - sum_{j<b} alpha^j/j!.
// Uses the tail series for alpha <= b (no cancellation) and e^alpha minus the
// head above that.
inline double log_Z(int b, double alpha) {
  detail::require(alpha > 0.0 && std::isfinite(alpha), "log_Z: alpha must be positive");
  detail::require(b >= 0, "log_Z: b must be >= 0");
  if (b == 0) return alpha;
  if (alpha > b) return alpha + std::log1p(-detail::poisson_head_mass(b, alpha));
  return detail::log_tail_series(b, alpha);
}

// Same quantity through the regularized incomplete gamma function:
// Z_b(alpha) = e^alpha * P(b, alpha) = (e^alpha/(b-1)!) int_0^alpha x^{b-1} e^{-x} dx.
inline double log_Z_incomplete_gamma(int b, double alpha) {
  detail::require(alpha > 0.0 && std::isfinite(alpha),
                  "log_Z_incomplete_gamma: alpha must be positive");
  detail::require(b >= 0, "log_Z_incomplete_gamma: b must be >= 0");
  if (b == 0) return alpha;
  const double p = boost::math::gamma_p(static_cast<double>(b), alpha);
  if (p > 0.0) return alpha + std::log(p);
  // Deep underflow: leading term of the lower incomplete gamma series.
  return detail::log_tail_series(b, alpha);
}

// gamma_b(alpha) = alpha Z_{b-1}(alpha) / Z_b(alpha), the mean of rho_{b,alpha}.
inline double gamma_mean(int b, double alpha) {
  detail::require(alpha > 0.0, "gamma_mean: alpha must be positive");
  if (b == 0) return alpha;
  return alpha * std::exp(log_Z(b - 1, alpha) - log_Z(b, alpha));
}

// rho_{b,alpha;j} = alpha^j / (Z_b(alpha) j!) on j >= b.
class PoissonTail {
 public:
  static constexpr double kDefaultTailTol = 1e-15;

  PoissonTail(int b, double alpha, double tail_tol = kDefaultTailTol)
      : b_(b), alpha_(alpha), log_z_(log_Z(b, alpha)), log_alpha_(std::log(alpha)) {
    detail::require(tail_tol > 0.0, "PoissonTail: tail_tol must be positive");
    // Past the mode the ratio rho_{j+1}/rho_j = alpha/(j+1) is decreasing,
    // so sum_{i>J} rho_i <= rho_{J+1} / (1 - alpha/(J+2)).
    Index j = std::max<Index>(b, static_cast<Index>(std::ceil(alpha)));
    while (true) {
      const double r = alpha / static_cast<double>(j + 2);
      if (r < 1.0 && weight(j + 1) / (1.0 - r) < tail_tol) break;
      ++j;
    }
    truncation_ = j;
    tail_tol_ = tail_tol;
  }

  int b() const { return b_; }
  double alpha() const { return alpha_; }
  double log_z() const { return log_z_; }
  Index truncation() const { return truncation_; }
  double tail_tol() const { return tail_tol_; }

  double log_weight(Index j) const {
    if (j < b_) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(j) * log_alpha_ - std::lgamma(static_cast<double>(j) + 1.0) -
           log_z_;
  }
  double weight(Index j) const { return j < b_ ? 0.0 : std::exp(log_weight(j)); }

  double mean() const { return gamma_mean(b_, alpha_); }

  // rho_j for b <= j <= upto, not renormalized.
  std::vector<double> components(Index upto) const {
    std::vector<double> out;
    for (Index j = b_; j <= upto; ++j) out.push_back(weight(j));
    return out;
  }

  ProbMeasure truncated(Index upto) const {
    detail::CompensatedSum total;
    ProbMeasure::FloatWeights w;
    for (Index j = b_; j <= upto; ++j) {
      const double x = weight(j);
      w.emplace(j, x);
      total.add(x);
    }
    for (auto& [j, x] : w) x /= total.value();
    return ProbMeasure::floating(b_, std::move(w));
  }
  ProbMeasure truncated() const { return truncated(truncation_); }

  double truncated_mean(Index upto) const {
    detail::CompensatedSum s;
    for (Index j = b_; j <= upto; ++j) s.add(static_cast<double>(j) * weight(j));
    return s.value();
  }

 private:
  int b_;
  double alpha_;
  double log_z_;
  double log_alpha_;
  Index truncation_ = 0;
  double tail_tol_ = kDefaultTailTol;
};

// Total variation (= Prohorov on the lattice) between a finitely supported
// measure and the infinitely supported rho.  Mass of rho off the support of
// theta is taken as 1 - rho(supp theta), so no truncation is involved.
inline double prohorov_distance(const ProbMeasure& theta, const PoissonTail& rho) {
  detail::CompensatedSum diff;
  detail::CompensatedSum covered;
  for (const auto& [j, x] : theta.weights()) {
    const double r = rho.weight(j);
    diff.add(std::abs(x - r));
    covered.add(r);
  }
  return std::min(1.0, 0.5 * (diff.value() + std::max(0.0, 1.0 - covered.value())));
}

enum class AlphaMethod { bisection, fixed_point_decreasing, fixed_point_increasing };

inline std::string to_string(AlphaMethod m) {
  switch (m) {
    case AlphaMethod::bisection: return "bisection";
    case AlphaMethod::fixed_point_decreasing: return "fixed_point_decreasing";
    case AlphaMethod::fixed_point_increasing: return "fixed_point_increasing";
  }
  return "unknown";
}

struct AlphaSolveReport {
  double alpha = 0.0;
  int iterations = 0;
  AlphaMethod method = AlphaMethod::bisection;
  double residual = 0.0;  // |gamma_b(alpha) - c|
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

inline constexpr double kDefaultAlphaTol = 1e-12;

// alpha_b(c): the unique alpha > 0 with gamma_b(alpha) = c.  For b = 0 the
// answer is c itself; otherwise bisection on [max(c-b, 1e-8), c], where the
// root is known to lie.
inline AlphaSolveReport solve_alpha(int b, Ratio c, double tol = kDefaultAlphaTol) {
  detail::require(b >= 0, "solve_alpha: b must be >= 0");
  detail::require(c.num > static_cast<std::int64_t>(b) * c.den, "solve_alpha: need c > b");
  detail::require(tol > 0.0, "solve_alpha: tol must be positive");
  const double cv = c.value();
  AlphaSolveReport r;
  r.method = AlphaMethod::bisection;
  if (b == 0) {
    r.alpha = cv;
    r.bracket_lo = r.bracket_hi = cv;
    return r;
  }
  double lo = std::max(cv - b, 1e-8);
  double hi = cv;
  r.bracket_lo = lo;
  r.bracket_hi = hi;
  int it = 0;
  while (it < 2000) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++it;
    const double g = gamma_mean(b, mid);
    if (g < cv) {
      lo = mid;
    } else if (g > cv) {
      hi = mid;
    } else {
      lo = hi = mid;
      break;
    }
  }
  const double rlo = std::abs(gamma_mean(b, lo) - cv);
  const double rhi = std::abs(gamma_mean(b, hi) - cv);
  r.alpha = rlo <= rhi ? lo : hi;
  r.residual = std::min(rlo, rhi);
  r.iterations = it;
  if (r.residual > tol) {
    throw PreconditionError("solve_alpha: tolerance " + std::to_string(tol) +
                            " not reachable in double precision");
  }
  return r;
}

enum class IterationDirection { from_above, from_below };

// Iterates alpha -> c (1 - e^{-alpha}) from alpha = c (decreasing) or from
// alpha = log c (increasing).  Returns every iterate, starting value first.
// Throws std::logic_error if a step moves the wrong way by more than a few ulps.
inline std::vector<double> alpha1_iterates(Ratio c, IterationDirection dir, int max_iter) {
  detail::require(c.num > c.den, "alpha1_iterates: need c > 1");
  const double cv = c.value();
  std::vector<double> seq{dir == IterationDirection::from_above ? cv : std::log(cv)};
  for (int n = 0; n < max_iter; ++n) {
    const double x = seq.back();
    const double next = -cv * std::expm1(-x);
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * x;
    const double step = next - x;
    if (std::abs(step) <= slack) {
      seq.push_back(next);
      break;
    }
    const bool wrong = dir == IterationDirection::from_above ? step > 0 : step < 0;
    if (wrong) throw std::logic_error("alpha1_iterates: monotonicity violated");
    seq.push_back(next);
  }
  return seq;
}

inline AlphaSolveReport iterate_alpha1(Ratio c, IterationDirection dir, int max_iter = 100000) {
  const auto seq = alpha1_iterates(c, dir, max_iter);
  const double cv = c.value();
  AlphaSolveReport r;
  r.method = dir == IterationDirection::from_above ? AlphaMethod::fixed_point_decreasing
                                                   : AlphaMethod::fixed_point_increasing;
  r.alpha = seq.back();
  r.iterations = static_cast<int>(seq.size()) - 1;
  r.residual = std::abs(gamma_mean(1, r.alpha) - cv);
  const double prev = seq.size() > 1 ? seq[seq.size() - 2] : seq.back();
  r.bracket_lo = std::min(prev, r.alpha);
  r.bracket_hi = std::max(prev, r.alpha);
  return r;
}

// max_{b<=j<=J} |rho_{b,alpha;j} - Pois(alpha)(j) / Pois(alpha)({>=b})| at
// alpha = alpha_b(c); the conditioned Poisson law is computed from the plain
// Poisson pmf and its head mass.
inline double conditioned_poisson_check(int b, Ratio c, Index upto) {
  detail::require(b >= 0, "conditioned_poisson_check: b must be >= 0");
  const double alpha = solve_alpha(b, c).alpha;
  const PoissonTail rho(b, alpha);
  const double upper = 1.0 - detail::poisson_head_mass(b, alpha);
  double worst = 0.0;
  for (Index j = b; j <= upto; ++j) {
    const double pois = std::exp(static_cast<double>(j) * std::log(alpha) - alpha -
                                 std::lgamma(static_cast<double>(j) + 1.0));
    worst = std::max(worst, std::abs(rho.weight(j) - pois / upper));
  }
  return worst;
}

inline bool alpha_monotone_in_b(int b, Ratio c) {
  detail::require(c.num > static_cast<std::int64_t>(b + 1) * c.den,
                  "alpha_monotone_in_b: need c > b + 1");
  return solve_alpha(b + 1, c).alpha < solve_alpha(b, c).alpha;
}

}  // namespace droplet
