#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.  None of these call into the code they check, apart
// from the basic value types.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "droplet/droplet.hpp"

namespace droplet::oracle {

// Walks every one of the N^K placements and tallies the occupancy vector of
// each placement that satisfies the floor b and the cap m.
inline std::map<OccupancyVector, BigInt> brute_force(const ModelParams& p) {
  std::map<OccupancyVector, BigInt> out;
  std::vector<Index> cfg(static_cast<std::size_t>(p.K()), 0);
  std::vector<Index> loads(static_cast<std::size_t>(p.N()));
  while (true) {
    std::fill(loads.begin(), loads.end(), 0);
    for (Index s : cfg) ++loads[static_cast<std::size_t>(s)];
    if (*std::min_element(loads.begin(), loads.end()) >= p.b()) {
      const auto nu = OccupancyVector::from_loads(loads);
      if (nu.support_size() <= p.m()) out[nu] += 1;
    }
    std::size_t i = 0;
    while (i < cfg.size() && ++cfg[i] == p.N()) cfg[i++] = 0;
    if (i == cfg.size()) break;
  }
  return out;
}

// Random exact measure on [b, b+width] with mean exactly c.
inline ProbMeasure random_mean_c(std::mt19937_64& rng, int b, Ratio c, Index width) {
  std::uniform_int_distribution<int> wd(0, 20);
  ProbMeasure::ExactWeights w;
  Rational total = 0;
  for (Index j = b; j <= b + width; ++j) {
    const int x = wd(rng);
    if (x > 0) {
      w[j] = x;
      total += x;
    }
  }
  if (total == 0) {
    w[b] = 1;
    total = 1;
  }
  for (auto& [j, q] : w) q /= total;
  auto theta = ProbMeasure::exact(b, std::move(w));
  if (theta.min_support() >= c.value()) {
    ProbMeasure::ExactWeights v = theta.exact_weights();
    for (auto& [j, q] : v) q /= 2;
    v[b] += Rational(1, 2);
    theta = ProbMeasure::exact(b, std::move(v));
  }
  return adjust_mean(theta, c, b + width + 5);
}

// Minimizes R(theta | rho) over theta on [b, J] with sum 1 and mean c by
// scaled gradient projection: with D = diag(theta) the step is
// theta_j <- theta_j (1 - t (g_j - l0 - l1 j)), l chosen so both constraints
// stay exact.  Starts from the geometric law with mean c and returns the
// final objective.
inline double projected_gradient_min(const PoissonTail& rho, double c, Index upto, int iters) {
  const int b = rho.b();
  const auto n = static_cast<std::size_t>(upto - b + 1);
  std::vector<double> js(n);
  std::vector<double> lr(n);
  for (std::size_t i = 0; i < n; ++i) {
    js[i] = static_cast<double>(b) + static_cast<double>(i);
    lr[i] = rho.log_weight(static_cast<Index>(js[i]));
  }
  auto geometric = [&](double log_r) {
    std::vector<double> t(n);
    double top = -1e300;
    for (std::size_t i = 0; i < n; ++i) top = std::max(top, js[i] * log_r);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += t[i] = std::exp(js[i] * log_r - top);
    for (double& x : t) x /= s;
    return t;
  };
  auto mean_of = [&](const std::vector<double>& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += js[i] * t[i];
    return s;
  };
  double lo = -50.0;
  double hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_of(geometric(mid)) < c ? lo : hi) = mid;
  }
  std::vector<double> theta = geometric(0.5 * (lo + hi));

  const double step = 0.1;
  std::vector<double> d(n);
  for (int it = 0; it < iters; ++it) {
    // Solve [s0 s1; s1 s2] l = [sum th g, sum th j g].
    double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = std::log(theta[i]) - lr[i] + 1.0;
      s0 += theta[i];
      s1 += theta[i] * js[i];
      s2 += theta[i] * js[i] * js[i];
      r0 += theta[i] * g;
      r1 += theta[i] * js[i] * g;
    }
    const double det = s0 * s2 - s1 * s1;
    const double l0 = (r0 * s2 - r1 * s1) / det;
    const double l1 = (s0 * r1 - s1 * r0) / det;
    double t = step;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = std::log(theta[i]) - lr[i] + 1.0;
      d[i] = -theta[i] * (g - l0 - l1 * js[i]);
      if (d[i] < 0.0) t = std::min(t, -0.99 * theta[i] / d[i]);
    }
    for (std::size_t i = 0; i < n; ++i) theta[i] += t * d[i];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (theta[i] > 0.0) s += theta[i] * (std::log(theta[i]) - lr[i]);
  }
  return s;
}

using Float50 = boost::multiprecision::cpp_bin_float_50;

// alpha_1(c) to 50 digits: Newton on x - c (1 - e^{-x}) from a start above
// the root, where the map is convex and the iteration decreases monotonically.
inline Float50 alpha1_50(Ratio c) {
  const Float50 cv = Float50(c.num) / c.den;
  Float50 x = cv;
  for (int i = 0; i < 200; ++i) {
    const Float50 e = exp(-x);
    const Float50 next = x - (x - cv * (1 - e)) / (1 - cv * e);
    if (abs(next - x) < Float50("1e-48")) return next;
    x = next;
  }
  return x;
}

inline double chi_square_p(double stat, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

// Goodness of fit of observed counts to exact probabilities.
inline double gof_p(const std::vector<Index>& observed, const std::vector<double>& probs) {
  double n = 0.0;
  for (Index o : observed) n += static_cast<double>(o);
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * probs[i];
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
  }
  return chi_square_p(stat, static_cast<double>(observed.size()) - 1.0);
}

// Two-sample chi-square on a two-row contingency table.
inline double two_sample_p(const std::vector<Index>& a, const std::vector<Index>& b) {
  double na = 0.0;
  double nb = 0.0;
  for (Index x : a) na += static_cast<double>(x);
  for (Index x : b) nb += static_cast<double>(x);
  double stat = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    const double ea = col * na / (na + nb);
    const double eb = col * nb / (na + nb);
    stat += (static_cast<double>(a[i]) - ea) * (static_cast<double>(a[i]) - ea) / ea;
    stat += (static_cast<double>(b[i]) - eb) * (static_cast<double>(b[i]) - eb) / eb;
  }
  return chi_square_p(stat, static_cast<double>(a.size()) - 1.0);
}

// Occupancy-vector histogram of a batch, indexed like counts.atoms.
inline std::vector<Index> tally(const SampleBatch& batch, const CountReport& counts) {
  std::map<OccupancyVector, std::size_t> pos;
  for (std::size_t i = 0; i < counts.atoms.size(); ++i) pos[counts.atoms[i].nu] = i;
  std::vector<Index> out(counts.atoms.size(), 0);
  for (const auto& nu : batch.occupancy_histograms) ++out[pos.at(nu)];
  return out;
}

inline bool within_3_sigma(double observed_fraction, double p, Index n) {
  return std::abs(observed_fraction - p) <= 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace droplet::oracle
