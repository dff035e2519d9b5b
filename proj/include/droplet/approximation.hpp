#pragma once

// Maps a mean-c measure theta to an admissible occupancy vector nu^(N) whose
// number-density measure approximates theta, and checks the accompanying
// bounds.

#include <optional>
#include <vector>

#include "droplet/combinatorics.hpp"
#include "droplet/entropy.hpp"
#include "droplet/model.hpp"
#include "droplet/poisson.hpp"

namespace droplet {

struct ApproximationReport {
  ModelParams params;
  Index j_star = 0;  // min support of theta
  // The two solved-for counts; may be negative below the threshold.
  BigInt nu_j_star = 0;
  BigInt nu_j_star_plus_one = 0;
  std::optional<OccupancyVector> nu = std::nullopt;  // empty when below threshold
  Rational beta_m = 0;                // sum_{j >= j*+m} theta_j
  Rational gamma_m = 0;               // sum_{j >= j*+m} j theta_j
  double prohorov_to_target = 1.0;
  double entropy_gap = 0.0;           // |R(theta^(N)|rho*) - R(theta|rho*)|

  bool above_threshold() const { return nu.has_value(); }
};

// nu_j = floor(N theta_j) for j*+2 <= j <= j*+m-1, zero outside [j*, j*+m-1],
// and nu_{j*}, nu_{j*+1} solved from the two conservation laws
//   nu_{j*} + nu_{j*+1} = N - sum_rest nu_j
//   j* nu_{j*} + (j*+1) nu_{j*+1} = K - sum_rest j nu_j.
inline ApproximationReport build_approximation(const ProbMeasure& theta, const ModelParams& p) {
  detail::require(theta.is_exact(), "build_approximation: theta must be exact");
  detail::require(theta.floor() == p.b(), "build_approximation: support floor differs from b");
  detail::require(theta.exact_mean() == p.c().exact(), "build_approximation: mean(theta) != c");
  detail::require(p.m() >= 2, "build_approximation: need m >= 2");

  ApproximationReport r{.params = p};
  const Index jstar = theta.min_support();
  r.j_star = jstar;
  const Index last = jstar + p.m() - 1;

  BigInt rem_sites = p.N();
  BigInt rem_particles = p.K();
  OccupancyVector::Entries e;
  for (const auto& [j, q] : theta.exact_weights()) {
    if (j > last) {
      r.beta_m += q;
      r.gamma_m += q * j;
      continue;
    }
    if (j < jstar + 2) continue;
    const Rational scaled = q * p.N();
    const BigInt v = boost::multiprecision::numerator(scaled) /
                     boost::multiprecision::denominator(scaled);  // floor, scaled >= 0
    if (v > 0) {
      e.emplace(j, v.convert_to<Index>());
      rem_sites -= v;
      rem_particles -= v * j;
    }
  }
  r.nu_j_star_plus_one = rem_particles - BigInt(jstar) * rem_sites;
  r.nu_j_star = rem_sites - r.nu_j_star_plus_one;

  if (r.nu_j_star > 0 && r.nu_j_star_plus_one >= 0) {
    e[jstar] = r.nu_j_star.convert_to<Index>();
    if (r.nu_j_star_plus_one > 0) e[jstar + 1] = r.nu_j_star_plus_one.convert_to<Index>();
    OccupancyVector nu(std::move(e));
    nu.validate(p);
    const ProbMeasure approx = occupancy_to_measure(nu, p);
    const PoissonTail rho(p.b(), solve_alpha(p.b(), p.c()).alpha);
    r.prohorov_to_target = prohorov_distance(approx, theta);
    r.entropy_gap = std::abs(relative_entropy(approx, rho).value - relative_entropy(theta, rho).value);
    r.nu = std::move(nu);
  }
  return r;
}

struct LemmaB3Check {
  bool j_star_upper = false;         // N theta_{j*} >= nu_{j*}
  bool j_star_lower = false;         // nu_{j*} >= N(theta_{j*} + (j*+1) beta - gamma - m^2/N)
  bool j_star_plus_one_upper = false;   // N(theta_{j*+1} + gamma - j* beta + m^2/N) >= nu_{j*+1}
  bool j_star_plus_one_middle = false;  // nu_{j*+1} >= N(theta_{j*+1} + gamma - j* beta)
  bool j_star_plus_one_lower = false;   // N(theta_{j*+1} + gamma - j* beta) >= N theta_{j*+1}
  bool dominated = false;            // nu_j / N <= theta_j for every j != j*+1

  bool all() const {
    return j_star_upper && j_star_lower && j_star_plus_one_upper && j_star_plus_one_middle &&
           j_star_plus_one_lower && dominated;
  }
};

// All bounds evaluated in exact rational arithmetic.
inline LemmaB3Check lemma_b3_check(const ApproximationReport& r, const ProbMeasure& theta) {
  detail::require(r.above_threshold(), "lemma_b3_check: report below threshold");
  const ModelParams& p = r.params;
  const Rational n(p.N());
  const Rational m2(p.m() * p.m());
  const Index js = r.j_star;
  const Rational t0 = theta.exact_weight(js);
  const Rational t1 = theta.exact_weight(js + 1);
  const Rational v0(r.nu_j_star);
  const Rational v1(r.nu_j_star_plus_one);
  const Rational mid = n * (t1 + r.gamma_m - Rational(js) * r.beta_m);

  LemmaB3Check c;
  c.j_star_upper = n * t0 >= v0;
  c.j_star_lower = v0 >= n * (t0 + Rational(js + 1) * r.beta_m - r.gamma_m) - m2;
  c.j_star_plus_one_upper = mid + m2 >= v1;
  c.j_star_plus_one_middle = v1 >= mid;
  c.j_star_plus_one_lower = mid >= n * t1;
  c.dominated = true;
  for (const auto& [j, v] : r.nu->entries()) {
    if (j == js + 1) continue;
    if (Rational(v) > n * theta.exact_weight(j)) c.dominated = false;
  }
  return c;
}

inline bool lemma_b3_bounds(const ApproximationReport& r, const ProbMeasure& theta) {
  return lemma_b3_check(r, theta).all();
}

// First N in the schedule whose construction is admissible, if any.
inline std::optional<Index> detect_threshold(const std::vector<ApproximationReport>& reports) {
  for (const auto& r : reports) {
    if (r.above_threshold()) return r.params.N();
  }
  return std::nullopt;
}

// All theta_nu for nu in A_{N,b,m}: one level of the countable dense family.
inline std::vector<ProbMeasure> dense_family_level(const ModelParams& p) {
  std::vector<ProbMeasure> out;
  for_each_admissible(p, [&](const OccupancyVector& nu) {
    out.push_back(occupancy_to_measure(nu, p));
  });
  return out;
}

// min over the level-N family of the distance to `target`.
inline double family_distance(const ProbMeasure& target, const ModelParams& p) {
  double best = 1.0;
  for_each_admissible(p, [&](const OccupancyVector& nu) {
    best = std::min(best, prohorov_distance(occupancy_to_measure(nu, p), target));
  });
  return best;
}

struct RationalizedTarget {
  ProbMeasure measure;
  Index truncation = 0;        // last support point kept from the float target
  Index adjust_atom = 0;       // atom used to restore mean c
  Rational adjust_weight = 0;  // mixing weight of the point mass at adjust_atom
};

// Exact mean-c version of rho: truncate where its tail mass falls below
// tail_tol, convert the weights exactly, renormalize, then restore mean c with
// a single far atom (or the lowest atom if the mean came out high).
inline RationalizedTarget rationalize_target(const PoissonTail& rho, Ratio c, double tail_tol = 1e-12) {
  const PoissonTail cut(rho.b(), rho.alpha(), tail_tol);
  const ProbMeasure f = cut.truncated();
  ProbMeasure::ExactWeights w;
  Rational total = 0;
  for (const auto& [j, x] : f.weights()) {
    const Rational q = rational_from_double(x);
    w.emplace(j, q);
    total += q;
  }
  for (auto& [j, q] : w) q /= total;
  const ProbMeasure normalized = ProbMeasure::exact(rho.b(), std::move(w));
  const Index far = cut.truncation() + 1;
  ProbMeasure adjusted = adjust_mean(normalized, c, far);
  const Rational before = normalized.exact_mean();
  RationalizedTarget out{adjusted, cut.truncation(), 0, 0};
  const Rational cq = c.exact();
  if (before < cq) {
    out.adjust_atom = far;
    out.adjust_weight = (cq - before) / (Rational(far) - before);
  } else if (before > cq) {
    out.adjust_atom = normalized.min_support();
    out.adjust_weight = (before - cq) / (before - Rational(out.adjust_atom));
  }
  return out;
}

}  // namespace droplet
