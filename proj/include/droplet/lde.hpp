#pragma once

// Exact probabilities under the microcanonical ensemble P_{N,b,m} and the
// numerical checks of the local large deviation estimate and its ingredients.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "droplet/combinatorics.hpp"
#include "droplet/entropy.hpp"
#include "droplet/model.hpp"
#include "droplet/poisson.hpp"

namespace droplet {

// P_{N,b,m}(N(omega) = nu) = card(Delta_nu) / card(Omega_{N,b,m}).
inline Rational exact_probability(const OccupancyVector& nu, const CountReport& counts) {
  detail::require(counts.card_omega > 0, "exact_probability: empty configuration space");
  return Rational(card_delta(nu, counts.params), counts.card_omega);
}

inline Rational exact_probability(const OccupancyVector& nu, const ModelParams& p) {
  return exact_probability(nu, card_omega(p));
}

// f(alpha,b,c,K) = log Z_b(alpha) - c log alpha + c log K - c.
inline double f_constant(double alpha, int b, Ratio c, Index k) {
  const double cv = c.value();
  return log_Z(b, alpha) - cv * std::log(alpha) + cv * std::log(static_cast<double>(k)) - cv;
}

struct LDEResidualRow {
  Index N = 0;
  std::size_t nu_id = 0;  // position in the canonical enumeration
  OccupancyVector nu;
  double exact_logprob_over_N = 0.0;  // (1/N)(log card Delta - log card Omega)
  double entropy = 0.0;               // R(theta_nu | rho_{b,alpha*})
  double residual = 0.0;              // exact_logprob_over_N + entropy
  double zeta = 0.0;
  double eta = 0.0;
};

struct LDESweepLevel {
  ModelParams params;
  std::vector<LDEResidualRow> rows;
  double max_abs_residual = 0.0;
};

struct LemmaResidualRow {
  Index N = 0;
  OccupancyVector nu;    // empty for the Omega-level lemma
  double lhs = 0.0;      // (1/N) log card Delta or (1/N) log card Omega
  double rhs_closed_form = 0.0;
  double zeta_or_eta = 0.0;
};

// zeta_N(nu) = (1/N) log card(Delta_nu) - (f(alpha,b,c,K) - R(theta_nu | rho_alpha)).
// Independent of alpha by the entropy shift identity.
inline LemmaResidualRow lemma41_check(const OccupancyVector& nu, const ModelParams& p,
                                      double alpha) {
  const ProbMeasure theta = occupancy_to_measure(nu, p);
  const double n = static_cast<double>(p.N());
  LemmaResidualRow row;
  row.N = p.N();
  row.nu = nu;
  row.lhs = log_big(card_delta(nu, p)) / n;
  row.rhs_closed_form =
      f_constant(alpha, p.b(), p.c(), p.K()) - relative_entropy(theta, PoissonTail(p.b(), alpha)).value;
  row.zeta_or_eta = row.lhs - row.rhs_closed_form;
  return row;
}

// eta_N = (1/N) log card(Omega) - f(alpha,b,c,K) + g(alpha,b,c), using that
// the minimum of R(.|rho_alpha) over mean-c measures is g(alpha,b,c).
inline LemmaResidualRow lemma42_check(const CountReport& counts, double alpha) {
  const ModelParams& p = counts.params;
  LemmaResidualRow row;
  row.N = p.N();
  row.lhs = counts.log_card_omega / static_cast<double>(p.N());
  row.rhs_closed_form = f_constant(alpha, p.b(), p.c(), p.K()) - g_shift(alpha, p.b(), p.c());
  row.zeta_or_eta = row.lhs - row.rhs_closed_form;
  return row;
}

inline LemmaResidualRow lemma42_check(const ModelParams& p, double alpha) {
  return lemma42_check(card_omega(p), alpha);
}

// For each N, every nu in A_{N,b,m(N)}: eps_N(nu) = (1/N) log P(Theta = theta_nu)
// + R(theta_nu | rho_{b,alpha_b(c)}), together with its zeta - eta split
// computed at `alpha` (defaults to alpha_b(c)).
// One level of the sweep for explicit parameters.
inline LDESweepLevel lde_level(const ModelParams& p, std::optional<double> alpha = std::nullopt,
                               unsigned threads = default_threads()) {
  const int b = p.b();
  const Ratio c = p.c();
  const Index n = p.N();
  const double astar = solve_alpha(b, c).alpha;
  const double a = alpha.value_or(astar);
  const PoissonTail rho(b, astar);
  const PoissonTail rho_a(b, a);
  const double g = g_shift(a, b, c);
  const CountReport counts = card_omega(p, threads);
  const double nd = static_cast<double>(n);
  const double f = f_constant(a, b, c, p.K());
  const double eta = counts.log_card_omega / nd - f + g;
  LDESweepLevel level{p, {}, 0.0};
  level.rows.resize(counts.atoms.size());
  parallel_for(counts.atoms.size(), threads, [&](std::size_t i) {
    const auto& atom = counts.atoms[i];
    const ProbMeasure theta = occupancy_to_measure(atom.nu, p);
    const double log_delta = log_big(atom.card_delta);
    LDEResidualRow& row = level.rows[i];
    row.N = n;
    row.nu_id = i;
    row.nu = atom.nu;
    row.exact_logprob_over_N = (log_delta - counts.log_card_omega) / nd;
    row.entropy = relative_entropy(theta, rho).value;
    row.residual = row.exact_logprob_over_N + row.entropy;
    row.zeta = log_delta / nd - (f - relative_entropy(theta, rho_a).value);
    row.eta = eta;
  });
  for (const auto& row : level.rows) {
    level.max_abs_residual = std::max(level.max_abs_residual, std::abs(row.residual));
  }
  return level;
}

inline std::vector<LDESweepLevel> lde_sweep(int b, Ratio c, const std::vector<Index>& n_list,
                                            MFunction mf = {},
                                            std::optional<double> alpha = std::nullopt,
                                            unsigned threads = default_threads()) {
  detail::require(!n_list.empty(), "lde_sweep: empty N list");
  std::vector<LDESweepLevel> out;
  for (Index n : n_list) out.push_back(lde_level(ModelParams::with_m_function(b, c, n, mf), alpha, threads));
  return out;
}

struct BallRow {
  Index N = 0;
  Index n_in_ball = 0;
  std::optional<double> min_entropy;       // min R(theta_nu | rho*) over the ball
  std::optional<double> log_prob_over_N;   // (1/N) log P(Theta in ball)
};

// Distance of theta_nu to `center` for ball membership; radius >= 1 admits
// everything since the metric is capped at 1.
inline bool in_ball(const ProbMeasure& theta, const ProbMeasure& center, double radius) {
  return radius >= 1.0 || prohorov_distance(theta, center) < radius;
}
inline bool in_ball(const ProbMeasure& theta, const PoissonTail& center, double radius) {
  return radius >= 1.0 || prohorov_distance(theta, center) < radius;
}

// For each N: the minimum of R(theta_nu | rho_{b,alpha*}) over admissible nu
// with theta_nu inside the ball, and (1/N) log of the exact ball probability.
// An empty intersection yields a row with no values.
inline std::vector<BallRow> ball_infimum_limit(const ProbMeasure& center, double radius,
                                               const std::vector<ModelParams>& params_list,
                                               unsigned threads = default_threads()) {
  detail::require(radius > 0.0, "ball_infimum_limit: radius must be positive");
  std::vector<BallRow> out;
  for (const auto& p : params_list) {
    detail::require(std::abs(center.mean() - p.c_value()) <= 1e-9,
                    "ball_infimum_limit: center must have mean c");
    const PoissonTail rho(p.b(), solve_alpha(p.b(), p.c()).alpha);
    const CountReport counts = card_omega(p, threads);
    BallRow row;
    row.N = p.N();
    BigInt mass = 0;
    for (const auto& atom : counts.atoms) {
      const ProbMeasure theta = occupancy_to_measure(atom.nu, p);
      if (!in_ball(theta, center, radius)) continue;
      ++row.n_in_ball;
      mass += atom.card_delta;
      const double r = relative_entropy(theta, rho).value;
      row.min_entropy = row.min_entropy ? std::min(*row.min_entropy, r) : r;
    }
    if (row.n_in_ball > 0) {
      row.log_prob_over_N = (log_big(mass) - counts.log_card_omega) / static_cast<double>(p.N());
    }
    out.push_back(row);
  }
  return out;
}

// Exact P_{N,b,m}(Theta in B(rho_{b,alpha_b(c)}, eps)).
inline Rational equilibrium_ball_mass(const CountReport& counts, double epsilon) {
  detail::require(epsilon > 0.0, "equilibrium_ball_mass: epsilon must be positive");
  const ModelParams& p = counts.params;
  const PoissonTail rho(p.b(), solve_alpha(p.b(), p.c()).alpha);
  BigInt mass = 0;
  for (const auto& atom : counts.atoms) {
    if (in_ball(occupancy_to_measure(atom.nu, p), rho, epsilon)) mass += atom.card_delta;
  }
  return Rational(mass, counts.card_omega);
}

inline Rational equilibrium_ball_mass(const ModelParams& p, double epsilon) {
  return equilibrium_ball_mass(card_omega(p), epsilon);
}

// Weak form of Stirling's approximation: for every 2 <= N <= n_max and
// 1 <= n <= N, 1 <= log n! - (n log n - n) <= 2 log N.  Returns the first N
// at which some n fails, or 0.
inline Index weak_stirling_violation(Index n_max) {
  double worst_gap = 0.0;
  for (Index n = 1; n <= n_max; ++n) {
    const double nd = static_cast<double>(n);
    const double gap = std::lgamma(nd + 1.0) - (nd * std::log(nd) - nd);
    if (gap < 1.0) return std::max<Index>(n, 2);
    worst_gap = std::max(worst_gap, gap);
    if (n >= 2 && worst_gap > 2.0 * std::log(nd)) return n;
  }
  return 0;
}

}  // namespace droplet
