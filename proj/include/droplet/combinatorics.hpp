#pragma once

// Exact enumeration of admissible occupancy vectors, exact cardinalities of
// the configuration sets, Stirling numbers and the associated closed forms.

#include <atomic>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "droplet/bigint.hpp"
#include "droplet/model.hpp"
#include "droplet/parallel.hpp"
#include "droplet/poisson.hpp"

namespace droplet {

// A partition written as (size, multiplicity) blocks in strictly decreasing
// size order.
using Blocks = std::vector<std::pair<Index, Index>>;

namespace detail {

inline OccupancyVector blocks_to_occupancy(const Blocks& blocks) {
  OccupancyVector::Entries e;
  for (const auto& [s, k] : blocks) e.emplace(s, k);
  return OccupancyVector(std::move(e));
}

// Depth-first over partitions of rem_sum into rem_slots parts, all >= b and
// < upper, using at most blocks_left distinct sizes.  Sizes ascend and, for
// a fixed size, multiplicities ascend; this visits the parts sequences
// (sorted decreasingly) in ascending lexicographic order.
template <typename Visit>
void partition_dfs(Index rem_sum, Index rem_slots, Index upper, Index blocks_left, int b,
                   Blocks& blocks, Visit& visit) {
  if (rem_slots == 0) {
    if (rem_sum == 0) visit(static_cast<const Blocks&>(blocks));
    return;
  }
  if (blocks_left == 0) return;
  const Index s_lo = std::max<Index>(b, (rem_sum + rem_slots - 1) / rem_slots);
  const Index s_hi = std::min(upper - 1, rem_sum - (rem_slots - 1) * b);
  for (Index s = s_lo; s <= s_hi; ++s) {
    for (Index k = 1; k <= rem_slots; ++k) {
      const Index rs = rem_sum - s * k;
      const Index rl = rem_slots - k;
      if (rs < rl * b) break;
      if (rl > 0 && (blocks_left == 1 || rs > rl * (s - 1))) continue;
      blocks.emplace_back(s, k);
      partition_dfs(rs, rl, s, blocks_left - 1, b, blocks, visit);
      blocks.pop_back();
    }
  }
}

struct PartitionShape {
  Index total = 0;  // K
  Index parts = 0;  // N
  int floor = 0;    // b
  Index max_distinct = 0;
};

// Top-level (largest size, its multiplicity) branches, in visiting order.
inline Blocks top_level_branches(const PartitionShape& shape) {
  Blocks out;
  if (shape.parts == 0 || shape.max_distinct == 0) return out;
  const Index s_lo = std::max<Index>(shape.floor, (shape.total + shape.parts - 1) / shape.parts);
  const Index s_hi = shape.total - (shape.parts - 1) * shape.floor;
  for (Index s = s_lo; s <= s_hi; ++s) {
    for (Index k = 1; k <= shape.parts; ++k) {
      const Index rs = shape.total - s * k;
      const Index rl = shape.parts - k;
      if (rs < rl * shape.floor) break;
      if (rl > 0 && (shape.max_distinct == 1 || rs > rl * (s - 1))) continue;
      if (rl == 0 && rs != 0) continue;
      out.emplace_back(s, k);
    }
  }
  return out;
}

template <typename Visit>
void for_each_in_branch(const PartitionShape& shape, std::pair<Index, Index> top, Visit& visit) {
  Blocks blocks{top};
  partition_dfs(shape.total - top.first * top.second, shape.parts - top.second, top.first,
                shape.max_distinct - 1, shape.floor, blocks, visit);
}

class BudgetCounter {
 public:
  explicit BudgetCounter(Index budget) : budget_(budget) {}
  void tick() {
    if (count_.fetch_add(1, std::memory_order_relaxed) + 1 > budget_) {
      throw BudgetError("enumeration budget of " + std::to_string(budget_) +
                        " admissible vectors exceeded (set DROPLET_BUDGET to raise it)");
    }
  }

 private:
  Index budget_;
  std::atomic<Index> count_{0};
};

}  // namespace detail

// Visits every partition of K into exactly N parts >= b with at most
// max_distinct distinct part sizes, in canonical order.
template <typename Visit>
void for_each_partition(Index total, Index parts, int b, Index max_distinct, Visit&& visit,
                        Index budget = enumeration_budget()) {
  const detail::PartitionShape shape{total, parts, b, max_distinct};
  detail::BudgetCounter counter(budget);
  auto counted = [&](const Blocks& blocks) {
    counter.tick();
    visit(blocks);
  };
  for (const auto& top : detail::top_level_branches(shape)) {
    detail::for_each_in_branch(shape, top, counted);
  }
}

// Visits every nu in A_{N,b,m} in canonical order.
template <typename Visit>
void for_each_admissible(const ModelParams& p, Visit&& visit) {
  for_each_partition(p.K(), p.N(), p.b(), p.m(),
                     [&](const Blocks& blocks) { visit(detail::blocks_to_occupancy(blocks)); });
}

// A_{N,b,m}: partitions of K into N parts >= b with <= m distinct sizes,
// listed in ascending lexicographic order of the decreasingly sorted parts.
// Top-level branches run in parallel and are concatenated in order.
inline std::vector<OccupancyVector> enumerate_admissible(const ModelParams& p,
                                                         unsigned threads = default_threads(),
                                                         Index budget = enumeration_budget()) {
  const detail::PartitionShape shape{p.K(), p.N(), p.b(), p.m()};
  const Blocks tops = detail::top_level_branches(shape);
  std::vector<std::vector<OccupancyVector>> parts(tops.size());
  detail::BudgetCounter counter(budget);
  parallel_for(tops.size(), threads, [&](std::size_t i) {
    auto visit = [&](const Blocks& blocks) {
      counter.tick();
      parts[i].push_back(detail::blocks_to_occupancy(blocks));
    };
    detail::for_each_in_branch(shape, tops[i], visit);
  });
  std::vector<OccupancyVector> out;
  for (auto& v : parts) {
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return out;
}

inline Index count_admissible(const ModelParams& p, Index budget = enumeration_budget()) {
  Index n = 0;
  for_each_partition(p.K(), p.N(), p.b(), p.m(), [&](const Blocks&) { ++n; }, budget);
  return n;
}

// card(Delta_nu) = (N! / prod nu_j!) * (K! / prod (j!)^{nu_j}): ways to choose
// which sites carry which droplet size, times ways to distribute the labeled
// particles into the resulting site loads.
inline BigInt card_delta(const OccupancyVector& nu, const ModelParams& p,
                         const FactorialTable& fact) {
  nu.validate(p);
  BigInt sites = fact(p.N());
  BigInt particles = fact(p.K());
  for (const auto& [j, v] : nu.entries()) {
    sites /= fact(v);
    particles /= boost::multiprecision::pow(fact(j), static_cast<unsigned>(v));
  }
  return sites * particles;
}

inline BigInt card_delta(const OccupancyVector& nu, const ModelParams& p) {
  return card_delta(nu, p, FactorialTable(std::max(p.N(), p.K())));
}

struct CountAtom {
  OccupancyVector nu;
  BigInt card_delta;
};

struct CountReport {
  ModelParams params;
  BigInt card_omega = 0;
  double log_card_omega = 0.0;
  Index n_admissible = 0;
  std::vector<CountAtom> atoms;  // canonical order

  double log_card_delta(std::size_t i) const { return log_big(atoms[i].card_delta); }
};

// card(Omega_{N,b,m}) as the disjoint union over A_{N,b,m} of Delta_nu.
inline CountReport card_omega(const ModelParams& p, unsigned threads = default_threads(),
                              Index budget = enumeration_budget()) {
  auto nus = enumerate_admissible(p, threads, budget);
  const FactorialTable fact(std::max(p.N(), p.K()));
  CountReport r{p, 0, 0.0, static_cast<Index>(nus.size()), {}};
  r.atoms.resize(nus.size());
  parallel_for(nus.size(), threads, [&](std::size_t i) {
    r.atoms[i].card_delta = card_delta(nus[i], p, fact);
    r.atoms[i].nu = std::move(nus[i]);
  });
  for (const auto& a : r.atoms) r.card_omega += a.card_delta;
  r.log_card_omega = r.card_omega > 0 ? log_big(r.card_omega)
                                      : -std::numeric_limits<double>::infinity();
  return r;
}

// S_b(K, N): partitions of a K-set into N blocks of size >= b (b = 1 gives
// the classical Stirling numbers of the second kind).  Built from
//   S_b(K,N) = N S_b(K-1,N) + C(K-1,b-1) S_b(K-b,N-1).
class StirlingTable {
 public:
  StirlingTable(int b, Index k_max) : b_(b), k_max_(k_max) {
    detail::require(b >= 1, "StirlingTable: b must be >= 1");
    detail::require(k_max >= 0, "StirlingTable: K must be >= 0");
    const auto rows = static_cast<std::size_t>(k_max) + 1;
    table_.assign(rows, std::vector<BigInt>(rows, BigInt(0)));
    table_[0][0] = 1;
    for (Index k = 1; k <= k_max; ++k) {
      const BigInt choose = binomial(k - 1, b - 1);
      for (Index n = 1; n <= k; ++n) {
        BigInt v = BigInt(static_cast<std::uint64_t>(n)) * at(k - 1, n);
        if (k - b >= 0) v += choose * at(k - b, n - 1);
        table_[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] = std::move(v);
      }
    }
  }

  int b() const { return b_; }
  Index k_max() const { return k_max_; }

  BigInt operator()(Index k, Index n) const {
    detail::require(k >= 0 && k <= k_max_, "StirlingTable: K out of range");
    if (n < 0 || n > k) return 0;
    return at(k, n);
  }

 private:
  const BigInt& at(Index k, Index n) const {
    return table_[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
  }

  int b_;
  Index k_max_;
  std::vector<std::vector<BigInt>> table_;
};

inline BigInt stirling2(Index k, Index n, int b = 1) {
  detail::require(k >= 0 && n >= 0, "stirling2: K and N must be >= 0");
  if (k < static_cast<Index>(b) * n) return 0;
  return StirlingTable(b, k)(k, n);
}

// log of the asymptotic
//   S(K,N) ~ K! e^{N a} / (N! c^{N-1} a^{K-N-2} [1 - c e^{-a}] sqrt(2 pi K)),
// a = alpha_1(c), c = K/N, exactly as displayed in the source derivation.
inline double bender_log_asymptotic(Index k, Index n) {
  detail::require(n >= 1 && k > n, "bender_log_asymptotic: need c = K/N > 1");
  const Ratio c = Ratio::make(k, n);
  const double a = solve_alpha(1, c).alpha;
  const double cv = c.value();
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return std::lgamma(kd + 1.0) + nd * a - std::lgamma(nd + 1.0) - (nd - 1.0) * std::log(cv) -
         (kd - nd - 2.0) * std::log(a) - std::log(1.0 - cv * std::exp(-a)) -
         0.5 * std::log(2.0 * std::numbers::pi * kd);
}

// (log S(K,N) - log S_asym(K,N)) / N.
inline double bender_residual(Index k, Index n) {
  return (log_big(stirling2(k, n)) - bender_log_asymptotic(k, n)) / static_cast<double>(n);
}

// Largest number of distinct droplet sizes over all partitions of K into N
// parts >= b, ignoring the m cap.
inline Index max_support(const ModelParams& p, Index budget = enumeration_budget()) {
  Index best = 0;
  for_each_partition(
      p.K(), p.N(), p.b(), p.N(),
      [&](const Blocks& blocks) { best = std::max(best, static_cast<Index>(blocks.size())); },
      budget);
  return best;
}

// sqrt(2(cN + 1/8)) - 1/2, i.e. the d with d(d+1)/2 = K.
inline double max_support_bound(const ModelParams& p) {
  return std::sqrt(2.0 * (static_cast<double>(p.K()) + 0.125)) - 0.5;
}

// The bound is attained iff the parts can be exactly 1, 2, ..., N.
inline bool triangular_compatible(const ModelParams& p) {
  return p.b() <= 1 && p.K() == p.N() * (p.N() + 1) / 2;
}

// (1/N) log card(Omega_{N,b,m}) without the vanishing error term:
//   b = 0:  c log N
//   b = 1:  c log N + (c-1) log(c/a) + a - c
//   b >= 2: c log N + c log(c/a) + log Z_b(a) - c,       a = alpha_b(c).
inline double card_omega_closed_form(const ModelParams& p) {
  const double cv = p.c_value();
  const double base = cv * std::log(static_cast<double>(p.N()));
  if (p.b() == 0) return base;
  const double a = solve_alpha(p.b(), p.c()).alpha;
  if (p.b() == 1) return base + (cv - 1.0) * std::log(cv / a) + a - cv;
  return base + cv * std::log(cv / a) + log_Z(p.b(), a) - cv;
}

}  // namespace droplet
