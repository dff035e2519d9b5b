#pragma once

// Draws configurations of K labeled particles on N sites from P_{N,b,m},
// either by rejection from the uniform placement law or exactly in two
// stages (occupancy vector, then a uniform element of Delta_nu).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "droplet/combinatorics.hpp"
#include "droplet/lde.hpp"
#include "droplet/model.hpp"
#include "droplet/parallel.hpp"
#include "droplet/rng.hpp"

namespace droplet {

enum class SampleMethod { rejection, exact_two_stage };

inline std::string to_string(SampleMethod m) {
  return m == SampleMethod::rejection ? "rejection" : "exact_two_stage";
}

struct SampleOptions {
  unsigned threads = default_threads();
  bool keep_configurations = false;
  // Samples [k*block_size, (k+1)*block_size) use random stream k, so the
  // batch does not depend on the worker count.
  Index block_size = 1024;
};

struct SampleBatch {
  ModelParams params;
  std::uint64_t seed = 0;
  Index n_samples = 0;
  SampleMethod method = SampleMethod::exact_two_stage;
  std::vector<OccupancyVector> occupancy_histograms{};
  std::vector<Index> first_site_loads{};            // K_1 of each sample
  std::vector<std::vector<Index>> configurations{}; // site of each particle, if kept
  Index attempts = 0;                               // rejection only
  double acceptance_rate = 1.0;                     // rejection only

  // FNV-1a over everything the sampler produced.
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::int64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& nu : occupancy_histograms) {
      for (const auto& [j, v] : nu.entries()) {
        mix(j);
        mix(v);
      }
      mix(-1);
    }
    for (Index k : first_site_loads) mix(k);
    for (const auto& cfg : configurations) {
      for (Index s : cfg) mix(s);
      mix(-1);
    }
    mix(attempts);
    return h;
  }
};

inline constexpr double kMinAcceptance = 1e-6;

namespace detail {

struct Draw {
  OccupancyVector nu;
  Index first_load = 0;
  std::vector<Index> configuration;
};

template <typename BlockFn>
SampleBatch run_blocks(const ModelParams& p, Index n, std::uint64_t seed, SampleMethod method,
                       const SampleOptions& opt, BlockFn&& fill_block) {
  require(n >= 0, "sample: n must be >= 0");
  require(opt.block_size > 0, "sample: block size must be positive");
  const auto blocks = static_cast<std::size_t>((n + opt.block_size - 1) / opt.block_size);
  std::vector<std::vector<Draw>> out(blocks);
  std::vector<Index> attempts(blocks, 0);
  parallel_for(blocks, opt.threads, [&](std::size_t k) {
    RandomStream rng(seed, k);
    const Index begin = static_cast<Index>(k) * opt.block_size;
    const Index count = std::min(opt.block_size, n - begin);
    out[k].reserve(static_cast<std::size_t>(count));
    attempts[k] = fill_block(rng, count, out[k]);
  });
  SampleBatch batch{.params = p, .seed = seed, .n_samples = n, .method = method};
  for (std::size_t k = 0; k < blocks; ++k) {
    batch.attempts += attempts[k];
    for (auto& d : out[k]) {
      batch.occupancy_histograms.push_back(std::move(d.nu));
      batch.first_site_loads.push_back(d.first_load);
      if (opt.keep_configurations) batch.configurations.push_back(std::move(d.configuration));
    }
  }
  return batch;
}

}  // namespace detail

// Uniform placements of K labeled particles on N sites, kept when every site
// holds >= b particles and at most m droplet sizes occur.  Refuses to run if
// the exact acceptance probability card(Omega)/N^K is below 1e-6 (checked
// whenever the exact count fits in the enumeration budget).
inline SampleBatch sample_rejection(const ModelParams& p, Index n, std::uint64_t seed,
                                    const SampleOptions& opt = {}) {
  try {
    const CountReport counts = card_omega(p, opt.threads);
    const double log_accept =
        counts.log_card_omega - static_cast<double>(p.K()) * std::log(static_cast<double>(p.N()));
    if (counts.card_omega == 0 || log_accept < std::log(kMinAcceptance)) {
      throw PreconditionError("sample_rejection: acceptance probability below 1e-6; "
                              "use the exact sampler");
    }
  } catch (const BudgetError&) {
    // Too large to count exactly; proceed without the guard.
  }
  const auto sites = static_cast<std::uint64_t>(p.N());
  auto fill = [&](RandomStream& rng, Index count, std::vector<detail::Draw>& out) {
    Index tries = 0;
    std::vector<Index> loads(static_cast<std::size_t>(p.N()));
    std::vector<Index> cfg(static_cast<std::size_t>(p.K()));
    while (static_cast<Index>(out.size()) < count) {
      ++tries;
      std::fill(loads.begin(), loads.end(), 0);
      for (auto& s : cfg) {
        s = static_cast<Index>(rng.below(sites));
        ++loads[static_cast<std::size_t>(s)];
      }
      if (*std::min_element(loads.begin(), loads.end()) < p.b()) continue;
      OccupancyVector nu = OccupancyVector::from_loads(loads);
      if (nu.support_size() > p.m()) continue;
      detail::Draw d{std::move(nu), loads[0], {}};
      if (opt.keep_configurations) d.configuration = cfg;
      out.push_back(std::move(d));
    }
    return tries;
  };
  SampleBatch batch = detail::run_blocks(p, n, seed, SampleMethod::rejection, opt, fill);
  batch.acceptance_rate =
      batch.attempts > 0 ? static_cast<double>(n) / static_cast<double>(batch.attempts) : 1.0;
  return batch;
}

// Stage 1 draws nu with probability card(Delta_nu)/card(Omega) from exact
// cumulative big-integer weights.  Stage 2 shuffles the multiset of site
// loads (uniform over the N!/prod nu_j! arrangements) and deals a uniform
// permutation of the particle labels into those loads (uniform over the
// K!/prod (j!)^{nu_j} fillings), giving a uniform element of Delta_nu.
inline SampleBatch sample_exact(const CountReport& counts, Index n, std::uint64_t seed,
                                const SampleOptions& opt = {}) {
  const ModelParams& p = counts.params;
  detail::require(counts.card_omega > 0, "sample_exact: empty configuration space");
  std::vector<BigInt> cumulative;
  cumulative.reserve(counts.atoms.size());
  BigInt run = 0;
  for (const auto& a : counts.atoms) {
    run += a.card_delta;
    cumulative.push_back(run);
  }
  auto fill = [&](RandomStream& rng, Index count, std::vector<detail::Draw>& out) {
    std::vector<Index> loads;
    std::vector<Index> labels(static_cast<std::size_t>(p.K()));
    for (Index i = 0; i < count; ++i) {
      const BigInt u = rng.below(counts.card_omega);
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const auto& nu = counts.atoms[static_cast<std::size_t>(it - cumulative.begin())].nu;

      loads.clear();
      for (const auto& [j, v] : nu.entries()) loads.insert(loads.end(), static_cast<std::size_t>(v), j);
      for (std::size_t a = loads.size(); a > 1; --a) {
        std::swap(loads[a - 1], loads[rng.below(a)]);
      }
      detail::Draw d{nu, loads[0], {}};
      if (opt.keep_configurations) {
        std::iota(labels.begin(), labels.end(), Index{0});
        for (std::size_t a = labels.size(); a > 1; --a) {
          std::swap(labels[a - 1], labels[rng.below(a)]);
        }
        d.configuration.assign(static_cast<std::size_t>(p.K()), 0);
        std::size_t pos = 0;
        for (std::size_t site = 0; site < loads.size(); ++site) {
          for (Index t = 0; t < loads[site]; ++t) {
            d.configuration[static_cast<std::size_t>(labels[pos++])] = static_cast<Index>(site);
          }
        }
      }
      out.push_back(std::move(d));
    }
    return count;
  };
  SampleBatch batch = detail::run_blocks(p, n, seed, SampleMethod::exact_two_stage, opt, fill);
  batch.acceptance_rate = 1.0;
  return batch;
}

inline SampleBatch sample_exact(const ModelParams& p, Index n, std::uint64_t seed,
                                const SampleOptions& opt = {}) {
  return sample_exact(card_omega(p, opt.threads), n, seed, opt);
}

// P_{N,b,m}(K_1 = j) = sum_nu P(nu) nu_j / N, by exchangeability of sites.
inline ProbMeasure marginal_K1_exact(const CountReport& counts) {
  const ModelParams& p = counts.params;
  ProbMeasure::ExactWeights w;
  for (const auto& a : counts.atoms) {
    const Rational prob(a.card_delta, counts.card_omega);
    for (const auto& [j, v] : a.nu.entries()) w[j] += prob * Rational(v, p.N());
  }
  return ProbMeasure::exact(p.b(), std::move(w));
}

// Empirical law of K_1 over a batch.
inline ProbMeasure marginal_K1_empirical(const SampleBatch& batch) {
  detail::require(!batch.first_site_loads.empty(), "marginal_K1_empirical: empty batch");
  std::map<Index, Index> freq;
  for (Index k : batch.first_site_loads) ++freq[k];
  ProbMeasure::ExactWeights w;
  const auto total = static_cast<Index>(batch.first_site_loads.size());
  for (const auto& [j, f] : freq) w.emplace(j, Rational(f, total));
  return ProbMeasure::exact(batch.params.b(), std::move(w));
}

struct Concentration {
  Index n_samples = 0;
  Index n_inside = 0;
  double fraction = 0.0;
};

// Fraction of exact samples whose theta_nu lies within eps of rho_{b,alpha_b(c)}.
inline Concentration empirical_theta_concentration(const CountReport& counts, Index n,
                                                   std::uint64_t seed, double epsilon,
                                                   const SampleOptions& opt = {}) {
  const ModelParams& p = counts.params;
  const PoissonTail rho(p.b(), solve_alpha(p.b(), p.c()).alpha);
  const SampleBatch batch = sample_exact(counts, n, seed, opt);
  // Membership depends only on nu; evaluate once per atom.
  std::map<OccupancyVector, bool> inside;
  for (const auto& a : counts.atoms) {
    inside.emplace(a.nu, in_ball(occupancy_to_measure(a.nu, p), rho, epsilon));
  }
  Concentration c;
  c.n_samples = n;
  for (const auto& nu : batch.occupancy_histograms) c.n_inside += inside.at(nu) ? 1 : 0;
  c.fraction = n > 0 ? static_cast<double>(c.n_inside) / static_cast<double>(n) : 0.0;
  return c;
}

}  // namespace droplet
