#pragma once

// Model parameters, occupancy vectors and probability measures on {b, b+1, ...}.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "droplet/bigint.hpp"
#include "droplet/error.hpp"

namespace droplet {

// Positive rational x/y in lowest terms.  Used for the mean droplet size c.
struct Ratio {
  std::int64_t num = 1;
  std::int64_t den = 1;

  static Ratio make(std::int64_t num, std::int64_t den) {
    detail::require(num > 0 && den > 0, "Ratio: numerator and denominator must be positive");
    const auto g = std::gcd(num, den);
    return {num / g, den / g};
  }

  static Ratio parse(const std::string& text) {
    const Rational q = parse_fraction(text);
    detail::require(q > 0, "Ratio: must be positive: " + text);
    return make(boost::multiprecision::numerator(q).convert_to<std::int64_t>(),
                boost::multiprecision::denominator(q).convert_to<std::int64_t>());
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Rational exact() const { return Rational(num, den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend bool operator==(const Ratio&, const Ratio&) = default;
};

// m(N) = ceil(N^delta).
struct MFunction {
  double delta = 0.45;

  Index operator()(Index n) const {
    detail::require(delta > 0.0 && delta < 0.5, "MFunction: delta must lie in (0, 1/2)");
    detail::require(n >= 1, "MFunction: N must be positive");
    // Guard against pow() landing a hair above an exact integer.
    return static_cast<Index>(std::ceil(std::pow(static_cast<double>(n), delta) - 1e-12));
  }
};

// One instance (b, c = x/y, N, K = Nc, m) of the droplet model.
class ModelParams {
 public:
  // m is clamped to N: more than N distinct droplet sizes is impossible, so
  // any larger cap describes the same model.
  static ModelParams make(int b, Ratio c, Index n_sites, Index m) {
    detail::require(c.num > static_cast<std::int64_t>(b) * c.den, "ModelParams: need c > b");
    return build(b, c, n_sites, m);
  }

  // Also admits the boundary c == b, where every site holds exactly b
  // particles.  Only the counting layer accepts such instances; anything
  // that needs alpha_b(c) still rejects them.
  static ModelParams combinatorial(int b, Ratio c, Index n_sites, Index m) {
    detail::require(c.num >= static_cast<std::int64_t>(b) * c.den, "ModelParams: need c >= b");
    return build(b, c, n_sites, m);
  }

  static ModelParams with_m_function(int b, Ratio c, Index n_sites, MFunction mf = {}) {
    return make(b, c, n_sites, mf(n_sites));
  }

  static ModelParams uncapped(int b, Ratio c, Index n_sites) {
    return make(b, c, n_sites, n_sites);
  }

  int b() const { return b_; }
  Ratio c() const { return c_; }
  Index N() const { return n_; }
  Index K() const { return k_; }
  Index m() const { return m_; }
  double c_value() const { return c_.value(); }

  // Largest droplet size any admissible configuration can contain.
  Index max_droplet() const { return k_ - (n_ - 1) * b_; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelParams() = default;

  static ModelParams build(int b, Ratio c, Index n_sites, Index m) {
    detail::require(b >= 0, "ModelParams: b must be >= 0");
    detail::require(n_sites >= 1, "ModelParams: N must be positive");
    detail::require(n_sites % c.den == 0,
                    "ModelParams: N must be a multiple of the denominator of c");
    detail::require(m >= 1, "ModelParams: m must be positive");
    ModelParams p;
    p.b_ = b;
    p.c_ = c;
    p.n_ = n_sites;
    p.k_ = n_sites / c.den * c.num;
    p.m_ = std::min(m, n_sites);
    return p;
  }

  int b_ = 0;
  Ratio c_;
  Index n_ = 1;
  Index k_ = 1;
  Index m_ = 1;
};

// Admissible N values: multiples of y.
inline std::vector<Index> admissible_sizes(Ratio c, const std::vector<Index>& multipliers) {
  std::vector<Index> out;
  out.reserve(multipliers.size());
  for (Index k : multipliers) out.push_back(k * c.den);
  return out;
}

// Sparse occupancy histogram nu: droplet size j -> number of sites of that size.
class OccupancyVector {
 public:
  using Entries = std::map<Index, Index>;

  OccupancyVector() = default;

  explicit OccupancyVector(Entries entries) : entries_(std::move(entries)) {
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->first < 0 || it->second < 0) {
        throw MalformedInput("OccupancyVector: negative size or count");
      }
      it = it->second == 0 ? entries_.erase(it) : std::next(it);
    }
  }

  OccupancyVector(std::initializer_list<Entries::value_type> init) : OccupancyVector(Entries(init)) {}

  // Histogram of a list of site loads.
  static OccupancyVector from_loads(const std::vector<Index>& loads) {
    Entries e;
    for (Index x : loads) ++e[x];
    return OccupancyVector(std::move(e));
  }

  const Entries& entries() const { return entries_; }
  Index count(Index j) const {
    const auto it = entries_.find(j);
    return it == entries_.end() ? 0 : it->second;
  }
  // |nu|_+
  Index support_size() const { return static_cast<Index>(entries_.size()); }
  Index sites() const {
    Index s = 0;
    for (const auto& [j, v] : entries_) s += v;
    return s;
  }
  Index particles() const {
    Index s = 0;
    for (const auto& [j, v] : entries_) s += j * v;
    return s;
  }

  bool admissible(const ModelParams& p) const {
    if (entries_.empty()) return false;
    if (entries_.begin()->first < p.b()) return false;
    if (entries_.rbegin()->first > p.max_droplet()) return false;
    return sites() == p.N() && particles() == p.K() && support_size() <= p.m();
  }

  void validate(const ModelParams& p) const {
    if (entries_.empty()) throw MalformedInput("OccupancyVector: empty");
    if (entries_.begin()->first < p.b()) {
      throw MalformedInput("OccupancyVector: droplet size below b");
    }
    if (sites() != p.N()) throw MalformedInput("OccupancyVector: sum of nu_j != N");
    if (particles() != p.K()) throw MalformedInput("OccupancyVector: sum of j*nu_j != K");
    if (support_size() > p.m()) throw MalformedInput("OccupancyVector: |nu|_+ > m");
  }

  std::string str() const {
    std::string s = "{";
    for (const auto& [j, v] : entries_) {
      if (s.size() > 1) s += ",";
      s += std::to_string(j) + ":" + std::to_string(v);
    }
    return s + "}";
  }

  friend bool operator==(const OccupancyVector&, const OccupancyVector&) = default;
  friend auto operator<=>(const OccupancyVector&, const OccupancyVector&) = default;

 private:
  Entries entries_;
};

enum class Representation { exact, floating };

// Finitely supported probability measure on {b, b+1, ...}.  Exact measures
// keep rational weights; floating measures keep doubles.
class ProbMeasure {
 public:
  using ExactWeights = std::map<Index, Rational>;
  using FloatWeights = std::map<Index, double>;

  static constexpr double kFloatSumTol = 1e-12;

  static ProbMeasure exact(int b, ExactWeights w) {
    ProbMeasure m(b, Representation::exact);
    Rational total = 0;
    for (const auto& [j, q] : w) {
      if (q < 0) throw MalformedInput("ProbMeasure: negative weight");
      if (q == 0) continue;
      if (j < b) throw MalformedInput("ProbMeasure: support below b");
      total += q;
      m.exact_.emplace(j, q);
    }
    if (total != 1) throw MalformedInput("ProbMeasure: weights do not sum to 1");
    for (const auto& [j, q] : m.exact_) m.approx_.emplace(j, to_double(q));
    return m;
  }

  static ProbMeasure floating(int b, FloatWeights w) {
    ProbMeasure m(b, Representation::floating);
    double total = 0.0;
    for (const auto& [j, x] : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw MalformedInput("ProbMeasure: weight must be finite and >= 0");
      }
      if (x == 0.0) continue;
      if (j < b) throw MalformedInput("ProbMeasure: support below b");
      total += x;
      m.approx_.emplace(j, x);
    }
    if (std::abs(total - 1.0) > kFloatSumTol) {
      throw MalformedInput("ProbMeasure: weights do not sum to 1");
    }
    return m;
  }

  static ProbMeasure point_mass(int b, Index j) {
    return exact(b, {{j, Rational(1)}});
  }

  int floor() const { return b_; }
  Representation representation() const { return rep_; }
  bool is_exact() const { return rep_ == Representation::exact; }

  const FloatWeights& weights() const { return approx_; }
  const ExactWeights& exact_weights() const {
    detail::require(is_exact(), "ProbMeasure: exact weights of a floating measure");
    return exact_;
  }

  double weight(Index j) const {
    const auto it = approx_.find(j);
    return it == approx_.end() ? 0.0 : it->second;
  }
  Rational exact_weight(Index j) const {
    const auto& w = exact_weights();
    const auto it = w.find(j);
    return it == w.end() ? Rational(0) : it->second;
  }

  Index min_support() const { return approx_.begin()->first; }
  Index max_support() const { return approx_.rbegin()->first; }

  double mean() const {
    if (is_exact()) return to_double(exact_mean());
    double s = 0.0;
    for (const auto& [j, x] : approx_) s += static_cast<double>(j) * x;
    return s;
  }
  Rational exact_mean() const {
    Rational s = 0;
    for (const auto& [j, q] : exact_weights()) s += q * j;
    return s;
  }

  ProbMeasure to_floating() const {
    ProbMeasure m(b_, Representation::floating);
    m.approx_ = approx_;
    return m;
  }

 private:
  ProbMeasure(int b, Representation rep) : b_(b), rep_(rep) {}

  int b_;
  Representation rep_;
  ExactWeights exact_;
  FloatWeights approx_;  // always populated; mirrors exact_ in exact mode
};

// theta_j = nu_j / N.
inline ProbMeasure occupancy_to_measure(const OccupancyVector& nu, const ModelParams& p) {
  nu.validate(p);
  ProbMeasure::ExactWeights w;
  for (const auto& [j, v] : nu.entries()) w.emplace(j, Rational(v, p.N()));
  return ProbMeasure::exact(p.b(), std::move(w));
}

// Inverse of occupancy_to_measure: nu_j = N * theta_j.
inline OccupancyVector measure_to_occupancy(const ProbMeasure& theta, Index n_sites) {
  OccupancyVector::Entries e;
  for (const auto& [j, q] : theta.exact_weights()) {
    const Rational v = q * n_sites;
    if (boost::multiprecision::denominator(v) != 1) {
      throw MalformedInput("measure_to_occupancy: N*theta_j not an integer");
    }
    e.emplace(j, boost::multiprecision::numerator(v).convert_to<Index>());
  }
  return OccupancyVector(std::move(e));
}

inline Rational exact_total_variation(const ProbMeasure& mu, const ProbMeasure& nu) {
  Rational s = 0;
  const auto& a = mu.exact_weights();
  const auto& b = nu.exact_weights();
  for (const auto& [j, q] : a) s += boost::multiprecision::abs(q - nu.exact_weight(j));
  for (const auto& [j, q] : b) {
    if (!a.contains(j)) s += q;
  }
  return s / 2;
}

// Levy-Prohorov distance on the integer lattice.  For distances below 1 the
// eps-enlargement of a set of integers is the set itself, so the metric
// coincides with total variation; the value is capped at 1.
inline double prohorov_distance(const ProbMeasure& mu, const ProbMeasure& nu) {
  if (mu.is_exact() && nu.is_exact()) {
    return std::min(1.0, to_double(exact_total_variation(mu, nu)));
  }
  double s = 0.0;
  for (const auto& [j, x] : mu.weights()) s += std::abs(x - nu.weight(j));
  for (const auto& [j, x] : nu.weights()) {
    if (!mu.weights().contains(j)) s += x;
  }
  return std::min(1.0, s / 2.0);
}

// theta^(n) = ((n-c)/(n-beta)) theta + ((c-beta)/(n-beta)) delta_n, which has
// mean exactly c but converges weakly to theta (mean beta) as n grows.
inline ProbMeasure escape_sequence(const ProbMeasure& theta, Ratio c, Index n) {
  const Rational cq = c.exact();
  detail::require(Rational(n) > cq, "escape_sequence: need n > c");
  if (theta.is_exact()) {
    const Rational beta = theta.exact_mean();
    detail::require(beta < cq, "escape_sequence: need mean(theta) < c");
    const Rational denom = Rational(n) - beta;
    const Rational keep = (Rational(n) - cq) / denom;
    ProbMeasure::ExactWeights w;
    for (const auto& [j, q] : theta.exact_weights()) w[j] += keep * q;
    w[n] += (cq - beta) / denom;
    return ProbMeasure::exact(theta.floor(), std::move(w));
  }
  const double beta = theta.mean();
  const double cv = c.value();
  detail::require(beta < cv, "escape_sequence: need mean(theta) < c");
  const double nd = static_cast<double>(n);
  const double keep = (nd - cv) / (nd - beta);
  ProbMeasure::FloatWeights w;
  for (const auto& [j, x] : theta.weights()) w[j] += keep * x;
  w[n] += (cv - beta) / (nd - beta);
  return ProbMeasure::floating(theta.floor(), std::move(w));
}

// Rescales an exact measure with mean beta != c to mean exactly c by mixing
// in a single atom: a far atom at `far` (> c) when beta < c, or the lowest
// support point (< c) when beta > c.  Returns the adjusted measure.
inline ProbMeasure adjust_mean(const ProbMeasure& theta, Ratio c, Index far) {
  const Rational cq = c.exact();
  const Rational beta = theta.exact_mean();
  if (beta == cq) return theta;
  if (beta < cq) return escape_sequence(theta, c, far);
  const Index low = theta.min_support();
  detail::require(Rational(low) < cq, "adjust_mean: no support point below c");
  const Rational denom = beta - low;
  ProbMeasure::ExactWeights w;
  for (const auto& [j, q] : theta.exact_weights()) w[j] += q * (cq - low) / denom;
  w[low] += (beta - cq) / denom;
  return ProbMeasure::exact(theta.floor(), std::move(w));
}

}  // namespace droplet
