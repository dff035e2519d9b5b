// droplet: command-line front end.  Data goes to stdout (and to --out when
// given), logs to stderr.  Exit codes: 0 ok, 1 usage, 2 precondition,
// 3 budget, 4 report assertion failure.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "droplet/droplet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace droplet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitBudget = 3;
constexpr int kExitReport = 4;

struct Settings {
  int b = 1;
  std::string c = "2/1";
  Index N = 0;
  std::string n_list;
  double m_exp = MFunction{}.delta;
  bool no_m_cap = false;
  std::uint64_t seed = 1;
  Index n = 100000;
  unsigned threads = default_threads();
  std::string out;
  std::string format = "json";
  std::string config;

  std::string method;
  Index upto = -1;
  Index K = -1;
  std::string theta;
  std::string center;
  std::optional<double> alpha;
  double radius = 0.3;
  bool exact = false;
  bool mc = false;
};

// Shortest round-trip decimal, independent of the locale.
std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }
};

struct Result {
  json summary = json::object();
  std::vector<Table> tables;
  bool hard_failure = false;
};

// ---------------------------------------------------------------- helpers

Ratio ratio(const Settings& s) { return Ratio::parse(s.c); }

MFunction mfun(const Settings& s) { return MFunction{s.m_exp}; }

ModelParams params_for(const Settings& s, Index n) {
  const Ratio c = ratio(s);
  return s.no_m_cap ? ModelParams::uncapped(s.b, c, n) : ModelParams::with_m_function(s.b, c, n, mfun(s));
}

ModelParams single_params(const Settings& s) {
  detail::require(s.N > 0, "--N is required");
  return params_for(s, s.N);
}

std::vector<Index> parse_n_list(const Settings& s) {
  std::vector<Index> out;
  std::stringstream ss(s.n_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw PreconditionError("--N-list: bad entry '" + item + "'");
    }
  }
  detail::require(!out.empty(), "--N-list must name at least one N");
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

json params_json(const ModelParams& p) {
  return {{"b", p.b()}, {"c", p.c().str()}, {"N", p.N()}, {"K", p.K()}, {"m", p.m()}};
}

json alpha_json(const AlphaSolveReport& r) {
  return {{"alpha", r.alpha},         {"iterations", r.iterations},
          {"method", to_string(r.method)}, {"residual", r.residual},
          {"bracket_lo", r.bracket_lo}, {"bracket_hi", r.bracket_hi}};
}

PoissonTail equilibrium(const Settings& s) {
  return PoissonTail(s.b, solve_alpha(s.b, ratio(s)).alpha);
}

// Target measure for approx/ball: a JSON file if given, else the exact
// mean-c rationalization of rho_{b,alpha_b(c)}.
ProbMeasure exact_target(const Settings& s, const std::string& file) {
  if (!file.empty()) return measure_from_json(read_json_file(file));
  return rationalize_target(equilibrium(s), ratio(s)).measure;
}

// ---------------------------------------------------------------- commands

Result cmd_alpha(const Settings& s) {
  const Ratio c = ratio(s);
  AlphaSolveReport r;
  if (s.method.empty() || s.method == "bisect") {
    r = solve_alpha(s.b, c);
  } else {
    detail::require(s.b == 1, "--method fp-above/fp-below needs b = 1");
    if (s.method == "fp-above") {
      r = iterate_alpha1(c, IterationDirection::from_above);
    } else if (s.method == "fp-below") {
      r = iterate_alpha1(c, IterationDirection::from_below);
    } else {
      throw PreconditionError("--method must be bisect, fp-above or fp-below");
    }
  }
  Result out;
  out.summary = alpha_json(r);
  out.summary["b"] = s.b;
  out.summary["c"] = c.str();
  return out;
}

Result cmd_rho(const Settings& s) {
  const PoissonTail rho = equilibrium(s);
  const Index upto = s.upto >= 0 ? s.upto : rho.truncation();
  detail::require(upto >= s.b, "--upto must be >= b");
  Result out;
  out.summary = {{"b", s.b}, {"c", ratio(s).str()}, {"alpha", rho.alpha()},
                 {"truncation", rho.truncation()}, {"mean", rho.mean()}};
  Table t{"rho", {"j", "rho"}, {}};
  json comps = json::object();
  for (Index j = s.b; j <= upto; ++j) {
    t.rows.push_back({std::to_string(j), num(rho.weight(j))});
    comps[std::to_string(j)] = rho.weight(j);
  }
  out.summary["components"] = comps;
  out.tables.push_back(std::move(t));
  return out;
}

Result cmd_entropy(const Settings& s) {
  detail::require(!s.theta.empty(), "--theta file.json is required");
  const ProbMeasure theta = measure_from_json(read_json_file(s.theta));
  const Ratio c = ratio(s);
  const double astar = solve_alpha(s.b, c).alpha;
  const double a = s.alpha.value_or(astar);
  const EntropyValue r = relative_entropy(theta, PoissonTail(s.b, a));
  Result out;
  out.summary = {{"b", s.b}, {"c", c.str()}, {"alpha", a}, {"alpha_star", astar},
                 {"relative_entropy", r.value}, {"finite_support_used", r.finite_support_used}};
  const bool mean_c = theta.is_exact() ? theta.exact_mean() == c.exact()
                                       : std::abs(theta.mean() - c.value()) <= 1e-9;
  if (mean_c) {
    const GShift g = entropy_shift(theta, a, s.b, c);
    out.summary["shift"] = {{"g", g.g},
                            {"entropy_at_alpha", g.entropy_at_alpha},
                            {"entropy_at_star", g.entropy_at_star},
                            {"residual", g.residual}};
  }
  return out;
}

Result cmd_count(const Settings& s) {
  const ModelParams p = single_params(s);
  const CountReport r = card_omega(p, s.threads);
  Result out;
  out.summary = {{"params", params_json(p)},
                 {"card_omega", r.card_omega.str()},
                 {"log_card_omega", r.log_card_omega},
                 {"n_admissible", r.n_admissible}};
  if (p.c_value() > p.b()) out.summary["closed_form_per_site"] = card_omega_closed_form(p);
  if (p.m() < p.N()) {
    try {
      out.summary["card_omega_no_cap"] = card_omega(ModelParams::uncapped(p.b(), p.c(), p.N()), s.threads).card_omega.str();
    } catch (const BudgetError&) {
      out.summary["card_omega_no_cap"] = nullptr;
    }
  }
  json atoms = json::array();
  Table t{"atoms", {"nu_id", "nu", "card_delta"}, {}};
  for (std::size_t i = 0; i < r.atoms.size(); ++i) {
    atoms.push_back({{"nu", to_json(r.atoms[i].nu, p.b())}, {"card_delta", r.atoms[i].card_delta.str()}});
    t.rows.push_back({std::to_string(i), r.atoms[i].nu.str(), r.atoms[i].card_delta.str()});
  }
  out.summary["atoms"] = atoms;
  out.tables.push_back(std::move(t));
  return out;
}

Result cmd_stirling(const Settings& s) {
  detail::require(s.N > 0 && s.K >= 0, "--K and --N are required");
  const int b = s.b;
  detail::require(b >= 1, "stirling: b must be >= 1");
  const BigInt value = stirling2(s.K, s.N, b);
  Result out;
  out.summary = {{"K", s.K}, {"N", s.N}, {"b", b}, {"value", value.str()},
                 {"times_N_factorial", BigInt(FactorialTable(s.N)(s.N) * value).str()}};
  if (b == 1 && s.K > s.N) {
    out.summary["bender_log_asymptotic"] = bender_log_asymptotic(s.K, s.N);
    out.summary["log_value"] = log_big(value);
    out.summary["bender_residual_per_N"] = bender_residual(s.K, s.N);
  }
  return out;
}

Result cmd_lde(const Settings& s) {
  const auto ns = parse_n_list(s);
  Result out;
  Table t{"lde", {"N", "nu_id", "nu", "exact_logprob_over_N", "entropy", "residual", "zeta", "eta"}, {}};
  json levels = json::array();
  for (Index n : ns) {
    const std::vector<LDESweepLevel> lv{lde_level(params_for(s, n), s.alpha, s.threads)};
    for (const auto& level : lv) {
      levels.push_back({{"params", params_json(level.params)},
                        {"n_admissible", level.rows.size()},
                        {"max_abs_residual", level.max_abs_residual}});
      for (const auto& r : level.rows) {
        t.rows.push_back({std::to_string(r.N), std::to_string(r.nu_id), "\"" + r.nu.str() + "\"",
                          num(r.exact_logprob_over_N), num(r.entropy), num(r.residual), num(r.zeta),
                          num(r.eta)});
      }
    }
  }
  out.summary = {{"b", s.b}, {"c", ratio(s).str()}, {"levels", levels}};
  out.tables.push_back(std::move(t));
  return out;
}

Result cmd_ball(const Settings& s) {
  const auto ns = parse_n_list(s);
  detail::require(s.radius > 0.0, "--radius must be positive");
  const ProbMeasure center = exact_target(s, s.center);
  std::vector<ModelParams> ps;
  for (Index n : ns) ps.push_back(params_for(s, n));
  const auto rows = ball_infimum_limit(center, s.radius, ps, s.threads);
  Result out;
  Table t{"ball", {"N", "n_in_ball", "min_entropy", "log_prob_over_N", "equilibrium_ball_mass"}, {}};
  json arr = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const Rational mass = equilibrium_ball_mass(ps[i], s.radius);
    json row = {{"N", r.N}, {"n_in_ball", r.n_in_ball}, {"equilibrium_ball_mass", to_fraction_string(mass)}};
    row["min_entropy"] = r.min_entropy ? json(*r.min_entropy) : json(nullptr);
    row["log_prob_over_N"] = r.log_prob_over_N ? json(*r.log_prob_over_N) : json(nullptr);
    arr.push_back(row);
    t.rows.push_back({std::to_string(r.N), std::to_string(r.n_in_ball),
                      r.min_entropy ? num(*r.min_entropy) : "", r.log_prob_over_N ? num(*r.log_prob_over_N) : "",
                      num(to_double(mass))});
  }
  out.summary = {{"radius", s.radius}, {"center", to_json(center)}, {"rows", arr}};
  out.tables.push_back(std::move(t));
  return out;
}

json approx_json(const ApproximationReport& r, const ProbMeasure& theta) {
  json j = {{"params", params_json(r.params)},
            {"j_star", r.j_star},
            {"nu_j_star", r.nu_j_star.str()},
            {"nu_j_star_plus_one", r.nu_j_star_plus_one.str()},
            {"beta_m", to_fraction_string(r.beta_m)},
            {"gamma_m", to_fraction_string(r.gamma_m)},
            {"above_threshold", r.above_threshold()}};
  if (r.above_threshold()) {
    j["nu"] = to_json(*r.nu, r.params.b());
    j["prohorov_to_target"] = r.prohorov_to_target;
    j["entropy_gap"] = r.entropy_gap;
    j["lemma_b3_bounds"] = lemma_b3_bounds(r, theta);
  }
  return j;
}

Result cmd_approx(const Settings& s) {
  const auto ns = parse_n_list(s);
  const ProbMeasure theta = exact_target(s, s.theta);
  std::vector<ApproximationReport> reports;
  for (Index n : ns) reports.push_back(build_approximation(theta, params_for(s, n)));
  Result out;
  json arr = json::array();
  Table t{"approx", {"N", "m", "above_threshold", "prohorov_to_target", "entropy_gap", "lemma_b3_bounds"}, {}};
  for (const auto& r : reports) {
    arr.push_back(approx_json(r, theta));
    const bool ok = r.above_threshold();
    t.rows.push_back({std::to_string(r.params.N()), std::to_string(r.params.m()), ok ? "1" : "0",
                      ok ? num(r.prohorov_to_target) : "", ok ? num(r.entropy_gap) : "",
                      ok ? (lemma_b3_bounds(r, theta) ? "1" : "0") : ""});
  }
  const auto thr = detect_threshold(reports);
  out.summary = {{"target", to_json(theta)}, {"reports", arr}};
  out.summary["threshold_N"] = thr ? json(*thr) : json(nullptr);
  out.tables.push_back(std::move(t));
  return out;
}

Result cmd_sample(const Settings& s) {
  const ModelParams p = single_params(s);
  const bool reject = s.method == "reject";
  detail::require(s.method.empty() || s.method == "exact" || reject, "--method must be exact or reject");
  const SampleOptions opt{.threads = s.threads};
  const SampleBatch batch = reject ? sample_rejection(p, s.n, s.seed, opt) : sample_exact(p, s.n, s.seed, opt);
  std::map<OccupancyVector, Index> freq;
  for (const auto& nu : batch.occupancy_histograms) ++freq[nu];
  json hist = json::array();
  for (const auto& [nu, f] : freq) hist.push_back({{"nu", to_json(nu, p.b())}, {"count", f}});
  Result out;
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(batch.digest()));
  out.summary = {{"params", params_json(p)},       {"seed", s.seed},
                 {"n_samples", batch.n_samples},   {"method", to_string(batch.method)},
                 {"attempts", batch.attempts},     {"acceptance_rate", batch.acceptance_rate},
                 {"digest", digest},               {"histogram", hist}};
  Table t{"samples", {"sample", "nu", "K1"}, {}};
  for (std::size_t i = 0; i < batch.occupancy_histograms.size(); ++i) {
    t.rows.push_back({std::to_string(i), "\"" + batch.occupancy_histograms[i].str() + "\"",
                      std::to_string(batch.first_site_loads[i])});
  }
  out.tables.push_back(std::move(t));
  return out;
}

Result cmd_marginal(const Settings& s) {
  detail::require(!(s.exact && s.mc), "choose one of --exact and --mc");
  const ModelParams p = single_params(s);
  const CountReport counts = card_omega(p, s.threads);
  const bool mc = s.mc;
  const ProbMeasure m =
      mc ? marginal_K1_empirical(sample_exact(counts, s.n, s.seed, {.threads = s.threads}))
         : marginal_K1_exact(counts);
  Result out;
  Table t{"marginal", {"j", "probability"}, {}};
  for (const auto& [j, x] : m.weights()) {
    t.rows.push_back({std::to_string(j), m.is_exact() ? to_fraction_string(m.exact_weight(j)) : num(x)});
  }
  out.summary = {{"params", params_json(p)}, {"mode", mc ? "mc" : "exact"}, {"measure", to_json(m)}};
  if (p.c_value() > p.b()) out.summary["tv_to_rho"] = prohorov_distance(m, equilibrium(s));
  if (mc) {
    out.summary["seed"] = s.seed;
    out.summary["n_samples"] = s.n;
  }
  out.tables.push_back(std::move(t));
  return out;
}

// Full verification battery.  Identities are hard assertions; trends are
// recorded but do not fail the run.
Result cmd_report(const Settings& s) {
  const auto ns = parse_n_list(s);
  const Ratio c = ratio(s);
  const int b = s.b;
  Result out;
  json sections = json::object();
  auto hard = [&](json& sec, const std::string& name, bool ok) {
    sec["assertions"][name] = ok;
    if (!ok) {
      out.hard_failure = true;
      std::cerr << "report: assertion failed: " << name << "\n";
    }
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    json sec = json::object();
    try {
      body(sec);
    } catch (const std::exception& e) {
      sec["error"] = e.what();
      out.hard_failure = true;
      std::cerr << "report: section " << name << " failed: " << e.what() << "\n";
    }
    sections[name] = sec;
  };

  const double astar = solve_alpha(b, c).alpha;

  guarded("alpha", [&](json& sec) {
    sec = alpha_json(solve_alpha(b, c));
    if (b == 1) {
      const double hi = iterate_alpha1(c, IterationDirection::from_above).alpha;
      const double lo = iterate_alpha1(c, IterationDirection::from_below).alpha;
      hard(sec, "three_way_agreement", std::abs(hi - astar) <= 1e-12 && std::abs(lo - astar) <= 1e-12);
    }
    hard(sec, "bounds", b == 0 ? astar == c.value() : (c.value() - b < astar && astar <= c.value()));
  });

  std::vector<CountReport> counts;
  guarded("counts", [&](json& sec) {
    Table t{"counts", {"N", "K", "m", "n_admissible", "card_omega", "log_card_omega_over_N", "closed_form", "eta"}, {}};
    bool stirling_ok = true;
    for (Index n : ns) {
      const ModelParams p = params_for(s, n);
      counts.push_back(card_omega(p, s.threads));
      const auto& r = counts.back();
      const double per_site = r.log_card_omega / static_cast<double>(n);
      const double closed = card_omega_closed_form(p);
      t.rows.push_back({std::to_string(n), std::to_string(p.K()), std::to_string(p.m()),
                        std::to_string(r.n_admissible), r.card_omega.str(), num(per_site), num(closed),
                        num(per_site - closed)});
      if (b >= 1) {
        const ModelParams free = ModelParams::uncapped(b, c, n);
        const BigInt via_stirling = FactorialTable(n)(n) * stirling2(free.K(), n, b);
        stirling_ok = stirling_ok && via_stirling == card_omega(free, s.threads).card_omega;
      }
    }
    if (b >= 1) hard(sec, "stirling_identity", stirling_ok);
    out.tables.push_back(std::move(t));
  });

  guarded("lde", [&](json& sec) {
    const auto star = lde_sweep(b, c, ns, mfun(s), std::nullopt, s.threads);
    const auto low = lde_sweep(b, c, ns, mfun(s), 0.5 * astar, s.threads);
    Table t{"lde", {"N", "nu_id", "nu", "exact_logprob_over_N", "entropy", "residual", "zeta", "eta"}, {}};
    double split = 0.0;
    double inv = 0.0;
    json path = json::array();
    for (std::size_t l = 0; l < star.size(); ++l) {
      path.push_back(star[l].max_abs_residual);
      for (std::size_t i = 0; i < star[l].rows.size(); ++i) {
        const auto& r = star[l].rows[i];
        const auto& q = low[l].rows[i];
        split = std::max({split, std::abs(r.residual - (r.zeta - r.eta)), std::abs(r.residual - (q.zeta - q.eta))});
        inv = std::max({inv, std::abs(r.zeta - q.zeta), std::abs(r.eta - q.eta)});
        t.rows.push_back({std::to_string(r.N), std::to_string(r.nu_id), "\"" + r.nu.str() + "\"",
                          num(r.exact_logprob_over_N), num(r.entropy), num(r.residual), num(r.zeta),
                          num(r.eta)});
      }
    }
    sec["max_abs_residual"] = path;
    sec["decomposition_residual"] = split;
    sec["alpha_invariance_residual"] = inv;
    sec["trend_last_below_first"] = path.back().get<double>() < path.front().get<double>();
    hard(sec, "decomposition", split < 1e-9);
    hard(sec, "alpha_invariance", inv < 1e-9);
    out.tables.push_back(std::move(t));
  });

  guarded("equilibrium", [&](json& sec) {
    const PoissonTail rho(b, astar);
    Table t{"equilibrium", {"N", "ball_mass_0.3", "k1_tv"}, {}};
    double prev_mass = -1.0;
    double prev_tv = 2.0;
    bool mass_trend = true;
    bool tv_trend = true;
    for (const auto& r : counts) {
      const double mass = to_double(equilibrium_ball_mass(r, 0.3));
      const double tv = prohorov_distance(marginal_K1_exact(r), rho);
      mass_trend = mass_trend && mass >= prev_mass;
      tv_trend = tv_trend && tv < prev_tv;
      prev_mass = mass;
      prev_tv = tv;
      t.rows.push_back({std::to_string(r.params.N()), num(mass), num(tv)});
    }
    sec["ball_mass_non_decreasing"] = mass_trend;
    sec["k1_tv_decreasing"] = tv_trend;
    out.tables.push_back(std::move(t));
  });

  guarded("approximation", [&](json& sec) {
    const auto target = rationalize_target(PoissonTail(b, astar), c);
    Table t{"approximation", {"N", "m", "above_threshold", "prohorov_to_target", "entropy_gap"}, {}};
    std::vector<ApproximationReport> reports;
    bool bounds = true;
    for (Index n : ns) {
      const ModelParams p = params_for(s, n);
      if (p.m() < 2) continue;
      reports.push_back(build_approximation(target.measure, p));
      const auto& r = reports.back();
      if (r.above_threshold()) bounds = bounds && lemma_b3_bounds(r, target.measure);
      t.rows.push_back({std::to_string(n), std::to_string(p.m()), r.above_threshold() ? "1" : "0",
                        r.above_threshold() ? num(r.prohorov_to_target) : "",
                        r.above_threshold() ? num(r.entropy_gap) : ""});
    }
    const auto thr = detect_threshold(reports);
    sec["threshold_N"] = thr ? json(*thr) : json(nullptr);
    hard(sec, "lemma_b3_bounds", bounds);
    out.tables.push_back(std::move(t));
  });

  if (b == 1) {
    guarded("bender", [&](json& sec) {
      Table t{"bender", {"K", "N", "residual_per_N"}, {}};
      for (Index n : ns) {
        const Index k = ModelParams::uncapped(b, c, n).K();
        if (k <= n) continue;
        t.rows.push_back({std::to_string(k), std::to_string(n), num(bender_residual(k, n))});
      }
      sec["rows"] = t.rows.size();
      out.tables.push_back(std::move(t));
    });
  }

  guarded("sampling", [&](json& sec) {
    const auto& r = counts.front();
    const SampleBatch batch = sample_exact(r, s.n, s.seed, {.threads = s.threads});
    std::map<OccupancyVector, Index> freq;
    for (const auto& nu : batch.occupancy_histograms) ++freq[nu];
    double stat = 0.0;
    for (const auto& a : r.atoms) {
      const double e = static_cast<double>(s.n) * to_double(Rational(a.card_delta, r.card_omega));
      const double o = static_cast<double>(freq[a.nu]);
      stat += (o - e) * (o - e) / e;
    }
    sec["N"] = r.params.N();
    sec["n_samples"] = s.n;
    sec["chi_square"] = stat;
    sec["dof"] = r.atoms.size() - 1;
  });

  out.summary = {{"b", b}, {"c", c.str()}, {"N_list", ns}, {"m_exp", s.m_exp}, {"seed", s.seed},
                 {"sections", sections}, {"passed", !out.hard_failure}};
  return out;
}

// ---------------------------------------------------------------- plumbing

// Turns a flat JSON config object into "--key value" tokens.
std::vector<std::string> config_tokens(const std::string& path) {
  const json cfg = read_json_file(path);
  if (!cfg.is_object()) throw MalformedInput(path + ": config must be a flat JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_string()) {
      out.insert(out.end(), {flag, value.get<std::string>()});
    } else if (value.is_number_integer()) {
      out.insert(out.end(), {flag, std::to_string(value.get<long long>())});
    } else if (value.is_number()) {
      out.insert(out.end(), {flag, num(value.get<double>())});
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      out.insert(out.end(), {flag, joined});
    } else {
      throw MalformedInput(path + ": unsupported value for '" + key + "'");
    }
  }
  return out;
}

json settings_json(const Settings& s) {
  json j = {{"b", s.b},           {"c", s.c},           {"N", s.N},
            {"N-list", s.n_list}, {"m-exp", s.m_exp},   {"no-m-cap", s.no_m_cap},
            {"seed", s.seed},     {"n", s.n},           {"threads", s.threads},
            {"format", s.format}, {"method", s.method}, {"upto", s.upto},
            {"K", s.K},           {"theta", s.theta},   {"center", s.center},
            {"radius", s.radius}, {"exact", s.exact},   {"mc", s.mc}};
  j["alpha"] = s.alpha ? json(*s.alpha) : json(nullptr);
  return j;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw PreconditionError("cannot write " + path.string());
  f << text;
}

void emit(const std::string& command, const Result& r, const Settings& s, const std::string& cmdline,
          double wall_seconds) {
  const bool csv = s.format == "csv";
  if (csv && !r.tables.empty()) {
    std::cout << r.tables.front().csv();
  } else {
    std::cout << r.summary.dump(2) << "\n";
  }
  if (s.out.empty()) return;
  const fs::path dir(s.out);
  fs::create_directories(dir);
  std::vector<std::string> files{command + ".json"};
  write_file(dir / files.back(), r.summary.dump(2) + "\n");
  for (const auto& t : r.tables) {
    files.push_back(t.name + ".csv");
    write_file(dir / files.back(), t.csv());
  }
  const json manifest = {{"command_line", cmdline},
                         {"config", settings_json(s)},
                         {"seed", s.seed},
                         {"git_describe", DROPLET_GIT_DESCRIBE},
                         {"wall_time_seconds", wall_seconds},
                         {"outputs", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cerr << "wrote " << files.size() << " files and manifest.json to " << dir.string() << "\n";
}

void add_common(CLI::App* sub, Settings& s) {
  sub->add_option("--b", s.b, "Minimum droplet size b");
  sub->add_option("--c", s.c, "Mean droplet size c as X/Y");
  sub->add_option("--N", s.N, "Number of sites");
  sub->add_option("--N-list", s.n_list, "Comma-separated N values");
  sub->add_option("--m-exp", s.m_exp, "Exponent delta in m(N) = ceil(N^delta)");
  sub->add_flag("--no-m-cap", s.no_m_cap, "Drop the support cap (m = N)");
  sub->add_option("--seed", s.seed, "Random seed");
  sub->add_option("--n", s.n, "Number of samples");
  sub->add_option("--threads", s.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", s.out, "Directory for data files and manifest");
  sub->add_option("--format", s.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--config", s.config, "Flat JSON object of flag values");
}

}  // namespace

int main(int argc, char** argv) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string cmdline = argv[0];
  for (const auto& a : args) cmdline += " " + a;

  // Config values go right after the subcommand so later flags win.
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") {
        const auto tokens = config_tokens(args[i + 1]);
        args.insert(args.begin() + 1, tokens.begin(), tokens.end());
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        const auto tokens = config_tokens(args[i].substr(9));
        args.insert(args.begin() + 1, tokens.begin(), tokens.end());
        break;
      }
    }
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  }

  CLI::App app{"Exact combinatorics and large-deviation checks for the droplet model"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  Settings s;
  std::map<std::string, std::function<Result(const Settings&)>> handlers;
  auto sub = [&](const std::string& name, const std::string& help, std::function<Result(const Settings&)> fn) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, s);
    handlers[name] = std::move(fn);
    return cmd;
  };

  sub("alpha", "Solve gamma_b(alpha) = c", cmd_alpha)
      ->add_option("--method", s.method, "bisect, fp-above or fp-below");
  sub("rho", "Components of rho_{b,alpha_b(c)}", cmd_rho)->add_option("--upto", s.upto, "Last j");
  {
    auto* cmd = sub("entropy", "Relative entropy of a measure against the family", cmd_entropy);
    cmd->add_option("--theta", s.theta, "Measure JSON file");
    cmd->add_option("--alpha", s.alpha, "Reference alpha (default alpha_b(c))");
  }
  sub("count", "Exact card(Omega) and its atoms", cmd_count);
  {
    auto* cmd = sub("stirling", "Exact S_b(K,N) and the Bender residual", cmd_stirling);
    cmd->add_option("--K", s.K, "Number of particles");
  }
  sub("lde", "Local large-deviation residuals", cmd_lde)->add_option("--alpha", s.alpha, "Split alpha");
  {
    auto* cmd = sub("ball", "Ball infimum path and equilibrium ball mass", cmd_ball);
    cmd->add_option("--center", s.center, "Center measure JSON file (default rho)");
    cmd->add_option("--radius", s.radius, "Ball radius");
  }
  sub("approx", "Approximating occupancy vectors for a mean-c target", cmd_approx)
      ->add_option("--theta", s.theta, "Target measure JSON file (default rho)");
  sub("sample", "Draw configurations", cmd_sample)->add_option("--method", s.method, "exact or reject");
  {
    auto* cmd = sub("marginal", "Law of the load at site 1", cmd_marginal);
    cmd->add_flag("--exact", s.exact, "Exact marginal (default)");
    cmd->add_flag("--mc", s.mc, "Monte Carlo marginal from --n exact samples");
  }
  sub("report", "Full verification battery", cmd_report);

  try {
    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "report" && s.n_list.empty()) s.n_list = "2,4,8,12";
  if (name == "report" && s.n == 100000) s.n = 20000;
  try {
    const Result r = handlers.at(name)(s);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(name, r, s, cmdline, wall);
    if (r.hard_failure) return kExitReport;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
