#pragma once

// {"b": int, "entries": {"j": "num/den" | float}} for measures and occupancy
// vectors.  Exact weights are written as "num/den" strings, floating weights
// as JSON numbers.

#include <string>

#include <nlohmann/json.hpp>

#include "droplet/model.hpp"

namespace droplet {

inline nlohmann::json to_json(const ProbMeasure& m) {
  nlohmann::json entries = nlohmann::json::object();
  if (m.is_exact()) {
    for (const auto& [j, q] : m.exact_weights()) entries[std::to_string(j)] = to_fraction_string(q);
  } else {
    for (const auto& [j, x] : m.weights()) entries[std::to_string(j)] = x;
  }
  return {{"b", m.floor()}, {"entries", entries}};
}

inline nlohmann::json to_json(const OccupancyVector& nu, int b) {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [j, v] : nu.entries()) entries[std::to_string(j)] = std::to_string(v) + "/1";
  return {{"b", b}, {"entries", entries}};
}

namespace detail {

inline Index parse_key(const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(key, &used);
    if (used != key.size()) throw MalformedInput("bad support key '" + key + "'");
    return static_cast<Index>(v);
  } catch (const std::logic_error&) {
    throw MalformedInput("bad support key '" + key + "'");
  }
}

inline void check_shape(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("b") || !j.contains("entries") ||
      !j.at("b").is_number_integer() || !j.at("entries").is_object()) {
    throw MalformedInput(R"(expected {"b": int, "entries": {...}})");
  }
}

}  // namespace detail

// Exact if every entry is a "num/den" string (or an integer), floating if
// every entry is a JSON number with a fractional part; mixing is rejected.
inline ProbMeasure measure_from_json(const nlohmann::json& j) {
  detail::check_shape(j);
  const int b = j.at("b").get<int>();
  bool any_string = false;
  bool any_float = false;
  for (const auto& [key, value] : j.at("entries").items()) {
    if (value.is_string()) {
      any_string = true;
    } else if (value.is_number_float()) {
      any_float = true;
    } else if (!value.is_number_integer()) {
      throw MalformedInput("measure entry '" + key + "' is neither a fraction nor a number");
    }
  }
  if (any_string && any_float) throw MalformedInput("measure mixes exact and float entries");
  if (any_float) {
    ProbMeasure::FloatWeights w;
    for (const auto& [key, value] : j.at("entries").items()) {
      w[detail::parse_key(key)] = value.get<double>();
    }
    return ProbMeasure::floating(b, std::move(w));
  }
  ProbMeasure::ExactWeights w;
  for (const auto& [key, value] : j.at("entries").items()) {
    w[detail::parse_key(key)] =
        value.is_string() ? parse_fraction(value.get<std::string>()) : Rational(value.get<long long>());
  }
  return ProbMeasure::exact(b, std::move(w));
}

inline OccupancyVector occupancy_from_json(const nlohmann::json& j) {
  detail::check_shape(j);
  OccupancyVector::Entries e;
  for (const auto& [key, value] : j.at("entries").items()) {
    Rational q = value.is_string() ? parse_fraction(value.get<std::string>())
                 : value.is_number_integer() ? Rational(value.get<long long>())
                                             : throw MalformedInput("occupancy entries must be integers");
    if (boost::multiprecision::denominator(q) != 1) {
      throw MalformedInput("occupancy entry '" + key + "' is not an integer");
    }
    e[detail::parse_key(key)] = boost::multiprecision::numerator(q).convert_to<Index>();
  }
  return OccupancyVector(std::move(e));
}

}  // namespace droplet
