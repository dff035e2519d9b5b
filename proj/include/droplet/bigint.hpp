#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "droplet/error.hpp"

namespace droplet {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using Index = std::int64_t;

// Natural log of a positive big integer.  Values above the double range
// are handled by keeping the top 64 bits and adding the shift back.
inline double log_big(const BigInt& v) {
  if (v <= 0) throw PreconditionError("log_big: argument must be positive");
  const auto top = boost::multiprecision::msb(v);
  if (top < 1000) return std::log(v.convert_to<double>());
  const auto shift = top - 63;
  const BigInt head = v >> shift;
  return std::log(head.convert_to<double>()) +
         static_cast<double>(shift) * std::log(2.0);
}

inline double log_rational(const Rational& q) {
  if (q <= 0) throw PreconditionError("log_rational: argument must be positive");
  return log_big(boost::multiprecision::numerator(q)) -
         log_big(boost::multiprecision::denominator(q));
}

// Double nearest to q; safe when numerator and denominator overflow double.
inline double to_double(const Rational& q) {
  if (q == 0) return 0.0;
  const bool neg = q < 0;
  const Rational a = neg ? Rational(-q) : q;
  const BigInt& num = boost::multiprecision::numerator(a);
  const BigInt& den = boost::multiprecision::denominator(a);
  if (boost::multiprecision::msb(num) < 1000 &&
      boost::multiprecision::msb(den) < 1000) {
    const double v = a.convert_to<double>();
    return neg ? -v : v;
  }
  const double v = std::exp(log_big(num) - log_big(den));
  return neg ? -v : v;
}

// "num/den", denominator always written.
inline std::string to_fraction_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

// Parses "num/den" or a plain integer.
inline Rational parse_fraction(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(text));
    const BigInt num(text.substr(0, slash));
    const BigInt den(text.substr(slash + 1));
    if (den == 0) throw MalformedInput("zero denominator in '" + text + "'");
    return Rational(num, den);
  } catch (const std::runtime_error&) {
    throw MalformedInput("not a fraction: '" + text + "'");
  }
}

// Exact double -> rational conversion (every finite double is dyadic).
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw MalformedInput("non-finite weight");
  int exp = 0;
  const double mant = std::frexp(x, &exp);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  Rational r(scaled);
  const int shift = exp - 53;
  if (shift >= 0) {
    r *= Rational(BigInt(1) << shift);
  } else {
    r /= Rational(BigInt(1) << -shift);
  }
  return r;
}

// 0!, 1!, ..., n!.
class FactorialTable {
 public:
  explicit FactorialTable(Index n) : table_(static_cast<std::size_t>(n) + 1) {
    detail::require(n >= 0, "FactorialTable: negative size");
    table_[0] = 1;
    for (std::size_t k = 1; k < table_.size(); ++k) {
      table_[k] = table_[k - 1] * static_cast<std::uint64_t>(k);
    }
  }

  const BigInt& operator()(Index k) const {
    detail::require(k >= 0 && static_cast<std::size_t>(k) < table_.size(),
                    "FactorialTable: index out of range");
    return table_[static_cast<std::size_t>(k)];
  }

  Index size() const { return static_cast<Index>(table_.size()) - 1; }

 private:
  std::vector<BigInt> table_;
};

inline BigInt binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (Index i = 1; i <= k; ++i) {
    r *= static_cast<std::uint64_t>(n - k + i);
    r /= static_cast<std::uint64_t>(i);
  }
  return r;
}

}  // namespace droplet
