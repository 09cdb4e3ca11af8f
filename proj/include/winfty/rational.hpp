#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>

namespace winfty {

/// Arbitrary-precision integer used for scaled capacities and exact sums.
using BigInt = boost::multiprecision::cpp_int;

/// Exact rational, always held in lowest terms with a positive denominator.
using Rational = boost::multiprecision::cpp_rational;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Total mass differs from one; carries the exact signed deficit 1 - total.
class MassError : public Error {
 public:
  MassError(const std::string& what, Rational deficit)
      : Error(what), deficit_(std::move(deficit)) {}
  const Rational& deficit() const { return deficit_; }

 private:
  Rational deficit_;
};

inline BigInt numer(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denom(const Rational& r) { return boost::multiprecision::denominator(r); }

inline BigInt lcm(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  return boost::multiprecision::lcm(a, b);
}

inline std::string to_string(const Rational& r) {
  if (denom(r) == 1) return numer(r).str();
  return numer(r).str() + "/" + denom(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Parses "a/b" or "a" (optional leading sign). Decimal and exponent
/// notation is rejected so that no weight is silently rounded.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&](const std::string& why) -> Rational {
    throw Error("invalid rational \"" + std::string(text) + "\": " + why);
  };
  auto is_integer = [](std::string_view s) {
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  };
  if (text.find_first_of(".eE") != std::string_view::npos)
    return fail("decimal notation is not accepted, write an exact fraction such as \"3/20\"");
  const auto slash = text.find('/');
  const std::string_view num = text.substr(0, slash);
  if (!is_integer(num)) return fail("numerator is not an integer");
  BigInt n(std::string(num.front() == '+' ? num.substr(1) : num));
  if (slash == std::string_view::npos) return Rational(n);
  const std::string_view den = text.substr(slash + 1);
  if (!is_integer(den) || den.front() == '-' || den.front() == '+')
    return fail("denominator is not a positive integer");
  BigInt d{std::string(den)};
  if (d == 0) return fail("zero denominator");
  return Rational(n, d);
}

}  // namespace winfty
