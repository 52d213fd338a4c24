#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace usc {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct BudgetExceeded : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};
struct CertificateError : Error {
  using Error::Error;
};

// Accepts "p/q", "p" and "-p/q". Throws ParseError on anything else.
Rational parse_rational(const std::string& text);

// Always "p/q", with q = 1 for integers.
std::string format_rational(const Rational& q);

double to_double(const Rational& q);

Rational rational_pow(const Rational& base, int exponent);

// Largest rational r = a / (den * 2^53) with r <= sqrt(x); exact when x is a
// perfect square of a rational. x must be non-negative.
Rational sqrt_lower(const Rational& x);

}  // namespace usc
