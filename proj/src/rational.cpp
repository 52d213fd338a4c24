#include "usc/rational.hpp"

#include <cctype>

namespace usc {

namespace {

BigInt parse_integer(const std::string& s, const std::string& whole) {
  if (s.empty()) throw ParseError("malformed rational '" + whole + "'");
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') i = 1;
  if (i == s.size()) throw ParseError("malformed rational '" + whole + "'");
  for (std::size_t j = i; j < s.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(s[j])))
      throw ParseError("malformed rational '" + whole + "'");
  return BigInt(s);
}

}  // namespace

Rational parse_rational(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return Rational(parse_integer(text, text));
  BigInt p = parse_integer(text.substr(0, slash), text);
  std::string qs = text.substr(slash + 1);
  if (!qs.empty() && (qs[0] == '-' || qs[0] == '+'))
    throw ParseError("malformed rational '" + text + "'");
  BigInt q = parse_integer(qs, text);
  if (q == 0) throw ParseError("zero denominator in '" + text + "'");
  return Rational(p, q);
}

std::string format_rational(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

Rational rational_pow(const Rational& base, int exponent) {
  Rational r = 1;
  Rational b = exponent >= 0 ? base : Rational(1) / base;
  for (int e = exponent >= 0 ? exponent : -exponent; e > 0; --e) r *= b;
  return r;
}

Rational sqrt_lower(const Rational& x) {
  if (x < 0) throw Error("sqrt_lower of a negative value");
  BigInt p = boost::multiprecision::numerator(x);
  BigInt q = boost::multiprecision::denominator(x);
  BigInt pq = p * q;
  BigInt s = boost::multiprecision::sqrt(pq);
  if (s * s == pq) return Rational(s, q);
  BigInt scale = BigInt(1) << 53;
  BigInt big = pq * scale * scale;
  BigInt t = boost::multiprecision::sqrt(big);
  return Rational(t, q * scale);
}

}  // namespace usc
