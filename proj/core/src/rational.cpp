#include "carpetdim/rational.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace carpetdim {
namespace {

using i128 = __int128;

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool fits64(i128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

// Overflow-checked 128-bit multiply; operands come from 64-bit values or
// their sums, so |a|,|b| < 2^65 and a plain product can exceed 2^127.
i128 mul_checked(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("Rational: 128-bit overflow");
  return r;
}

i128 add_checked(i128 a, i128 b) {
  i128 r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("Rational: 128-bit overflow");
  return r;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  *this = from_wide(num, den);
}

Rational Rational::from_wide(i128 num, i128 den) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (!fits64(num) || !fits64(den)) throw std::overflow_error("Rational: result exceeds 64 bits");
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  return r;
}

Rational Rational::parse(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("Rational: cannot parse '" + std::string(text) + "'");
  };
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  // Decimal or integer literal, exact.
  auto parse_decimal = [&](std::string_view s) -> Rational {
    s = trim(s);
    if (s.empty()) return fail();
    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
      negative = s.front() == '-';
      s.remove_prefix(1);
    }
    if (s.empty()) return fail();
    i128 num = 0;
    i128 den = 1;
    bool seen_point = false;
    bool seen_digit = false;
    for (char c : s) {
      if (c == '.') {
        if (seen_point) return fail();
        seen_point = true;
        continue;
      }
      if (c < '0' || c > '9') return fail();
      seen_digit = true;
      num = add_checked(mul_checked(num, 10), c - '0');
      if (seen_point) den = mul_checked(den, 10);
    }
    if (!seen_digit) return fail();
    return from_wide(negative ? -num : num, den);
  };

  std::string_view body = trim(text);
  auto slash = body.find('/');
  if (slash == std::string_view::npos) return parse_decimal(body);
  Rational n = parse_decimal(body.substr(0, slash));
  Rational d = parse_decimal(body.substr(slash + 1));
  if (d.is_zero()) return fail();
  return n / d;
}

double Rational::to_double() const {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::to_string() const {
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const { return from_wide(-static_cast<i128>(num_), den_); }

Rational& Rational::operator+=(const Rational& rhs) {
  i128 n = add_checked(mul_checked(num_, rhs.den_), mul_checked(rhs.num_, den_));
  i128 d = mul_checked(den_, rhs.den_);
  return *this = from_wide(n, d);
}

Rational& Rational::operator-=(const Rational& rhs) {
  i128 n = add_checked(mul_checked(num_, rhs.den_), -mul_checked(rhs.num_, den_));
  i128 d = mul_checked(den_, rhs.den_);
  return *this = from_wide(n, d);
}

Rational& Rational::operator*=(const Rational& rhs) {
  // Cross-reduce first to keep intermediates small.
  i128 g1 = gcd128(num_, rhs.den_);
  i128 g2 = gcd128(rhs.num_, den_);
  if (g1 == 0) g1 = 1;
  if (g2 == 0) g2 = 1;
  i128 n = mul_checked(num_ / g1, rhs.num_ / g2);
  i128 d = mul_checked(den_ / g2, rhs.den_ / g1);
  return *this = from_wide(n, d);
}

Rational& Rational::operator/=(const Rational& rhs) {
  if (rhs.is_zero()) throw std::domain_error("Rational: division by zero");
  return *this *= from_wide(rhs.den_, rhs.num_);
}

std::strong_ordering operator<=>(const Rational& lhs, const Rational& rhs) {
  i128 l = static_cast<i128>(lhs.num_) * rhs.den_;
  i128 r = static_cast<i128>(rhs.num_) * lhs.den_;
  return l <=> r;
}

Rational abs(const Rational& r) { return r.num() < 0 ? -r : r; }

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

}  // namespace carpetdim
