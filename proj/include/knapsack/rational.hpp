#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace knapsack {

/// Exact rational over int64 with a gcd-reduced, positive denominator.
/// Comparisons cross-multiply in 128-bit arithmetic, so equal-valued
/// fractions compare equal and there are no floating-point ties anywhere
/// in the allocation or payment path. Results that no longer fit int64
/// after reduction throw std::overflow_error.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit
  Rational(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }

  double to_double() const {
    return static_cast<double>(static_cast<long double>(num_) /
                               static_cast<long double>(den_));
  }

  /// Exact conversion of a finite double (doubles are dyadic rationals).
  static Rational from_double(double x);

  /// Accepts "7", "-3/4" and decimal forms like "1.25".
  static std::optional<Rational> parse(std::string_view text);

  std::string str() const {
    return den_ == 1 ? std::to_string(num_)
                     : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from128(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                   i128(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return from128(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                   i128(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return from128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
  }
  Rational operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) {
    return !(a == b);
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) {
    return !(b < a);
  }
  friend bool operator>=(const Rational& a, const Rational& b) {
    return !(a < b);
  }

 private:
  using i128 = __int128;

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw std::invalid_argument("rational with zero denominator");
    return from128(n, d);
  }

  static i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      i128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational from128(i128 n, i128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    if (n == 0) {
      Rational r;
      return r;
    }
    i128 g = gcd128(n, d);
    n /= g;
    d /= g;
    constexpr i128 kMax = INT64_MAX;
    constexpr i128 kMin = INT64_MIN;
    if (n > kMax || n < kMin || d > kMax)
      throw std::overflow_error("rational exceeds 64-bit range");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational abs(const Rational& r) { return r.num() < 0 ? -r : r; }
inline const Rational& min(const Rational& a, const Rational& b) {
  return b < a ? b : a;
}
inline const Rational& max(const Rational& a, const Rational& b) {
  return a < b ? b : a;
}

inline Rational Rational::from_double(double x) {
  if (!(x == x) || x > 9.2e18 || x < -9.2e18)
    throw std::overflow_error("double out of rational range");
  double scaled = x;
  std::int64_t den = 1;
  while (scaled != static_cast<double>(static_cast<std::int64_t>(scaled))) {
    if (den > (INT64_MAX >> 1))
      throw std::overflow_error("double needs more than 63 denominator bits");
    scaled *= 2;
    den <<= 1;
  }
  return Rational(static_cast<std::int64_t>(scaled), den);
}

inline std::optional<Rational> Rational::parse(std::string_view text) {
  auto parse_int = [](std::string_view s, std::int64_t& out) -> bool {
    if (s.empty()) return false;
    bool neg = false;
    std::size_t i = 0;
    if (s[0] == '-' || s[0] == '+') {
      neg = s[0] == '-';
      i = 1;
    }
    if (i == s.size()) return false;
    i128 v = 0;
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
      v = v * 10 + (s[i] - '0');
      if (v > i128(INT64_MAX)) return false;
    }
    out = neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
    return true;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t n = 0, d = 0;
    if (!parse_int(text.substr(0, slash), n) ||
        !parse_int(text.substr(slash + 1), d) || d == 0)
      return std::nullopt;
    return Rational(n, d);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view head = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 18) return std::nullopt;
    std::int64_t whole = 0;
    if (head.empty() || head == "-" || head == "+") {
      whole = 0;
    } else if (!parse_int(head, whole)) {
      return std::nullopt;
    }
    std::int64_t frac_digits = 0;
    if (!parse_int(frac, frac_digits) || frac_digits < 0) return std::nullopt;
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    bool neg = !text.empty() && text[0] == '-';
    Rational r = Rational(whole < 0 ? -whole : whole) +
                 Rational(frac_digits, den);
    return neg ? -r : r;
  }
  std::int64_t n = 0;
  if (!parse_int(text, n)) return std::nullopt;
  return Rational(n);
}

}  // namespace knapsack
