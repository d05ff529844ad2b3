#pragma once

// Exact rational scalars and the "p/q" text convention used by every file
// format and report in the library.

#include <gmpxx.h>

#include <cstddef>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace semistatic {

using Rational = mpq_class;
using RationalVector = std::vector<Rational>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses an integer ("-3") or a fraction ("7/8"). Decimals are rejected so
/// that every value in a market file is exact by construction.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (!s.empty() && s.front() == '+') s.erase(0, 1);
  const auto bad = [&] {
    return ParseError("invalid rational literal '" + std::string(text) + "'");
  };
  if (s.empty()) throw bad();
  std::size_t i = (s.front() == '-') ? 1 : 0;
  std::size_t digits = 0;
  bool slash = false;
  std::size_t den_digits = 0;
  for (; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '/') {
      if (slash || digits == 0) throw bad();
      slash = true;
    } else if (ch >= '0' && ch <= '9') {
      (slash ? den_digits : digits)++;
    } else {
      throw bad();
    }
  }
  if (digits == 0 || (slash && den_digits == 0)) throw bad();
  if (slash && s.find_first_not_of('0', s.find('/') + 1) == std::string::npos) {
    throw ParseError("zero denominator in '" + std::string(text) + "'");
  }
  Rational r;
  if (r.set_str(s, 10) != 0) throw bad();
  r.canonicalize();
  return r;
}

/// p/q in lowest terms (mpq_class(p, q) alone does not canonicalize).
inline Rational frac(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

/// Canonical text form: "p" for integers, "p/q" otherwise (lowest terms).
inline std::string to_string(const Rational& r) { return r.get_str(); }

/// Lossy decimal rendering, used only behind explicit approximation flags.
inline std::string to_decimal(const Rational& r, int digits = 12) {
  std::ostringstream out;
  out << std::setprecision(digits) << r.get_d();
  return out.str();
}

inline Rational rmin(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational rmax(const Rational& a, const Rational& b) { return a < b ? b : a; }

inline Rational dot(const RationalVector& a, const RationalVector& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += a[i] * b[i];
  return s;
}

/// A price that may be an infinite sentinel (empty dual set, unbounded LP).
class ExtendedRational {
 public:
  enum class Kind { kFinite, kPlusInfinity, kMinusInfinity };

  ExtendedRational() = default;
  ExtendedRational(Rational v) : kind_(Kind::kFinite), value_(std::move(v)) {}  // NOLINT

  static ExtendedRational plus_infinity() { return ExtendedRational(Kind::kPlusInfinity); }
  static ExtendedRational minus_infinity() { return ExtendedRational(Kind::kMinusInfinity); }

  Kind kind() const { return kind_; }
  bool finite() const { return kind_ == Kind::kFinite; }
  const Rational& value() const {
    if (!finite()) throw std::logic_error("value() of an infinite price");
    return value_;
  }

  std::string str() const {
    switch (kind_) {
      case Kind::kPlusInfinity: return "+inf";
      case Kind::kMinusInfinity: return "-inf";
      default: return to_string(value_);
    }
  }

  friend bool operator==(const ExtendedRational& a, const ExtendedRational& b) {
    return a.kind_ == b.kind_ && (!a.finite() || a.value_ == b.value_);
  }
  friend bool operator<=(const ExtendedRational& a, const ExtendedRational& b) {
    if (a.kind_ == Kind::kMinusInfinity || b.kind_ == Kind::kPlusInfinity) return true;
    if (a.kind_ == Kind::kPlusInfinity || b.kind_ == Kind::kMinusInfinity) return false;
    return a.value_ <= b.value_;
  }
  friend bool operator<(const ExtendedRational& a, const ExtendedRational& b) {
    return a <= b && !(a == b);
  }
  friend std::ostream& operator<<(std::ostream& out, const ExtendedRational& x) { return out << x.str(); }

 private:
  explicit ExtendedRational(Kind k) : kind_(k) {}
  Kind kind_ = Kind::kFinite;
  Rational value_ = 0;
};

}  // namespace semistatic
