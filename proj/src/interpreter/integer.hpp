#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace progshot::interp::detail {

// Arbitrary-precision integer with Python floor-division semantics.
// Values that fit in int64 stay unboxed; larger values live in a shared mpz.
class Integer {
 public:
  // Results wider than this are reported as runtime errors rather than computed.
  static constexpr std::size_t kMaxBits = 16384;

  Integer() = default;
  Integer(std::int64_t v) : small_(v) {}  // NOLINT(google-explicit-constructor)

  static Integer from_decimal(std::string_view digits, int base = 10);
  /// Truncates toward zero; nullopt for NaN/inf.
  static std::optional<Integer> from_double(double v);

  bool is_small() const { return !big_; }
  std::int64_t small() const { return small_; }
  bool is_zero() const { return !big_ && small_ == 0; }
  int sign() const;
  std::size_t bit_length() const;
  std::optional<std::int64_t> to_int64() const;

  /// Nearest double; nullopt when the magnitude overflows binary64.
  std::optional<double> to_double() const;
  std::string to_string() const;

  Integer operator-() const;
  Integer abs() const;

  friend Integer operator+(const Integer& a, const Integer& b);
  friend Integer operator-(const Integer& a, const Integer& b);
  friend Integer operator*(const Integer& a, const Integer& b);
  /// Floor division; the divisor must be nonzero.
  static Integer floordiv(const Integer& a, const Integer& b);
  /// Modulo with the sign of the divisor; the divisor must be nonzero.
  static Integer mod(const Integer& a, const Integer& b);
  /// exp must be non-negative. Throws RuntimeFault past kMaxBits.
  static Integer pow(const Integer& base, std::uint64_t exp);
  /// a / b correctly rounded where both fit in 53 bits, else via exact rationals.
  static std::optional<double> true_divide(const Integer& a, const Integer& b);

  friend bool operator==(const Integer& a, const Integer& b) { return compare(a, b) == 0; }
  friend std::strong_ordering operator<=>(const Integer& a, const Integer& b) {
    return compare(a, b) <=> 0;
  }
  static int compare(const Integer& a, const Integer& b);
  /// Exact comparison against a finite double.
  static int compare(const Integer& a, double b);

 private:
  explicit Integer(mpz_class v);
  mpz_class as_mpz() const;
  static Integer checked(mpz_class v);

  std::int64_t small_ = 0;
  std::shared_ptr<const mpz_class> big_;
};

}  // namespace progshot::interp::detail
