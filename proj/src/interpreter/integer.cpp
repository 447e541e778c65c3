#include "integer.hpp"

#include <cmath>
#include <limits>

#include "fault.hpp"

namespace progshot::interp::detail {

namespace {

constexpr std::int64_t kExactDoubleLimit = std::int64_t{1} << 53;

bool fits_exactly(std::int64_t v) { return v > -kExactDoubleLimit && v < kExactDoubleLimit; }

}  // namespace

Integer::Integer(mpz_class v) {
  if (mpz_fits_slong_p(v.get_mpz_t())) {
    small_ = v.get_si();
  } else {
    big_ = std::make_shared<const mpz_class>(std::move(v));
  }
}

Integer Integer::checked(mpz_class v) {
  if (mpz_sizeinbase(v.get_mpz_t(), 2) > kMaxBits) {
    throw RuntimeFault{"OverflowError: integer result exceeds " + std::to_string(kMaxBits) +
                       " bits"};
  }
  return Integer(std::move(v));
}

mpz_class Integer::as_mpz() const {
  if (big_) return *big_;
  return mpz_class(static_cast<long>(small_));
}

Integer Integer::from_decimal(std::string_view digits, int base) {
  std::string clean;
  clean.reserve(digits.size());
  for (char c : digits) {
    if (c != '_') clean.push_back(c);
  }
  return checked(mpz_class(clean, base));
}

std::optional<Integer> Integer::from_double(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  v = std::trunc(v);
  if (v > -9.2e18 && v < 9.2e18) return Integer(static_cast<std::int64_t>(v));
  mpz_class z;
  mpz_set_d(z.get_mpz_t(), v);
  return Integer(std::move(z));
}

int Integer::sign() const {
  if (big_) return mpz_sgn(big_->get_mpz_t());
  return (small_ > 0) - (small_ < 0);
}

std::size_t Integer::bit_length() const {
  if (big_) return mpz_sizeinbase(big_->get_mpz_t(), 2);
  if (small_ == 0) return 0;
  std::uint64_t mag = small_ < 0 ? ~static_cast<std::uint64_t>(small_) + 1 : small_;
  return 64 - static_cast<std::size_t>(__builtin_clzll(mag));
}

std::optional<std::int64_t> Integer::to_int64() const {
  if (big_) return std::nullopt;
  return small_;
}

std::optional<double> Integer::to_double() const {
  if (!big_) return static_cast<double>(small_);
  if (bit_length() > 1024) return std::nullopt;
  double d = big_->get_d();
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

std::string Integer::to_string() const {
  if (big_) return big_->get_str();
  return std::to_string(small_);
}

Integer Integer::operator-() const {
  if (!big_ && small_ != std::numeric_limits<std::int64_t>::min()) return Integer(-small_);
  return checked(-as_mpz());
}

Integer Integer::abs() const { return sign() < 0 ? -*this : *this; }

Integer operator+(const Integer& a, const Integer& b) {
  std::int64_t r;
  if (a.is_small() && b.is_small() && !__builtin_add_overflow(a.small_, b.small_, &r)) {
    return Integer(r);
  }
  return Integer::checked(a.as_mpz() + b.as_mpz());
}

Integer operator-(const Integer& a, const Integer& b) {
  std::int64_t r;
  if (a.is_small() && b.is_small() && !__builtin_sub_overflow(a.small_, b.small_, &r)) {
    return Integer(r);
  }
  return Integer::checked(a.as_mpz() - b.as_mpz());
}

Integer operator*(const Integer& a, const Integer& b) {
  std::int64_t r;
  if (a.is_small() && b.is_small() && !__builtin_mul_overflow(a.small_, b.small_, &r)) {
    return Integer(r);
  }
  if (a.bit_length() + b.bit_length() > Integer::kMaxBits + 1) {
    throw RuntimeFault{"OverflowError: integer result exceeds " +
                       std::to_string(Integer::kMaxBits) + " bits"};
  }
  return Integer::checked(a.as_mpz() * b.as_mpz());
}

Integer Integer::floordiv(const Integer& a, const Integer& b) {
  if (a.is_small() && b.is_small() &&
      !(a.small_ == std::numeric_limits<std::int64_t>::min() && b.small_ == -1)) {
    std::int64_t q = a.small_ / b.small_;
    if ((a.small_ % b.small_ != 0) && ((a.small_ < 0) != (b.small_ < 0))) --q;
    return Integer(q);
  }
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), a.as_mpz().get_mpz_t(), b.as_mpz().get_mpz_t());
  return checked(std::move(q));
}

Integer Integer::mod(const Integer& a, const Integer& b) {
  if (a.is_small() && b.is_small()) {
    if (b.small_ == -1) return Integer(0);
    std::int64_t r = a.small_ % b.small_;
    if (r != 0 && ((r < 0) != (b.small_ < 0))) r += b.small_;
    return Integer(r);
  }
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), a.as_mpz().get_mpz_t(), b.as_mpz().get_mpz_t());
  return checked(std::move(r));
}

Integer Integer::pow(const Integer& base, std::uint64_t exp) {
  if (exp == 0) return Integer(1);
  if (base.is_small() && (base.small_ == 0 || base.small_ == 1)) return base;
  if (base.is_small() && base.small_ == -1) return Integer(exp % 2 == 0 ? 1 : -1);
  const std::size_t bits = base.bit_length();
  if (exp > kMaxBits || (bits - 1) * exp > kMaxBits) {
    throw RuntimeFault{"OverflowError: integer result exceeds " + std::to_string(kMaxBits) +
                       " bits"};
  }
  mpz_class r;
  mpz_pow_ui(r.get_mpz_t(), base.as_mpz().get_mpz_t(), static_cast<unsigned long>(exp));
  return checked(std::move(r));
}

std::optional<double> Integer::true_divide(const Integer& a, const Integer& b) {
  if (a.is_small() && b.is_small() && fits_exactly(a.small_) && fits_exactly(b.small_)) {
    return static_cast<double>(a.small_) / static_cast<double>(b.small_);
  }
  const auto bits_a = static_cast<long>(a.bit_length());
  const auto bits_b = static_cast<long>(b.bit_length());
  if (bits_a - bits_b > 1023) return std::nullopt;
  mpq_class q(a.as_mpz(), b.as_mpz());
  q.canonicalize();
  double d = q.get_d();
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

int Integer::compare(const Integer& a, const Integer& b) {
  if (a.is_small() && b.is_small()) return (a.small_ > b.small_) - (a.small_ < b.small_);
  int c = cmp(a.as_mpz(), b.as_mpz());
  return (c > 0) - (c < 0);
}

int Integer::compare(const Integer& a, double b) {
  if (a.is_small() && fits_exactly(a.small_)) {
    const double x = static_cast<double>(a.small_);
    return (x > b) - (x < b);
  }
  int c = mpz_cmp_d(a.as_mpz().get_mpz_t(), b);
  return (c > 0) - (c < 0);
}

}  // namespace progshot::interp::detail
