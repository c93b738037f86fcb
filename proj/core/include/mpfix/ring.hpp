#pragma once

// Wrapping arithmetic over Z_2^l and the signed fixed-point encoding on top of it.
//
// A ring element is a plain unsigned word. Width is a static property of the
// word type, so tensors stay flat arrays of uint32_t / uint64_t.

#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <type_traits>

#include "mpfix/errors.hpp"

namespace mpfix {

template <class T>
concept RingWord = std::same_as<T, std::uint32_t> || std::same_as<T, std::uint64_t>;

template <std::unsigned_integral T>
inline constexpr int kRingBits = std::numeric_limits<T>::digits;

// Ring ops usable on any unsigned width, including test-only mini rings (uint8_t)
// where integer promotion would otherwise leave the ring.
template <std::unsigned_integral T>
constexpr T ring_add(T a, T b) {
  return static_cast<T>(static_cast<std::uintmax_t>(a) + b);
}
template <std::unsigned_integral T>
constexpr T ring_sub(T a, T b) {
  return static_cast<T>(static_cast<std::uintmax_t>(a) - b);
}
template <std::unsigned_integral T>
constexpr T ring_mul(T a, T b) {
  return static_cast<T>(static_cast<std::uintmax_t>(a) * b);
}
template <std::unsigned_integral T>
constexpr T ring_neg(T a) {
  return static_cast<T>(std::uintmax_t{0} - a);
}
template <std::unsigned_integral T>
constexpr T ring_shl(T a, int s) {
  return s >= kRingBits<T> ? T{0} : static_cast<T>(static_cast<std::uintmax_t>(a) << s);
}

// Two's-complement view of a ring element.
template <std::unsigned_integral T>
constexpr std::make_signed_t<T> to_signed(T v) {
  return static_cast<std::make_signed_t<T>>(v);
}

template <std::unsigned_integral T>
constexpr T from_signed(std::make_signed_t<T> v) {
  return static_cast<T>(v);
}

// Sign-extends the low `bits` bits of v (logical width narrower than the word).
constexpr std::int64_t sign_extend(std::uint64_t v, int bits) {
  if (bits >= 64) return static_cast<std::int64_t>(v);
  const std::uint64_t m = std::uint64_t{1} << (bits - 1);
  v &= (std::uint64_t{1} << bits) - 1;
  return static_cast<std::int64_t>((v ^ m) - m);
}

constexpr std::uint64_t low_mask(int bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

// Fractional precision p of a fixed-point encoding in ring width l.
// 0 < p < l/2 so one un-truncated product of two precision-p values fits.
template <RingWord T>
class FixedPoint {
 public:
  explicit constexpr FixedPoint(int precision) : precision_(precision) {
    if (precision <= 0 || 2 * precision >= kRingBits<T>) {
      throw ConfigError("fixed-point precision must satisfy 0 < p < l/2");
    }
  }

  constexpr int precision() const { return precision_; }
  static constexpr int width() { return kRingBits<T>; }

  // floor(x * 2^p) in two's complement; requires |x| < 2^(l-1-p).
  T encode(double x) const {
    const double limit = std::ldexp(1.0, kRingBits<T> - 1 - precision_);
    if (!std::isfinite(x) || std::fabs(x) >= limit) {
      throw EncodingOverflow("value out of fixed-point range");
    }
    const double scaled = std::floor(std::ldexp(x, precision_));
    return static_cast<T>(static_cast<std::int64_t>(scaled));
  }

  double decode(T e) const { return std::ldexp(static_cast<double>(to_signed(e)), -precision_); }

 private:
  int precision_;
};

template <RingWord T>
T encode_fixed(double x, int precision) {
  return FixedPoint<T>(precision).encode(x);
}

template <RingWord T>
double decode_fixed(T e, int precision) {
  return std::ldexp(static_cast<double>(to_signed(e)), -precision);
}

// Plain encoding without the p < l/2 restriction, used for public constants.
template <RingWord T>
T encode_constant(double x, int precision) {
  const double limit = std::ldexp(1.0, kRingBits<T> - 1);
  const double scaled = std::floor(std::ldexp(x, precision));
  if (!std::isfinite(scaled) || std::fabs(scaled) >= limit) {
    throw EncodingOverflow("constant out of ring range");
  }
  return static_cast<T>(static_cast<std::int64_t>(scaled));
}

// Local reduction of one party's 64-bit share to a 32-bit share.
constexpr std::uint32_t cast_down(std::uint64_t e) { return static_cast<std::uint32_t>(e); }

}  // namespace mpfix
