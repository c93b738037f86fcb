#pragma once

// n-out-of-n additive and XOR sharing, reconstruction, and the local linear
// operations that need no communication.

#include <cstdint>
#include <span>
#include <vector>

#include "mpfix/prg.hpp"
#include "mpfix/tensor.hpp"

namespace mpfix {

// Party that applies public constants (add_const, xor_const). Fixed engine-wide.
inline constexpr int kConstantParty = 0;

// Splits each value into n shares: n-1 uniform, the last one the remainder.
template <RingWord T>
std::vector<std::vector<T>> share_values(std::span<const T> values, int parties, Prg& prg);

// Splits each word into n XOR shares, restricted to the low `width` bits.
std::vector<std::vector<std::uint64_t>> share_bits(std::span<const std::uint64_t> words, int width,
                                                   int parties, Prg& prg);

template <RingWord T>
std::vector<ArithTensor<T>> share_tensor(const ArithTensor<T>& plain, int parties, Prg& prg) {
  auto parts = share_values<T>(plain.data, parties, prg);
  std::vector<ArithTensor<T>> out;
  out.reserve(parties);
  for (auto& p : parts) out.emplace_back(plain.shape, std::move(p), plain.frac_bits);
  return out;
}

std::vector<BitTensor> share_bit_tensor(const BitTensor& plain, int parties, Prg& prg);

template <RingWord T>
std::vector<T> reconstruct_values(const std::vector<std::vector<T>>& shares);

std::vector<std::uint64_t> reconstruct_bits(const std::vector<std::vector<std::uint64_t>>& shares);

// --- local arithmetic ops -------------------------------------------------

template <RingWord T>
ArithTensor<T> add(const ArithTensor<T>& x, const ArithTensor<T>& y) {
  require_same_shape(x.shape, y.shape, "add");
  if (x.frac_bits != y.frac_bits) throw ShapeMismatch("add: precision mismatch");
  ArithTensor<T> z(x.shape, x.frac_bits);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = x.data[i] + y.data[i];
  return z;
}

template <RingWord T>
ArithTensor<T> sub(const ArithTensor<T>& x, const ArithTensor<T>& y) {
  require_same_shape(x.shape, y.shape, "sub");
  if (x.frac_bits != y.frac_bits) throw ShapeMismatch("sub: precision mismatch");
  ArithTensor<T> z(x.shape, x.frac_bits);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = x.data[i] - y.data[i];
  return z;
}

template <RingWord T>
void add_in_place(ArithTensor<T>& x, const ArithTensor<T>& y) {
  require_same_shape(x.shape, y.shape, "add");
  for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += y.data[i];
}

// Adds a public ring constant; only the constant party changes its share.
template <RingWord T>
ArithTensor<T> add_const(const ArithTensor<T>& x, T c, int party) {
  ArithTensor<T> z = x;
  if (party == kConstantParty) {
    for (auto& v : z.data) v += c;
  }
  return z;
}

// Element-wise public constants (same shape as x).
template <RingWord T>
ArithTensor<T> add_const(const ArithTensor<T>& x, std::span<const T> c, int party) {
  if (c.size() != x.size()) throw ShapeMismatch("add_const: constant length");
  ArithTensor<T> z = x;
  if (party == kConstantParty) {
    for (std::size_t i = 0; i < z.size(); ++i) z.data[i] += c[i];
  }
  return z;
}

// Multiplies every share by a public integer; precision unchanged.
template <RingWord T>
ArithTensor<T> scale_int(const ArithTensor<T>& x, T k) {
  ArithTensor<T> z(x.shape, x.frac_bits);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = x.data[i] * k;
  return z;
}

template <RingWord T>
ArithTensor<T> neg(const ArithTensor<T>& x) {
  ArithTensor<T> z(x.shape, x.frac_bits);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = T{0} - x.data[i];
  return z;
}

// Reinterprets the precision tag without touching data (e.g. integer bit as fixed).
template <RingWord T>
ArithTensor<T> with_precision(ArithTensor<T> x, int frac) {
  x.frac_bits = frac;
  return x;
}

// Reduces 64-bit shares to 32-bit shares of the same secret (if it fits).
ArithTensor<std::uint32_t> cast_down(const ArithTensor<std::uint64_t>& x);

// --- local binary ops -----------------------------------------------------

BitTensor bit_xor(const BitTensor& x, const BitTensor& y);

// XOR with a public per-element word; only the constant party applies it.
BitTensor xor_const(const BitTensor& x, std::span<const std::uint64_t> c, int party);

// AND with a public per-element word is local for XOR sharing.
BitTensor and_const(const BitTensor& x, std::span<const std::uint64_t> c);

}  // namespace mpfix
