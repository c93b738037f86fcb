#pragma once

// Interactive building blocks. Every function here is called by all parties
// in the same order with tensors of the same shape; each call costs a fixed
// number of exchange rounds independent of the tensor size.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mpfix/session.hpp"
#include "mpfix/sharing.hpp"
#include "mpfix/tensor.hpp"

namespace mpfix {

// --- opening and input ------------------------------------------------------

// Reveals words of `width` bits. Arithmetic shares are summed mod 2^width,
// XOR shares are XORed. One round; count*width bits to every peer.
std::vector<std::uint64_t> open_words(Session& s, std::span<const std::uint64_t> shares, int width,
                                      bool xor_shares);

template <RingWord T>
std::vector<T> open_values(Session& s, std::span<const T> shares);

template <RingWord T>
ArithTensor<T> open(Session& s, const ArithTensor<T>& x) {
  return ArithTensor<T>(x.shape, open_values<T>(s, x.data), x.frac_bits);
}

BitTensor open_bits(Session& s, const BitTensor& x);

// The owner secret-shares `values` (ignored at other parties). One round.
template <RingWord T>
ArithTensor<T> input(Session& s, int owner, std::span<const T> values, const Shape& shape, int frac);

BitTensor input_bits(Session& s, int owner, std::span<const std::uint64_t> words, const Shape& shape, int width);

// --- arithmetic -------------------------------------------------------------

// Element-wise product; precision of the result is the sum of the inputs'.
template <RingWord T>
ArithTensor<T> mul(Session& s, const ArithTensor<T>& x, const ArithTensor<T>& y);

template <RingWord T>
using MulPair = std::pair<const ArithTensor<T>*, const ArithTensor<T>*>;

// Several independent products in one round.
template <RingWord T>
std::vector<ArithTensor<T>> mul_many(Session& s, std::span<const MulPair<T>> pairs);

// Multiplication by a public fixed-point constant k encoded at `frac` bits.
template <RingWord T>
ArithTensor<T> scale_fixed(Session& s, const ArithTensor<T>& x, double k, int frac);

// Same, with a distinct constant per element.
template <RingWord T>
ArithTensor<T> scale_fixed(Session& s, const ArithTensor<T>& x, std::span<const double> k, int frac);

// X (m x k) @ Y (k x r).
template <RingWord T>
ArithTensor<T> matmul(Session& s, const ArithTensor<T>& x, const ArithTensor<T>& y);

// Z_i = X_i @ Y_i for every i, all openings in one round.
template <RingWord T>
std::vector<ArithTensor<T>> batch_matmul(Session& s, const std::vector<ArithTensor<T>>& xs,
                                         const std::vector<ArithTensor<T>>& ys);

// --- binary -----------------------------------------------------------------

BitTensor and_bits(Session& s, const BitTensor& x, const BitTensor& y);

using AndPair = std::pair<const BitTensor*, const BitTensor*>;
std::vector<BitTensor> and_many(Session& s, std::span<const AndPair> pairs);

// Secure OR via a ^ b ^ (a & b).
BitTensor or_bits(Session& s, const BitTensor& x, const BitTensor& y);

// Local helpers on XOR-shared bit vectors.
BitTensor shift_left(const BitTensor& x, int k);
BitTensor shift_right(const BitTensor& x, int k);
BitTensor not_bits(const BitTensor& x, int party);
BitTensor slice_bits(const BitTensor& x, int lo, int count);

// (x + y) mod 2^width with a log-depth carry network.
BitTensor binary_add(Session& s, const BitTensor& x, const BitTensor& y);

// (x + c) mod 2^width for a public per-element c.
BitTensor public_add(Session& s, const BitTensor& x, std::span<const std::uint64_t> c);

// --- conversions ------------------------------------------------------------

// Width-1 XOR shares to arithmetic shares of the same bit (precision 0).
template <RingWord T>
ArithTensor<T> bit2a(Session& s, const BitTensor& bit);

// Bits lo..lo+count-1 of every element, converted in one round.
template <RingWord T>
std::vector<ArithTensor<T>> bits_to_arith(Session& s, const BitTensor& x, int lo, int count);

// Sum of 2^i * bit(lo+i) for i < count, tagged with precision `frac`.
template <RingWord T>
ArithTensor<T> compose(Session& s, const BitTensor& x, int lo, int count, int frac);

// Combines already converted bits: sum of 2^i * bits[i].
template <RingWord T>
ArithTensor<T> compose_arith(const std::vector<ArithTensor<T>>& bits, int frac);

// XOR shares of the low `width` bits of x.
template <RingWord T>
BitTensor decompose(Session& s, const ArithTensor<T>& x, int width = kRingBits<T>);

// Width-1 shares of [x > y], assuming y - x does not overflow.
template <RingWord T>
BitTensor gt(Session& s, const ArithTensor<T>& x, const ArithTensor<T>& y);

}  // namespace mpfix
