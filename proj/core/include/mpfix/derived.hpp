#pragma once

#include <span>
#include <vector>

#include "mpfix/protocols.hpp"

namespace mpfix {

// Probabilistic right shift by f of a secret in [0, 2^(l-1)). The result is
// floor(x / 2^f) or one more, the latter with probability (x mod 2^f) / 2^f.
template <RingWord T>
ArithTensor<T> unsigned_truncate(Session& s, const ArithTensor<T>& x, int f);

// Signed variant for secrets in [-2^(l-2), 2^(l-2)). Lowers frac_bits by f.
template <RingWord T>
ArithTensor<T> truncate(Session& s, const ArithTensor<T>& x, int f);

// Independent truncations sharing one round; shifts[i] applies to xs[i].
template <RingWord T>
std::vector<ArithTensor<T>> truncate_many(Session& s, const std::vector<const ArithTensor<T>*>& xs,
                                          std::span<const int> shifts);

// Brings x down to precision `frac` (no-op when already there).
template <RingWord T>
ArithTensor<T> rescale(Session& s, const ArithTensor<T>& x, int frac);

// sum_i coeffs[i] * x^i at the precision of x. Powers are truncated as they
// are formed; coefficient products stay at double precision until one final
// truncation.
template <RingWord T>
ArithTensor<T> evaluate_poly(Session& s, const ArithTensor<T>& x, std::span<const double> coeffs);

// One-hot marker of the most significant set bit.
BitTensor lmo(Session& s, const BitTensor& x);

// b * x + (1 - b) * y for an arithmetic 0/1 selector b.
template <RingWord T>
ArithTensor<T> select(Session& s, const ArithTensor<T>& b, const ArithTensor<T>& x, const ArithTensor<T>& y);

// Row-wise maximum over the last axis; result has that axis set to 1.
template <RingWord T>
ArithTensor<T> max_vec(Session& s, const ArithTensor<T>& x);

}  // namespace mpfix
