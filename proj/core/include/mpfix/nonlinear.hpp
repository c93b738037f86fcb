#pragma once

// Fixed-point reciprocal, exponentiation and logarithm over Z_2^64, plus the
// baseline exponentiation (31-bit logical width) and the attention variant that
// takes 32-bit shares and returns 64-bit shares.

#include <array>
#include <cstdint>

#include "mpfix/derived.hpp"

namespace mpfix {

using u32 = std::uint32_t;
using u64 = std::uint64_t;

// k4 * (((z + t3)^2 + t2)^2 + t1 z + t0), with k4 replaced by a power of two.
struct SquareCompleted {
  double k4_pow2 = 0;
  double t3 = 0, t2 = 0, t1 = 0, t0 = 0;
};

struct ApproxParams {
  int newton_iters = 5;
  std::array<double, 5> exp_coeffs{};  // 2^z on [0,1), ascending k0..k4
  SquareCompleted exp_square;
  std::array<double, 5> log_coeffs{};  // log2(1+z) on [-0.25,0.5), ascending
  SquareCompleted log_square;
  double maxcut_eps = 0x1p-14;
  int baseline_taylor_degree = 5;
  int softmax_recip_precision = 24;  // row-sum reciprocal, never below the input precision

  static ApproxParams defaults();
};

// Square-completed form of a quartic; k4_pow2 is the power of two nearest k4.
SquareCompleted complete_square(const std::array<double, 5>& coeffs);

// Largest |k4 (((z+t3)^2+t2)^2 + t1 z + t0) - sum k_i z^i| over a grid on [0,1].
double square_completion_error(const std::array<double, 5>& coeffs, const SquareCompleted& sq);

// Output of attention_exp divided by e^x: the power of two standing in for k4
// over k4 itself.
double attention_exp_gain(const ApproxParams& ap);

// Taylor coefficients of 2^z at 0, ascending.
std::vector<double> taylor_exp2(int degree);

inline constexpr int kBaselineWidth = 31;
inline constexpr int kBaselinePrecision = 16;

// 1/x for |x| in [2^-p, 2^p).
ArithTensor<u64> reciprocal(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap);

// e^x; exactly 0 once x * log2(e) < -p.
ArithTensor<u64> exponentiation(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap);

// ln x for x > 0. Without big_input_check x must stay below 2^p.
ArithTensor<u64> logarithm(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap,
                           bool big_input_check = false);

// e^x with the 31-bit, p = 16 semantics of the baseline (frac_bits must be 16).
ArithTensor<u64> baseline_exp(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap);

// attention_exp_gain * 2^x' for shares of x' = x log2(e) < 0. The input ring
// is normally 32 bits; the sign is read from its top bit.
template <RingWord T>
ArithTensor<u64> attention_exp(Session& s, const ArithTensor<T>& x_scaled, const ApproxParams& ap);

// Plaintext Newton forms used by reciprocal.
double newton_product(double z, int iters);
double newton_iterate(double z, int iters);

}  // namespace mpfix
