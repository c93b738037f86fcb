#include "mpfix/nonlinear.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace mpfix {

ApproxParams ApproxParams::defaults() {
  ApproxParams ap;
  ap.exp_coeffs = {1.00000259, 0.69300383, 0.24144276, 0.05201146, 0.01353417};
  ap.exp_square = {0.015625, 0.96074360, 6.15066406, 24.02000383, 23.85013773};
  ap.log_coeffs = {0.0, 1.442547, -0.726980, 0.496404, -0.268344};
  ap.log_square = {-0.25, -0.46246981, 0.712932283, -3.66125013, -0.858977912};
  return ap;
}

SquareCompleted complete_square(const std::array<double, 5>& k) {
  if (k[4] == 0) throw ConfigError("complete_square: leading coefficient is zero");
  SquareCompleted sq;
  sq.k4_pow2 = std::exp2(std::round(std::log2(std::fabs(k[4])))) * (k[4] < 0 ? -1 : 1);
  sq.t3 = k[3] / (4 * k[4]);
  sq.t2 = (k[2] / k[4] - 6 * sq.t3 * sq.t3) / 2;
  const double u = sq.t3 * sq.t3 + sq.t2;
  sq.t1 = k[1] / k[4] - 4 * sq.t3 * u;
  sq.t0 = k[0] / k[4] - u * u;
  return sq;
}

double square_completion_error(const std::array<double, 5>& k, const SquareCompleted& sq) {
  double worst = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double z = i / 1000.0;
    const double quartic = (((k[4] * z + k[3]) * z + k[2]) * z + k[1]) * z + k[0];
    const double inner = (z + sq.t3) * (z + sq.t3) + sq.t2;
    const double completed = k[4] * (inner * inner + sq.t1 * z + sq.t0);
    worst = std::max(worst, std::fabs(quartic - completed));
  }
  return worst;
}

double attention_exp_gain(const ApproxParams& ap) { return ap.exp_square.k4_pow2 / ap.exp_coeffs[4]; }

std::vector<double> taylor_exp2(int degree) {
  std::vector<double> c(degree + 1);
  double term = 1;
  for (int k = 0; k <= degree; ++k) {
    c[k] = term;
    term *= std::numbers::ln2 / (k + 1);
  }
  return c;
}

double newton_product(double z, int iters) {
  const double q = 1 - z;
  double acc = 1, pw = q;
  for (int i = 0; i < iters; ++i) {
    acc *= 1 + pw;
    pw *= pw;
  }
  return acc;
}

double newton_iterate(double z, int iters) {
  double x = 1;
  for (int i = 0; i < iters; ++i) x = x * (2 - z * x);
  return x;
}

namespace {

int ceil_log2(int n) { return n <= 1 ? 0 : static_cast<int>(std::bit_width(static_cast<unsigned>(n - 1))); }

// Bit j of the result is bit positions[j] of x.
BitTensor gather_bits(const BitTensor& x, const std::vector<int>& positions) {
  BitTensor z(x.shape, static_cast<int>(positions.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::uint64_t w = 0;
    for (std::size_t j = 0; j < positions.size(); ++j) w |= ((x.words[i] >> positions[j]) & 1) << j;
    z.words[i] = w;
  }
  return z;
}

// Places the width-1 tensor b at bit `at` of x (which must be zero there).
BitTensor append_bit(BitTensor x, const BitTensor& b, int at) {
  x.width = std::max(x.width, at + 1);
  for (std::size_t i = 0; i < x.size(); ++i) x.words[i] |= (b.words[i] & 1) << at;
  return x;
}

template <RingWord T>
ArithTensor<T> one_minus(const ArithTensor<T>& b, int party) {
  return add_const(neg(b), T{1}, party);
}

// Product of integer-valued factors, pairwise per round.
ArithTensor<u64> product_tree(Session& s, std::vector<ArithTensor<u64>> f) {
  while (f.size() > 1) {
    std::vector<MulPair<u64>> pairs;
    for (std::size_t i = 0; i + 1 < f.size(); i += 2) pairs.push_back({&f[i], &f[i + 1]});
    auto prods = mul_many<u64>(s, pairs);
    if (f.size() % 2 == 1) prods.push_back(std::move(f.back()));
    f = std::move(prods);
  }
  return std::move(f.front());
}

// 1 + (2^(2^i) - 1) b_i for each integer bit b_i.
std::vector<ArithTensor<u64>> power_factors(const std::vector<ArithTensor<u64>>& conv, int first, int count,
                                            int party) {
  std::vector<ArithTensor<u64>> out;
  for (int i = 0; i < count; ++i) {
    const u64 k = ring_shl<u64>(1, 1 << i) - 1;
    out.push_back(add_const(scale_int(conv[first + i], k), u64{1}, party));
  }
  return out;
}

std::vector<ArithTensor<u64>> take_range(std::vector<ArithTensor<u64>>& v, int first, int count) {
  return {std::make_move_iterator(v.begin() + first), std::make_move_iterator(v.begin() + first + count)};
}

}  // namespace

ArithTensor<u64> reciprocal(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap) {
  OpScope scope(s.metrics(), "reciprocal");
  constexpr int l = 64;
  const int p = x.frac_bits;
  const int party = s.party();

  auto bits = decompose<u64>(s, x);
  const BitTensor sign = bits.bit(l - 1);
  BitTensor folded = slice_bits(bits, 0, l - 1);
  for (std::size_t i = 0; i < folded.size(); ++i) {
    if (sign.words[i]) folded.words[i] ^= folded.mask();
  }
  auto marker = lmo(s, folded);

  // Scaling factor bits: bit j is the marker at 2p-1-j; bits >= 2p dropped.
  std::vector<int> swapped(2 * p);
  for (int j = 0; j < 2 * p; ++j) swapped[j] = 2 * p - 1 - j;
  auto conv = bits_to_arith<u64>(s, append_bit(gather_bits(marker, swapped), sign, 2 * p), 0, 2 * p + 1);
  const auto sgn = conv[2 * p];
  conv.resize(2 * p);
  const auto t = compose_arith<u64>(conv, p);

  auto sx = mul<u64>(s, sgn, x);
  const auto xplus = sub(x, scale_int(sx, u64{2}));
  auto y = truncate<u64>(s, mul<u64>(s, t, xplus), p);

  // h(y) = prod_{i<d} (1 + q^(2^i)), q = 1 - y.
  const u64 one = ring_shl<u64>(1, p);
  auto q = add_const(neg(y), one, party);
  auto acc = add_const(q, one, party);
  auto pw = q;
  for (int i = 1; i < ap.newton_iters; ++i) {
    if (i == 1) {
      pw = truncate<u64>(s, mul<u64>(s, pw, pw), p);
    } else {
      const auto factor = add_const(pw, one, party);
      const MulPair<u64> pairs[2] = {{&acc, &factor}, {&pw, &pw}};
      auto prods = mul_many<u64>(s, pairs);
      const std::vector<const ArithTensor<u64>*> ptrs{&prods[0], &prods[1]};
      const int shifts[2] = {p, p};
      auto tr = truncate_many<u64>(s, ptrs, shifts);
      acc = std::move(tr[0]);
      pw = std::move(tr[1]);
    }
  }
  if (ap.newton_iters > 1) acc = truncate<u64>(s, mul<u64>(s, acc, add_const(pw, one, party)), p);
  if (ap.newton_iters < 1) acc = add_const(ArithTensor<u64>(x.shape, p), one, party);

  auto r = truncate<u64>(s, mul<u64>(s, t, acc), p);
  auto sr = mul<u64>(s, sgn, r);
  return sub(r, scale_int(sr, u64{2}));
}

ArithTensor<u64> exponentiation(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap) {
  OpScope scope(s.metrics(), "exponentiation");
  constexpr int l = 64;
  const int p = x.frac_bits;
  const int party = s.party();

  auto xs = scale_fixed<u64>(s, x, std::numbers::log2e, p);
  xs = add_const(xs, ring_shl<u64>(static_cast<u64>(p), 2 * p), party);
  // Bits below p are dropped here, which stands in for truncating x' back to p.
  auto bits = decompose<u64>(s, xs);
  const int c = ceil_log2(l - p - 1);

  std::vector<int> pos;
  for (int i = 0; i < p + c; ++i) pos.push_back(p + i);
  pos.push_back(l - 1);
  auto conv = bits_to_arith<u64>(s, gather_bits(bits, pos), 0, p + c + 1);

  const auto sign = conv[p + c];
  auto I = product_tree(s, power_factors(conv, p, c, party));
  const auto t = compose_arith<u64>(take_range(conv, 0, p), p);
  auto f = evaluate_poly<u64>(s, t, ap.exp_coeffs);
  auto y = mul<u64>(s, I, f);
  return with_precision(truncate<u64>(s, mul<u64>(s, one_minus(sign, party), y), p), p);
}

template <RingWord T>
ArithTensor<u64> attention_exp(Session& s, const ArithTensor<T>& x, const ApproxParams& ap) {
  OpScope scope(s.metrics(), "attention_exp");
  constexpr int half = kRingBits<T>;
  const int p = x.frac_bits;
  const int party = s.party();
  const auto& sq = ap.exp_square;
  const int k4_shift = static_cast<int>(std::lround(-std::log2(sq.k4_pow2)));
  if (std::ldexp(1.0, -k4_shift) != sq.k4_pow2) throw ConfigError("attention_exp: k4 replacement must be a power of two");

  auto biased = add_const(x, ring_shl<T>(static_cast<T>(p), p), party);
  auto bits = decompose<T>(s, biased);
  const int c = ceil_log2(p);

  std::vector<int> pos;
  for (int i = 0; i < p + c; ++i) pos.push_back(i);
  pos.push_back(half - 1);
  auto conv = bits_to_arith<u64>(s, gather_bits(bits, pos), 0, p + c + 1);

  const auto sign = conv[p + c];
  auto I = product_tree(s, power_factors(conv, p, c, party));
  const auto t = compose_arith<u64>(take_range(conv, 0, p), p);

  // k4' ((t + t3)^2 + t2)^2 + (k4' t1) t + k4' t0
  const auto u = add_const(t, encode_constant<u64>(sq.t3, p), party);
  const auto u2 = mul<u64>(s, u, u);
  const auto lin = scale_fixed<u64>(s, t, sq.k4_pow2 * sq.t1, p);
  const std::vector<const ArithTensor<u64>*> ptrs{&u2, &lin};
  const int shifts[2] = {p, p};
  auto tr = truncate_many<u64>(s, ptrs, shifts);
  const auto v = add_const(tr[0], encode_constant<u64>(sq.t2, p), party);
  auto f = truncate<u64>(s, mul<u64>(s, v, v), p + k4_shift);
  f.frac_bits = p;
  add_in_place(f, tr[1]);
  f = add_const(f, encode_constant<u64>(sq.k4_pow2 * sq.t0, p), party);

  auto y = mul<u64>(s, I, f);
  return with_precision(truncate<u64>(s, mul<u64>(s, one_minus(sign, party), y), p), p);
}

template ArithTensor<u64> attention_exp<u32>(Session&, const ArithTensor<u32>&, const ApproxParams&);
template ArithTensor<u64> attention_exp<u64>(Session&, const ArithTensor<u64>&, const ApproxParams&);

namespace {

// Natural log for x < 2^p.
ArithTensor<u64> logarithm_core(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap) {
  const int p = x.frac_bits;
  const int party = s.party();
  const int w = 2 * p;

  auto bits = decompose<u64>(s, x);
  const BitTensor low = slice_bits(bits, 0, w);
  auto marker = lmo(s, low);
  // The bit right below the leading one.
  auto follow = and_bits(s, low, shift_right(marker, 1));
  BitTensor r_bit(x.shape, 1);
  for (std::size_t i = 0; i < r_bit.size(); ++i) r_bit.words[i] = std::popcount(follow.words[i]) & 1;

  auto conv = bits_to_arith<u64>(s, append_bit(marker, r_bit, w), 0, w + 1);
  const auto r = conv[w];

  ArithTensor<u64> exponent(x.shape, 0);
  ArithTensor<u64> m(x.shape, p);
  for (int i = 0; i < w; ++i) {
    add_in_place(exponent, scale_int(conv[i], static_cast<u64>(static_cast<std::int64_t>(i - p))));
    add_in_place(m, scale_int(conv[i], ring_shl<u64>(1, w - 1 - i)));
  }

  auto xr = mul<u64>(s, x, r);
  const auto doubled = sub(scale_int(x, u64{2}), xr);
  auto t = truncate<u64>(s, mul<u64>(s, doubled, m), p);
  t = add_const(t, u64{0} - ring_shl<u64>(1, p), party);
  auto yr = evaluate_poly<u64>(s, t, ap.log_coeffs);

  auto sum = add(yr, with_precision(scale_int(add(exponent, r), ring_shl<u64>(1, p)), p));
  return truncate<u64>(s, scale_fixed<u64>(s, sum, std::numbers::ln2, p), p);
}

ArithTensor<u64> stack(const ArithTensor<u64>& a, const ArithTensor<u64>& b) {
  ArithTensor<u64> z({a.size() + b.size()}, a.frac_bits);
  std::copy(a.data.begin(), a.data.end(), z.data.begin());
  std::copy(b.data.begin(), b.data.end(), z.data.begin() + a.size());
  return z;
}

ArithTensor<u64> part(const ArithTensor<u64>& z, std::size_t off, const Shape& shape) {
  const std::size_t n = shape_size(shape);
  return ArithTensor<u64>(shape, std::vector<u64>(z.data.begin() + off, z.data.begin() + off + n), z.frac_bits);
}

}  // namespace

ArithTensor<u64> logarithm(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap, bool big_input_check) {
  OpScope scope(s.metrics(), "logarithm");
  if (!big_input_check) return logarithm_core(s, x, ap);

  constexpr int l = 64;
  const int p = x.frac_bits;
  const int party = s.party();
  const int drop = l - 2 * p;
  auto shrunk = with_precision(truncate<u64>(s, x, drop), p);
  auto both = logarithm_core(s, stack(x, shrunk), ap);
  auto small = part(both, 0, x.shape);
  auto big = add_const(part(both, x.size(), x.shape), encode_constant<u64>(drop * std::numbers::ln2, p), party);

  ArithTensor<u64> bound(x.shape, p);
  if (party == kConstantParty) std::fill(bound.data.begin(), bound.data.end(), ring_shl<u64>(1, 2 * p) - 1);
  auto is_big = bit2a<u64>(s, gt<u64>(s, x, bound));
  return select<u64>(s, is_big, big, small);
}

ArithTensor<u64> baseline_exp(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap) {
  OpScope scope(s.metrics(), "baseline_exp");
  constexpr int lb = kBaselineWidth;
  const int p = x.frac_bits;
  if (p != kBaselinePrecision) throw ConfigError("baseline_exp expects precision 16");
  const int party = s.party();

  auto xs = truncate<u64>(s, scale_fixed<u64>(s, x, std::numbers::log2e, p), p);
  auto bits = decompose<u64>(s, xs, lb);
  // Underflow gate: x' + (l - p - 1) < 0.
  const std::vector<u64> offset(x.size(), static_cast<u64>(lb - p - 1) << p);
  const auto gate = public_add(s, bits, offset).bit(lb - 1);
  const int c = ceil_log2(lb - p);

  std::vector<int> pos;
  for (int i = 0; i < p + c; ++i) pos.push_back(i);
  pos.push_back(lb - 1);
  auto conv = bits_to_arith<u64>(s, append_bit(gather_bits(bits, pos), gate, p + c + 1), 0, p + c + 2);

  const auto sign = conv[p + c];
  const auto b = conv[p + c + 1];
  auto I = product_tree(s, power_factors(conv, p, c, party));
  const auto t = compose_arith<u64>(take_range(conv, 0, p), p);
  const auto coeffs = taylor_exp2(ap.baseline_taylor_degree);
  auto d = evaluate_poly<u64>(s, t, coeffs);
  auto yplus = mul<u64>(s, I, d);
  auto yminus = with_precision(truncate<u64>(s, yplus, 1 << c), p);
  auto y = add(with_precision(mul<u64>(s, sign, sub(yminus, yplus)), p), yplus);
  auto out = mul<u64>(s, one_minus(b, party), y);
  out.frac_bits = p;
  return out;
}

}  // namespace mpfix
