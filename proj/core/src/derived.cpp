#include "mpfix/derived.hpp"

#include <algorithm>

namespace mpfix {

namespace {

// Core of the probabilistic truncation for unsigned secrets. With
// r = 2^(l-1) b + 2^f r_hi + r_lo and c = x + r opened, the top bit of
// x + r_lo + 2^f r_hi is c_top ^ b, which lets the shift ignore the wrap.
template <RingWord T>
std::vector<ArithTensor<T>> unsigned_truncate_many(Session& s, const std::vector<const ArithTensor<T>*>& xs,
                                                   std::span<const int> shifts) {
  constexpr int l = kRingBits<T>;
  if (xs.size() != shifts.size()) throw ShapeMismatch("truncate: one shift per tensor required");
  struct Mask {
    EdaBits<T> lo, hi;
    DaBits<T> top;
  };
  std::vector<Mask> masks(xs.size());
  std::vector<T> masked;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const int f = shifts[t];
    if (f < 0 || f >= l - 1) throw ConfigError("truncate: shift out of range");
    if (f == 0) continue;
    const std::size_t n = xs[t]->size();
    masks[t].lo = take_edabits<T>(s.precomp(), f, n);
    masks[t].hi = take_edabits<T>(s.precomp(), l - 1 - f, n);
    masks[t].top = take_dabits<T>(s.precomp(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const T r = ring_shl<T>(masks[t].top.arith[i], l - 1) + ring_shl<T>(masks[t].hi.arith[i], f) + masks[t].lo.arith[i];
      masked.push_back(xs[t]->data[i] + r);
    }
  }
  std::vector<T> opened;
  if (!masked.empty()) opened = open_values<T>(s, masked);

  const bool lead = s.party() == kConstantParty;
  const T low = ring_shl<T>(T{1}, l - 1) - T{1};
  std::vector<ArithTensor<T>> out;
  out.reserve(xs.size());
  std::size_t off = 0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const int f = shifts[t];
    if (f == 0) {
      out.push_back(*xs[t]);
      continue;
    }
    ArithTensor<T> z(xs[t]->shape, std::max(0, xs[t]->frac_bits - f));
    const T top_weight = ring_shl<T>(T{1}, l - 1 - f);
    for (std::size_t i = 0; i < z.size(); ++i, ++off) {
      const T c = opened[off];
      const T c_top = c >> (l - 1);
      const T b = masks[t].top.arith[i];
      // Shares of the top bit of the unwrapped sum: c_top xor b.
      T v_top = b - T{2} * c_top * b;
      if (lead) v_top += c_top;
      T v = top_weight * v_top - masks[t].hi.arith[i];
      if (lead) v += (c & low) >> f;
      z.data[i] = v;
    }
    out.push_back(std::move(z));
  }
  return out;
}

}  // namespace

template <RingWord T>
ArithTensor<T> unsigned_truncate(Session& s, const ArithTensor<T>& x, int f) {
  s.metrics().count_trunc();
  const std::vector<const ArithTensor<T>*> xs{&x};
  return std::move(unsigned_truncate_many<T>(s, xs, std::span<const int>(&f, 1)).front());
}

template <RingWord T>
std::vector<ArithTensor<T>> truncate_many(Session& s, const std::vector<const ArithTensor<T>*>& xs,
                                          std::span<const int> shifts) {
  constexpr int l = kRingBits<T>;
  const T bias = ring_shl<T>(T{1}, l - 2);
  std::vector<ArithTensor<T>> shifted;
  shifted.reserve(xs.size());
  std::size_t active = 0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    shifted.push_back(shifts[t] == 0 ? *xs[t] : add_const(*xs[t], bias, s.party()));
    if (shifts[t] != 0) ++active;
  }
  s.metrics().count_trunc(active);
  std::vector<const ArithTensor<T>*> ptrs;
  for (const auto& v : shifted) ptrs.push_back(&v);
  auto out = unsigned_truncate_many<T>(s, ptrs, shifts);
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (shifts[t] != 0) out[t] = add_const(out[t], T{0} - ring_shl<T>(T{1}, l - 2 - shifts[t]), s.party());
  }
  return out;
}

template <RingWord T>
ArithTensor<T> truncate(Session& s, const ArithTensor<T>& x, int f) {
  const std::vector<const ArithTensor<T>*> xs{&x};
  return std::move(truncate_many<T>(s, xs, std::span<const int>(&f, 1)).front());
}

template <RingWord T>
ArithTensor<T> rescale(Session& s, const ArithTensor<T>& x, int frac) {
  if (x.frac_bits < frac) throw ConfigError("rescale: cannot raise precision by truncation");
  if (x.frac_bits == frac) return x;
  return truncate<T>(s, x, x.frac_bits - frac);
}

template <RingWord T>
ArithTensor<T> evaluate_poly(Session& s, const ArithTensor<T>& x, std::span<const double> coeffs) {
  if (coeffs.empty()) throw ConfigError("evaluate_poly: empty coefficient list");
  const int p = x.frac_bits;
  const int degree = static_cast<int>(coeffs.size()) - 1;
  std::vector<ArithTensor<T>> pow(degree + 1);
  if (degree >= 1) pow[1] = x;
  for (int have = 1; have < degree;) {
    const int top = std::min(2 * have, degree);
    std::vector<MulPair<T>> pairs;
    for (int j = have + 1; j <= top; ++j) pairs.push_back({&pow[have], &pow[j - have]});
    auto prods = mul_many<T>(s, pairs);
    std::vector<const ArithTensor<T>*> ptrs;
    for (const auto& v : prods) ptrs.push_back(&v);
    std::vector<int> shifts(prods.size(), p);
    auto truncated = truncate_many<T>(s, ptrs, shifts);
    for (int j = have + 1; j <= top; ++j) pow[j] = std::move(truncated[j - have - 1]);
    have = top;
  }
  ArithTensor<T> acc(x.shape, 2 * p);
  for (int i = 1; i <= degree; ++i) {
    if (coeffs[i] == 0.0) continue;
    add_in_place(acc, scale_fixed<T>(s, pow[i], coeffs[i], p));
  }
  acc = add_const(acc, encode_constant<T>(coeffs[0], 2 * p), s.party());
  return truncate<T>(s, acc, p);
}

BitTensor lmo(Session& s, const BitTensor& x) {
  BitTensor y = x;
  for (int k = 1; k < x.width; k *= 2) y = or_bits(s, y, shift_right(y, k));
  return bit_xor(y, shift_right(y, 1));
}

template <RingWord T>
ArithTensor<T> select(Session& s, const ArithTensor<T>& b, const ArithTensor<T>& x, const ArithTensor<T>& y) {
  auto d = mul<T>(s, b, sub(x, y));
  d.frac_bits = y.frac_bits;
  return add(d, y);
}

template <RingWord T>
ArithTensor<T> max_vec(Session& s, const ArithTensor<T>& x) {
  if (x.shape.empty() || x.shape.back() == 0) throw ShapeMismatch("max_vec: empty last axis");
  const std::size_t cols = x.shape.back();
  const std::size_t rows = x.size() / cols;
  // Current candidates, column-major per row group: cur[c * rows + r].
  std::vector<T> cur(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) cur[c * rows + r] = x.data[r * cols + c];
  }
  std::size_t w = cols;
  while (w > 1) {
    const std::size_t h = w / 2;
    ArithTensor<T> a({h * rows}, std::vector<T>(cur.begin(), cur.begin() + h * rows), x.frac_bits);
    ArithTensor<T> b({h * rows}, std::vector<T>(cur.begin() + h * rows, cur.begin() + 2 * h * rows), x.frac_bits);
    auto g = bit2a<T>(s, gt<T>(s, a, b));
    auto m = select<T>(s, g, a, b);
    std::vector<T> next(m.data);
    if (w % 2 == 1) next.insert(next.end(), cur.begin() + 2 * h * rows, cur.begin() + (2 * h + 1) * rows);
    cur = std::move(next);
    w = (w + 1) / 2;
  }
  Shape shape = x.shape;
  shape.back() = 1;
  return ArithTensor<T>(shape, std::move(cur), x.frac_bits);
}

#define MPFIX_INSTANTIATE(T)                                                                                  \
  template ArithTensor<T> unsigned_truncate<T>(Session&, const ArithTensor<T>&, int);                        \
  template ArithTensor<T> truncate<T>(Session&, const ArithTensor<T>&, int);                                 \
  template std::vector<ArithTensor<T>> truncate_many<T>(Session&, const std::vector<const ArithTensor<T>*>&, \
                                                        std::span<const int>);                               \
  template ArithTensor<T> rescale<T>(Session&, const ArithTensor<T>&, int);                                  \
  template ArithTensor<T> evaluate_poly<T>(Session&, const ArithTensor<T>&, std::span<const double>);        \
  template ArithTensor<T> select<T>(Session&, const ArithTensor<T>&, const ArithTensor<T>&,                  \
                                    const ArithTensor<T>&);                                                  \
  template ArithTensor<T> max_vec<T>(Session&, const ArithTensor<T>&);

MPFIX_INSTANTIATE(std::uint32_t)
MPFIX_INSTANTIATE(std::uint64_t)

#undef MPFIX_INSTANTIATE

}  // namespace mpfix
