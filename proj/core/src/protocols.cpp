#include "mpfix/protocols.hpp"

#include <cstring>

#include "mpfix/linalg.hpp"
#include "mpfix/precomp.hpp"

namespace mpfix {

namespace {

std::size_t packed_bytes(std::size_t count, int width) {
  return (count * static_cast<std::size_t>(width) + 7) / 8;
}

Bytes pack(std::span<const std::uint64_t> words, int width) {
  Bytes out(packed_bytes(words.size(), width), 0);
  if (width % 8 == 0) {
    const std::size_t wb = width / 8;
    for (std::size_t i = 0; i < words.size(); ++i) std::memcpy(out.data() + i * wb, &words[i], wb);
    return out;
  }
  std::size_t bit = 0;
  for (auto w : words) {
    for (int j = 0; j < width; ++j, ++bit) {
      if ((w >> j) & 1) out[bit >> 3] |= static_cast<std::uint8_t>(1u << (bit & 7));
    }
  }
  return out;
}

std::vector<std::uint64_t> unpack(const Bytes& in, std::size_t count, int width) {
  std::vector<std::uint64_t> out(count, 0);
  if (width % 8 == 0) {
    const std::size_t wb = width / 8;
    for (std::size_t i = 0; i < count; ++i) std::memcpy(&out[i], in.data() + i * wb, wb);
    return out;
  }
  std::size_t bit = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t w = 0;
    for (int j = 0; j < width; ++j, ++bit) w |= static_cast<std::uint64_t>((in[bit >> 3] >> (bit & 7)) & 1) << j;
    out[i] = w;
  }
  return out;
}

template <RingWord T>
std::vector<std::uint64_t> widen(std::span<const T> v) {
  return std::vector<std::uint64_t>(v.begin(), v.end());
}

template <RingWord T>
std::vector<T> narrow(const std::vector<std::uint64_t>& v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<T>(v[i]);
  return out;
}

}  // namespace

// --- opening and input ------------------------------------------------------

std::vector<std::uint64_t> open_words(Session& s, std::span<const std::uint64_t> shares, int width,
                                      bool xor_shares) {
  const int n = s.parties();
  const std::uint64_t mask = low_mask(width);
  Bytes mine = pack(shares, width);
  std::vector<Bytes> out(n, mine);
  out[s.party()].clear();
  std::vector<std::size_t> expected(n, mine.size());
  auto in = s.net().exchange_all(std::move(out), expected);
  std::vector<std::uint64_t> acc(shares.begin(), shares.end());
  for (int p = 0; p < n; ++p) {
    if (p == s.party()) continue;
    auto theirs = unpack(in[p], shares.size(), width);
    if (xor_shares) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= theirs[i];
    } else {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += theirs[i];
    }
  }
  for (auto& v : acc) v &= mask;
  return acc;
}

template <RingWord T>
std::vector<T> open_values(Session& s, std::span<const T> shares) {
  return narrow<T>(open_words(s, widen<T>(shares), kRingBits<T>, false));
}

BitTensor open_bits(Session& s, const BitTensor& x) {
  return BitTensor(x.shape, x.width, open_words(s, x.words, x.width, true));
}

namespace {

// Owner sends each peer its share; everyone else receives from the owner only.
std::vector<std::uint64_t> distribute(Session& s, int owner, const std::vector<std::vector<std::uint64_t>>& parts,
                                      std::size_t count, int width) {
  const int n = s.parties();
  if (owner < 0 || owner >= n) throw ConfigError("input owner out of range");
  std::vector<Bytes> out(n);
  std::vector<std::size_t> expected(n, 0);
  if (s.party() == owner) {
    for (int p = 0; p < n; ++p) {
      if (p != owner) out[p] = pack(parts[p], width);
    }
  } else {
    expected[owner] = packed_bytes(count, width);
  }
  auto in = s.net().exchange_all(std::move(out), expected);
  if (s.party() == owner) return parts[owner];
  return unpack(in[owner], count, width);
}

}  // namespace

template <RingWord T>
ArithTensor<T> input(Session& s, int owner, std::span<const T> values, const Shape& shape, int frac) {
  const std::size_t count = shape_size(shape);
  std::vector<std::vector<std::uint64_t>> parts;
  if (s.party() == owner) {
    if (values.size() != count) throw ShapeMismatch("input: value count does not match shape");
    auto shares = share_values<T>(values, s.parties(), s.prg());
    for (auto& v : shares) parts.push_back(widen<T>(v));
  }
  auto mine = distribute(s, owner, parts, count, kRingBits<T>);
  return ArithTensor<T>(shape, narrow<T>(mine), frac);
}

BitTensor input_bits(Session& s, int owner, std::span<const std::uint64_t> words, const Shape& shape,
                     int width) {
  const std::size_t count = shape_size(shape);
  std::vector<std::vector<std::uint64_t>> parts;
  if (s.party() == owner) {
    if (words.size() != count) throw ShapeMismatch("input_bits: word count does not match shape");
    parts = share_bits(words, width, s.parties(), s.prg());
  }
  return BitTensor(shape, width, distribute(s, owner, parts, count, width));
}

// --- arithmetic -------------------------------------------------------------

template <RingWord T>
std::vector<ArithTensor<T>> mul_many(Session& s, std::span<const MulPair<T>> pairs) {
  std::size_t total = 0;
  for (const auto& [x, y] : pairs) {
    require_same_shape(x->shape, y->shape, "mul");
    total += x->size();
  }
  s.metrics().count_mul(pairs.size(), total);
  auto tr = take_triples<T>(s.precomp(), total);

  std::vector<T> masked(2 * total);
  std::size_t off = 0;
  for (const auto& [x, y] : pairs) {
    for (std::size_t i = 0; i < x->size(); ++i, ++off) {
      masked[off] = x->data[i] - tr.a[off];
      masked[total + off] = y->data[i] - tr.b[off];
    }
  }
  auto opened = open_values<T>(s, masked);
  const bool lead = s.party() == kConstantParty;

  std::vector<ArithTensor<T>> out;
  out.reserve(pairs.size());
  off = 0;
  for (const auto& [x, y] : pairs) {
    ArithTensor<T> z(x->shape, x->frac_bits + y->frac_bits);
    for (std::size_t i = 0; i < z.size(); ++i, ++off) {
      const T d = opened[off];
      const T e = opened[total + off];
      T v = tr.c[off] + d * tr.b[off] + e * tr.a[off];
      if (lead) v += d * e;
      z.data[i] = v;
    }
    out.push_back(std::move(z));
  }
  return out;
}

template <RingWord T>
ArithTensor<T> mul(Session& s, const ArithTensor<T>& x, const ArithTensor<T>& y) {
  const MulPair<T> p{&x, &y};
  return std::move(mul_many<T>(s, std::span<const MulPair<T>>(&p, 1)).front());
}

template <RingWord T>
ArithTensor<T> scale_fixed(Session& s, const ArithTensor<T>& x, double k, int frac) {
  s.metrics().count_scale();
  const T c = encode_constant<T>(k, frac);
  ArithTensor<T> z(x.shape, x.frac_bits + frac);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = x.data[i] * c;
  return z;
}

template <RingWord T>
ArithTensor<T> scale_fixed(Session& s, const ArithTensor<T>& x, std::span<const double> k, int frac) {
  if (k.size() != x.size()) throw ShapeMismatch("scale_fixed: constant length");
  s.metrics().count_scale();
  ArithTensor<T> z(x.shape, x.frac_bits + frac);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = x.data[i] * encode_constant<T>(k[i], frac);
  return z;
}

namespace {

struct MatDims {
  std::size_t m, k, r;
};

template <RingWord T>
MatDims check_matmul(const ArithTensor<T>& x, const ArithTensor<T>& y) {
  if (x.shape.size() != 2 || y.shape.size() != 2) throw ShapeMismatch("matmul: operands must be matrices");
  if (x.shape[1] != y.shape[0]) {
    throw ShapeMismatch("matmul: inner dimensions " + shape_string(x.shape) + " @ " + shape_string(y.shape));
  }
  return {x.shape[0], x.shape[1], y.shape[1]};
}

}  // namespace

template <RingWord T>
std::vector<ArithTensor<T>> batch_matmul(Session& s, const std::vector<ArithTensor<T>>& xs,
                                         const std::vector<ArithTensor<T>>& ys) {
  if (xs.size() != ys.size()) throw ShapeMismatch("batch_matmul: array lengths differ");
  if (xs.empty()) return {};
  std::vector<MatDims> dims;
  std::vector<MatrixTripleShares<T>> triples;
  std::size_t total = 0;
  for (std::size_t h = 0; h < xs.size(); ++h) {
    try {
      dims.push_back(check_matmul(xs[h], ys[h]));
    } catch (const ShapeMismatch& e) {
      throw ShapeMismatch("batch_matmul[" + std::to_string(h) + "]: " + e.what());
    }
    total += xs[h].size() + ys[h].size();
  }
  s.metrics().count_matmul(xs.size());
  for (const auto& d : dims) triples.push_back(take_matrix_triple<T>(s.precomp(), d.m, d.k, d.r));

  std::vector<T> masked;
  masked.reserve(total);
  for (std::size_t h = 0; h < xs.size(); ++h) {
    for (std::size_t i = 0; i < xs[h].size(); ++i) masked.push_back(xs[h].data[i] - triples[h].a[i]);
    for (std::size_t i = 0; i < ys[h].size(); ++i) masked.push_back(ys[h].data[i] - triples[h].b[i]);
  }
  auto opened = open_values<T>(s, masked);
  const bool lead = s.party() == kConstantParty;

  std::vector<ArithTensor<T>> out;
  std::size_t off = 0;
  for (std::size_t h = 0; h < xs.size(); ++h) {
    const auto [m, k, r] = dims[h];
    std::span<const T> d(opened.data() + off, m * k);
    std::span<const T> e(opened.data() + off + m * k, k * r);
    off += m * k + k * r;
    ArithTensor<T> z({m, r}, std::vector<T>(triples[h].c), xs[h].frac_bits + ys[h].frac_bits);
    matmul_accumulate<T>(d, triples[h].b, z.data, m, k, r);
    matmul_accumulate<T>(triples[h].a, e, z.data, m, k, r);
    if (lead) matmul_accumulate<T>(d, e, z.data, m, k, r);
    out.push_back(std::move(z));
  }
  return out;
}

template <RingWord T>
ArithTensor<T> matmul(Session& s, const ArithTensor<T>& x, const ArithTensor<T>& y) {
  return std::move(batch_matmul<T>(s, {x}, {y}).front());
}

// --- binary -----------------------------------------------------------------

std::vector<BitTensor> and_many(Session& s, std::span<const AndPair> pairs) {
  std::size_t total = 0;
  int width = 0;
  for (const auto& [x, y] : pairs) {
    require_same_shape(x->shape, y->shape, "and");
    if (x->width != y->width) throw ShapeMismatch("and: bit widths differ");
    width = std::max(width, x->width);
    total += x->size();
  }
  auto tr = take_bit_triples(s.precomp(), total);
  std::vector<std::uint64_t> masked(2 * total);
  std::size_t off = 0;
  for (const auto& [x, y] : pairs) {
    const std::uint64_t m = x->mask();
    for (std::size_t i = 0; i < x->size(); ++i, ++off) {
      masked[off] = (x->words[i] ^ tr.a[off]) & m;
      masked[total + off] = (y->words[i] ^ tr.b[off]) & m;
    }
  }
  auto opened = open_words(s, masked, width, true);
  const bool lead = s.party() == kConstantParty;

  std::vector<BitTensor> out;
  out.reserve(pairs.size());
  off = 0;
  for (const auto& [x, y] : pairs) {
    BitTensor z(x->shape, x->width);
    const std::uint64_t m = x->mask();
    for (std::size_t i = 0; i < z.size(); ++i, ++off) {
      const std::uint64_t d = opened[off];
      const std::uint64_t e = opened[total + off];
      std::uint64_t v = tr.c[off] ^ (d & tr.b[off]) ^ (e & tr.a[off]);
      if (lead) v ^= d & e;
      z.words[i] = v & m;
    }
    out.push_back(std::move(z));
  }
  return out;
}

BitTensor and_bits(Session& s, const BitTensor& x, const BitTensor& y) {
  const AndPair p{&x, &y};
  return std::move(and_many(s, std::span<const AndPair>(&p, 1)).front());
}

BitTensor or_bits(Session& s, const BitTensor& x, const BitTensor& y) {
  return bit_xor(bit_xor(x, y), and_bits(s, x, y));
}

BitTensor shift_left(const BitTensor& x, int k) {
  BitTensor z(x.shape, x.width);
  const std::uint64_t m = x.mask();
  for (std::size_t i = 0; i < z.size(); ++i) z.words[i] = k >= 64 ? 0 : (x.words[i] << k) & m;
  return z;
}

BitTensor shift_right(const BitTensor& x, int k) {
  BitTensor z(x.shape, x.width);
  for (std::size_t i = 0; i < z.size(); ++i) z.words[i] = k >= 64 ? 0 : x.words[i] >> k;
  return z;
}

BitTensor not_bits(const BitTensor& x, int party) {
  std::vector<std::uint64_t> ones(x.size(), x.mask());
  return xor_const(x, ones, party);
}

BitTensor slice_bits(const BitTensor& x, int lo, int count) {
  BitTensor z(x.shape, count);
  const std::uint64_t m = low_mask(count);
  for (std::size_t i = 0; i < z.size(); ++i) z.words[i] = (lo >= 64 ? 0 : x.words[i] >> lo) & m;
  return z;
}

namespace {

// Prefix carry network over generate/propagate vectors; returns the carries
// out of each bit position.
BitTensor carry_network(Session& s, BitTensor g, BitTensor p) {
  const int m = g.width;
  for (int k = 1; k < m - 1; k *= 2) {
    BitTensor gs = shift_left(g, k);
    if (2 * k < m - 1) {
      BitTensor ps = shift_left(p, k);
      const AndPair pairs[2] = {{&p, &gs}, {&p, &ps}};
      auto r = and_many(s, pairs);
      g = bit_xor(g, r[0]);
      p = std::move(r[1]);
    } else {
      g = bit_xor(g, and_bits(s, p, gs));
    }
  }
  return g;
}

}  // namespace

BitTensor binary_add(Session& s, const BitTensor& x, const BitTensor& y) {
  require_same_shape(x.shape, y.shape, "binary_add");
  if (x.width != y.width) throw ShapeMismatch("binary_add: bit widths differ");
  BitTensor p = bit_xor(x, y);
  if (x.width <= 1) return p;
  BitTensor g = carry_network(s, and_bits(s, x, y), p);
  return bit_xor(p, shift_left(g, 1));
}

BitTensor public_add(Session& s, const BitTensor& x, std::span<const std::uint64_t> c) {
  if (c.size() != x.size()) throw ShapeMismatch("public_add: constant length");
  std::vector<std::uint64_t> cm(c.begin(), c.end());
  for (auto& v : cm) v &= x.mask();
  BitTensor p = xor_const(x, cm, s.party());
  if (x.width <= 1) return p;
  BitTensor g = carry_network(s, and_const(x, cm), p);
  return bit_xor(p, shift_left(g, 1));
}

// --- conversions ------------------------------------------------------------

template <RingWord T>
std::vector<ArithTensor<T>> bits_to_arith(Session& s, const BitTensor& x, int lo, int count) {
  if (count <= 0) return {};
  if (lo < 0 || lo + count > x.width) throw ShapeMismatch("bits_to_arith: bit range outside width");
  const std::size_t n = x.size();
  const std::size_t total = n * static_cast<std::size_t>(count);
  auto db = take_dabits<T>(s.precomp(), total);
  std::vector<std::uint64_t> masked(total);
  for (int j = 0; j < count; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = j * n + i;
      masked[k] = ((x.words[i] >> (lo + j)) & 1) ^ db.bits[k];
    }
  }
  auto opened = open_words(s, masked, 1, true);
  const bool lead = s.party() == kConstantParty;
  std::vector<ArithTensor<T>> out;
  out.reserve(count);
  for (int j = 0; j < count; ++j) {
    ArithTensor<T> z(x.shape, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = j * n + i;
      const T c = static_cast<T>(opened[k]);
      T v = db.arith[k] - T{2} * c * db.arith[k];
      if (lead) v += c;
      z.data[i] = v;
    }
    out.push_back(std::move(z));
  }
  return out;
}

template <RingWord T>
ArithTensor<T> bit2a(Session& s, const BitTensor& bit) {
  return std::move(bits_to_arith<T>(s, bit, 0, 1).front());
}

template <RingWord T>
ArithTensor<T> compose_arith(const std::vector<ArithTensor<T>>& bits, int frac) {
  if (bits.empty()) throw ShapeMismatch("compose: no bits");
  ArithTensor<T> z(bits.front().shape, frac);
  for (std::size_t j = 0; j < bits.size(); ++j) {
    const T w = ring_shl<T>(T{1}, static_cast<int>(j));
    for (std::size_t i = 0; i < z.size(); ++i) z.data[i] += w * bits[j].data[i];
  }
  return z;
}

template <RingWord T>
ArithTensor<T> compose(Session& s, const BitTensor& x, int lo, int count, int frac) {
  return compose_arith<T>(bits_to_arith<T>(s, x, lo, count), frac);
}

template <RingWord T>
BitTensor decompose(Session& s, const ArithTensor<T>& x, int width) {
  if (width <= 0 || width > kRingBits<T>) throw ShapeMismatch("decompose: width outside ring");
  const std::size_t n = x.size();
  auto eb = take_edabits<T>(s.precomp(), width, n);
  const std::uint64_t m = low_mask(width);
  std::vector<std::uint64_t> masked(n);
  for (std::size_t i = 0; i < n; ++i) masked[i] = static_cast<std::uint64_t>(static_cast<T>(x.data[i] - eb.arith[i])) & m;
  auto c = open_words(s, masked, width, false);
  BitTensor r(x.shape, width, std::move(eb.bits));
  return public_add(s, r, c);
}

template <RingWord T>
BitTensor gt(Session& s, const ArithTensor<T>& x, const ArithTensor<T>& y) {
  auto bits = decompose<T>(s, sub(y, x));
  return bits.bit(kRingBits<T> - 1);
}

#define MPFIX_INSTANTIATE(T)                                                                                 \
  template std::vector<T> open_values<T>(Session&, std::span<const T>);                                     \
  template ArithTensor<T> input<T>(Session&, int, std::span<const T>, const Shape&, int);                   \
  template ArithTensor<T> mul<T>(Session&, const ArithTensor<T>&, const ArithTensor<T>&);                   \
  template std::vector<ArithTensor<T>> mul_many<T>(Session&, std::span<const MulPair<T>>);                 \
  template ArithTensor<T> scale_fixed<T>(Session&, const ArithTensor<T>&, double, int);                     \
  template ArithTensor<T> scale_fixed<T>(Session&, const ArithTensor<T>&, std::span<const double>, int);    \
  template ArithTensor<T> matmul<T>(Session&, const ArithTensor<T>&, const ArithTensor<T>&);                \
  template std::vector<ArithTensor<T>> batch_matmul<T>(Session&, const std::vector<ArithTensor<T>>&,        \
                                                       const std::vector<ArithTensor<T>>&);                 \
  template ArithTensor<T> bit2a<T>(Session&, const BitTensor&);                                             \
  template std::vector<ArithTensor<T>> bits_to_arith<T>(Session&, const BitTensor&, int, int);              \
  template ArithTensor<T> compose<T>(Session&, const BitTensor&, int, int, int);                            \
  template ArithTensor<T> compose_arith<T>(const std::vector<ArithTensor<T>>&, int);                        \
  template BitTensor decompose<T>(Session&, const ArithTensor<T>&, int);                                    \
  template BitTensor gt<T>(Session&, const ArithTensor<T>&, const ArithTensor<T>&);

MPFIX_INSTANTIATE(std::uint32_t)
MPFIX_INSTANTIATE(std::uint64_t)

#undef MPFIX_INSTANTIATE

}  // namespace mpfix
