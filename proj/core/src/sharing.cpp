#include "mpfix/sharing.hpp"

#include <sstream>

namespace mpfix {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <RingWord T>
std::vector<std::vector<T>> share_values(std::span<const T> values, int parties, Prg& prg) {
  if (parties < 2) throw ConfigError("sharing needs at least two parties");
  std::vector<std::vector<T>> out(parties, std::vector<T>(values.size()));
  std::vector<T> last(values.begin(), values.end());
  for (int i = 0; i + 1 < parties; ++i) {
    prg.fill<T>(out[i]);
    for (std::size_t k = 0; k < values.size(); ++k) last[k] -= out[i][k];
  }
  out[parties - 1] = std::move(last);
  return out;
}

std::vector<std::vector<std::uint64_t>> share_bits(std::span<const std::uint64_t> words, int width,
                                                   int parties, Prg& prg) {
  if (parties < 2) throw ConfigError("sharing needs at least two parties");
  const std::uint64_t m = low_mask(width);
  std::vector<std::vector<std::uint64_t>> out(parties, std::vector<std::uint64_t>(words.size()));
  std::vector<std::uint64_t> last(words.size());
  for (std::size_t k = 0; k < words.size(); ++k) last[k] = words[k] & m;
  for (int i = 0; i + 1 < parties; ++i) {
    prg.fill<std::uint64_t>(out[i]);
    for (std::size_t k = 0; k < words.size(); ++k) {
      out[i][k] &= m;
      last[k] ^= out[i][k];
    }
  }
  out[parties - 1] = std::move(last);
  return out;
}

std::vector<BitTensor> share_bit_tensor(const BitTensor& plain, int parties, Prg& prg) {
  auto parts = share_bits(plain.words, plain.width, parties, prg);
  std::vector<BitTensor> out;
  out.reserve(parties);
  for (auto& p : parts) out.emplace_back(plain.shape, plain.width, std::move(p));
  return out;
}

template <RingWord T>
std::vector<T> reconstruct_values(const std::vector<std::vector<T>>& shares) {
  if (shares.empty()) return {};
  std::vector<T> out(shares[0].size(), T{0});
  for (const auto& s : shares) {
    if (s.size() != out.size()) throw ShapeMismatch("reconstruct: share lengths differ");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += s[k];
  }
  return out;
}

std::vector<std::uint64_t> reconstruct_bits(const std::vector<std::vector<std::uint64_t>>& shares) {
  if (shares.empty()) return {};
  std::vector<std::uint64_t> out(shares[0].size(), 0);
  for (const auto& s : shares) {
    if (s.size() != out.size()) throw ShapeMismatch("reconstruct: share lengths differ");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] ^= s[k];
  }
  return out;
}

ArithTensor<std::uint32_t> cast_down(const ArithTensor<std::uint64_t>& x) {
  ArithTensor<std::uint32_t> z(x.shape, x.frac_bits);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = cast_down(x.data[i]);
  return z;
}

BitTensor bit_xor(const BitTensor& x, const BitTensor& y) {
  require_same_shape(x.shape, y.shape, "xor");
  BitTensor z(x.shape, std::max(x.width, y.width));
  for (std::size_t i = 0; i < z.size(); ++i) z.words[i] = x.words[i] ^ y.words[i];
  return z;
}

BitTensor xor_const(const BitTensor& x, std::span<const std::uint64_t> c, int party) {
  if (c.size() != x.size()) throw ShapeMismatch("xor_const: constant length");
  BitTensor z = x;
  if (party == kConstantParty) {
    const std::uint64_t m = x.mask();
    for (std::size_t i = 0; i < z.size(); ++i) z.words[i] ^= c[i] & m;
  }
  return z;
}

BitTensor and_const(const BitTensor& x, std::span<const std::uint64_t> c) {
  if (c.size() != x.size()) throw ShapeMismatch("and_const: constant length");
  BitTensor z = x;
  for (std::size_t i = 0; i < z.size(); ++i) z.words[i] &= c[i];
  return z;
}

template std::vector<std::vector<std::uint32_t>> share_values<std::uint32_t>(
    std::span<const std::uint32_t>, int, Prg&);
template std::vector<std::vector<std::uint64_t>> share_values<std::uint64_t>(
    std::span<const std::uint64_t>, int, Prg&);
template std::vector<std::uint32_t> reconstruct_values(const std::vector<std::vector<std::uint32_t>>&);
template std::vector<std::uint64_t> reconstruct_values(const std::vector<std::vector<std::uint64_t>>&);

}  // namespace mpfix
