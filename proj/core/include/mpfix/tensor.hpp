#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mpfix/errors.hpp"
#include "mpfix/ring.hpp"

namespace mpfix {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeMismatch(std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
  }
}

// One party's additive shares of a tensor over Z_2^l, all elements at one
// fixed-point precision. The same container carries opened plaintext values.
template <RingWord T>
struct ArithTensor {
  Shape shape;
  std::vector<T> data;
  int frac_bits = 0;

  ArithTensor() = default;
  ArithTensor(Shape s, int frac) : shape(std::move(s)), data(shape_size(shape), T{0}), frac_bits(frac) {}
  ArithTensor(Shape s, std::vector<T> values, int frac)
      : shape(std::move(s)), data(std::move(values)), frac_bits(frac) {
    if (data.size() != shape_size(shape)) throw ShapeMismatch("data length does not match shape");
  }

  std::size_t size() const { return data.size(); }
  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }
};

// One party's XOR shares of a tensor of bit-vectors. Each element packs
// `width` bits (bit i of the value in bit i of the word); higher bits are zero.
struct BitTensor {
  Shape shape;
  int width = 0;
  std::vector<std::uint64_t> words;

  BitTensor() = default;
  BitTensor(Shape s, int w) : shape(std::move(s)), width(w), words(shape_size(shape), 0) {}
  BitTensor(Shape s, int w, std::vector<std::uint64_t> v)
      : shape(std::move(s)), width(w), words(std::move(v)) {
    if (words.size() != shape_size(shape)) throw ShapeMismatch("word count does not match shape");
  }

  std::size_t size() const { return words.size(); }
  std::uint64_t mask() const { return low_mask(width); }

  // Single bit i of every element, as a width-1 tensor.
  BitTensor bit(int i) const {
    BitTensor out(shape, 1);
    for (std::size_t k = 0; k < words.size(); ++k) out.words[k] = (words[k] >> i) & 1;
    return out;
  }
};

}  // namespace mpfix
