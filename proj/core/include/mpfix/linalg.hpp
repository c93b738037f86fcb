#pragma once

#include <cstddef>
#include <span>

#include "mpfix/ring.hpp"

namespace mpfix {

// C (m x r) += A (m x k) @ B (k x r), row-major, wrapping in Z_2^l.
template <RingWord T>
void matmul_accumulate(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
                       std::size_t k, std::size_t r) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.data() + i * r;
    for (std::size_t t = 0; t < k; ++t) {
      const T av = a[i * k + t];
      if (av == 0) continue;
      const T* brow = b.data() + t * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace mpfix
