#pragma once

// Plaintext references in double precision, plus exact ring-level references
// used for brute-force checks on small rings.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpfix {

// Element-wise reference for a named op. Row-wise ops ("softmax") take the
// row length in `row`. Throws ConfigError for unknown names.
std::vector<double> oracle_eval(const std::string& op, std::span<const double> x, std::size_t row = 0);

// Names accepted by oracle_eval.
const std::vector<std::string>& oracle_ops();

// Row-major (m x k) @ (k x r).
std::vector<double> oracle_matmul(std::span<const double> a, std::span<const double> b, std::size_t m,
                                  std::size_t k, std::size_t r);

// softmax(q k^T) v for one head; k already carries any score scaling.
std::vector<double> oracle_attention(std::span<const double> q, std::span<const double> k,
                                     std::span<const double> v, std::size_t d1, std::size_t d2, std::size_t d3);

// One-hot of the most significant set bit of the low `width` bits (0 for 0).
std::uint64_t oracle_lmo(std::uint64_t x, int width);

// floor(x / 2^f) for x read as a signed `width`-bit value, reduced mod 2^width.
std::uint64_t oracle_signed_shift(std::uint64_t x, int f, int width);

// Ring sum mod 2^width.
std::uint64_t oracle_ring_add(std::uint64_t x, std::uint64_t y, int width);

}  // namespace mpfix
