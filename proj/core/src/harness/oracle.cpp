#include "mpfix/harness/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>

#include "mpfix/errors.hpp"
#include "mpfix/ring.hpp"

namespace mpfix {

namespace {

using Unary = std::function<double(double)>;

const std::map<std::string, Unary>& unary_ops() {
  static const std::map<std::string, Unary> ops = {
      {"reciprocal", [](double x) { return 1.0 / x; }},
      {"exponentiation", [](double x) { return std::exp(x); }},
      {"baseline_exp", [](double x) { return std::exp(x); }},
      {"attention_exp", [](double x) { return std::exp2(x); }},
      {"logarithm", [](double x) { return std::log(x); }},
      {"relu", [](double x) { return std::max(x, 0.0); }},
      {"identity", [](double x) { return x; }},
  };
  return ops;
}

std::vector<double> softmax_rows(std::span<const double> x, std::size_t row) {
  if (row == 0 || x.size() % row != 0) throw ConfigError("oracle softmax: bad row length");
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < x.size() / row; ++r) {
    const auto first = x.begin() + r * row;
    const double m = *std::max_element(first, first + row);
    double sum = 0;
    for (std::size_t j = 0; j < row; ++j) sum += out[r * row + j] = std::exp(first[j] - m);
    for (std::size_t j = 0; j < row; ++j) out[r * row + j] /= sum;
  }
  return out;
}

}  // namespace

std::vector<double> oracle_eval(const std::string& op, std::span<const double> x, std::size_t row) {
  if (op == "softmax") return softmax_rows(x, row);
  auto it = unary_ops().find(op);
  if (it == unary_ops().end()) throw ConfigError("oracle: unknown op " + op);
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), it->second);
  return out;
}

const std::vector<std::string>& oracle_ops() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"softmax"};
    for (const auto& [k, _] : unary_ops()) v.push_back(k);
    return v;
  }();
  return names;
}

std::vector<double> oracle_matmul(std::span<const double> a, std::span<const double> b, std::size_t m,
                                  std::size_t k, std::size_t r) {
  if (a.size() != m * k || b.size() != k * r) throw ShapeMismatch("oracle matmul: shape");
  std::vector<double> z(m * r, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[i * k + t];
      for (std::size_t j = 0; j < r; ++j) z[i * r + j] += av * b[t * r + j];
    }
  }
  return z;
}

std::vector<double> oracle_attention(std::span<const double> q, std::span<const double> k,
                                     std::span<const double> v, std::size_t d1, std::size_t d2, std::size_t d3) {
  std::vector<double> kt(d3 * d2);
  for (std::size_t i = 0; i < d2; ++i) {
    for (std::size_t j = 0; j < d3; ++j) kt[j * d2 + i] = k[i * d3 + j];
  }
  const auto probs = softmax_rows(oracle_matmul(q, kt, d1, d3, d2), d2);
  return oracle_matmul(probs, v, d1, d2, d3);
}

std::uint64_t oracle_lmo(std::uint64_t x, int width) {
  x &= low_mask(width);
  return x == 0 ? 0 : std::uint64_t{1} << (std::bit_width(x) - 1);
}

std::uint64_t oracle_signed_shift(std::uint64_t x, int f, int width) {
  return static_cast<std::uint64_t>(sign_extend(x, width) >> f) & low_mask(width);
}

std::uint64_t oracle_ring_add(std::uint64_t x, std::uint64_t y, int width) { return (x + y) & low_mask(width); }

}  // namespace mpfix
