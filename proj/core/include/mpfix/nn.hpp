#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "mpfix/nonlinear.hpp"

namespace mpfix {

struct AttentionDims {
  std::size_t d1 = 1, d2 = 1, d3 = 1, heads = 1;
  void validate() const;
};

// Plaintext dense layer, row-major weight (in x out).
struct LinearWeights {
  std::size_t in = 0, out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
};

// A dense layer whose weights and bias were multiplied by a public factor in
// plaintext before sharing (log2 e by default).
struct FoldedLinear {
  LinearWeights weights;
  double factor = 1;

  static FoldedLinear fold(const LinearWeights& plain, double factor);
  static FoldedLinear fold_log2e(const LinearWeights& plain);
};

struct SharedLinear {
  ArithTensor<u64> weight;  // in x out, precision p
  ArithTensor<u64> bias;    // out, precision p
};

// Owner shares the layer; others pass nullptr.
SharedLinear share_linear(Session& s, int owner, const LinearWeights* plain, std::size_t in, std::size_t out, int p);

// x @ W + b, truncated back to the precision of x.
ArithTensor<u64> linear_layer(Session& s, const ArithTensor<u64>& x, const SharedLinear& layer);

template <RingWord T>
ArithTensor<T> relu(Session& s, const ArithTensor<T>& x);

// Row-wise x - max(x) - eps on 32-bit shares (last axis is the row).
ArithTensor<u32> maxcut(Session& s, const ArithTensor<u64>& x, double eps);

// All-64-bit variant, for comparison against the mixed-width path.
ArithTensor<u64> maxcut_wide(Session& s, const ArithTensor<u64>& x, double eps);

struct SoftmaxOptions {
  bool prescaled = false;     // input already multiplied by log2 e
  bool narrow_maxcut = true;  // MaxCut on 32-bit shares
};

// Row softmax over the last axis.
ArithTensor<u64> softmax(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap,
                         const SoftmaxOptions& opt = {});

// Unnormalised exponentials and per-row reciprocals of their sums.
struct SoftmaxParts {
  ArithTensor<u64> exps;   // rows x cols
  ArithTensor<u64> recip;  // rows x 1
};
SoftmaxParts softmax_parts(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap,
                           const SoftmaxOptions& opt = {});

// Q, K, V are per-head matrices: q[h] is d1 x d3, k[h] is d2 x d3, v[h] is d2 x d3.
// K is expected to carry the 1/sqrt(d3) factor already.
std::vector<ArithTensor<u64>> attention_naive(Session& s, const std::vector<ArithTensor<u64>>& q,
                                              const std::vector<ArithTensor<u64>>& k,
                                              const std::vector<ArithTensor<u64>>& v, const ApproxParams& ap,
                                              bool narrow_maxcut = true);

// Same with Q additionally carrying log2 e, and the normalisation applied to
// E @ V instead of E.
std::vector<ArithTensor<u64>> attention_optimized(Session& s, const std::vector<ArithTensor<u64>>& q,
                                                  const std::vector<ArithTensor<u64>>& k,
                                                  const std::vector<ArithTensor<u64>>& v, const ApproxParams& ap,
                                                  bool narrow_maxcut = true);

template <RingWord T>
ArithTensor<T> transpose(const ArithTensor<T>& x);

// Binary tensor file: "MPFXTNS1", u32 rank, u32 ring bits, u32 precision,
// u64 dims[rank], then little-endian fixed-point words.
struct TensorFile {
  Shape shape;
  int precision = 0;
  std::vector<double> values;
};

void save_tensor_file(const std::filesystem::path& path, const TensorFile& t);
TensorFile load_tensor_file(const std::filesystem::path& path);

}  // namespace mpfix
