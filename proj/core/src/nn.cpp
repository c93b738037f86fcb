#include "mpfix/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace mpfix {

void AttentionDims::validate() const {
  if (d1 == 0 || d2 == 0 || d3 == 0 || heads == 0) throw ConfigError("attention dimensions must be positive");
}

FoldedLinear FoldedLinear::fold(const LinearWeights& plain, double factor) {
  FoldedLinear f{plain, factor};
  for (auto& w : f.weights.weight) w *= factor;
  for (auto& b : f.weights.bias) b *= factor;
  return f;
}

FoldedLinear FoldedLinear::fold_log2e(const LinearWeights& plain) { return fold(plain, std::numbers::log2e); }

SharedLinear share_linear(Session& s, int owner, const LinearWeights* plain, std::size_t in, std::size_t out, int p) {
  std::vector<u64> w, b;
  if (s.party() == owner) {
    if (!plain || plain->in != in || plain->out != out || plain->weight.size() != in * out ||
        plain->bias.size() != out) {
      throw ShapeMismatch("share_linear: layer does not match " + std::to_string(in) + "x" + std::to_string(out));
    }
    for (double v : plain->weight) w.push_back(encode_fixed<u64>(v, p));
    for (double v : plain->bias) b.push_back(encode_fixed<u64>(v, p));
  }
  SharedLinear layer;
  layer.weight = input<u64>(s, owner, w, {in, out}, p);
  layer.bias = input<u64>(s, owner, b, {out}, p);
  return layer;
}

namespace {

// Repeats a rows x 1 column across `cols` columns.
template <RingWord T>
ArithTensor<T> tile_columns(const ArithTensor<T>& col, std::size_t cols) {
  const std::size_t rows = col.size();
  ArithTensor<T> z({rows, cols}, col.frac_bits);
  for (std::size_t r = 0; r < rows; ++r) std::fill_n(z.data.begin() + r * cols, cols, col.data[r]);
  return z;
}

template <RingWord T>
ArithTensor<T> subtract_rows(const ArithTensor<T>& x, const ArithTensor<T>& m, double eps, int party) {
  const std::size_t cols = x.shape.back();
  ArithTensor<T> z = x;
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] -= m.data[i / cols];
  const T shift = std::max<T>(T{1}, static_cast<T>(std::llround(std::ldexp(eps, x.frac_bits))));
  return add_const(z, T{0} - shift, party);
}

ArithTensor<u64> row_sums(const ArithTensor<u64>& x) {
  const std::size_t cols = x.shape.back();
  const std::size_t rows = x.size() / cols;
  ArithTensor<u64> z({rows, 1}, x.frac_bits);
  for (std::size_t i = 0; i < x.size(); ++i) z.data[i / cols] += x.data[i];
  return z;
}

ArithTensor<u64> stack_rows(const std::vector<ArithTensor<u64>>& parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.front().shape.back();
  for (const auto& p : parts) rows += p.shape[0];
  ArithTensor<u64> z({rows, cols}, parts.front().frac_bits);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data.begin(), p.data.end(), z.data.begin() + off);
    off += p.size();
  }
  return z;
}

std::vector<ArithTensor<u64>> split_rows(const ArithTensor<u64>& z, std::size_t parts) {
  const std::size_t rows = z.shape[0] / parts;
  const std::size_t cols = z.shape[1];
  std::vector<ArithTensor<u64>> out;
  for (std::size_t h = 0; h < parts; ++h) {
    auto first = z.data.begin() + h * rows * cols;
    out.emplace_back(Shape{rows, cols}, std::vector<u64>(first, first + rows * cols), z.frac_bits);
  }
  return out;
}

std::vector<ArithTensor<u64>> truncate_all(Session& s, const std::vector<ArithTensor<u64>>& xs, int p) {
  std::vector<const ArithTensor<u64>*> ptrs;
  std::vector<int> shifts;
  for (const auto& x : xs) {
    ptrs.push_back(&x);
    shifts.push_back(x.frac_bits - p);
  }
  return truncate_many<u64>(s, ptrs, shifts);
}

std::vector<ArithTensor<u64>> transpose_all(const std::vector<ArithTensor<u64>>& xs) {
  std::vector<ArithTensor<u64>> out;
  for (const auto& x : xs) out.push_back(transpose(x));
  return out;
}

void check_heads(const std::vector<ArithTensor<u64>>& q, const std::vector<ArithTensor<u64>>& k,
                 const std::vector<ArithTensor<u64>>& v) {
  if (q.empty() || q.size() != k.size() || q.size() != v.size()) throw ShapeMismatch("attention: head counts differ");
}

// Rows of e scaled by r, brought to precision `frac`.
ArithTensor<u64> normalise(Session& s, const ArithTensor<u64>& e, const ArithTensor<u64>& r, int frac) {
  OpScope scope(s.metrics(), "batch_mul");
  auto z = mul<u64>(s, e, tile_columns(r, e.shape.back()));
  return truncate<u64>(s, z, z.frac_bits - frac);
}

}  // namespace

ArithTensor<u64> linear_layer(Session& s, const ArithTensor<u64>& x, const SharedLinear& layer) {
  OpScope scope(s.metrics(), "linear");
  const int p = x.frac_bits;
  auto y = matmul<u64>(s, x, layer.weight);
  const std::size_t out = layer.weight.shape[1];
  const u64 lift = ring_shl<u64>(1, layer.weight.frac_bits);
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += layer.bias.data[i % out] * lift;
  return truncate<u64>(s, y, y.frac_bits - p);
}

template <RingWord T>
ArithTensor<T> relu(Session& s, const ArithTensor<T>& x) {
  OpScope scope(s.metrics(), "relu");
  const ArithTensor<T> zero(x.shape, x.frac_bits);
  auto b = bit2a<T>(s, gt<T>(s, x, zero));
  auto y = mul<T>(s, b, x);
  y.frac_bits = x.frac_bits;
  return y;
}

template ArithTensor<u32> relu<u32>(Session&, const ArithTensor<u32>&);
template ArithTensor<u64> relu<u64>(Session&, const ArithTensor<u64>&);

ArithTensor<u32> maxcut(Session& s, const ArithTensor<u64>& x, double eps) {
  OpScope scope(s.metrics(), "maxcut");
  const auto narrow = cast_down(x);
  return subtract_rows(narrow, max_vec<u32>(s, narrow), eps, s.party());
}

ArithTensor<u64> maxcut_wide(Session& s, const ArithTensor<u64>& x, double eps) {
  OpScope scope(s.metrics(), "maxcut");
  return subtract_rows(x, max_vec<u64>(s, x), eps, s.party());
}

SoftmaxParts softmax_parts(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap, const SoftmaxOptions& opt) {
  OpScope scope(s.metrics(), "softmax");
  if (x.shape.size() != 2) throw ShapeMismatch("softmax: expects a rows x cols matrix");
  const int p = x.frac_bits;
  ArithTensor<u64> xs = opt.prescaled ? x : truncate<u64>(s, scale_fixed<u64>(s, x, std::numbers::log2e, p), p);
  ArithTensor<u64> e = opt.narrow_maxcut ? attention_exp<u32>(s, maxcut(s, xs, ap.maxcut_eps), ap)
                                         : attention_exp<u64>(s, maxcut_wide(s, xs, ap.maxcut_eps), ap);
  auto sums = row_sums(e);
  const int q = std::max(p, ap.softmax_recip_precision);
  auto r = reciprocal(s, with_precision(scale_int(sums, ring_shl<u64>(1, q - p)), q), ap);
  return {std::move(e), std::move(r)};
}

ArithTensor<u64> softmax(Session& s, const ArithTensor<u64>& x, const ApproxParams& ap, const SoftmaxOptions& opt) {
  auto parts = softmax_parts(s, x, ap, opt);
  return normalise(s, parts.exps, parts.recip, x.frac_bits);
}

std::vector<ArithTensor<u64>> attention_naive(Session& s, const std::vector<ArithTensor<u64>>& q,
                                              const std::vector<ArithTensor<u64>>& k,
                                              const std::vector<ArithTensor<u64>>& v, const ApproxParams& ap,
                                              bool narrow_maxcut) {
  OpScope scope(s.metrics(), "attention_naive");
  check_heads(q, k, v);
  const int p = q.front().frac_bits;
  auto scores = truncate_all(s, batch_matmul<u64>(s, q, transpose_all(k)), p);
  auto parts = softmax_parts(s, stack_rows(scores), ap, {.prescaled = false, .narrow_maxcut = narrow_maxcut});
  auto probs = split_rows(normalise(s, parts.exps, parts.recip, 2 * p), q.size());
  return truncate_all(s, batch_matmul<u64>(s, probs, v), p);
}

std::vector<ArithTensor<u64>> attention_optimized(Session& s, const std::vector<ArithTensor<u64>>& q,
                                                  const std::vector<ArithTensor<u64>>& k,
                                                  const std::vector<ArithTensor<u64>>& v, const ApproxParams& ap,
                                                  bool narrow_maxcut) {
  OpScope scope(s.metrics(), "attention_optimized");
  check_heads(q, k, v);
  const int p = q.front().frac_bits;
  auto scores = truncate_all(s, batch_matmul<u64>(s, q, transpose_all(k)), p);
  auto parts = softmax_parts(s, stack_rows(scores), ap, {.prescaled = true, .narrow_maxcut = narrow_maxcut});
  auto weighted = truncate_all(s, batch_matmul<u64>(s, split_rows(parts.exps, q.size()), v), p);
  return split_rows(normalise(s, stack_rows(weighted), parts.recip, p), q.size());
}

template <RingWord T>
ArithTensor<T> transpose(const ArithTensor<T>& x) {
  if (x.shape.size() != 2) throw ShapeMismatch("transpose: expects a matrix");
  const std::size_t r = x.shape[0], c = x.shape[1];
  ArithTensor<T> z({c, r}, x.frac_bits);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) z.data[j * r + i] = x.data[i * c + j];
  }
  return z;
}

template ArithTensor<u32> transpose<u32>(const ArithTensor<u32>&);
template ArithTensor<u64> transpose<u64>(const ArithTensor<u64>&);

namespace {

constexpr char kTensorMagic[8] = {'M', 'P', 'F', 'X', 'T', 'N', 'S', '1'};

template <class V>
void write_le(std::ofstream& out, V v) {
  unsigned char buf[sizeof(V)];
  for (std::size_t i = 0; i < sizeof(V); ++i) buf[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(V));
}

template <class V>
V read_le(std::ifstream& in) {
  unsigned char buf[sizeof(V)] = {};
  in.read(reinterpret_cast<char*>(buf), sizeof(V));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(V); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<V>(v);
}

}  // namespace

void save_tensor_file(const std::filesystem::path& path, const TensorFile& t) {
  if (t.values.size() != shape_size(t.shape)) throw ShapeMismatch("tensor file: values do not match shape");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kTensorMagic, 8);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
  write_le<std::uint32_t>(out, 64);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.precision));
  for (auto d : t.shape) write_le<std::uint64_t>(out, d);
  for (double v : t.values) write_le<std::uint64_t>(out, encode_fixed<u64>(v, t.precision));
  if (!out) throw Error("failed to write " + path.string());
}

TensorFile load_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTensorMagic, 8) != 0) throw Error("not a tensor file: " + path.string());
  TensorFile t;
  const auto rank = read_le<std::uint32_t>(in);
  const auto bits = read_le<std::uint32_t>(in);
  t.precision = static_cast<int>(read_le<std::uint32_t>(in));
  if (bits != 64 && bits != 32) throw Error("unsupported ring width in " + path.string());
  for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(read_le<std::uint64_t>(in));
  const std::size_t n = shape_size(t.shape);
  t.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (bits == 64) {
      t.values.push_back(decode_fixed<u64>(read_le<std::uint64_t>(in), t.precision));
    } else {
      t.values.push_back(decode_fixed<u32>(read_le<std::uint32_t>(in), t.precision));
    }
  }
  if (!in) throw Error("truncated tensor file: " + path.string());
  return t;
}

}  // namespace mpfix
