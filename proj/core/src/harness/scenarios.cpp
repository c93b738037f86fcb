#include "mpfix/harness/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mpfix/harness/oracle.hpp"
#include "mpfix/harness/runner.hpp"
#include "mpfix/nn.hpp"

namespace mpfix {

namespace {

std::mt19937_64 data_rng(const ScenarioConfig& c, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<double> normal(std::mt19937_64& rng, std::size_t n, double sigma) {
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

std::vector<double> log2_grid(double lo_exp, double hi_exp, std::size_t n) {
  auto v = linear_grid(lo_exp, hi_exp, n);
  for (auto& x : v) x = std::exp2(x);
  return v;
}

template <RingWord T>
ArithTensor<T> secret(Session& s, int owner, const std::vector<double>& plain, const Shape& shape, int p) {
  std::vector<T> enc;
  if (s.party() == owner) {
    for (double v : plain) enc.push_back(encode_fixed<T>(v, p));
  }
  return input<T>(s, owner, enc, shape, p);
}

template <RingWord T>
std::vector<double> reveal(Session& s, const ArithTensor<T>& x, ScenarioOutput& out, double scale = 1) {
  const auto o = open(s, x);
  std::vector<double> v;
  for (T w : o.data) {
    out.opened.push_back(w);
    v.push_back(decode_fixed<T>(w, o.frac_bits) / scale);
  }
  return v;
}

AccuracyStat make_stat(const std::string& name, std::span<const double> got, std::span<const double> want) {
  AccuracyStat a{name};
  a.add_all(got, want);
  return a;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double mse(std::span<const double> a, std::span<const double> b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return a.empty() ? 0 : acc / static_cast<double>(a.size());
}

// --- nonlinear-sweep --------------------------------------------------------

ScenarioOutput nonlinear_sweep(Session& s, const ScenarioConfig& c) {
  ScenarioOutput out;
  const int p = c.precision;
  const auto n = static_cast<std::size_t>(c.param_int("points", 256));
  const auto ap = approx_params(c);

  auto rx = log2_grid(-8, 8, n);
  for (std::size_t i = 0; i < n; ++i) rx.push_back(-rx[i]);
  const auto ex = linear_grid(-16, 16, n);
  const auto lx = log2_grid(-8, 8, n);
  const auto bx = log2_grid(8, 20, n / 4 + 1);
  const auto basex = linear_grid(-16, 9.5, n);
  const auto ax = linear_grid(-14, -1.0 / 1024, n);

  const auto R = reciprocal(s, secret<u64>(s, 0, rx, {rx.size()}, p), ap);
  out.accuracy.push_back(make_stat("reciprocal", reveal(s, R, out), oracle_eval("reciprocal", rx)));

  const auto E = exponentiation(s, secret<u64>(s, 0, ex, {ex.size()}, p), ap);
  const auto e_got = reveal(s, E, out);
  const auto e_want = oracle_eval("exponentiation", ex);
  out.accuracy.push_back(make_stat("exponentiation", e_got, e_want));
  AccuracyStat inner{"exponentiation[-8,8]"};
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (std::fabs(ex[i]) <= 8) inner.add(e_got[i], e_want[i]);
  }
  out.accuracy.push_back(inner);

  const auto L = logarithm(s, secret<u64>(s, 0, lx, {lx.size()}, p), ap);
  out.accuracy.push_back(make_stat("logarithm", reveal(s, L, out), oracle_eval("logarithm", lx)));
  const auto LB = logarithm(s, secret<u64>(s, 0, bx, {bx.size()}, p), ap, true);
  out.accuracy.push_back(make_stat("logarithm_big", reveal(s, LB, out), oracle_eval("logarithm", bx)));

  const auto B = baseline_exp(s, secret<u64>(s, 0, basex, {basex.size()}, kBaselinePrecision), ap);
  out.accuracy.push_back(make_stat("baseline_exp", reveal(s, B, out), oracle_eval("baseline_exp", basex)));

  const double gain = attention_exp_gain(ap);
  const auto A = attention_exp<u32>(s, secret<u32>(s, 0, ax, {ax.size()}, 14), ap);
  out.accuracy.push_back(make_stat("attention_exp", reveal(s, A, out, gain), oracle_eval("attention_exp", ax)));
  out.values["attention_exp_gain"] = gain;

  // The probe that separates the two exponentiations.
  const std::vector<double> probe{12.0};
  const double want = std::exp(12.0);
  const double main12 = reveal(s, exponentiation(s, secret<u64>(s, 0, probe, {1}, p), ap), out)[0];
  const double base12 =
      reveal(s, baseline_exp(s, secret<u64>(s, 0, probe, {1}, kBaselinePrecision), ap), out)[0];
  out.values["exp_x12"] = main12;
  out.values["baseline_exp_x12"] = base12;
  out.values["exp_overflow_x12"] = std::fabs(main12 - want) > 0.5 * want ? 1 : 0;
  out.values["baseline_overflow_x12"] = std::fabs(base12 - want) > 0.5 * want ? 1 : 0;
  return out;
}

// --- softmax-bench ----------------------------------------------------------

ScenarioOutput softmax_bench(Session& s, const ScenarioConfig& c) {
  ScenarioOutput out;
  const int p = c.precision;
  const auto rows = static_cast<std::size_t>(c.param_int("rows", 1000));
  const auto cols = static_cast<std::size_t>(c.param_int("cols", 196));
  const auto ap = approx_params(c);
  auto rng = data_rng(c, 1);
  const auto xs = normal(rng, rows * cols, c.param_double("spread", 3.0));

  const auto X = secret<u64>(s, 0, xs, {rows, cols}, p);
  const auto got = reveal(s, softmax(s, X, ap), out);
  out.accuracy.push_back(make_stat("softmax", got, oracle_eval("softmax", xs, cols)));

  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0;
    for (std::size_t j = 0; j < cols; ++j) sum += got[r * cols + j];
    lo = std::min(lo, sum);
    hi = std::max(hi, sum);
  }
  out.values["row_sum_min"] = lo;
  out.values["row_sum_max"] = hi;
  out.values["min_entry"] = *std::min_element(got.begin(), got.end());

  if (c.param_int("compare_wide", 1) != 0) {
    const auto wide = reveal(s, softmax(s, X, ap, {.narrow_maxcut = false}), out);
    out.values["wide_max_abs_diff"] = max_abs_diff(got, wide);
  }
  return out;
}

// --- attention-bench --------------------------------------------------------

ScenarioOutput attention_bench(Session& s, const ScenarioConfig& c) {
  ScenarioOutput out;
  const int p = c.precision;
  AttentionDims dims{static_cast<std::size_t>(c.param_int("d1", 196)), static_cast<std::size_t>(c.param_int("d2", 196)),
                     static_cast<std::size_t>(c.param_int("d3", 64)), static_cast<std::size_t>(c.param_int("heads", 4))};
  dims.validate();
  const auto [d1, d2, d3, heads] = dims;
  const double sigma = c.param_double("scale", 1.0);
  const auto ap = approx_params(c);
  auto rng = data_rng(c, 2);

  std::vector<std::vector<double>> q, k, v;
  std::vector<ArithTensor<u64>> Q, QF, K, V;
  const double score_fold = 1.0 / std::sqrt(static_cast<double>(d3));
  for (std::size_t h = 0; h < heads; ++h) {
    q.push_back(normal(rng, d1 * d3, sigma));
    k.push_back(normal(rng, d2 * d3, sigma));
    v.push_back(normal(rng, d2 * d3, 1.0));
    for (auto& x : k.back()) x *= score_fold;
    auto qf = q.back();
    for (auto& x : qf) x *= std::numbers::log2e;
    Q.push_back(secret<u64>(s, 0, q.back(), {d1, d3}, p));
    QF.push_back(secret<u64>(s, 0, qf, {d1, d3}, p));
    K.push_back(secret<u64>(s, 0, k.back(), {d2, d3}, p));
    V.push_back(secret<u64>(s, 1 % s.parties(), v.back(), {d2, d3}, p));
  }

  auto& m = s.metrics();
  auto elements = [&] { return m.op("batch_mul").mul_elements; };
  const auto e0 = elements();
  const auto naive = attention_naive(s, Q, K, V, ap);
  const auto e1 = elements();
  const auto opt = attention_optimized(s, QF, K, V, ap);
  const auto e2 = elements();

  std::vector<double> want, got_naive, got_opt;
  for (std::size_t h = 0; h < heads; ++h) {
    const auto w = oracle_attention(q[h], k[h], v[h], d1, d2, d3);
    want.insert(want.end(), w.begin(), w.end());
    const auto a = reveal(s, naive[h], out);
    got_naive.insert(got_naive.end(), a.begin(), a.end());
    const auto b = reveal(s, opt[h], out);
    got_opt.insert(got_opt.end(), b.begin(), b.end());
  }
  out.accuracy.push_back(make_stat("attention_naive", got_naive, want));
  out.accuracy.push_back(make_stat("attention_optimized", got_opt, want));
  out.values["mse_naive"] = mse(got_naive, want);
  out.values["mse_optimized"] = mse(got_opt, want);
  out.values["max_diff_naive_optimized"] = max_abs_diff(got_naive, got_opt);
  out.values["batch_mul_elements_naive"] = static_cast<double>(e1 - e0);
  out.values["batch_mul_elements_optimized"] = static_cast<double>(e2 - e1);
  out.values["batch_mul_ratio"] = static_cast<double>(e1 - e0) / static_cast<double>(std::max<std::uint64_t>(e2 - e1, 1));

  if (c.param_int("compare_wide", 1) != 0) {
    const auto wide = attention_optimized(s, QF, K, V, ap, false);
    std::vector<double> got_wide;
    for (const auto& w : wide) {
      const auto a = reveal(s, w, out);
      got_wide.insert(got_wide.end(), a.begin(), a.end());
    }
    out.values["max_diff_narrow_wide"] = max_abs_diff(got_opt, got_wide);
  }

  // One call each of the general and the attention exponentiation.
  const auto before = m.ledger();
  exponentiation(s, secret<u64>(s, 0, {-1.0}, {1}, p), ap);
  attention_exp<u32>(s, secret<u32>(s, 0, {-1.0}, {1}, p), ap);
  auto delta = [&](const std::string& op) {
    OpStats now = m.op(op), was;
    if (auto it = before.find(op); it != before.end()) was = it->second;
    return std::pair{now.mul - was.mul, std::pair{now.scale - was.scale, now.trunc - was.trunc}};
  };
  const auto [gm, gst] = delta("exponentiation");
  const auto [am, ast] = delta("attention_exp");
  out.values["exp_savings_mul"] = static_cast<double>(gm) - static_cast<double>(am);
  out.values["exp_savings_scale"] = static_cast<double>(gst.first) - static_cast<double>(ast.first);
  out.values["exp_savings_trunc"] = static_cast<double>(gst.second) - static_cast<double>(ast.second);
  return out;
}

// --- mlp-simple -------------------------------------------------------------

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> dims;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(static_cast<std::size_t>(std::stoull(item)));
  if (dims.size() < 2) throw ConfigError("layers needs at least an input and an output size");
  return dims;
}

std::vector<double> plain_linear(const std::vector<double>& x, std::size_t batch, const LinearWeights& w) {
  auto y = oracle_matmul(x, w.weight, batch, w.in, w.out);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += w.bias[i % w.out];
  return y;
}

std::vector<LinearWeights> mlp_weights(const ScenarioConfig& c, const std::vector<std::size_t>& dims) {
  std::vector<LinearWeights> layers;
  const auto model_dir = c.param("model_dir", "");
  auto rng = data_rng(c, 3);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    LinearWeights w{dims[i], dims[i + 1], {}, {}};
    if (!model_dir.empty()) {
      const std::filesystem::path dir(model_dir);
      const auto wt = load_tensor_file(dir / ("layer" + std::to_string(i) + ".weight.bin"));
      const auto bt = load_tensor_file(dir / ("layer" + std::to_string(i) + ".bias.bin"));
      if (wt.shape != Shape{w.in, w.out} || bt.shape != Shape{w.out}) {
        throw ShapeMismatch("model file for layer " + std::to_string(i) + " does not match the layer sizes");
      }
      w.weight = wt.values;
      w.bias = bt.values;
    } else {
      w.weight = normal(rng, w.in * w.out, std::sqrt(2.0 / static_cast<double>(w.in)));
      w.bias = normal(rng, w.out, 0.1);
    }
    layers.push_back(std::move(w));
  }
  return layers;
}

ScenarioOutput mlp_simple(Session& s, const ScenarioConfig& c) {
  ScenarioOutput out;
  const int p = c.precision;
  const auto dims = parse_dims(c.param("layers", "784,128,128,10"));
  const auto batch = static_cast<std::size_t>(c.param_int("inputs", 200));
  const auto layers = mlp_weights(c, dims);
  auto rng = data_rng(c, 4);
  const auto xs = uniform(rng, batch * dims.front(), 0.0, 1.0);

  std::vector<SharedLinear> shared;
  for (const auto& w : layers) shared.push_back(share_linear(s, 0, &w, w.in, w.out, p));
  auto h = secret<u64>(s, 1 % s.parties(), xs, {batch, dims.front()}, p);
  for (std::size_t i = 0; i < shared.size(); ++i) {
    h = linear_layer(s, h, shared[i]);
    if (i + 1 < shared.size()) h = relu(s, h);
  }
  const auto got = reveal(s, h, out);

  std::vector<double> ref = xs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    ref = plain_linear(ref, batch, layers[i]);
    if (i + 1 < layers.size()) ref = oracle_eval("relu", ref);
  }
  out.accuracy.push_back(make_stat("logits", got, ref));

  const std::size_t classes = dims.back();
  std::size_t agree = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    auto first_g = got.begin() + b * classes;
    auto first_r = ref.begin() + b * classes;
    agree += std::max_element(first_g, first_g + classes) - first_g ==
             std::max_element(first_r, first_r + classes) - first_r;
  }
  out.values["argmax_agreement"] = static_cast<double>(agree) / static_cast<double>(batch);
  out.values["max_logit_abs_dev"] = max_abs_diff(got, ref);
  std::size_t params = 0;
  for (const auto& w : layers) params += w.weight.size() + w.bias.size();
  out.values["parameters"] = static_cast<double>(params);
  return out;
}

// --- scale-parties ----------------------------------------------------------

template <RingWord T>
ScenarioOutput scale_parties_typed(Session& s, const ScenarioConfig& c) {
  ScenarioOutput out;
  const int p = c.precision;
  const auto n = static_cast<std::size_t>(c.param_int("elements", 1024));
  auto rng = data_rng(c, 5);
  const auto a = uniform(rng, n, -4, 4);
  const auto b = uniform(rng, n, -4, 4);
  const auto A = secret<T>(s, 0, a, {n}, p);
  const auto B = secret<T>(s, 1 % s.parties(), b, {n}, p);
  ArithTensor<T> Z;
  {
    OpScope scope(s.metrics(), "elementwise_mul");
    Z = mul<T>(s, A, B);
  }
  const auto opened = open(s, Z);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.opened.push_back(opened.data[i]);
    const T want = static_cast<T>(encode_fixed<T>(a[i], p) * encode_fixed<T>(b[i], p));
    mismatches += opened.data[i] != want;
  }
  const auto stats = s.metrics().op("elementwise_mul");
  out.values["exact_mismatches"] = static_cast<double>(mismatches);
  out.values["bits_per_element"] = static_cast<double>(stats.bytes) * 8.0 / static_cast<double>(n);
  out.values["expected_bits_per_element"] = 2.0 * kRingBits<T> * (s.parties() - 1);
  out.values["rounds"] = static_cast<double>(stats.rounds);
  return out;
}

ScenarioOutput scale_parties(Session& s, const ScenarioConfig& c) {
  return c.ring_bits == 32 ? scale_parties_typed<u32>(s, c) : scale_parties_typed<u64>(s, c);
}

// --- comm-micro -------------------------------------------------------------

ScenarioOutput comm_micro(Session& s, const ScenarioConfig& c) {
  ScenarioOutput out;
  const int p = c.precision;
  const auto n = static_cast<std::size_t>(c.param_int("elements", 256));
  auto rng = data_rng(c, 6);
  const auto a = uniform(rng, n, -8, 8);
  const auto b = uniform(rng, n, -8, 8);
  std::vector<std::uint64_t> wa(n), wb(n);
  for (auto& w : wa) w = rng();
  for (auto& w : wb) w = rng();
  const auto X = secret<u64>(s, 0, a, {n}, p);
  const auto Y = secret<u64>(s, 1 % s.parties(), b, {n}, p);
  const auto BX = input_bits(s, 0, wa, {n}, 64);
  const auto BY = input_bits(s, 1 % s.parties(), wb, {n}, 64);

  std::vector<u64> ea(n), eb(n);
  for (std::size_t i = 0; i < n; ++i) {
    ea[i] = encode_fixed<u64>(a[i], p);
    eb[i] = encode_fixed<u64>(b[i], p);
  }

  auto& m = s.metrics();
  auto record = [&](const std::string& op, std::size_t mismatches) {
    const auto st = m.op("micro." + op);
    out.values[op + ".rounds"] = static_cast<double>(st.rounds);
    out.values[op + ".bytes_per_element"] = static_cast<double>(st.bytes) / static_cast<double>(n);
    out.values[op + ".mismatches"] = static_cast<double>(mismatches);
  };
  auto check_arith = [&](const ArithTensor<u64>& z, auto&& want) {
    const auto o = open(s, z);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      out.opened.push_back(o.data[i]);
      bad += !want(i, o.data[i]);
    }
    return bad;
  };
  auto check_bits = [&](const BitTensor& z, auto&& want) {
    const auto o = open_bits(s, z);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      out.opened.push_back(o.words[i]);
      bad += o.words[i] != want(i);
    }
    return bad;
  };

  ArithTensor<u64> z;
  BitTensor bz;
  {
    OpScope sc(m, "micro.add");
    z = add(X, Y);
  }
  record("add", check_arith(z, [&](std::size_t i, u64 v) { return v == ea[i] + eb[i]; }));
  {
    OpScope sc(m, "micro.mul");
    z = mul<u64>(s, X, Y);
  }
  record("mul", check_arith(z, [&](std::size_t i, u64 v) { return v == ea[i] * eb[i]; }));
  {
    const std::size_t side = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    const ArithTensor<u64> MX({side, side}, std::vector<u64>(X.data.begin(), X.data.begin() + side * side), p);
    const ArithTensor<u64> MY({side, side}, std::vector<u64>(Y.data.begin(), Y.data.begin() + side * side), p);
    {
      OpScope sc(m, "micro.matmul");
      z = matmul<u64>(s, MX, MY);
    }
    record("matmul", check_arith(z, [&](std::size_t i, u64 v) {
             u64 acc = 0;
             for (std::size_t t = 0; t < side; ++t) acc += ea[(i / side) * side + t] * eb[t * side + i % side];
             return v == acc;
           }));
  }
  {
    OpScope sc(m, "micro.truncate");
    z = truncate<u64>(s, X, p);
  }
  record("truncate", check_arith(z, [&](std::size_t i, u64 v) {
           const auto d = static_cast<std::int64_t>(v - oracle_signed_shift(ea[i], p, 64));
           return d == 0 || d == 1;
         }));
  {
    OpScope sc(m, "micro.and");
    bz = and_bits(s, BX, BY);
  }
  record("and", check_bits(bz, [&](std::size_t i) { return wa[i] & wb[i]; }));
  {
    OpScope sc(m, "micro.xor");
    bz = bit_xor(BX, BY);
  }
  record("xor", check_bits(bz, [&](std::size_t i) { return wa[i] ^ wb[i]; }));
  {
    OpScope sc(m, "micro.binary_add");
    bz = binary_add(s, BX, BY);
  }
  record("binary_add", check_bits(bz, [&](std::size_t i) { return wa[i] + wb[i]; }));
  {
    OpScope sc(m, "micro.lmo");
    bz = lmo(s, BX);
  }
  record("lmo", check_bits(bz, [&](std::size_t i) { return oracle_lmo(wa[i], 64); }));
  {
    OpScope sc(m, "micro.decompose");
    bz = decompose<u64>(s, X);
  }
  record("decompose", check_bits(bz, [&](std::size_t i) { return ea[i]; }));
  {
    OpScope sc(m, "micro.gt");
    bz = gt<u64>(s, X, Y);
  }
  const BitTensor g = bz;
  record("gt", check_bits(bz, [&](std::size_t i) -> std::uint64_t {
           return static_cast<std::int64_t>(ea[i]) > static_cast<std::int64_t>(eb[i]);
         }));
  {
    OpScope sc(m, "micro.bit2a");
    z = bit2a<u64>(s, g);
  }
  record("bit2a", check_arith(z, [&](std::size_t i, u64 v) {
           return v == static_cast<u64>(static_cast<std::int64_t>(ea[i]) > static_cast<std::int64_t>(eb[i]));
         }));
  return out;
}

struct Entry {
  ScenarioFn fn;
  std::map<std::string, std::string> defaults;
  int precision;
};

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> r = {
      {"nonlinear-sweep", {nonlinear_sweep, {{"points", "256"}}, 23}},
      {"softmax-bench", {softmax_bench, {{"rows", "1000"}, {"cols", "196"}, {"spread", "3"}, {"compare_wide", "1"}}, 16}},
      {"attention-bench",
       {attention_bench,
        {{"d1", "196"}, {"d2", "196"}, {"d3", "64"}, {"heads", "4"}, {"scale", "1"}, {"compare_wide", "1"}},
        14}},
      {"mlp-simple", {mlp_simple, {{"layers", "784,128,128,10"}, {"inputs", "200"}}, 23}},
      {"scale-parties", {scale_parties, {{"elements", "1024"}}, 14}},
      {"comm-micro", {comm_micro, {{"elements", "256"}}, 14}},
  };
  return r;
}

const Entry& lookup(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown scenario: " + name);
  return it->second;
}

// Runs the scenario body and logs where it failed, if it does.
ScenarioOutput guarded(const ScenarioFn& fn, Session& s, const ScenarioConfig& c) {
  try {
    return fn(s, c);
  } catch (const std::exception& e) {
    if (!s.dry_run()) {
      const auto& where = s.metrics().failed_scope();
      spdlog::error("party {}: {} failed in {} at step {}: {}", s.party(), c.scenario, where.empty() ? "setup" : where,
                    s.net().step(), e.what());
    }
    throw;
  }
}

void check_ring(const ScenarioConfig& c) {
  if (c.ring_bits != 64 && c.scenario != "scale-parties") {
    throw ConfigError("scenario " + c.scenario + " runs on the 64-bit ring only");
  }
}

RunReport make_report(const ScenarioConfig& c, int party, const CommMetrics& metrics, ScenarioOutput out,
                      double seconds) {
  RunReport r;
  r.scenario = c.scenario;
  r.party = party;
  r.parties = c.parties;
  r.config_digest = c.digest();
  std::string bytes(reinterpret_cast<const char*>(out.opened.data()), out.opened.size() * sizeof(std::uint64_t));
  r.output_digest = sha256_hex(bytes);
  r.accuracy = std::move(out.accuracy);
  r.values = std::move(out.values);
  r.ledger = metrics.ledger();
  r.rounds = metrics.rounds();
  r.payload_bytes_sent = metrics.payload_bytes_sent();
  r.bytes_received = metrics.bytes_received();
  r.wall_seconds = seconds;
  return r;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : registry()) v.push_back(k);
    return v;
  }();
  return names;
}

ScenarioConfig default_config(const std::string& scenario) {
  ScenarioConfig c;
  c.scenario = scenario;
  return with_defaults(c);
}

ScenarioConfig with_defaults(const ScenarioConfig& cfg) {
  const auto& e = lookup(cfg.scenario);
  ScenarioConfig c = cfg;
  if (c.precision == 0) c.precision = e.precision;
  for (const auto& [k, v] : e.defaults) c.params.try_emplace(k, v);
  c.validate();
  check_ring(c);
  return c;
}

Manifest scenario_demand(const ScenarioConfig& cfg) {
  const auto c = with_defaults(cfg);
  const auto& fn = lookup(c.scenario).fn;
  return count_demand(c.parties, c.seed, [&](Session& s) { guarded(fn, s, c); });
}

void deal_scenario(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  const auto c = with_defaults(cfg);
  const auto demand = scenario_demand(c);
  auto stores = Dealer(c.parties, dealer_seed(c.seed)).generate(demand);
  for (int p = 0; p < c.parties; ++p) stores[p].save(dir, p, c.parties);
  spdlog::info("dealer: wrote {} pools for {} parties to {}", demand.size(), c.parties, dir.string());
}

std::vector<RunReport> run_scenario(const ScenarioConfig& cfg) {
  const auto c = with_defaults(cfg);
  const auto& fn = lookup(c.scenario).fn;
  RunOptions o;
  o.parties = c.parties;
  o.seed = c.seed;
  o.transport = c.transport;
  o.host = c.host;
  o.config_digest = c.digest();
  o.precomp_dir = c.precomp_dir;

  spdlog::info("run {}: {} parties, {} transport, p={}", c.scenario, c.parties, to_string(c.transport), c.precision);
  std::vector<ScenarioOutput> outs(c.parties);
  const auto t0 = std::chrono::steady_clock::now();
  auto summary = run_local(o, [&](Session& s) {
    auto out = guarded(fn, s, c);
    if (!s.dry_run()) outs[s.party()] = std::move(out);
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<RunReport> reports;
  for (int p = 0; p < c.parties; ++p) {
    std::string problem;
    if (!audit_single_use(summary.parties[p].consumed, &problem)) throw PrecompExhausted(problem);
    reports.push_back(make_report(c, p, summary.parties[p].metrics, std::move(outs[p]), seconds));
  }
  spdlog::info("run {}: done in {:.2f}s", c.scenario, seconds);
  return reports;
}

RunReport run_party(const ScenarioConfig& cfg, int party) {
  const auto c = with_defaults(cfg);
  if (party < 0 || party >= c.parties) throw ConfigError("party index out of range");
  if (!c.precomp_dir) throw ConfigError("run_party needs precomp_dir with dealer files");
  const auto& fn = lookup(c.scenario).fn;

  const auto demand = scenario_demand(c);
  PoolStore store = PoolStore::load(*c.precomp_dir, party);
  for (const auto& [key, count] : demand) {
    const auto have = store.remaining(key);
    if (have < count) {
      throw PrecompExhausted("setup: " + key.describe() + " needs " + std::to_string(count) + ", dealer files hold " +
                             std::to_string(have));
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto net = connect_tcp_mesh(party, c.addresses());
  net->handshake(c.digest());
  Session s(*net, store, c.seed);
  auto out = guarded(fn, s, c);
  store.persist_cursors();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return make_report(c, party, net->metrics(), std::move(out), seconds);
}

RunReport aggregate(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw ConfigError("aggregate: no reports");
  for (const auto& r : reports) {
    if (r.output_digest != reports.front().output_digest) {
      throw ProtocolDesync("party " + std::to_string(r.party) + " opened different outputs than party " +
                           std::to_string(reports.front().party));
    }
  }
  RunReport r = reports.front();
  r.party = -1;
  return r;
}

void init_logging() {
  const char* level = std::getenv("MPFIX_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

ApproxParams approx_params(const ScenarioConfig& cfg) {
  auto ap = ApproxParams::defaults();
  ap.newton_iters = static_cast<int>(cfg.param_int("approx.newton_iters", ap.newton_iters));
  ap.maxcut_eps = cfg.param_double("approx.maxcut_eps", ap.maxcut_eps);
  ap.baseline_taylor_degree = static_cast<int>(cfg.param_int("approx.baseline_taylor_degree", ap.baseline_taylor_degree));
  ap.softmax_recip_precision =
      static_cast<int>(cfg.param_int("approx.softmax_recip_precision", ap.softmax_recip_precision));
  auto coeffs = [&](const std::string& key, std::array<double, 5>& k, SquareCompleted& sq) {
    const auto text = cfg.param(key, "");
    if (text.empty()) return;
    std::stringstream in(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(in, item, ',')) {
      if (i == k.size()) throw ConfigError(key + ": expected 5 coefficients");
      try {
        k[i++] = std::stod(item);
      } catch (const std::exception&) {
        throw ConfigError(key + ": bad coefficient '" + item + "'");
      }
    }
    if (i != k.size()) throw ConfigError(key + ": expected 5 coefficients");
    sq = complete_square(k);
  };
  coeffs("approx.exp_coeffs", ap.exp_coeffs, ap.exp_square);
  coeffs("approx.log_coeffs", ap.log_coeffs, ap.log_square);
  if (ap.newton_iters < 1 || ap.newton_iters > 8) throw ConfigError("approx.newton_iters must be in 1..8");
  return ap;
}

}  // namespace mpfix
