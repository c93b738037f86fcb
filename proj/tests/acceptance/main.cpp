#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mpfix/harness/oracle.hpp"
#include "mpfix/harness/runner.hpp"
#include "mpfix/harness/scenarios.hpp"
#include "mpfix/nonlinear.hpp"
#include "mpfix/protocols.hpp"

using namespace mpfix;
using u64 = std::uint64_t;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

RunOptions opts(int n, u64 seed) {
  RunOptions o;
  o.parties = n;
  o.seed = seed;
  return o;
}

std::vector<u64> random_words(std::mt19937_64& rng, std::size_t n, int width = 64) {
  std::vector<u64> out(n);
  for (auto& w : out) w = width == 64 ? rng() : rng() & ((u64{1} << width) - 1);
  return out;
}

std::vector<u64> signed_words(std::mt19937_64& rng, std::size_t n, int bits) {
  std::uniform_int_distribution<std::int64_t> d(-(std::int64_t{1} << bits), (std::int64_t{1} << bits) - 1);
  std::vector<u64> out(n);
  for (auto& w : out) w = static_cast<u64>(d(rng));
  return out;
}

RunReport one(ScenarioConfig c) { return aggregate(run_scenario(c)); }

ScenarioConfig scenario(const std::string& name, std::initializer_list<std::pair<const char*, const char*>> kv = {}) {
  auto c = default_config(name);
  for (const auto& [k, v] : kv) apply_override(c, fmt::format("{}={}", k, v));
  return c;
}

// --- 1 ----------------------------------------------------------------------

Verdict protocol_correctness() {
  constexpr std::size_t kCases = 10000;
  Verdict v;
  for (int n = 2; n <= 5; ++n) {
    std::mt19937_64 rng(100 + n);
    const auto a = random_words(rng, kCases), b = random_words(rng, kCases);
    const auto sa = signed_words(rng, kCases, 62), sb = signed_words(rng, kCases, 62);
    const auto bits = random_words(rng, kCases, 1);
    constexpr std::size_t kMats = kCases / 8;  // 8 outputs per 2x4 @ 4x4 instance
    std::vector<std::vector<u64>> ma, mb;
    for (std::size_t i = 0; i < kMats; ++i) {
      ma.push_back(random_words(rng, 8));
      mb.push_back(random_words(rng, 16));
    }
    auto res = run_parties(opts(n, 7 + n), [&](Session& s) {
      auto x = input<u64>(s, 0, a, {kCases}, 0);
      auto y = input<u64>(s, n - 1, b, {kCases}, 0);
      auto bx = input_bits(s, 0, a, {kCases}, 64);
      auto by = input_bits(s, n - 1, b, {kCases}, 64);
      auto gx = input<u64>(s, 0, sa, {kCases}, 0);
      auto gy = input<u64>(s, 1, sb, {kCases}, 0);
      auto bb = input_bits(s, 1, bits, {kCases}, 1);
      std::vector<ArithTensor<u64>> A, B;
      for (std::size_t i = 0; i < kMats; ++i) {
        A.push_back(input<u64>(s, 0, ma[i], {2, 4}, 0));
        B.push_back(input<u64>(s, n - 1, mb[i], {4, 4}, 0));
      }
      std::vector<std::vector<u64>> out;
      out.push_back(open(s, add(x, y)).data);
      out.push_back(open(s, mul(s, x, y)).data);
      std::vector<u64> mm;
      for (const auto& z : batch_matmul(s, A, B)) {
        const auto o = open(s, z).data;
        mm.insert(mm.end(), o.begin(), o.end());
      }
      out.push_back(mm);
      out.push_back(open_bits(s, and_bits(s, bx, by)).words);
      out.push_back(open_bits(s, bit_xor(bx, by)).words);
      out.push_back(open(s, bit2a<u64>(s, bb)).data);
      out.push_back(open(s, compose<u64>(s, bx, 0, 64, 0)).data);
      out.push_back(open_bits(s, decompose(s, x)).words);
      out.push_back(open_bits(s, gt(s, gx, gy)).words);
      return out;
    });
    const auto& o = res[0];
    std::size_t bad[9] = {};
    for (std::size_t i = 0; i < kCases; ++i) {
      bad[0] += o[0][i] != oracle_ring_add(a[i], b[i], 64);
      bad[1] += o[1][i] != a[i] * b[i];
      bad[3] += o[3][i] != (a[i] & b[i]);
      bad[4] += o[4][i] != (a[i] ^ b[i]);
      bad[5] += o[5][i] != bits[i];
      bad[6] += o[6][i] != a[i];
      bad[7] += o[7][i] != a[i];
      bad[8] += o[8][i] != (static_cast<std::int64_t>(sa[i]) > static_cast<std::int64_t>(sb[i]) ? 1u : 0u);
    }
    for (std::size_t m = 0; m < kMats; ++m) {
      for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
          u64 want = 0;
          for (std::size_t k = 0; k < 4; ++k) want += ma[m][r * 4 + k] * mb[m][k * 4 + c];
          bad[2] += o[2][m * 8 + r * 4 + c] != want;
        }
      }
    }
    std::size_t total = 0;
    for (auto b : bad) total += b;
    v.require(total == 0, fmt::format("n={} 9 ops x 1e4: {} mismatches", n, total));
  }

  // Exhaustive 8-bit ring.
  std::vector<u64> all8(256), xs, ys;
  for (u64 i = 0; i < 256; ++i) all8[i] = i;
  for (u64 i = 0; i < 256; ++i) {
    for (u64 j = 0; j < 256; ++j) {
      xs.push_back(i);
      ys.push_back(j);
    }
  }
  for (int n = 2; n <= 5; ++n) {
    auto res = run_parties(opts(n, 50 + n), [&](Session& s) {
      auto x = input<u64>(s, 0, all8, {256}, 0);
      auto ba = input_bits(s, 0, xs, {xs.size()}, 8);
      auto bb = input_bits(s, n - 1, ys, {ys.size()}, 8);
      auto b8 = input_bits(s, 1, all8, {256}, 8);
      return std::vector{open_bits(s, decompose(s, x, 8)).words, open_bits(s, binary_add(s, ba, bb)).words,
                         open_bits(s, lmo(s, b8)).words};
    });
    std::size_t bad = 0;
    for (std::size_t i = 0; i < 256; ++i) {
      bad += res[0][0][i] != all8[i];
      bad += res[0][2][i] != oracle_lmo(all8[i], 8);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) bad += res[0][1][i] != oracle_ring_add(xs[i], ys[i], 8);
    v.require(bad == 0, fmt::format("n={} exhaustive l=8: {} mismatches", n, bad));
  }
  return v;
}

// --- 2 ----------------------------------------------------------------------

Verdict truncation_bound() {
  constexpr std::size_t kCases = 100000;
  constexpr int p = 23;
  Verdict v;
  const int fs[] = {1, p, 64 / 4};
  for (int n = 2; n <= 5; ++n) {
    std::mt19937_64 rng(200 + n);
    const auto xs = signed_words(rng, kCases, 62);
    auto res = run_parties(opts(n, 20 + n), [&](Session& s) {
      auto x = input<u64>(s, 0, xs, {kCases}, 2 * p);
      std::vector<std::vector<u64>> out;
      for (int f : fs) out.push_back(open(s, truncate(s, x, f)).data);
      return out;
    });
    std::int64_t worst = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < kCases; ++i) {
        const auto dev = static_cast<std::int64_t>(res[0][k][i] - oracle_signed_shift(xs[i], fs[k], 64));
        worst = std::max(worst, std::abs(dev));
      }
    }
    v.require(worst <= 1, fmt::format("n={} max deviation {}", n, worst));
  }
  return v;
}

// --- 3 ----------------------------------------------------------------------

Verdict nonlinear_envelopes() {
  Verdict v;
  const auto r = one(scenario("nonlinear-sweep", {{"points", "2048"}}));
  const auto& rec = r.stat("reciprocal");
  const auto& ex = r.stat("exponentiation");
  const auto& lg = r.stat("logarithm");
  v.require(rec.max_rel <= 1e-4, fmt::format("reciprocal max rel {:.3g}", rec.max_rel));
  v.require(ex.max_rel <= 1e-4, fmt::format("exponentiation[-16,16] max rel {:.3g}", ex.max_rel));
  v.require(lg.max_abs <= 1e-3, fmt::format("logarithm max abs {:.3g}", lg.max_abs));
  v.require(r.value("baseline_overflow_x12") == 1,
            fmt::format("baseline_exp(12) = {:.6g} flagged", r.value("baseline_exp_x12")));
  v.require(r.value("exp_overflow_x12") == 0, fmt::format("exponentiation(12) = {:.6g} vs {:.6g}", r.value("exp_x12"),
                                                          std::exp(12.0)));
  fmt::print("  info: exponentiation[-8,8] max rel {:.3g}\n", r.stat("exponentiation[-8,8]").max_rel);
  return v;
}

// --- 4 and 6 share one full-size attention run ----------------------------

std::optional<RunReport> g_attention;

const RunReport& attention_run() {
  if (!g_attention) g_attention = one(scenario("attention-bench"));
  return *g_attention;
}

Verdict attention_fidelity() {
  Verdict v;
  const auto& r = attention_run();
  v.require(r.value("mse_optimized") <= 1e-5, fmt::format("optimized MSE {:.3g}", r.value("mse_optimized")));
  v.require(r.value("mse_naive") <= 1e-5, fmt::format("naive MSE {:.3g}", r.value("mse_naive")));
  fmt::print("  info: narrow vs wide maxcut max diff {:.3g}\n", r.value("max_diff_narrow_wide"));
  return v;
}

// --- 5 ----------------------------------------------------------------------

Verdict exp_savings() {
  Verdict v;
  const auto ap = ApproxParams::defaults();
  for (std::size_t batch : {std::size_t{1}, std::size_t{64}}) {
    auto res = run_parties(opts(2, 5), [&](Session& s) {
      std::vector<double> xs(batch, -1.5);
      std::vector<u64> e64;
      std::vector<std::uint32_t> e32;
      for (double x : xs) {
        e64.push_back(encode_fixed<u64>(x, 14));
        e32.push_back(encode_fixed<std::uint32_t>(x, 14));
      }
      auto x64 = input<u64>(s, 0, e64, {batch}, 14);
      auto x32 = input<std::uint32_t>(s, 0, e32, {batch}, 14);
      (void)exponentiation(s, x64, ap);
      (void)attention_exp(s, x32, ap);
      return std::pair{s.metrics().op("exponentiation"), s.metrics().op("attention_exp")};
    });
    const auto& [g, a] = res[0];
    const auto dm = static_cast<std::int64_t>(g.mul) - static_cast<std::int64_t>(a.mul);
    const auto ds = static_cast<std::int64_t>(g.scale) - static_cast<std::int64_t>(a.scale);
    const auto dt = static_cast<std::int64_t>(g.trunc) - static_cast<std::int64_t>(a.trunc);
    v.require(dm == 3 && ds == 4 && dt == 1,
              fmt::format("batch {}: mul {}-{}={}, scale {}-{}={}, trunc {}-{}={}", batch, g.mul, a.mul, dm, g.scale,
                          a.scale, ds, g.trunc, a.trunc, dt));
  }
  return v;
}

Verdict downsizing() {
  Verdict v;
  const auto& r = attention_run();
  const double naive = r.value("batch_mul_elements_naive"), opt = r.value("batch_mul_elements_optimized");
  const double want = 196.0 * 196.0 / (196.0 * 64.0);
  v.require(naive * 64 == opt * 196, fmt::format("elements {:.0f}:{:.0f} ratio {:.4f} (want {:.4f})", naive, opt,
                                                 naive / opt, want));
  v.require(r.value("max_diff_naive_optimized") <= std::ldexp(1.0, -10),
            fmt::format("max |optimized - naive| {:.3g}", r.value("max_diff_naive_optimized")));
  return v;
}

// --- 7 ----------------------------------------------------------------------

Verdict softmax_normalisation() {
  Verdict v;
  const auto r = one(scenario("softmax-bench"));
  v.require(r.value("row_sum_min") >= 0.999 && r.value("row_sum_max") <= 1.001,
            fmt::format("1000x196 at p=16: row sums in [{:.6f}, {:.6f}]", r.value("row_sum_min"), r.value("row_sum_max")));
  auto low = scenario("softmax-bench");
  low.precision = 14;
  const auto r14 = one(low);
  fmt::print("  info: p=14 row sums in [{:.6f}, {:.6f}]\n", r14.value("row_sum_min"), r14.value("row_sum_max"));
  return v;
}

// --- 8 ----------------------------------------------------------------------

Verdict party_scaling() {
  Verdict v;
  for (int ring : {64, 32}) {
    for (int n = 2; n <= 5; ++n) {
      auto c = scenario("scale-parties");
      c.parties = n;
      c.ring_bits = ring;
      if (ring == 32) c.precision = 12;
      const auto r = one(c);
      v.require(r.value("bits_per_element") == 2.0 * ring * (n - 1) && r.value("exact_mismatches") == 0,
                fmt::format("l={} n={}: {:.0f} bits", ring, n, r.value("bits_per_element")));
    }
  }
  return v;
}

// --- 9 ----------------------------------------------------------------------

Verdict mlp_inference() {
  Verdict v;
  const auto r = one(scenario("mlp-simple"));
  v.require(r.value("argmax_agreement") >= 0.99, fmt::format("argmax agreement {:.3f}", r.value("argmax_agreement")));
  v.require(r.value("max_logit_abs_dev") <= 1e-2, fmt::format("max logit deviation {:.3g}", r.value("max_logit_abs_dev")));
  return v;
}

// --- 10 ---------------------------------------------------------------------

Verdict determinism() {
  Verdict v;
  const std::vector<ScenarioConfig> configs{
      scenario("comm-micro"),
      scenario("softmax-bench", {{"rows", "16"}, {"cols", "24"}}),
      scenario("attention-bench", {{"d1", "12"}, {"d2", "10"}, {"d3", "4"}, {"heads", "2"}}),
      scenario("nonlinear-sweep", {{"points", "32"}}),
      scenario("mlp-simple", {{"layers", "16,8,4"}, {"inputs", "10"}}),
  };
  for (auto c : configs) {
    auto json = [](const std::vector<RunReport>& rs) {
      std::string s;
      for (const auto& r : rs) s += r.to_json(false) + "\n";
      return s;
    };
    c.parties = 3;
    const auto first = json(run_scenario(c));
    const auto second = json(run_scenario(c));
    c.transport = TransportKind::kTcp;
    const auto tcp = json(run_scenario(c));
    v.require(first == second && first == tcp,
              fmt::format("{}: repeat {}, tcp {}", c.scenario, first == second ? "same" : "DIFFERENT",
                          first == tcp ? "same" : "DIFFERENT"));
  }
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  init_logging();
  const std::vector<Criterion> criteria{
      {1, "protocol correctness", 300, protocol_correctness},
      {2, "truncation bound", 0, truncation_bound},
      {3, "non-linear accuracy envelopes", 120, nonlinear_envelopes},
      {4, "attention block fidelity", 300, attention_fidelity},
      {5, "attention-exp op savings", 0, exp_savings},
      {6, "downsizing ratio", 0, downsizing},
      {7, "softmax normalisation", 0, softmax_normalisation},
      {8, "party scaling", 0, party_scaling},
      {9, "mlp inference", 600, mlp_inference},
      {10, "determinism and transport equivalence", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = fmt::format("threw: {}", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0) v.require(secs < c.budget_seconds, fmt::format("under {:.0f}s", c.budget_seconds));
    failed += v.pass ? 0 : 1;
    fmt::print("{} {:>2} {}: {} ({:.1f}s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail, secs);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
