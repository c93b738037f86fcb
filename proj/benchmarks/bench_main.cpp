// Each iteration is a complete local run: dry run, dealing and the online phase
// for every party. Counters report the online traffic of party 0.
#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

#include "mpfix/harness/runner.hpp"
#include "mpfix/nn.hpp"
#include "mpfix/nonlinear.hpp"
#include "mpfix/protocols.hpp"

using namespace mpfix;
using u64 = std::uint64_t;

namespace {

std::vector<double> reals(std::size_t n, double lo, double hi, u64 seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

template <RingWord T>
ArithTensor<T> secret(Session& s, int owner, const std::vector<double>& xs, const Shape& shape, int p) {
  std::vector<T> enc;
  for (double x : xs) enc.push_back(encode_fixed<T>(x, p));
  return input<T>(s, owner, enc, shape, p);
}

template <class Body>
void run_bench(benchmark::State& state, int parties, std::size_t elements, Body body) {
  RunOptions o;
  o.parties = parties;
  RunSummary summary;
  for (auto _ : state) {
    run_parties(o, [&](Session& s) {
      body(s);
      return 0;
    }, &summary);
  }
  const auto& m = summary.parties[0].metrics;
  state.counters["rounds"] = static_cast<double>(m.rounds());
  state.counters["bytes_sent"] = static_cast<double>(m.payload_bytes_sent());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(elements));
}

const ApproxParams kAp = ApproxParams::defaults();

void BM_Mul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int parties = static_cast<int>(state.range(1));
  const auto a = reals(n, -4, 4, 1), b = reals(n, -4, 4, 2);
  run_bench(state, parties, n, [&](Session& s) {
    benchmark::DoNotOptimize(truncate(s, mul(s, secret<u64>(s, 0, a, {n}, 14), secret<u64>(s, 1, b, {n}, 14)), 14));
  });
}
BENCHMARK(BM_Mul)->ArgsProduct({{1024, 65536}, {2, 3, 5}})->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = reals(d * d, -1, 1, 3), b = reals(d * d, -1, 1, 4);
  run_bench(state, 2, d * d, [&](Session& s) {
    benchmark::DoNotOptimize(matmul(s, secret<u64>(s, 0, a, {d, d}, 14), secret<u64>(s, 1, b, {d, d}, 14)));
  });
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(196)->Unit(benchmark::kMillisecond);

void BM_Compare(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = reals(n, -100, 100, 5), b = reals(n, -100, 100, 6);
  run_bench(state, 2, n, [&](Session& s) {
    benchmark::DoNotOptimize(gt(s, secret<u64>(s, 0, a, {n}, 14), secret<u64>(s, 1, b, {n}, 14)));
  });
}
BENCHMARK(BM_Compare)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Reciprocal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = reals(n, 0.01, 200, 7);
  run_bench(state, 2, n, [&](Session& s) { benchmark::DoNotOptimize(reciprocal(s, secret<u64>(s, 0, a, {n}, 23), kAp)); });
}
BENCHMARK(BM_Reciprocal)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Exponentiation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = reals(n, -10, 0, 8);
  run_bench(state, 2, n, [&](Session& s) {
    benchmark::DoNotOptimize(exponentiation(s, secret<u64>(s, 0, a, {n}, 14), kAp));
  });
}
BENCHMARK(BM_Exponentiation)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_AttentionExp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = reals(n, -10, 0, 8);
  run_bench(state, 2, n, [&](Session& s) {
    benchmark::DoNotOptimize(attention_exp(s, secret<std::uint32_t>(s, 0, a, {n}, 14), kAp));
  });
}
BENCHMARK(BM_AttentionExp)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 196;
  const auto a = reals(rows * cols, -6, 6, 9);
  run_bench(state, 2, rows * cols, [&](Session& s) {
    benchmark::DoNotOptimize(softmax(s, secret<u64>(s, 0, a, {rows, cols}, 16), kAp));
  });
}
BENCHMARK(BM_Softmax)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Attention(benchmark::State& state) {
  const bool optimized = state.range(0) != 0;
  const std::size_t d1 = 196, d2 = 196, d3 = 64;
  const auto q = reals(d1 * d3, -1, 1, 10), k = reals(d2 * d3, -0.125, 0.125, 11), v = reals(d2 * d3, -1, 1, 12);
  auto qf = q;
  for (auto& x : qf) x *= std::numbers::log2e;
  run_bench(state, 2, d1 * d3, [&](Session& s) {
    std::vector Q{secret<u64>(s, 0, optimized ? qf : q, {d1, d3}, 14)};
    std::vector K{secret<u64>(s, 0, k, {d2, d3}, 14)};
    std::vector V{secret<u64>(s, 1, v, {d2, d3}, 14)};
    if (optimized) {
      benchmark::DoNotOptimize(attention_optimized(s, Q, K, V, kAp));
    } else {
      benchmark::DoNotOptimize(attention_naive(s, Q, K, V, kAp));
    }
  });
  state.SetLabel(optimized ? "optimized" : "naive");
}
BENCHMARK(BM_Attention)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
