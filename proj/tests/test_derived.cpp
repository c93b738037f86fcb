#include <gtest/gtest.h>

#include <algorithm>

#include "mpfix/derived.hpp"
#include "mpfix/harness/oracle.hpp"
#include "test_util.hpp"

using namespace mpfix;
using u64 = std::uint64_t;

namespace {

std::int64_t deviation(u64 got, u64 want) { return static_cast<std::int64_t>(got - want); }

}  // namespace

TEST(UnsignedTruncate, BoundAndIdentity) {
  std::mt19937_64 rng(1);
  auto xs = test::random_words<u64>(rng, 10000);
  for (auto& x : xs) x >>= 1;
  xs[0] = 16;
  for (int n : {2, 3, 5}) {
    auto out = test::run(n, [&](Session& s) {
      auto x = input<u64>(s, 0, xs, {xs.size()}, 0);
      std::vector<std::vector<u64>> res;
      for (int f : {1, 2, 14, 32}) res.push_back(open(s, unsigned_truncate(s, x, f)).data);
      res.push_back(open(s, unsigned_truncate(s, x, 0)).data);
      return res;
    });
    const int fs[] = {1, 2, 14, 32};
    for (int k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto d = deviation(out[0][k][i], xs[i] >> fs[k]);
        ASSERT_TRUE(d == 0 || d == 1) << "x=" << xs[i] << " f=" << fs[k] << " dev=" << d;
      }
    }
    EXPECT_TRUE(out[0][1][0] >= 3 && out[0][1][0] <= 5);
    EXPECT_EQ(out[0][4], xs);
  }
}

TEST(Truncate, SignedBoundOverRandomInputs) {
  const int p = 14;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int64_t> d(-(std::int64_t{1} << 62), (std::int64_t{1} << 62) - 1);
  std::vector<u64> xs(20000);
  for (auto& x : xs) x = static_cast<u64>(d(rng));
  xs[0] = encode_fixed<u64>(-4.0, p);
  xs[1] = 0;
  for (int n = 2; n <= 5; ++n) {
    auto out = test::run(n, [&](Session& s) {
      auto x = input<u64>(s, 0, xs, {xs.size()}, 2 * p);
      std::vector<ArithTensor<u64>> res;
      for (int f : {1, p, 16}) res.push_back(open(s, truncate(s, x, f)));
      return res;
    });
    const int fs[] = {1, p, 16};
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(out[0][k].frac_bits, 2 * p - fs[k]);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto dev = deviation(out[0][k].data[i], oracle_signed_shift(xs[i], fs[k], 64));
        ASSERT_LE(std::abs(dev), 1) << "f=" << fs[k];
      }
    }
    const auto minus4 = to_signed(out[0][1].data[0]);
    EXPECT_TRUE(minus4 >= -5 && minus4 <= -3) << minus4;
    EXPECT_LE(std::abs(to_signed(out[0][1].data[1])), 1);
  }
}

TEST(Truncate, RoundsUpWithFractionalProbability) {
  const std::vector<u64> xs(40000, (u64{7} << 20) + (u64{1} << 18));  // frac part 1/4
  auto out = test::run(2, [&](Session& s) {
    auto x = input<u64>(s, 0, xs, {xs.size()}, 0);
    return std::vector{open(s, truncate(s, x, 20)).data, open(s, unsigned_truncate(s, x, 20)).data};
  });
  for (const auto& v : out[0]) {
    double up = 0;
    for (auto r : v) {
      ASSERT_TRUE(r == 7 || r == 8);
      up += r == 8;
    }
    EXPECT_NEAR(up / static_cast<double>(v.size()), 0.25, 0.02);
  }
}

TEST(Truncate, FixedPointProductsRescale) {
  const int p = 20;
  std::mt19937_64 rng(3);
  const auto x = test::uniform_reals(rng, 20000, -1000, 1000), y = test::uniform_reals(rng, 20000, -1000, 1000);
  auto out = test::run(2, [&](Session& s) {
    auto a = input<u64>(s, 0, test::encode_all(x, p), {x.size()}, p);
    auto b = input<u64>(s, 1, test::encode_all(y, p), {y.size()}, p);
    auto prod = mul(s, a, b);
    auto r = rescale(s, prod, p);
    EXPECT_EQ(rescale(s, r, p).data, r.data);
    return open(s, r);
  });
  const double ulp = std::ldexp(1.0, -p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double want = decode_fixed(encode_fixed<u64>(x[i], p), p) * decode_fixed(encode_fixed<u64>(y[i], p), p);
    ASSERT_LE(std::fabs(decode_fixed(out[0].data[i], p) - want), 2 * ulp);
  }
}

TEST(Truncate, ManyShareOneRound) {
  std::mt19937_64 rng(4);
  auto xs = test::random_words<u64>(rng, 100);
  for (auto& x : xs) x >>= 3;
  auto out = test::run(3, [&](Session& s) {
    auto a = input<u64>(s, 0, xs, {xs.size()}, 20);
    auto b = input<u64>(s, 1, xs, {xs.size()}, 20);
    const std::vector<int> shifts{4, 12};
    const auto r0 = s.metrics().rounds();
    auto res = truncate_many<u64>(s, {&a, &b}, shifts);
    EXPECT_EQ(s.metrics().rounds() - r0, 1u);
    return std::vector{open(s, res[0]).data, open(s, res[1]).data};
  });
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ASSERT_LE(std::abs(deviation(out[0][0][i], oracle_signed_shift(xs[i], 4, 64))), 1);
    ASSERT_LE(std::abs(deviation(out[0][1][i], oracle_signed_shift(xs[i], 12, 64))), 1);
  }
}

TEST(EvaluatePoly, IdentityAndZero) {
  const int p = 23;
  std::mt19937_64 rng(5);
  const auto x = test::uniform_reals(rng, 2000, -8, 8);
  const std::vector<double> identity{0, 1};
  const std::vector<double> f2{0.0, 1.442547, -0.726980, 0.496404, -0.268344};
  auto out = test::run(2, [&](Session& s) {
    auto a = input<u64>(s, 0, test::encode_all(x, p), {x.size()}, p);
    auto zero = input<u64>(s, 0, std::vector<u64>(4, 0), {4}, p);
    auto id = evaluate_poly<u64>(s, a, identity);
    EXPECT_EQ(id.frac_bits, p);
    return std::vector{open(s, id), open(s, evaluate_poly<u64>(s, zero, f2))};
  });
  for (std::size_t i = 0; i < x.size(); ++i) {
    ASSERT_LE(std::abs(deviation(out[0][0].data[i], encode_fixed<u64>(x[i], p))), 1);
  }
  for (auto v : out[0][1].data) EXPECT_LE(std::abs(to_signed(v)), 1);
}

TEST(EvaluatePoly, RandomQuarticWithinBound) {
  const int p = 20, d = 4;
  std::mt19937_64 rng(6);
  const auto x = test::uniform_reals(rng, 3000, -2, 2);
  const auto c = test::uniform_reals(rng, d + 1, -1, 1);
  auto out = test::run(3, [&](Session& s) {
    auto a = input<u64>(s, 0, test::encode_all(x, p), {x.size()}, p);
    return open(s, evaluate_poly<u64>(s, a, c));
  });
  // Each power carries at most one truncation ulp plus its input's error scaled
  // by the power's derivative; the coefficients add their own encoding error.
  double slack = 0;
  for (int i = 1; i <= d; ++i) slack += std::fabs(c[i]) * i * std::pow(2.0, i - 1) * 4;
  const double bound = (d + 1 + slack) * std::ldexp(1.0, -p);
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double want = 0;
    for (int k = d; k >= 0; --k) want = want * x[i] + c[k];
    worst = std::max(worst, std::fabs(decode_fixed(out[0].data[i], p) - want));
  }
  EXPECT_LE(worst, bound);
  EXPECT_THROW(test::run(2, [](Session& s) {
                 ArithTensor<u64> a({1}, 10);
                 return evaluate_poly<u64>(s, a, std::vector<double>{}).size();
               }),
               ConfigError);
}

TEST(Lmo, ExamplesAndExhaustiveEightBit) {
  std::vector<u64> xs{0b0110, 0b0001, 0};
  for (u64 v = 1; v < 256; ++v) xs.push_back(v);
  for (int n : {2, 4}) {
    auto out = test::run(n, [&](Session& s) {
      auto b = input_bits(s, 0, xs, {xs.size()}, 8);
      auto l = lmo(s, b);
      EXPECT_EQ(l.width, 8);
      return open_bits(s, l).words;
    });
    EXPECT_EQ(out[0][0], 0b0100u);
    EXPECT_EQ(out[0][1], 0b0001u);
    EXPECT_EQ(out[0][2], 0u);
    for (std::size_t i = 3; i < xs.size(); ++i) {
      const u64 m = out[0][i];
      ASSERT_EQ(m, oracle_lmo(xs[i], 8));
      ASSERT_EQ(std::popcount(m), 1);
      ASSERT_TRUE(m <= xs[i] && xs[i] < 2 * m);
    }
  }
}

TEST(Lmo, WideInputs) {
  std::mt19937_64 rng(7);
  auto xs = test::random_words<u64>(rng, 500);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] >>= (i % 64);
  xs[0] |= 1;
  auto out = test::run(2, [&](Session& s) { return open_bits(s, lmo(s, input_bits(s, 0, xs, {xs.size()}, 64))).words; });
  for (std::size_t i = 0; i < xs.size(); ++i) ASSERT_EQ(out[0][i], oracle_lmo(xs[i], 64));
}

TEST(Select, Multiplexes) {
  const int p = 10;
  const std::vector<double> x{1.5, -2, 3}, y{-7, 8.25, 0};
  const std::vector<u64> b{1, 0, 1};
  auto out = test::run(2, [&](Session& s) {
    auto bb = input<u64>(s, 0, b, {3}, 0);
    auto xx = input<u64>(s, 0, test::encode_all(x, p), {3}, p);
    auto yy = input<u64>(s, 1, test::encode_all(y, p), {3}, p);
    return test::decode_all(open(s, select(s, bb, xx, yy)));
  });
  EXPECT_EQ(out[0], (std::vector<double>{1.5, 8.25, 3}));
}

TEST(MaxVec, ExamplesAndOracle) {
  const int p = 14;
  const std::size_t rows = 1000, cols = 7;
  std::mt19937_64 rng(8);
  auto xs = test::uniform_reals(rng, rows * cols, -1000, 1000);
  const std::vector<double> first{3, 1, 2, 0, 0, 0, 0};
  std::copy(first.begin(), first.end(), xs.begin());
  std::fill(xs.begin() + cols, xs.begin() + 2 * cols, -5.5);
  for (int n : {2, 3}) {
    auto out = test::run(n, [&](Session& s) {
      auto x = input<u64>(s, 0, test::encode_all(xs, p), {rows, cols}, p);
      auto m = max_vec(s, x);
      EXPECT_EQ(m.shape, (Shape{rows, 1}));
      EXPECT_EQ(m.frac_bits, p);
      return test::decode_all(open(s, m));
    });
    EXPECT_EQ(out[0][0], 3.0);
    EXPECT_EQ(out[0][1], -5.5);
    for (std::size_t r = 0; r < rows; ++r) {
      double want = -1e300;
      for (std::size_t c = 0; c < cols; ++c) want = std::max(want, decode_fixed(encode_fixed<u64>(xs[r * cols + c], p), p));
      ASSERT_EQ(out[0][r], want) << "row " << r;
    }
  }
}

TEST(MaxVec, SingleColumnAndNarrowRing) {
  const std::vector<double> xs{1, -2, 3.5, 7, -9, 2};
  auto out = test::run(2, [&](Session& s) {
    auto x = input<u64>(s, 0, test::encode_all(xs, 8), {6, 1}, 8);
    auto y = input<std::uint32_t>(s, 0, test::encode_all<std::uint32_t>(xs, 8), {2, 3}, 8);
    return std::vector{test::decode_all(open(s, max_vec(s, x))), test::decode_all(open(s, max_vec(s, y)))};
  });
  EXPECT_EQ(out[0][0], xs);
  EXPECT_EQ(out[0][1], (std::vector<double>{3.5, 7}));
}
