#include <gtest/gtest.h>

#include <numbers>
#include <tuple>

#include "mpfix/harness/oracle.hpp"
#include "mpfix/nonlinear.hpp"
#include "test_util.hpp"

using namespace mpfix;

namespace {

const ApproxParams kAp = ApproxParams::defaults();

template <class F>
std::vector<double> secure(int p, const std::vector<double>& xs, F&& op, int parties = 2) {
  auto out = test::run(parties, [&](Session& s) {
    auto x = input<u64>(s, 0, test::encode_all(xs, p), {xs.size()}, p);
    return test::decode_all(open(s, op(s, x)));
  });
  return out[0];
}

std::vector<double> log_grid(double lo_exp, double hi_exp, std::size_t n) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::exp2(lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / (n - 1)));
  return out;
}

}  // namespace

TEST(Coefficients, TablesMatchReference) {
  EXPECT_EQ(kAp.exp_coeffs, (std::array<double, 5>{1.00000259, 0.69300383, 0.24144276, 0.05201146, 0.01353417}));
  EXPECT_EQ(kAp.log_coeffs, (std::array<double, 5>{0.0, 1.442547, -0.726980, 0.496404, -0.268344}));
  EXPECT_EQ(kAp.exp_square.k4_pow2, 0.015625);
  EXPECT_EQ(kAp.log_square.k4_pow2, -0.25);
  EXPECT_EQ(kAp.newton_iters, 5);
  EXPECT_EQ(kAp.maxcut_eps, std::ldexp(1.0, -14));
}

TEST(Coefficients, SquareCompletionReproducesQuartic) {
  EXPECT_LE(square_completion_error(kAp.exp_coeffs, kAp.exp_square), 1e-6);
  EXPECT_LE(square_completion_error(kAp.log_coeffs, kAp.log_square), 1e-6);
  for (const auto* k : {&kAp.exp_coeffs, &kAp.log_coeffs}) {
    const auto sq = complete_square(*k);
    EXPECT_LE(square_completion_error(*k, sq), 1e-12);
  }
  const auto e = complete_square(kAp.exp_coeffs);
  EXPECT_NEAR(e.t3, kAp.exp_square.t3, 1e-6);
  EXPECT_NEAR(e.t2, kAp.exp_square.t2, 1e-6);
  EXPECT_NEAR(e.t1, kAp.exp_square.t1, 1e-5);
  EXPECT_NEAR(e.t0, kAp.exp_square.t0, 1e-5);
  EXPECT_EQ(e.k4_pow2, 0.015625);
  const auto l = complete_square(kAp.log_coeffs);
  EXPECT_NEAR(l.t1, -3.66125013, 1e-6);
  EXPECT_EQ(l.k4_pow2, -0.25);
  EXPECT_THROW(complete_square({1, 2, 3, 4, 0}), ConfigError);
}

TEST(Coefficients, AttentionGain) { EXPECT_NEAR(attention_exp_gain(kAp), 0.015625 / 0.01353417, 1e-12); }

TEST(Coefficients, TaylorExp2) {
  const auto c = taylor_exp2(5);
  ASSERT_EQ(c.size(), 6u);
  EXPECT_DOUBLE_EQ(c[0], 1);
  EXPECT_DOUBLE_EQ(c[1], std::numbers::ln2);
  EXPECT_DOUBLE_EQ(c[3], std::pow(std::numbers::ln2, 3) / 6);
}

TEST(Newton, ProductFormEqualsIteration) {
  for (int d = 1; d <= 6; ++d) {
    for (double z = 0.05; z < 1.95; z += 0.05) {
      ASSERT_NEAR(newton_product(z, d), newton_iterate(z, d), 1e-12) << "z=" << z << " d=" << d;
    }
  }
  EXPECT_NEAR(newton_product(0.5, 5), 2.0, 2 * std::pow(0.5, 32) * 2);
}

TEST(Reciprocal, Examples) {
  for (int p : {14, 23}) {
    const auto r = secure(p, {1.0, 0.5, -4.0}, [](Session& s, auto& x) { return reciprocal(s, x, kAp); });
    const double ulp = std::ldexp(1.0, -p);
    EXPECT_NEAR(r[0], 1.0, 4 * ulp);
    EXPECT_LE(std::fabs(r[1] - 2.0) / 2.0, 2 * std::pow(0.5, 32) + 8 * ulp);
    EXPECT_LE(std::fabs(r[2] + 0.25) / 0.25, 2 * std::pow(0.5, 32) + 8 * ulp);
  }
}

TEST(Reciprocal, RelativeErrorEnvelope) {
  auto xs = log_grid(-8, 8, 200);
  for (std::size_t i = 0, n = xs.size(); i < n; ++i) xs.push_back(-xs[i]);
  const auto r = secure(23, xs, [](Session& s, auto& x) { return reciprocal(s, x, kAp); }, 3);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ASSERT_LE(std::fabs(r[i] * xs[i] - 1), 1e-4) << "x=" << xs[i];
  }
}

TEST(Exponentiation, Examples) {
  const auto r14 = secure(14, {0.0, 1.0, -20.0, -9.0}, [](Session& s, auto& x) { return exponentiation(s, x, kAp); });
  EXPECT_NEAR(r14[0], 1.0, std::ldexp(1.0, -12));
  EXPECT_EQ(r14[2], 0.0);
  EXPECT_GT(r14[3], 0.0);
  const auto r23 = secure(23, {0.0, 1.0}, [](Session& s, auto& x) { return exponentiation(s, x, kAp); });
  EXPECT_NEAR(r23[0], 1.0, std::ldexp(1.0, -12));
  EXPECT_LE(std::fabs(r23[1] / std::numbers::e - 1), 1e-4);
}

TEST(Exponentiation, UnderflowContract) {
  const int p = 14;
  std::vector<double> xs;
  const double edge = -p * std::numbers::ln2;
  for (double x = edge + 0.01; x <= 0; x += 0.25) xs.push_back(x);
  const std::size_t positive = xs.size();
  for (double x = edge - 0.05; x > -40; x -= 0.75) xs.push_back(x);
  const auto r = secure(p, xs, [](Session& s, auto& x) { return exponentiation(s, x, kAp); });
  for (std::size_t i = 0; i < positive; ++i) EXPECT_GT(r[i], 0.0) << "x=" << xs[i];
  for (std::size_t i = positive; i < xs.size(); ++i) EXPECT_EQ(r[i], 0.0) << "x=" << xs[i];
}

TEST(Exponentiation, AccurateOnModerateRange) {
  std::vector<double> xs;
  for (double x = -8; x <= 8; x += 0.0625) xs.push_back(x);
  const auto r = secure(23, xs, [](Session& s, auto& x) { return exponentiation(s, x, kAp); });
  const double ulp = std::ldexp(1.0, -23);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ASSERT_LE(std::fabs(r[i] - std::exp(xs[i])), 1e-4 * std::exp(xs[i]) + 2 * ulp) << xs[i];
  }
}

TEST(Logarithm, Examples) {
  const auto r = secure(23, {1.0, 0.75, std::numbers::e}, [](Session& s, auto& x) { return logarithm(s, x, kAp); });
  EXPECT_NEAR(r[0], 0.0, std::ldexp(1.0, -10));
  EXPECT_NEAR(r[1], std::log(0.75), std::ldexp(1.0, -10));
  EXPECT_NEAR(r[2], 1.0, std::ldexp(1.0, -10));
}

TEST(Logarithm, AbsoluteErrorEnvelope) {
  const auto xs = log_grid(-8, 8, 300);
  const auto r = secure(23, xs, [](Session& s, auto& x) { return logarithm(s, x, kAp); });
  for (std::size_t i = 0; i < xs.size(); ++i) ASSERT_LE(std::fabs(r[i] - std::log(xs[i])), 1e-3) << xs[i];
}

TEST(Logarithm, BigInputsNeedTheCheck) {
  for (auto [p, lo, hi] : {std::tuple{23, 24.0, 39.0}, std::tuple{16, 30.0, 46.0}}) {
    const auto xs = log_grid(lo, hi, 40);
    const auto r = secure(p, xs, [](Session& s, auto& x) { return logarithm(s, x, kAp, true); });
    for (std::size_t i = 0; i < xs.size(); ++i) ASSERT_LE(std::fabs(r[i] - std::log(xs[i])), 2e-3) << xs[i];
  }
  const int p = 16;
  const auto small = secure(p, {0.5, 3.0}, [](Session& s, auto& x) { return logarithm(s, x, kAp, true); });
  EXPECT_NEAR(small[0], std::log(0.5), 1e-3);
  EXPECT_NEAR(small[1], std::log(3.0), 1e-3);
  const auto unchecked = secure(p, {std::exp2(20)}, [](Session& s, auto& x) { return logarithm(s, x, kAp, false); });
  EXPECT_GT(std::fabs(unchecked[0] - 20 * std::numbers::ln2), 0.1);
}

TEST(BaselineExp, ExamplesAndOverflow) {
  const auto r = secure(kBaselinePrecision, {0.0, 1.0, 12.0},
                        [](Session& s, auto& x) { return baseline_exp(s, x, kAp); });
  EXPECT_NEAR(r[0], 1.0, 1e-3);
  EXPECT_NEAR(r[1], std::numbers::e, 1e-3 * std::numbers::e);
  // The 31-bit emulation cannot hold e^12 * 2^16, so the result is garbage.
  EXPECT_GT(std::fabs(r[2] / std::exp(12.0) - 1), 0.5);
  const auto main = secure(23, {12.0}, [](Session& s, auto& x) { return exponentiation(s, x, kAp); });
  EXPECT_GT(std::fabs(main[0] / std::exp(12.0) - 1), 0.5) << "64-bit exponentiation at p=23 also overflows at 12";
  const auto lowp = secure(16, {12.0}, [](Session& s, auto& x) { return exponentiation(s, x, kAp); });
  EXPECT_LE(std::fabs(lowp[0] / std::exp(12.0) - 1), 1e-3);
  EXPECT_THROW(secure(14, {1.0}, [](Session& s, auto& x) { return baseline_exp(s, x, kAp); }), ConfigError);
}

TEST(AttentionExp, ExamplesAtNarrowInput) {
  const int p = 14;
  const double g = attention_exp_gain(kAp);
  const std::vector<double> xs{0.0, -5.0, -0.5, -13.5};
  auto out = test::run(2, [&](Session& s) {
    auto x = input<std::uint32_t>(s, 0, test::encode_all<std::uint32_t>(xs, p), {xs.size()}, p);
    auto y = attention_exp(s, x, kAp);
    EXPECT_EQ(y.frac_bits, p);
    return test::decode_all(open(s, y));
  });
  EXPECT_NEAR(out[0][0] / g, 1.0, std::ldexp(1.0, -10));
  EXPECT_NEAR(out[0][1] / g, std::exp2(-5.0), 1e-3);
  EXPECT_NEAR(out[0][2] / g, std::exp2(-0.5), std::ldexp(1.0, -10));
  EXPECT_NEAR(out[0][3] / g, std::exp2(-13.5), std::ldexp(1.0, -13));
}

TEST(AttentionExp, AgreesWithExponentiation) {
  const int p = 14;
  const double g = attention_exp_gain(kAp);
  std::vector<double> xp;
  for (double v = -p + 0.02; v <= 0; v += 0.05) xp.push_back(v);
  std::vector<double> x;
  for (double v : xp) x.push_back(v / std::numbers::log2e);
  auto out = test::run(2, [&](Session& s) {
    auto a = input<std::uint32_t>(s, 0, test::encode_all<std::uint32_t>(xp, p), {xp.size()}, p);
    auto b = input<u64>(s, 0, test::encode_all(x, p), {x.size()}, p);
    auto wide = input<u64>(s, 0, test::encode_all(xp, p), {xp.size()}, p);
    return std::vector{test::decode_all(open(s, attention_exp(s, a, kAp))),
                       test::decode_all(open(s, exponentiation(s, b, kAp))),
                       test::decode_all(open(s, attention_exp(s, wide, kAp)))};
  });
  const double floor = std::ldexp(1.0, -(p - 2));
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const double a = out[0][0][i] / g, b = out[0][1][i];
    ASSERT_LE(std::fabs(a - b), std::ldexp(1.0, -10) * std::fabs(b) + floor) << "x'=" << xp[i];
    ASSERT_LE(std::fabs(out[0][2][i] - out[0][0][i]), 2 * floor) << "x'=" << xp[i];
  }
}

TEST(AttentionExp, SavesThreeMulsFourScalesOneTruncation) {
  const int p = 14;
  auto out = test::run(2, [&](Session& s) {
    auto a = input<std::uint32_t>(s, 0, std::vector<std::uint32_t>(8, 0), {8}, p);
    auto b = input<u64>(s, 0, std::vector<u64>(8, 0), {8}, p);
    (void)attention_exp(s, a, kAp);
    (void)exponentiation(s, b, kAp);
    return std::vector{s.metrics().op("attention_exp"), s.metrics().op("exponentiation")};
  });
  const auto& att = out[0][0];
  const auto& ex = out[0][1];
  EXPECT_EQ(att.calls, 1u);
  EXPECT_EQ(ex.calls, 1u);
  EXPECT_EQ(ex.mul - att.mul, 3u);
  EXPECT_EQ(ex.scale - att.scale, 4u);
  EXPECT_EQ(ex.trunc - att.trunc, 1u);
  EXPECT_EQ(att.mul, 7u);
  EXPECT_EQ(att.scale, 1u);
  EXPECT_EQ(att.trunc, 4u);
  EXPECT_LT(att.rounds, ex.rounds);
}

TEST(Nonlinear, OracleAgreesWithLibm) {
  const std::vector<double> xs{0.5, 2.0, 4.0};
  EXPECT_EQ(oracle_eval("reciprocal", xs)[1], 0.5);
  EXPECT_EQ(oracle_eval("logarithm", xs)[1], std::log(2.0));
  EXPECT_EQ(oracle_eval("exponentiation", xs)[0], std::exp(0.5));
  EXPECT_EQ(oracle_eval("attention_exp", xs)[1], 4.0);
}
