#include <gtest/gtest.h>

#include "oracles.hpp"
#include "padic/core.hpp"
#include "padic/json.hpp"
#include "padic/rng.hpp"

using namespace padic;

TEST(MakePadic, LeadingZeroGivesValuationOne) {
  auto ctx = Context::zp(3, 3);
  PAdic x = make_padic(ctx, 0, {0, 2, 1});
  EXPECT_EQ(x.mantissa(), 15u);
  EXPECT_EQ(x.valuation(), 1);
  EXPECT_EQ(x.norm(), NormValue::pow(1));
  EXPECT_EQ(x.known_radius(), NormValue::pow(3));
}

TEST(MakePadic, UnitHasNormOne) {
  PAdic x = make_padic(Context::zp(2, 4), 0, {1, 0, 0, 0});
  EXPECT_EQ(x.mantissa(), 1u);
  EXPECT_EQ(x.norm(), NormValue::one());
}

TEST(MakePadic, NegativeExponentMatchesRationalValuation) {
  auto ctx = Context::qp(5, 3, -2, 0);
  PAdic x = make_padic(ctx, -2, {3, 0, 0});
  // 3/25: v_5(3) - v_5(25) = -2
  EXPECT_EQ(x.valuation(), oracle::valuation(3, 5) - oracle::valuation(25, 5));
  EXPECT_EQ(x.norm(), NormValue::pow(-2));
}

TEST(MakePadic, RejectsBadDigitsAndWindow) {
  auto ctx = Context::zp(3, 4);
  try {
    make_padic(ctx, 0, {1, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AlphabetViolation);
  }
  try {
    make_padic(ctx, -1, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::WindowViolation);
  }
}

TEST(MakePadic, TruncatesBeyondBudget) {
  PAdic x = make_padic(Context::zp(2, 3), 0, {1, 1, 1, 1, 1});
  EXPECT_EQ(x.precision(), 3);
  EXPECT_EQ(x.mantissa(), 7u);
}

TEST(Norm, ZeroCarriesBound) {
  auto ctx = Context::zp(2, 8);
  NormValue n = ctx.zero().norm();
  EXPECT_TRUE(n.zero);
  EXPECT_EQ(n.k, 8);
  EXPECT_LT(n, NormValue::pow(40));
  EXPECT_EQ(ctx.integer(15).norm(), NormValue::pow(0));
  EXPECT_EQ(Context::zp(3, 4).integer(15).norm(), NormValue::pow(1));
}

TEST(NormValue, OrderAndScaling) {
  EXPECT_LT(NormValue::pow(3), NormValue::pow(2));
  EXPECT_LT(NormValue::zero_below(1), NormValue::pow(100));
  EXPECT_EQ(NormValue::pow(2).scaled(1), NormValue::pow(1));
  EXPECT_EQ(max(NormValue::pow(2), NormValue::pow(5)), NormValue::pow(2));
  EXPECT_EQ(parse_norm("p^-3"), NormValue::pow(3));
  EXPECT_EQ(parse_norm("p^2"), NormValue::pow(-2));
  EXPECT_THROW(parse_norm("q^-3"), Error);
}

TEST(Arith, CarryInBaseTwo) {
  auto ctx = Context::zp(2, 4);
  PAdic s = ctx.integer(1) + ctx.integer(1);
  EXPECT_EQ(s.digits(), (std::vector<int>{0, 1, 0, 0}));
}

TEST(Arith, MultiplyCarryChainBaseFive) {
  auto ctx = Context::zp(5, 3);
  PAdic a = make_padic(ctx, 0, {2, 3, 0});  // 17, known to 3 digits
  PAdic b = make_padic(ctx, 0, {4, 0, 0});
  PAdic c = ctx.admit(a * b);
  EXPECT_EQ(c.digits(), oracle::digits(68, 5, 3));
  EXPECT_EQ(c.digits(), (std::vector<int>{3, 3, 2}));
}

TEST(Arith, SubInvertsAdd) {
  auto ctx = Context::zp(3, 6);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    PAdic x = ctx.element(rng.below(ctx.size())), y = ctx.element(rng.below(ctx.size()));
    EXPECT_EQ(ctx.admit((x - y) + y), x);
  }
}

TEST(Arith, PrecisionIsMinOfOperands) {
  PAdic x(3, 0, 4, 5), y(3, 0, 2, 1);
  EXPECT_EQ((x + y).known_radius(), max(x.known_radius(), y.known_radius()));
  PAdic z(3, -1, 4, 5);
  EXPECT_EQ((x + z).base_exp(), -1);
  EXPECT_EQ((x + z).end(), 3);
}

TEST(Arith, WindowRejectsUnderflow) {
  auto ctx = Context::qp(3, 4, -1, 0);
  PAdic x = make_padic(ctx, -1, {1});
  EXPECT_THROW(ctx.admit(x.shifted(-1)), Error);
  EXPECT_NO_THROW(ctx.admit(ctx.integer(3).shifted(-1)));
}

TEST(IntFrac, SplitAtZero) {
  auto ctx = Context::qp(5, 4, -1, 0);
  PAdic x = make_padic(ctx, -1, {3, 2, 1});
  auto [w, f] = int_frac_split(x);
  EXPECT_EQ(f.digits()[0], 3);
  EXPECT_TRUE(sub(f, make_padic(ctx, -1, {3})).is_zero());
  EXPECT_EQ(w.base_exp(), 0);
  EXPECT_EQ(w.mantissa(), 7u);
  EXPECT_TRUE(sub(w + f, x).is_zero());
}

TEST(IntFrac, IntegerHasZeroFraction) {
  auto ctx = Context::qp(3, 5, -2, 0);
  PAdic x = ctx.integer(41);
  auto [w, f] = int_frac_split(x);
  EXPECT_TRUE(f.is_zero());
  EXPECT_TRUE(sub(w, x).is_zero());
}

TEST(IntFrac, ThreeFractionalTerms) {
  auto ctx = Context::qp(2, 4, -3, 0);
  PAdic x = make_padic(ctx, -3, {1, 1, 1, 1, 1, 1, 1});
  auto [w, f] = int_frac_split(x);
  int terms = 0;
  for (int d : f.digits()) terms += d != 0;
  EXPECT_EQ(terms, 3);
  EXPECT_EQ(w.mantissa(), 15u);
}

TEST(Ball, UnitBallAtThreeDigits) {
  auto ctx = Context::zp(2, 3);
  auto b = enumerate_ball(ctx, ctx.zero(), NormValue::one());
  ASSERT_EQ(b.size(), 8u);
  for (std::uint64_t i = 0; i < 8; ++i) EXPECT_EQ(b[i].mantissa(), i);
}

TEST(Ball, ResiduesCongruentToOne) {
  auto ctx = Context::zp(3, 2);
  auto b = enumerate_ball(ctx, ctx.integer(1), NormValue::pow(1));
  std::vector<std::uint64_t> got;
  for (auto& x : b) got.push_back(x.mantissa());
  EXPECT_EQ(got, (std::vector<std::uint64_t>{1, 4, 7}));
}

TEST(Ball, CountAndPartition) {
  for (std::uint32_t p : {2u, 3u, 5u}) {
    auto ctx = Context::zp(p, 5);
    for (int k = 0; k <= 5; ++k) {
      PAdic c = ctx.integer(17);
      auto ball = enumerate_ball(ctx, c, NormValue::pow(k));
      EXPECT_EQ(ball.size(), ctx.pow(5 - k));
      if (k == 5) continue;
      std::vector<int> seen(ctx.size(), 0);
      std::size_t total = 0;
      for (std::uint32_t d = 0; d < p; ++d) {
        PAdic center = ctx.admit(c + ctx.element(ctx.pow(k) * d));
        for (auto& y : enumerate_ball(ctx, center, NormValue::pow(k + 1))) {
          ++seen[y.mantissa()];
          ++total;
          EXPECT_LE(dist(y, c), NormValue::pow(k));
        }
      }
      EXPECT_EQ(total, ball.size());
      for (auto& y : ball) EXPECT_EQ(seen[y.mantissa()], 1);
    }
  }
}

TEST(Ball, BudgetExceeded) {
  auto ctx = Context::zp(2, 20);
  try {
    enumerate_ball(ctx, ctx.zero(), NormValue::one(), 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BudgetExceeded);
  }
}

TEST(Text, ParseFormat) {
  PAdic x = parse("p:3;u:0;d:1,2,0");
  EXPECT_EQ(x, PAdic::from_digits(3, 0, {1, 2, 0}));
  EXPECT_EQ(format(x), "p:3;u:0;d:1,2,0");
  EXPECT_EQ(format(parse("p:5;u:-2;d:3,0,0")), "p:5;u:-2;d:3,0,0");
}

TEST(Text, RoundTripRandom) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    std::uint32_t p = std::vector<std::uint32_t>{2, 3, 5, 7}[rng.below(4)];
    int n = static_cast<int>(rng.below(10));
    int u = static_cast<int>(rng.below(9)) - 4;
    std::vector<int> d(n);
    for (auto& v : d) v = static_cast<int>(rng.below(p));
    PAdic x = PAdic::from_digits(p, u, d);
    std::string t = format(x);
    EXPECT_EQ(format(parse(t)), t);
    nlohmann::json j = x;
    EXPECT_EQ(j.get<PAdic>(), x);
  }
}

TEST(Text, ParseErrorsCarryPosition) {
  try {
    parse("p:3;u:0;d:1,5");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_EQ(e.position(), 12u);
  }
  try {
    parse("p:3;x:0;d:1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  EXPECT_THROW(parse("p:3;u:0;d:1,"), Error);
}

TEST(Json, Embedding) {
  nlohmann::json j = PAdic::from_digits(3, 0, {1, 2, 0});
  EXPECT_EQ(j.dump(), R"({"digits":[1,2,0],"p":3,"u":0})");
  EXPECT_EQ(nlohmann::json::parse(R"({"p":3,"u":0,"digits":[1,2,0]})").get<PAdic>(), PAdic::from_digits(3, 0, {1, 2, 0}));
}

// property checks over random triples

class Ultrametric : public ::testing::TestWithParam<std::uint32_t> {};

TEST_P(Ultrametric, InequalityMultiplicativityIsometry) {
  std::uint32_t p = GetParam();
  auto ctx = Context::zp(p, 8);
  Rng rng(p * 1000 + 1);
  for (int i = 0; i < 2000; ++i) {
    PAdic x = ctx.element(rng.below(ctx.size())), y = ctx.element(rng.below(ctx.size())),
          c = ctx.element(rng.below(ctx.size()));
    NormValue nx = x.norm(), ny = y.norm();
    EXPECT_LE(dist(x, y), max(nx, ny));
    if (nx != ny) {
      EXPECT_EQ(dist(x, y), max(nx, ny));
    }
    EXPECT_EQ(dist(x + c, y + c), dist(x, y));
    if (!x.is_zero() && !y.is_zero()) {
      EXPECT_EQ(mul(x, y).norm(), nx.times(ny));
    }
    // against plain integers
    EXPECT_EQ(dist(x, y).zero ? 8 : dist(x, y).k, oracle::dist_exp(x.mantissa(), y.mantissa(), p, 8));
  }
}

TEST_P(Ultrametric, PrecisionSoundness) {
  std::uint32_t p = GetParam();
  auto small = Context::zp(p, 5), big = Context::zp(p, 9);
  Rng rng(p);
  for (int i = 0; i < 500; ++i) {
    PAdic x = big.element(rng.below(big.size())), y = big.element(rng.below(big.size()));
    PAdic xs = small.admit(x), ys = small.admit(y);
    EXPECT_EQ(small.admit(x + y), small.admit(xs + ys));
    EXPECT_EQ(small.admit(x - y), small.admit(xs - ys));
    EXPECT_EQ(small.admit(x * y), small.admit(xs * ys));
  }
}

INSTANTIATE_TEST_SUITE_P(Primes, Ultrametric, ::testing::Values(2u, 3u, 5u));
