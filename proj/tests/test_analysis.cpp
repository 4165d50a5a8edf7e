#include <gtest/gtest.h>

#include "oracles.hpp"
#include "padic/analysis.hpp"

using namespace padic;

namespace {

// slow pair scan on integers, independent of the mantissa tricks
std::pair<int, int> pair_scan(const DynamicMap& f, int out_digits) {
  const Context& c = f.ctx;
  std::int64_t n = static_cast<std::int64_t>(c.size());
  std::vector<std::int64_t> img(n);
  for (std::int64_t r = 0; r < n; ++r) img[r] = static_cast<std::int64_t>(f.at(r).mantissa());
  int lo = 1000, hi = -1000;
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = a + 1; b < n; ++b) {
      int vo = oracle::dist_exp(img[a], img[b], c.p, out_digits);
      if (vo >= out_digits) continue;
      int d = vo - oracle::dist_exp(a, b, c.p, c.width());
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  return {lo, hi};
}

}  // namespace

TEST(Lipschitz, ShiftAndAffine) {
  auto ctx = Context::zp(3, 6);
  auto s = estimate_lipschitz(builtin_map("shift_zp", {}, ctx));
  // digit 0 is forgotten, so distant pairs can land close together
  EXPECT_EQ(*s.c1_lower, NormValue::pow(4));
  EXPECT_EQ(*s.c2_upper, NormValue::pow(-1));
  EXPECT_TRUE(s.exhaustive);
  auto a = estimate_lipschitz(map_from_spec("affine(v=9,w=1)", ctx));
  EXPECT_EQ(*a.c1_lower, NormValue::pow(2));
  EXPECT_EQ(*a.c2_upper, NormValue::pow(2));
}

TEST(Lipschitz, MatchesPairScan) {
  auto ctx = Context::zp(2, 7);
  for (auto spec : {"example2_R", "quadratic_contraction(v=2,s=4,w=1)", "digit_mix_contraction(v=2,w=3)", "example2_L"}) {
    auto f = map_from_spec(spec, ctx);
    auto est = estimate_lipschitz(f);
    auto [lo, hi] = pair_scan(f, detail::images(f).prec);
    EXPECT_EQ(*est.c2_upper, NormValue::pow(lo)) << spec;
    EXPECT_EQ(*est.c1_lower, NormValue::pow(hi)) << spec;
  }
}

TEST(Lipschitz, Example2RLowerConstantShrinksWithResolution) {
  std::vector<NormValue> c1;
  for (int n : {6, 8, 10}) {
    auto est = estimate_lipschitz(builtin_map("example2_R", {}, Context::zp(2, n)));
    EXPECT_EQ(*est.c2_upper, NormValue::pow(1));
    c1.push_back(*est.c1_lower);
  }
  EXPECT_EQ(c1[0], NormValue::pow(3));
  EXPECT_EQ(c1[1], NormValue::pow(4));
  EXPECT_EQ(c1[2], NormValue::pow(5));
}

TEST(Lipschitz, MonotoneInResolution) {
  for (auto spec : {"example2_R", "digit_mix_contraction(v=3,w=1)", "affine(v=3,w=2)"}) {
    std::optional<LipschitzEstimate> prev;
    for (int n = 4; n <= 7; ++n) {
      auto est = estimate_lipschitz(map_from_spec(spec, Context::zp(3, n)));
      if (prev) {
        EXPECT_LE(*est.c1_lower, *prev->c1_lower) << spec;
        EXPECT_GE(*est.c2_upper, *prev->c2_upper) << spec;
      }
      prev = est;
    }
  }
}

TEST(Lipschitz, SampledModeIsSeeded) {
  auto f = builtin_map("example2_R", {}, Context::zp(2, 10));
  auto a = estimate_lipschitz(f, 5000, 7), b = estimate_lipschitz(f, 5000, 7);
  EXPECT_FALSE(a.exhaustive);
  EXPECT_EQ(*a.c1_lower, *b.c1_lower);
  EXPECT_EQ(*a.c2_upper, *b.c2_upper);
  // sampling can only miss extremes
  auto full = estimate_lipschitz(f);
  EXPECT_LE(*a.c2_upper, *full.c2_upper);
  EXPECT_GE(*a.c1_lower, *full.c1_lower);
}

TEST(LocallyScaling, ShiftAndFurno) {
  auto ctx = Context::zp(2, 8);
  EXPECT_TRUE(check_locally_scaling(builtin_map("shift_zp", {}, ctx), 1).ok);
  auto w = map_from_spec("affine(v=1,w=5)", ctx);
  EXPECT_TRUE(check_locally_scaling(furno_compose(w, 2, ctx), 2).ok);
  auto bad = check_locally_scaling(builtin_map("example2_L", {}, ctx), 1);
  EXPECT_FALSE(bad.ok);
  ASSERT_TRUE(bad.witness);
  EXPECT_LE(dist(bad.witness->x, bad.witness->y), NormValue::pow(1));
}

TEST(ScalingProfile, ConsistentForScalingMaps) {
  auto ctx = Context::zp(3, 5);
  auto prof = scaling_profile(map_from_spec("affine(v=3,w=1)", ctx));
  EXPECT_TRUE(prof.consistent);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(prof.kappa.at(j), NormValue::pow(j + 1));
  EXPECT_TRUE(prof.kappa.at(4).zero);
  EXPECT_TRUE(scaling_profile(map_from_spec("quadratic_contraction(v=3,s=9,w=2)", ctx)).consistent);
  EXPECT_TRUE(scaling_profile(map_from_spec("digit_mix_contraction(v=3,w=0)", ctx)).consistent);
  auto c2 = Context::zp(2, 6);
  auto sq = scaling_profile(builtin_map("example2_R", {}, c2));
  EXPECT_TRUE(sq.consistent);
  EXPECT_EQ(sq.kappa.at(2), NormValue::pow(5));
  auto phi = make_lipschitz_perturbation(c2, NormValue::pow(2), "example2_phi_n", 0, {{"n", "1"}});
  auto r = scaling_profile(perturb(builtin_map("example2_R", {}, c2), phi));
  EXPECT_FALSE(r.consistent);
  EXPECT_TRUE(r.witness);
}

TEST(Injectivity, ExtendedPrecisionSeesContractions) {
  auto ctx = Context::zp(2, 8);
  auto r = builtin_map("example2_R", {}, ctx);
  auto inj = check_injective(r);
  EXPECT_TRUE(inj.injective);
  EXPECT_GT(inj.precision, ctx.width());
  for (int n : {0, 2, 5}) {
    auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(n + 1), "example2_phi_n", 0, {{"n", std::to_string(n)}});
    auto col = check_injective(perturb(r, phi));
    EXPECT_FALSE(col.injective) << n;
    ASSERT_TRUE(col.collision);
    EXPECT_EQ(dist(col.collision->x, col.collision->y), NormValue::pow(n));
  }
  EXPECT_FALSE(check_injective(builtin_map("shift_zp", {}, ctx)).injective);
}

TEST(Openness, BallsAndCantorImages) {
  auto ctx = Context::zp(3, 7);
  EXPECT_EQ(*image_openness(map_from_spec("affine(v=3,w=1)", ctx)), NormValue::pow(1));
  EXPECT_EQ(*image_openness(map_from_spec("affine(v=9,w=1)", ctx)), NormValue::pow(2));
  EXPECT_EQ(*image_openness(map_from_spec("digit_mix_contraction(v=3,w=1)", ctx)), NormValue::pow(1));
  for (int n : {6, 8, 10}) EXPECT_FALSE(image_openness(builtin_map("example2_R", {}, Context::zp(2, n)))) << n;
  auto q = Context::qp(2, 6, -2);
  EXPECT_EQ(*image_openness(builtin_map("rho_open_Ra", {{"a", "1"}}, q)), NormValue::pow(2));
}

TEST(Expansivity, ShiftSeparatesEverything) {
  auto ctx = Context::zp(2, 7);
  EXPECT_EQ(expansivity_constant(builtin_map("shift_zp", {}, ctx), 7), NormValue::one());
  auto fur = furno_compose(map_from_spec("affine(v=1,w=3)", Context::zp(3, 6)), 2, Context::zp(3, 6));
  EXPECT_GE(expansivity_constant(fur, 6), NormValue::pow(1));
  // a translation never moves pairs apart
  auto t = expansivity_constant(map_from_spec("affine(v=1,w=1)", ctx), 5);
  EXPECT_EQ(t, NormValue::pow(6));
}

TEST(ScalingIdentity, PerturbedContractionsKeepDistances) {
  auto ctx = Context::zp(3, 6);
  for (auto spec : {"affine(v=3,w=1)", "quadratic_contraction(v=3,s=9,w=1)", "digit_mix_contraction(v=3,w=2)"}) {
    auto R = map_from_spec(spec, ctx);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(2), "digit_local", seed);
      auto chk = check_scaling_identity(R, perturb(R, phi), 5);
      EXPECT_TRUE(chk.ok) << spec << " " << seed;
    }
  }
  // a perturbation as strong as the contraction breaks it
  auto c2 = Context::zp(2, 6);
  auto r = builtin_map("example2_R", {}, c2);
  auto phi = make_lipschitz_perturbation(c2, NormValue::pow(2), "example2_phi_n", 0, {{"n", "1"}});
  auto bad = check_scaling_identity(r, perturb(r, phi), 3);
  EXPECT_FALSE(bad.ok);
  ASSERT_TRUE(bad.witness);
  EXPECT_GE(bad.step, 1);
}
