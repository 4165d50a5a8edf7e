#include <gtest/gtest.h>

#include "oracles.hpp"
#include "padic/conjugacy.hpp"
#include "padic/rng.hpp"

using namespace padic;

namespace {

struct ExpansiveSetup {
  Context ctx;
  DynamicMap f, g;
  LipschitzPerturbation phi;
  RightInverseFamily fam;
};

ExpansiveSetup shift_pair(std::uint32_t p, int n, int k, std::uint64_t seed) {
  auto ctx = Context::zp(p, n);
  auto f = builtin_map("shift_zp", {}, ctx);
  auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(k), "digit_local", seed);
  return {ctx, f, perturb(f, phi), phi, shift_right_inverses(ctx)};
}

}  // namespace

TEST(ExpansiveConjugacy, ConjugatesShiftAndPerturbation) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto s = shift_pair(3, 8, 2, seed);
    auto h = build_conjugacy_thm1(s.f, s.fam, s.g, 5);
    EXPECT_GE(h.certified, 5);
    auto rep = verify_conjugacy(s.f, s.g, h);
    EXPECT_TRUE(rep.zero_defect()) << rep.max_defect;
    EXPECT_GE(rep.precision, 5);
    EXPECT_TRUE(rep.well_defined);
    EXPECT_TRUE(rep.injective);
    EXPECT_LE(h.closeness, NormValue::pow(3));
  }
}

TEST(ExpansiveConjugacy, MatchesItineraryCoding) {
  // f = S and |h - id| < 1/p force digit n of h(x) to be digit 0 of g^n(x)
  auto s = shift_pair(2, 8, 2, 11);
  auto h = build_conjugacy_thm1(s.f, s.fam, s.g, 6);
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::uint64_t r = rng.below(s.ctx.size());
    PAdic x = s.ctx.element(r);
    auto hd = h.at(r).digits();
    for (int n = 0; n < h.certified && n < 7; ++n) {
      ASSERT_EQ(hd[n], x.digit(0)) << r << " digit " << n;
      x = s.ctx.lift(s.g(x));
    }
  }
}

TEST(ExpansiveConjugacy, InverseUndoesForward) {
  for (std::uint32_t p : {2u, 3u}) {
    auto s = shift_pair(p, 7, p == 2 ? 2 : 1, 5);
    auto h = build_conjugacy_thm1(s.f, s.fam, s.g, 5);
    auto tf = transfer_family(s.f, s.fam, s.phi);
    auto ht = build_inverse_conjugacy_thm1(s.f, s.g, tf.family, 5);
    EXPECT_TRUE(verify_conjugacy(s.g, s.f, ht).zero_defect());
    EXPECT_TRUE(composition_defect(ht, h).zero) << p;
    EXPECT_TRUE(composition_defect(h, ht).zero) << p;
  }
}

TEST(ExpansiveConjugacy, UnperturbedGivesIdentity) {
  auto ctx = Context::zp(3, 6);
  auto f = builtin_map("shift_zp", {}, ctx);
  auto h = build_conjugacy_thm1(f, shift_right_inverses(ctx), f, 4);
  EXPECT_EQ(h.certified, 6);
  for (std::uint64_t r = 0; r < ctx.size(); ++r) ASSERT_EQ((*h.table)[r], r);
}

TEST(ExpansiveConjugacy, CorruptionIsDetected) {
  auto s = shift_pair(3, 7, 2, 1);
  auto h = build_conjugacy_thm1(s.f, s.fam, s.g, 5);
  auto bad = std::make_shared<std::vector<std::uint64_t>>(*h.table);
  (*bad)[100] = ((*bad)[100] + 9) % s.ctx.size();
  ConjugacyMap hb = h;
  hb.table = bad;
  auto rep = verify_conjugacy(s.f, s.g, hb);
  EXPECT_FALSE(rep.zero_defect());
  EXPECT_GE(rep.defect_histogram.size(), 2u);
}

TEST(ExpansiveConjugacy, DeltaTooLarge) {
  auto ctx = Context::zp(2, 6);
  auto f = builtin_map("shift_zp", {}, ctx);
  auto phi = make_lipschitz_perturbation(ctx, NormValue::one(), "constant", 0, {{"c", "1"}});
  try {
    build_conjugacy_thm1(f, shift_right_inverses(ctx), perturb(f, phi), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DeltaTooLarge);
  }
  EXPECT_FALSE(detail::delta_admissible(NormValue::one(), NormValue::pow(1), 2));
  EXPECT_TRUE(detail::delta_admissible(NormValue::one(), NormValue::pow(1), 3));
  EXPECT_TRUE(detail::delta_admissible(NormValue::pow(-1), NormValue::pow(2), 2));
  EXPECT_FALSE(detail::delta_admissible(NormValue::pow(-2), NormValue::pow(2), 2));
  EXPECT_EQ(detail::as_rational(NormValue::pow(2), 3), detail::Rational(1, 9));
}

TEST(Transfer, RightInverseImageAndLipschitz) {
  for (std::uint32_t p : {2u, 3u}) {
    auto s = shift_pair(p, 6, 1, 9);
    for (auto& r : s.fam.members) {
      auto t = transfer_right_inverse(s.f, r, s.phi);
      EXPECT_TRUE(t.right_inverse_ok);
      EXPECT_TRUE(t.image_equal);
      ASSERT_TRUE(t.lip_measured);
      EXPECT_TRUE(t.lip_ok);
      EXPECT_LE(detail::as_rational(*t.lip_measured, p), t.lip_bound);
    }
  }
}

TEST(Partition, LayersOfThreeXPlusOne) {
  auto ctx = Context::zp(3, 5);
  auto part = partition_contraction_domain(map_from_spec("affine(v=3,w=1)", ctx), 64);
  ASSERT_EQ(part.layers.size(), 5u);
  for (int n = 0; n < 5; ++n) EXPECT_EQ(part.layers[n].size(), oracle::ipow(3, 5 - n) - oracle::ipow(3, 4 - n));
  ASSERT_EQ(part.core.size(), 1u);
  // fixed point of 3x + 1 is -1/2 = ...1111 in base 3
  EXPECT_EQ(part.core[0], 121u);
  std::vector<char> seen(ctx.size(), 0);
  for (auto& l : part.layers)
    for (auto r : l) seen[r]++;
  for (auto r : part.core) seen[r]++;
  for (auto v : seen) EXPECT_EQ(v, 1);
  EXPECT_THROW(partition_contraction_domain(map_from_spec("affine(v=3,w=1)", ctx), 3), Error);
}

class ContractionCatalog : public ::testing::TestWithParam<const char*> {};

TEST_P(ContractionCatalog, ConjugatesContractionAndPerturbation) {
  auto ctx = Context::zp(3, 6);
  auto R = map_from_spec(GetParam(), ctx);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(3), "digit_local", seed);
    auto res = build_conjugacy_thm3(R, phi);
    auto T = perturb(R, phi);
    auto rep = verify_conjugacy(R, T, res.h);
    EXPECT_TRUE(rep.zero_defect()) << GetParam() << " " << rep.max_defect;
    EXPECT_TRUE(is_bijection(res.h));
    EXPECT_LE(res.h.closeness, NormValue::pow(3));
    ASSERT_TRUE(res.fixed_T && res.fixed_R);
    EXPECT_EQ(res.h(*res.fixed_T), ctx.admit(*res.fixed_R));
  }
}

INSTANTIATE_TEST_SUITE_P(Catalog, ContractionCatalog,
                         ::testing::Values("affine(v=3,w=1)", "quadratic_contraction(v=3,s=9,w=1)",
                                           "digit_mix_contraction(v=3,w=2)"));

TEST(ContractionErrors, Preconditions) {
  auto ctx = Context::zp(3, 5);
  auto R = map_from_spec("affine(v=3,w=1)", ctx);
  auto big = make_lipschitz_perturbation(ctx, NormValue::pow(1), "digit_local", 0);
  try {
    build_conjugacy_thm3(R, big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DeltaTooLarge);
  }
  auto small = make_lipschitz_perturbation(ctx, NormValue::pow(3), "digit_local", 0);
  try {
    build_conjugacy_thm3(builtin_map("shift_zp", {}, ctx), small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BiLipschitzViolation);
  }
  auto c2 = Context::zp(2, 8);
  EXPECT_THROW(build_conjugacy_thm3(builtin_map("example2_R", {}, c2),
                                    make_lipschitz_perturbation(c2, NormValue::pow(6), "digit_local", 0)),
               Error);
}

TEST(ContractionQp, OpenImageContraction) {
  auto ctx = Context::qp(2, 6, -2);
  auto R = builtin_map("rho_open_Ra", {{"a", "1"}}, ctx);
  auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(3), "constant", 0, {{"c", "8"}});
  auto res = build_conjugacy_thm3(R, phi);
  auto rep = verify_conjugacy(R, perturb(R, phi), res.h);
  EXPECT_TRUE(rep.zero_defect()) << rep.max_defect;
  EXPECT_TRUE(is_bijection(res.h));
  EXPECT_LE(res.h.closeness, NormValue::pow(3));
}

TEST(Homogeneity, SingleSwap) {
  auto ctx = Context::zp(2, 8);
  auto h = homogeneity_homeomorphism({ctx.integer(0)}, {ctx.integer(4)}, NormValue::pow(1), ctx);
  EXPECT_TRUE(is_bijection(h));
  EXPECT_EQ(h(ctx.integer(0)), ctx.integer(4));
  EXPECT_EQ(h(ctx.integer(4)), ctx.integer(0));
  EXPECT_EQ(h.closeness, NormValue::pow(2));
}

TEST(Homogeneity, SeededProperPairs) {
  for (std::uint32_t p : {2u, 3u}) {
    auto ctx = Context::zp(p, p == 2 ? 8 : 6);
    Rng rng(p);
    for (int t = 0; t < 30; ++t) {
      std::size_t k = 1 + rng.below(10);
      std::vector<std::uint64_t> yi, zi;
      while (yi.size() < k) {
        std::uint64_t y = rng.below(ctx.size());
        std::uint64_t z = (y + ctx.pow(3) * rng.below(ctx.size())) % ctx.size();
        if (std::count(yi.begin(), yi.end(), y) || std::count(zi.begin(), zi.end(), z)) continue;
        yi.push_back(y);
        zi.push_back(z);
      }
      std::vector<PAdic> ys, zs;
      for (std::size_t i = 0; i < k; ++i) {
        ys.push_back(ctx.element(yi[i]));
        zs.push_back(ctx.element(zi[i]));
      }
      auto h = homogeneity_homeomorphism(ys, zs, NormValue::pow(2), ctx);
      ASSERT_TRUE(is_bijection(h));
      for (std::size_t i = 0; i < k; ++i) ASSERT_EQ(h(ys[i]), zs[i]);
      EXPECT_LT(h.closeness, NormValue::pow(2));
    }
  }
}

TEST(Homogeneity, Errors) {
  auto ctx = Context::zp(2, 6);
  auto e = [&](std::vector<std::int64_t> y, std::vector<std::int64_t> z) {
    std::vector<PAdic> ys, zs;
    for (auto v : y) ys.push_back(ctx.integer(v));
    for (auto v : z) zs.push_back(ctx.integer(v));
    try {
      homogeneity_homeomorphism(ys, zs, NormValue::pow(2), ctx);
    } catch (const Error& err) {
      return err.code();
    }
    return Errc::Exhausted;
  };
  EXPECT_EQ(e({0, 0}, {8, 16}), Errc::NotProper);
  EXPECT_EQ(e({0, 1}, {8, 8}), Errc::NotProper);
  EXPECT_EQ(e({0}, {4}), Errc::NotClose);
  EXPECT_EQ(e({0, 1}, {8, 9}), Errc::Exhausted);
}
