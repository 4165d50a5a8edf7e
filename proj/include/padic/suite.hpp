#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "padic/analysis.hpp"
#include "padic/conjugacy.hpp"
#include "padic/counterexample.hpp"
#include "padic/json.hpp"
#include "padic/shadowing.hpp"

namespace padic {

struct SuiteOptions {
  bool quick = false;  // p in {2,3}, N <= 8, a tenth of the seeds
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::string invariant;
  bool pass = true;
  std::uint64_t cases = 0;
  nlohmann::json detail = nlohmann::json::object();
  std::vector<std::string> failures;  // first few only
  std::int64_t millis = 0;
  std::int64_t budget_millis = 0;

  void fail(const std::string& why) {
    pass = false;
    if (failures.size() < 8) failures.push_back(why);
  }
  void expect(bool ok, const std::string& why) {
    ++cases;
    if (!ok) fail(why);
  }
};

namespace suite {

inline int cap_n(const SuiteOptions& o, int n) { return o.quick ? std::min(n, 8) : n; }
inline int count(const SuiteOptions& o, int n) { return o.quick ? std::max(2, n / 10) : n; }
inline std::vector<std::uint32_t> primes(const SuiteOptions& o, std::vector<std::uint32_t> ps) {
  if (o.quick) std::erase_if(ps, [](std::uint32_t p) { return p > 3; });
  return ps;
}
inline std::string tag(std::uint32_t p, std::uint64_t seed) { return "p=" + std::to_string(p) + " seed=" + std::to_string(seed); }

inline void ultrametric(const SuiteOptions& o, CriterionResult& r) {
  for (std::uint32_t p : primes(o, {2, 3, 5})) {
    auto ctx = Context::zp(p, 8);
    Rng rng(p * 7919 + 1);
    int n = count(o, 10000);
    for (int i = 0; i < n; ++i) {
      PAdic x = ctx.element(rng.below(ctx.size())), y = ctx.element(rng.below(ctx.size())),
            z = ctx.element(rng.below(ctx.size()));
      NormValue nx = x.norm(), ny = y.norm();
      bool ok = dist(x, y) <= max(nx, ny) && (nx == ny || dist(x, y) == max(nx, ny));
      ok = ok && dist(x + z, y + z) == dist(x, y);
      if (!x.is_zero() && !y.is_zero()) ok = ok && mul(x, y).norm() == nx.times(ny);
      r.expect(ok, "p=" + std::to_string(p) + " triple " + format(x) + ", " + format(y) + ", " + format(z));
    }
  }
}

inline void shadowing_bound(const SuiteOptions& o, CriterionResult& r) {
  for (std::uint32_t p : primes(o, {2, 3, 5})) {
    auto ctx = Context::zp(p, cap_n(o, 12));
    auto s = builtin_map("shift_zp", {}, ctx);
    auto fam = shift_right_inverses(ctx);
    NormValue worst = NormValue::zero_below(ctx.end());
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(count(o, 200)); ++seed) {
      auto orb = random_pseudo_orbit(s, NormValue::pow(3), 50, seed, ctx);
      auto res = solve_shadowing(s, fam, orb);
      worst = max(worst, res.achieved_bound);
      r.expect(res.achieved_bound <= NormValue::pow(4) && res.steps_verified, tag(p, seed) + " bound " + res.achieved_bound.str());
    }
    r.detail["worst_bound_p" + std::to_string(p)] = worst.str();
  }
}

inline void oracle_equivalence(const SuiteOptions& o, CriterionResult& r) {
  auto ctx = Context::zp(2, 8);
  auto s = builtin_map("shift_zp", {}, ctx);
  auto fam = shift_right_inverses(ctx);
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(count(o, 100)); ++seed) {
    int L = 1 + static_cast<int>(seed % 6);
    auto orb = random_pseudo_orbit(s, NormValue::pow(1 + static_cast<int>(seed % 3)), L, seed, ctx);
    auto res = solve_shadowing(s, fam, orb);
    auto bf = brute_force_shadow(s, orb, ctx);
    // the minimisers form a ball of radius |best| p^-L; ties go to the smallest residue
    int e = bf.best_error.zero ? 8 : bf.best_error.k;
    std::uint64_t mod = ctx.pow(std::min(8 - L, e + L));
    bool ok = bf.best_error <= res.achieved_bound && orbit_error(s, orb.points, res.start_point) == bf.best_error;
    r.expect(ok && bf.best_point.mantissa() % mod == res.start_point.mantissa() % mod, tag(2, seed));
  }
}

inline void conjugacy_thm1(const SuiteOptions& o, CriterionResult& r) {
  auto ctx = Context::zp(3, cap_n(o, 10));
  auto f = builtin_map("shift_zp", {}, ctx);
  auto fam = shift_right_inverses(ctx);
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(count(o, 20)); ++seed) {
    auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(2), "digit_local", seed);
    auto g = perturb(f, phi);
    auto h = build_conjugacy_thm1(f, fam, g, 6);
    auto rep = verify_conjugacy(f, g, h);
    auto tf = transfer_family(f, fam, phi);
    auto ht = build_inverse_conjugacy_thm1(f, g, tf.family, 6);
    bool inv = composition_defect(ht, h).zero;
    r.expect(rep.zero_defect() && rep.precision >= 6 && h.closeness <= NormValue::pow(3) && inv,
             tag(3, seed) + " defect " + rep.max_defect.str() + " precision " + std::to_string(rep.precision) +
                 " closeness " + h.closeness.str() + (inv ? "" : " inverse fails"));
  }
}

inline void furno_corollary(const SuiteOptions& o, CriterionResult& r) {
  auto ctx = Context::zp(2, 8);
  for (auto spec : {"affine(v=1,w=5)", "affine(v=3,w=1)", "affine(v=5,w=3)"}) {
    auto w = map_from_spec(spec, ctx);
    auto f = furno_compose(w, 2, ctx);
    auto fam = locally_scaling_inverses(w, 2, ctx);
    r.expect(check_locally_scaling(f, 2).ok, std::string(spec) + " not locally scaling");
    bool ri = fam.members.size() == 4;
    for (auto& R : fam.members)
      for (std::uint64_t x = 0; x < ctx.size() && ri; ++x) ri = sub(f(R.at(x)), ctx.element(x)).is_zero();
    r.expect(ri, std::string(spec) + " f∘R != id");
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(count(o, 50)); ++seed) {
      auto orb = random_pseudo_orbit(f, NormValue::pow(3), 50, seed, ctx);
      auto res = solve_shadowing(f, fam, orb);
      r.expect(res.achieved_bound <= NormValue::pow(4) && res.steps_verified,
               std::string(spec) + " seed " + std::to_string(seed) + " bound " + res.achieved_bound.str());
    }
  }
}

inline void transfer_lemma(const SuiteOptions& o, CriterionResult& r) {
  int done = 0;
  for (std::uint32_t p : {2u, 3u}) {
    auto ctx = Context::zp(p, 8);
    auto f = builtin_map("shift_zp", {}, ctx);
    auto fam = shift_right_inverses(ctx);
    for (std::uint64_t seed = 0; seed < 2; ++seed)
      for (std::size_t i = 0; i < fam.members.size(); ++i) {
        if (o.quick && done >= 4) return;
        ++done;
        auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(1), "digit_local", seed);
        auto t = transfer_right_inverse(f, fam.members[i], phi);
        r.expect(t.right_inverse_ok && t.image_equal && t.lip_ok,
                 tag(p, seed) + " R_" + std::to_string(i) + (t.lip_measured ? " lip " + t.lip_measured->str() : ""));
      }
  }
}

inline const std::vector<std::string>& contraction_specs() {
  static const std::vector<std::string> v{"affine(v=3,w=1)", "quadratic_contraction(v=3,s=9,w=1)",
                                          "digit_mix_contraction(v=3,w=2)"};
  return v;
}

inline void contraction_thm3(const SuiteOptions& o, CriterionResult& r) {
  auto ctx = Context::zp(3, 6);
  for (const auto& spec : contraction_specs()) {
    auto R = map_from_spec(spec, ctx);
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(count(o, 10)); ++seed) {
      auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(3), "digit_local", seed);
      auto res = build_conjugacy_thm3(R, phi);
      auto rep = verify_conjugacy(R, perturb(R, phi), res.h);
      bool fixed = res.fixed_T && res.fixed_R && res.h(*res.fixed_T) == ctx.admit(*res.fixed_R);
      r.expect(rep.zero_defect() && is_bijection(res.h) && res.h.closeness <= NormValue::pow(3) && fixed,
               spec + " seed " + std::to_string(seed) + " defect " + rep.max_defect.str());
    }
  }
}

inline void scaling_identity(const SuiteOptions& o, CriterionResult& r) {
  auto ctx = Context::zp(3, 6);
  for (const auto& spec : contraction_specs()) {
    auto R = map_from_spec(spec, ctx);
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(o.quick ? 1 : 3); ++seed) {
      auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(2), "digit_local", seed);
      auto chk = check_scaling_identity(R, perturb(R, phi), 5);
      r.expect(chk.ok, spec + " seed " + std::to_string(seed) +
                           (chk.witness ? " pair " + format(chk.witness->x) + ", " + format(chk.witness->y) : ""));
    }
  }
}

inline void example2(const SuiteOptions&, CriterionResult& r) {
  auto ctx = Context::zp(2, 8);
  auto R = builtin_map("example2_R", {}, ctx);
  r.expect(check_injective(R).injective, "example2_R collides");
  for (int n : {1, 2}) {
    auto phi = make_lipschitz_perturbation(ctx, NormValue::pow(n + 1), "example2_phi_n", 0, {{"n", std::to_string(n)}});
    auto col = check_injective(perturb(R, phi));
    r.expect(!col.injective && col.collision, "T_" + std::to_string(n) + " injective");
    if (col.collision)
      r.detail["collision_T" + std::to_string(n)] = {format(col.collision->x), format(col.collision->y)};
  }
  std::vector<NormValue> c1;
  for (int n : {6, 8, 10}) c1.push_back(*estimate_lipschitz(builtin_map("example2_R", {}, Context::zp(2, n))).c1_lower);
  r.expect(c1[1] < c1[0] && c1[2] < c1[1], "c1_lower not decreasing");
  r.detail["c1_lower"] = c1;
}

inline void counterexample(const SuiteOptions& o, CriterionResult& r) {
  int n = o.quick ? 8 : 10;
  auto ctx = Context::zp(3, n);
  auto even = build_even_subshift(3, 12);
  auto sys = build_thm2_map(even, build_cantor_chart(even, n), ctx);
  auto full = build_full_shift(3, 6);
  auto ctl_sys = build_thm2_map(full, build_cantor_chart(full, n), ctx);
  NormValue delta = NormValue::pow(n - 4), eps = NormValue::pow(2);
  try {
    auto w = demonstrate_non_shadowing(sys, delta, eps);
    auto ctl = splice_attempt(ctl_sys, delta, w.witness.k);
    r.expect(w.witness.best_error > eps, "witness error " + w.witness.best_error.str());
    r.expect(ctl.pseudo_ok && ctl.best_error <= eps, "control error " + ctl.best_error.str());
    r.detail["k"] = w.witness.k;
    r.detail["witness_error"] = w.witness.best_error.str();
    r.detail["control_error"] = ctl.best_error.str();
  } catch (const Error& e) {
    r.expect(false, e.what());
  }
  bool ri = true;
  for (auto& R : sys.family.members)
    for (std::uint64_t x = 0; x < ctx.size() && ri; ++x) {
      PAdic y = ctx.admit(sys.f.eval(R.eval(ctx.element(x))));
      ri = y.precision() == ctx.width() && y.mantissa() == x;
    }
  r.expect(ri, "f∘R_a != id");
  std::vector<char> hit(ctx.size(), 0);
  for (auto& R : sys.family.members)
    for (std::uint64_t x = 0; x < ctx.size(); ++x) hit[ctx.index(R.at(x))] = 1;
  auto covered = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
  r.expect(covered == 2 * ctx.pow(n - 2) && covered < ctx.size() && !sys.family.covering, "covering count " + std::to_string(covered));
  r.detail["covered_residues"] = covered;
}

inline void openness(const SuiteOptions&, CriterionResult& r) {
  auto ctx = Context::zp(3, 8);
  for (const auto& spec : contraction_specs()) {
    auto rho = image_openness(map_from_spec(spec, ctx));
    r.expect(rho.has_value() && !rho->zero, spec + " not open");
    if (rho) r.detail[spec] = rho->str();
  }
  auto q = Context::qp(2, 8, -2);
  auto rq = image_openness(builtin_map("rho_open_Ra", {{"a", "1"}}, q));
  r.expect(rq.has_value(), "rho_open_Ra not open");
  r.expect(!image_openness(builtin_map("example2_R", {}, Context::zp(2, 8))), "example2_R reported open");
}

inline void homogeneity(const SuiteOptions& o, CriterionResult& r) {
  using detail::Rational;
  Rng rng(12);
  for (int t = 0; t < count(o, 50); ++t) {
    std::uint32_t p = t % 2 ? 3 : 2;
    auto ctx = Context::zp(p, p == 2 ? 8 : 6);
    NormValue delta = NormValue::pow(2);
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
    auto h = homogeneity_homeomorphism(ys, zs, delta, ctx);
    bool ok = is_bijection(h);
    for (std::size_t i = 0; i < k; ++i) ok = ok && h(ys[i]) == zs[i];
    ok = ok && detail::as_rational(h.closeness, p) < 3 * detail::as_rational(delta, p);
    r.expect(ok, "pair " + std::to_string(t) + " p=" + std::to_string(p) + " k=" + std::to_string(k));
  }
}

struct Criterion {
  int id;
  const char* name;
  const char* invariant;
  std::int64_t budget_millis;
  void (*run)(const SuiteOptions&, CriterionResult&);
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> v{
      {1, "ultrametric", "strong triangle inequality, multiplicative norm, translation isometry", 5000, ultrametric},
      {2, "shadowing_bound", "solver bound |z_n| <= delta/p for the shift", 10000, shadowing_bound},
      {3, "oracle_equivalence", "brute force <= solver, start points agree mod 2^(N-L)", 30000, oracle_equivalence},
      {4, "conjugacy_right_invertible", "f∘h = h∘g, |h - id| <= 3^-3, inverse undoes h", 60000, conjugacy_thm1},
      {5, "locally_scaling", "Furno maps scale locally, p^k right inverses, shadowing bound", 30000, furno_corollary},
      {6, "right_inverse_transfer", "g∘R~ = id, R~(X) = R(X), Lip(R~) <= L/(1 - delta L)", 30000, transfer_lemma},
      {7, "contraction_conjugacy", "R∘h = h∘T, h bijective, |h - id| <= 3^-3, h(x_T) = x_R", 60000, contraction_thm3},
      {8, "scaling_identity", "|T^n x - T^n y| = |R^n x - R^n y| for n <= 5", 30000, scaling_identity},
      {9, "example2_negative", "R injective, R + phi_n not, c1 shrinks with N", 10000, example2},
      {10, "non_shadowing_counterexample", "witness beats eps, full shift control shadows, f∘R_a = id, no covering",
       300000, counterexample},
      {11, "openness", "rho > 0 for bi-Lipschitz contractions, none for example2_R", 30000, openness},
      {12, "homogeneity", "residue bijection mapping y_n to z_n within 3 delta", 10000, homogeneity},
  };
  return v;
}

/// Runs one criterion; exceptions count as failures.
inline CriterionResult run_criterion(const Criterion& c, const SuiteOptions& o) {
  CriterionResult r;
  r.id = c.id;
  r.name = c.name;
  r.invariant = c.invariant;
  r.budget_millis = c.budget_millis;
  auto t0 = std::chrono::steady_clock::now();
  try {
    c.run(o, r);
  } catch (const std::exception& e) {
    r.fail(std::string("exception: ") + e.what());
  }
  r.millis = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  if (!o.quick && r.millis > r.budget_millis) r.fail("over time budget");
  return r;
}

}  // namespace suite

inline std::vector<CriterionResult> run_suite(const SuiteOptions& o) {
  std::vector<CriterionResult> out;
  for (const auto& c : suite::criteria()) out.push_back(suite::run_criterion(c, o));
  return out;
}

}  // namespace padic
