#pragma once

#include <atomic>
#include <climits>
#include <optional>
#include <string>
#include <vector>

#include "padic/dynamics.hpp"
#include "padic/parallel.hpp"
#include "padic/rng.hpp"

namespace padic {

struct PseudoOrbit {
  std::vector<PAdic> points;
  NormValue delta;
  std::string map_tag;

  int length() const { return static_cast<int>(points.size()) - 1; }
};

struct OrbitCheck {
  bool ok = true;
  int first_failure = -1;
};

inline OrbitCheck verify_pseudo_orbit(const DynamicMap& f, const std::vector<PAdic>& xs, NormValue delta) {
  for (std::size_t n = 0; n + 1 < xs.size(); ++n)
    if (dist(f(xs[n]), f.ctx.admit(xs[n + 1])) > delta) return {false, static_cast<int>(n)};
  return {};
}

inline OrbitCheck verify_pseudo_orbit(const DynamicMap& f, const PseudoOrbit& o, NormValue delta) {
  return verify_pseudo_orbit(f, o.points, delta);
}

/// x_{n+1} = f(x_n) + e_n, |e_n| ≤ δ. Digits of f(x_n) lost to precision
/// are zero-filled before the noise is added. x0 is drawn from the seed
/// unless given.
inline PseudoOrbit random_pseudo_orbit(const DynamicMap& f, NormValue delta, int length, std::uint64_t seed,
                                       const Context& ctx, std::optional<PAdic> x0 = {}) {
  if (!delta.zero && delta.k > ctx.end() - f.loss)
    throw Error(Errc::DeltaTooSmall, "delta finer than the certified output of f");
  Rng rng(seed);
  PseudoOrbit o;
  o.delta = delta;
  o.map_tag = f.tag;
  o.points.push_back(x0 ? ctx.admit(*x0) : ctx.element(rng.below(ctx.size())));
  int from = delta.zero ? ctx.end() : std::max(delta.k, ctx.u_min);
  std::uint64_t span = ctx.pow(ctx.end() - from);
  for (int n = 0; n < length; ++n) {
    PAdic next = ctx.lift(f(o.points.back()));
    if (!delta.zero) next = ctx.admit(next + PAdic(ctx.p, from, ctx.end() - from, rng.below(span)));
    o.points.push_back(next);
  }
  auto chk = verify_pseudo_orbit(f, o, delta);
  if (!chk.ok) throw Error(Errc::NonConvergence, "generated orbit fails its own check at " + std::to_string(chk.first_failure));
  return o;
}

struct ShadowingResult {
  PAdic start_point;
  std::vector<PAdic> correction;
  NormValue achieved_bound;
  std::vector<std::size_t> indices_used;
  // f(x_n + z_n) = x_{n+1} + z_{n+1} at end() - loss, every n
  bool steps_verified = false;
  // f^n(x) = x_n + z_n for every n with n*loss < width
  bool forward_verified = false;
};

struct ShadowOptions {
  // demand that f^L(x) itself stays certified (N - L*loss >= 2)
  bool require_full_forward = false;
};

/// Backward recursion z_L = 0, z_n = R_{i_n}(x_{n+1} + z_{n+1}) - x_n.
/// The recursion only applies the contractions R_i, so every z_n is exact
/// at context resolution whatever the horizon.
inline ShadowingResult solve_shadowing(const DynamicMap& f, const RightInverseFamily& fam, const PseudoOrbit& orbit,
                                       ShadowOptions opt = {}) {
  const Context& ctx = f.ctx;
  const int L = orbit.length();
  if (!fam.covering) throw Error(Errc::CoveringViolation, "family does not cover the space");
  if (ctx.width() - f.loss < 2) throw Error(Errc::PrecisionExhausted, "fewer than two certified digits per step");
  if (opt.require_full_forward && ctx.width() - L * f.loss < 2)
    throw Error(Errc::PrecisionExhausted, "horizon " + std::to_string(L) + " exhausts " + std::to_string(ctx.width()) + " digits");
  ShadowingResult res;
  std::vector<PAdic> xs;
  xs.reserve(orbit.points.size());
  for (auto& x : orbit.points) xs.push_back(ctx.admit(x));
  res.correction.assign(xs.size(), ctx.zero());
  res.indices_used.assign(L > 0 ? L : 0, 0);
  for (int n = L - 1; n >= 0; --n) {
    auto i = fam.membership(xs[n]);
    if (!i) throw Error(Errc::CoveringViolation, "no member image contains x_" + std::to_string(n));
    res.indices_used[n] = *i;
    res.correction[n] = ctx.admit(fam.members[*i](xs[n + 1] + res.correction[n + 1]) - xs[n]);
  }
  res.start_point = ctx.admit(xs[0] + res.correction[0]);
  res.achieved_bound = NormValue::zero_below(ctx.end());
  for (auto& z : res.correction) res.achieved_bound = max(res.achieved_bound, z.norm());

  res.steps_verified = true;
  for (int n = 0; n < L; ++n)
    if (!sub(f(xs[n] + res.correction[n]), xs[n + 1] + res.correction[n + 1]).is_zero()) res.steps_verified = false;
  res.forward_verified = true;
  PAdic y = res.start_point;
  for (int n = 0; n <= L && n * f.loss < ctx.width(); ++n) {
    if (!sub(y, xs[n] + res.correction[n]).is_zero()) res.forward_verified = false;
    if (n < L) y = f(y);
  }
  return res;
}

/// One application of the shadowing operator with terminal entry 0.
inline std::vector<PAdic> shadow_operator(const DynamicMap& f, const RightInverseFamily& fam, const PseudoOrbit& orbit,
                                          const std::vector<PAdic>& u) {
  const Context& ctx = f.ctx;
  std::vector<PAdic> out(u.size(), ctx.zero());
  for (int n = 0; n + 1 < static_cast<int>(u.size()); ++n) {
    auto i = fam.membership(ctx.admit(orbit.points[n]));
    if (!i) throw Error(Errc::CoveringViolation, "no member image contains x_" + std::to_string(n));
    out[n] = ctx.admit(fam.members[*i](orbit.points[n + 1] + u[n + 1]) - orbit.points[n]);
  }
  return out;
}

struct BruteForceResult {
  PAdic best_point;
  NormValue best_error;
};

namespace detail {
// larger is worse; ZERO ranks below every power
inline int badness(NormValue v) { return v.zero ? INT_MIN : -v.k; }
inline NormValue from_badness(int b, int end) { return b == INT_MIN ? NormValue::zero_below(end) : NormValue::pow(-b); }
}  // namespace detail

/// Sup-error of the true orbit of x against the pseudo-orbit.
inline NormValue orbit_error(const DynamicMap& f, const std::vector<PAdic>& xs, PAdic x) {
  NormValue e = NormValue::zero_below(f.ctx.end());
  for (std::size_t n = 0; n < xs.size(); ++n) {
    e = max(e, dist(xs[n], x));
    if (n + 1 < xs.size()) x = f(x);
  }
  return e;
}

/// Exhaustive minimisation of max_n |x_n - f^n(x)| over all residues;
/// ties go to the smallest residue. With `uncertified`, orbits may outrun
/// the known digits; unknown digits then count as agreeing, so the result
/// is a lower bound on the best error of any point.
inline BruteForceResult brute_force_shadow(const DynamicMap& f, const PseudoOrbit& orbit, const Context& ctx,
                                           std::uint64_t budget = 1u << 24, bool uncertified = false) {
  const int L = orbit.length();
  if (!uncertified && L * f.loss >= ctx.width())
    throw Error(Errc::PrecisionExhausted, "orbit longer than the certified digits");
  if (ctx.width() > 40 || ctx.size() > budget) throw Error(Errc::BudgetExceeded, "residue space above budget");
  std::vector<PAdic> xs;
  for (auto& x : orbit.points) xs.push_back(ctx.admit(x));
  std::uint64_t n = ctx.size();
  std::vector<int> bad(n, INT_MAX);
  std::atomic<int> best{INT_MAX};
  parallel_for(n, [&](std::uint64_t r) {
    PAdic x = ctx.element(r);
    int b = INT_MIN;
    int cut = best.load(std::memory_order_relaxed);
    for (int k = 0; k <= L; ++k) {
      b = std::max(b, detail::badness(dist(xs[k], x)));
      if (b > cut) return;
      if (k < L) x = f(x);
    }
    bad[r] = b;
    int cur = best.load();
    while (b < cur && !best.compare_exchange_weak(cur, b)) {
    }
  });
  std::uint64_t arg = 0;
  for (std::uint64_t r = 1; r < n; ++r)
    if (bad[r] < bad[arg]) arg = r;
  return {ctx.element(arg), detail::from_badness(bad[arg], ctx.end())};
}

}  // namespace padic
