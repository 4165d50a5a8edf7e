#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "padic/analysis.hpp"
#include "padic/dynamics.hpp"
#include "padic/parallel.hpp"

namespace padic {

/// Residue-level homeomorphism. Outputs are certified to `certified`
/// digits above u_min; the table stores full residues.
struct ConjugacyMap {
  Context ctx;
  std::shared_ptr<const std::vector<std::uint64_t>> table;
  int certified = 0;
  NormValue closeness = NormValue::zero_below(0);  // max |h(x) - x|
  int horizon = 0;
  std::string direction;

  PAdic at(std::uint64_t r) const { return PAdic(ctx.p, ctx.u_min, certified, (*table)[r] % ctx.pow(certified)); }
  PAdic operator()(const PAdic& x) const { return at(ctx.index(x)); }
  DynamicMap as_map(std::string tag = "h") const {
    return table_map(ctx, table, std::move(tag), ctx.width() - certified);
  }
};

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

// |.| as an exact rational; ZERO maps to 0
inline Rational as_rational(NormValue v, std::uint32_t p) {
  if (v.zero) return 0;
  boost::multiprecision::cpp_int q = boost::multiprecision::pow(boost::multiprecision::cpp_int(p), std::abs(v.k));
  return v.k >= 0 ? Rational(1, q) : Rational(q);
}

// δ < L^-1 - 1
inline bool delta_admissible(NormValue delta, NormValue lip, std::uint32_t p) {
  if (delta.zero || lip.zero) return true;
  return as_rational(delta, p) < 1 / as_rational(lip, p) - 1;
}

inline NormValue closeness_of(const Context& c, const std::vector<std::uint64_t>& t, int certified) {
  std::uint64_t mod = c.pow(certified);
  int v = certified;
  for (std::uint64_t r = 0; r < t.size(); ++r) v = std::min(v, vdiff(t[r] % mod, r % mod, c.p, mod, certified));
  return v == certified ? NormValue::zero_below(certified + c.u_min) : NormValue::pow(v + c.u_min);
}

inline int lip_exponent(const RightInverseFamily& fam) {
  NormValue l = fam.max_lip();
  return l.zero ? 64 : l.k;
}

}  // namespace detail

// Right-inverse transfer -------------------------------------------------

struct TransferredInverse {
  DynamicMap map;
  bool right_inverse_ok = false;  // g∘R̃ = id on residues
  bool image_equal = false;       // R̃(X) = R(X)
  std::optional<NormValue> lip_measured;
  detail::Rational lip_bound;  // L / (1 - δL)
  bool lip_ok = false;  // measured ≤ bound
};

/// R̃ = R∘H^-1 with H = id + φ∘R, so that (f + φ)∘R̃ = id and R̃(X) = R(X).
/// H^-1(z) is the fixed point of x -> z - φ(R(x)), found by iteration.
/// The Lipschitz scan is quadratic in the residue count; skip it with measure_lip = false.
inline TransferredInverse transfer_right_inverse(const DynamicMap& f, const DynamicMap& R, const LipschitzPerturbation& phi,
                                                 bool measure_lip = true) {
  const Context& c = f.ctx;
  if (!detail::delta_admissible(phi.delta, R.lip_upper, c.p))
    throw Error(Errc::DeltaTooLarge, "need delta < Lip(R)^-1 - 1");
  std::uint64_t n = c.size();
  auto table = std::make_shared<std::vector<std::uint64_t>>(n);
  std::vector<char> stuck(n, 0);
  DynamicMap pr = R;
  pr.eval = [R, phi](const PAdic& x) { return phi.map(R(x)); };
  MemoMap Rm(R), pRm(pr);
  parallel_for(n, [&](std::uint64_t zr) {
    PAdic z = c.element(zr), x = z;
    for (int it = 0; it <= c.width() + 2; ++it) {
      PAdic nx = c.admit(z - pRm(x));
      if (nx == x) {
        (*table)[zr] = c.index(Rm(x));
        return;
      }
      x = nx;
    }
    stuck[zr] = 1;
  });
  if (std::find(stuck.begin(), stuck.end(), 1) != stuck.end())
    throw Error(Errc::NonConvergence, "H^-1 iteration did not settle");
  TransferredInverse res;
  res.map = table_map(c, table, R.tag + "~");
  res.map.lip_upper = R.lip_upper;
  detail::Rational L = detail::as_rational(R.lip_upper, c.p);
  res.lip_bound = L / (1 - detail::as_rational(phi.delta, c.p) * L);
  DynamicMap g = perturb(f, phi);
  int prec = c.width() - g.loss;
  std::uint64_t mod = c.pow(std::max(prec, 0));
  std::atomic<bool> ok{true};
  parallel_for(n, [&](std::uint64_t z) {
    if (c.index(g(c.element((*table)[z]))) % mod != z % mod) ok = false;
  });
  res.right_inverse_ok = ok;
  res.image_equal = image_set(res.map) == image_set(R);
  if (!measure_lip) return res;
  res.lip_measured = estimate_lipschitz(res.map).c2_upper;
  res.lip_ok = !res.lip_measured || detail::as_rational(*res.lip_measured, c.p) <= res.lip_bound;
  return res;
}

struct TransferredFamily {
  RightInverseFamily family;
  std::vector<TransferredInverse> members;
};

/// Transfers every member; membership carries over since images agree.
inline TransferredFamily transfer_family(const DynamicMap& f, const RightInverseFamily& fam, const LipschitzPerturbation& phi,
                                         bool measure_lip = false) {
  TransferredFamily out;
  out.family.labels = fam.labels;
  out.family.membership = fam.membership;
  out.family.covering = fam.covering;
  out.family.disjoint_open = fam.disjoint_open;
  bool same = true;
  for (auto& r : fam.members) {
    out.members.push_back(transfer_right_inverse(f, r, phi, measure_lip));
    out.family.members.push_back(out.members.back().map);
    same = same && out.members.back().image_equal;
  }
  if (!same) throw Error(Errc::CoveringViolation, "transferred images differ from the original family");
  return out;
}

// Theorem-1 style conjugacies ---------------------------------------------

namespace detail {

/// h with top∘h = h∘base: h(x) = x + z_0, z_n = R_{i_n}(x_{n+1} + z_{n+1}) - x_n
/// along the base orbit, z_depth = 0.
inline ConjugacyMap conjugacy_by_recursion(const DynamicMap& top, const RightInverseFamily& fam, const DynamicMap& base,
                                           int depth, std::string direction) {
  const Context& c = top.ctx;
  if (depth < 1) throw Error(Errc::BadParams, "depth must be >= 1");
  NormValue delta = sup_distance(top, base);
  if (!delta_admissible(delta, fam.max_lip(), c.p)) throw Error(Errc::DeltaTooLarge, "need delta < Lip(R)^-1 - 1");
  int lam = lip_exponent(fam);
  // truncation error of z_depth, then of zero-filled orbit points, pulled back by R
  int cert = c.width();
  if (!delta.zero) cert = std::min(cert, lam * (depth + 1) + delta.k - c.u_min);
  for (int n = 0; n <= depth; ++n) cert = std::min(cert, c.width() + n * (lam - base.loss));
  if (cert < 1) throw Error(Errc::PrecisionExhausted, "nothing certified at this depth");
  std::uint64_t N = c.size();
  auto table = std::make_shared<std::vector<std::uint64_t>>(N);
  std::vector<char> uncovered(N, 0);
  std::vector<std::uint64_t> next(N);
  std::vector<std::int64_t> owner(N);
  parallel_for(N, [&](std::uint64_t r) {
    next[r] = c.index(base.at(r));
    auto i = fam.membership(c.element(r));
    owner[r] = i ? static_cast<std::int64_t>(*i) : -1;
  });
  std::vector<MemoMap> members;
  for (const auto& m : fam.members) members.emplace_back(m);
  parallel_for(N, [&](std::uint64_t r) {
    std::vector<std::uint64_t> xs{r};
    for (int n = 0; n < depth; ++n) {
      if (owner[xs.back()] < 0) {
        uncovered[r] = 1;
        return;
      }
      xs.push_back(next[xs.back()]);
    }
    PAdic z = c.zero();
    for (int n = depth - 1; n >= 0; --n)
      z = c.admit(members[owner[xs[n]]](c.element(xs[n + 1]) + z) - c.element(xs[n]));
    (*table)[r] = c.index(c.element(r) + z);
  }, 256);
  if (std::find(uncovered.begin(), uncovered.end(), 1) != uncovered.end())
    throw Error(Errc::CoveringViolation, "family does not cover an orbit point");
  ConjugacyMap h;
  h.ctx = c;
  h.table = table;
  h.certified = cert;
  h.horizon = depth;
  h.direction = std::move(direction);
  h.closeness = closeness_of(c, *table, cert);
  return h;
}

}  // namespace detail

/// h with f∘h = h∘g, built on g-orbits with the right inverses of f.
inline ConjugacyMap build_conjugacy_thm1(const DynamicMap& f, const RightInverseFamily& fam, const DynamicMap& g, int depth) {
  if (!fam.covering) throw Error(Errc::CoveringViolation, "family is not covering");
  return detail::conjugacy_by_recursion(f, fam, g, depth, "f∘h = h∘g");
}

/// h̃ with g∘h̃ = h̃∘f, built on f-orbits with the transferred family.
inline ConjugacyMap build_inverse_conjugacy_thm1(const DynamicMap& f, const DynamicMap& g, const RightInverseFamily& tfam,
                                                 int depth) {
  if (!tfam.covering) throw Error(Errc::CoveringViolation, "family is not covering");
  return detail::conjugacy_by_recursion(g, tfam, f, depth, "g∘h̃ = h̃∘f");
}

// Verification -------------------------------------------------------------

struct ConjugacyReport {
  NormValue max_defect = NormValue::zero_below(0);
  std::map<std::string, std::uint64_t> defect_histogram;  // norm -> residue count
  int precision = 0;                                      // digits compared
  bool well_defined = true;
  bool injective = true;
  NormValue closeness = NormValue::zero_below(0);
  std::uint64_t checked = 0;
  bool zero_defect() const { return max_defect.zero; }
};

/// Exhaustive check of f∘h = h∘g plus the class-level bijectivity of h.
inline ConjugacyReport verify_conjugacy(const DynamicMap& f, const DynamicMap& g, const ConjugacyMap& h) {
  const Context& c = h.ctx;
  ConjugacyReport rep;
  rep.precision = std::min(h.certified - f.loss, c.width() - g.loss);
  if (rep.precision < 1) throw Error(Errc::PrecisionExhausted, "no digits left to compare");
  std::uint64_t n = c.size(), mod = c.pow(rep.precision);
  std::vector<int> v(n);
  parallel_for(n, [&](std::uint64_t r) {
    std::uint64_t lhs = f(h.at(r)).mantissa() % mod;
    std::uint64_t rhs = (*h.table)[c.index(g(c.element(r)))] % mod;
    v[r] = detail::vdiff(lhs, rhs, c.p, mod, rep.precision);
  });
  int worst = rep.precision;
  for (int x : v) {
    worst = std::min(worst, x);
    NormValue d = x == rep.precision ? NormValue::zero_below(rep.precision + c.u_min) : NormValue::pow(x + c.u_min);
    ++rep.defect_histogram[d.str()];
  }
  rep.max_defect = worst == rep.precision ? NormValue::zero_below(rep.precision + c.u_min) : NormValue::pow(worst + c.u_min);
  rep.checked = n;
  int lvl = std::min(h.certified, c.width());
  std::uint64_t q = c.pow(lvl);
  std::vector<char> hit(q, 0);
  for (std::uint64_t r = 0; r < n; ++r)
    if ((*h.table)[r] % q != (*h.table)[r % q] % q) rep.well_defined = false;
  for (std::uint64_t r = 0; r < q; ++r) {
    auto y = (*h.table)[r] % q;
    if (hit[y]) rep.injective = false;
    hit[y] = 1;
  }
  rep.closeness = h.closeness;
  return rep;
}

/// max |a(b(x)) - x| over residues at the joint certified precision
inline NormValue composition_defect(const ConjugacyMap& a, const ConjugacyMap& b) {
  const Context& c = a.ctx;
  int prec = std::min(a.certified, b.certified);
  std::uint64_t mod = c.pow(prec);
  int v = prec;
  for (std::uint64_t r = 0; r < c.size(); ++r)
    v = std::min(v, detail::vdiff((*a.table)[(*b.table)[r]] % mod, r % mod, c.p, mod, prec));
  return v == prec ? NormValue::zero_below(prec + c.u_min) : NormValue::pow(v + c.u_min);
}

// Theorem-3 style conjugacies ---------------------------------------------

struct PartitionAB {
  std::vector<std::vector<std::uint64_t>> layers;  // layer n = T^n(X) \ T^{n+1}(X)
  std::vector<std::uint64_t> core;                 // where T(X) stops shrinking
  std::vector<std::int32_t> layer_of;              // -1 for core residues
  std::vector<std::uint64_t> origin;               // u in U with T^n(u) = x, for layer residues
  std::vector<std::uint64_t> image;                // T at resolution
};

/// Layers of the truncated images T^n(X) until they stop shrinking.
inline PartitionAB partition_contraction_domain(const DynamicMap& T, int max_depth) {
  const Context& c = T.ctx;
  std::uint64_t n = c.size();
  PartitionAB part;
  part.image.resize(n);
  parallel_for(n, [&](std::uint64_t r) { part.image[r] = c.index(T.at(r)); });
  part.layer_of.assign(n, -1);
  part.origin.assign(n, UINT64_MAX);
  std::vector<std::uint64_t> cur(n);
  for (std::uint64_t r = 0; r < n; ++r) cur[r] = r;
  for (int depth = 0;; ++depth) {
    std::vector<char> next(n, 0);
    for (auto r : cur) next[part.image[r]] = 1;
    std::vector<std::uint64_t> layer, rest;
    for (auto r : cur) (next[r] ? rest : layer).push_back(r);
    if (layer.empty()) break;
    if (depth >= max_depth) throw Error(Errc::WindowTooSmall, "images still shrinking after depth " + std::to_string(max_depth));
    for (auto r : layer) part.layer_of[r] = depth;
    part.layers.push_back(std::move(layer));
    cur = std::move(rest);
  }
  part.core = cur;
  for (auto u : part.layers[0]) part.origin[u] = u;
  // each deeper residue has a preimage in the previous layer; keep the smallest
  for (std::size_t d = 0; d + 1 < part.layers.size(); ++d)
    for (auto y : part.layers[d]) {
      auto x = part.image[y];
      if (part.layer_of[x] == static_cast<std::int32_t>(d + 1) && part.origin[x] == UINT64_MAX) part.origin[x] = part.origin[y];
    }
  return part;
}

struct ContractionConjugacy {
  ConjugacyMap h;
  PartitionAB partition;
  NormValue c1, c2, rho;
  std::optional<PAdic> fixed_T, fixed_R;  // Z_p mode
};

/// h with R∘h = h∘T for T = R + φ: h = R^n∘T^-n on layer n, and on the
/// core h(x) = x + z_0 with z_n = R(T^{n-1}x + z_{n-1}) - T^n x from z_{-M} = 0.
inline ContractionConjugacy build_conjugacy_thm3(const DynamicMap& R, const LipschitzPerturbation& phi, int max_depth = 256) {
  const Context& c = R.ctx;
  ContractionConjugacy res;
  auto est = estimate_lipschitz(R);
  if (!est.c1_lower || !est.c2_upper || !(*est.c2_upper < NormValue::one()))
    throw Error(Errc::BiLipschitzViolation, "R is not a bi-Lipschitz contraction at this resolution");
  if (!scaling_profile(R).consistent) throw Error(Errc::BiLipschitzViolation, "R is not scaling");
  res.c1 = *est.c1_lower;
  res.c2 = *est.c2_upper;
  auto rho = image_openness(R);
  if (!rho) throw Error(Errc::DeltaTooLarge, "R(X) is not open, no delta is admissible");
  res.rho = *rho;
  NormValue bound = min(res.c1, res.rho).scaled(-1);
  if (phi.delta > bound) throw Error(Errc::DeltaTooLarge, "need delta <= " + bound.str());
  DynamicMap T = perturb(R, phi);
  auto inj = check_injective(T);
  if (!inj.injective) throw Error(Errc::NotInjective, "T = R + phi collides at " + format(inj.collision->x) + " and " + format(inj.collision->y));
  res.partition = partition_contraction_domain(T, max_depth);
  const auto& part = res.partition;
  std::uint64_t n = c.size();
  auto table = std::make_shared<std::vector<std::uint64_t>>(n);
  parallel_for(n, [&](std::uint64_t r) {
    int d = part.layer_of[r];
    if (d < 0) return;
    (*table)[r] = c.index(iterate(R, d, c.element(part.origin[r])));
  });
  // T is a bijection of the core; walk back M steps
  std::vector<std::uint64_t> back(n, UINT64_MAX);
  for (auto y : part.core)
    if (back[part.image[y]] == UINT64_MAX) back[part.image[y]] = y;
  int M = c.width() + 2;
  for (auto x : part.core) {
    std::vector<std::uint64_t> orbit{x};
    for (int j = 0; j < M; ++j) orbit.push_back(back[orbit.back()]);
    std::reverse(orbit.begin(), orbit.end());  // orbit[j] = T^{j-M} x
    PAdic z = c.zero();
    for (int j = 1; j <= M; ++j) z = c.admit(R(c.admit(c.element(orbit[j - 1]) + z)) - c.element(orbit[j]));
    (*table)[x] = c.index(c.element(x) + z);
  }
  if (c.space == Space::Zp) {
    auto fix = [&](const DynamicMap& m) {
      PAdic x = c.zero();
      for (int j = 0; j <= c.width() + 2; ++j) x = m(x);
      return x;
    };
    res.fixed_T = fix(T);
    res.fixed_R = fix(R);
    if (part.core.size() != 1 || part.core[0] != c.index(*res.fixed_T))
      throw Error(Errc::WindowTooSmall, "core did not collapse to the fixed point of T");
  }
  res.h.ctx = c;
  res.h.table = table;
  res.h.certified = c.width();
  res.h.horizon = static_cast<int>(part.layers.size());
  res.h.direction = "R∘h = h∘T";
  res.h.closeness = detail::closeness_of(c, *table, c.width());
  return res;
}

// Homogeneity ---------------------------------------------------------------

/// Piecewise translation on balls with h(y_n) = z_n and |h - id| < δ.
/// Balls are small enough to separate y_n from z_n and the points of
/// each sequence from each other; leftover balls are matched up inside
/// each ball of radius δ/p, so a lone pair becomes a swap.
inline ConjugacyMap homogeneity_homeomorphism(const std::vector<PAdic>& ys, const std::vector<PAdic>& zs, NormValue delta,
                                              const Context& c) {
  if (ys.size() != zs.size()) throw Error(Errc::BadParams, "sequences differ in length");
  std::vector<std::uint64_t> y, z;
  for (auto& v : ys) y.push_back(c.index(v));
  for (auto& v : zs) z.push_back(c.index(v));
  auto distinct = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  if (!distinct(y) || !distinct(z)) throw Error(Errc::NotProper, "sequence repeats a point");
  int w = c.width();
  int b = delta.zero ? w : std::clamp(delta.k + 1 - c.u_min, 0, w);
  std::uint64_t qb = c.pow(b);
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] % qb != z[i] % qb) throw Error(Errc::NotClose, "pair " + std::to_string(i) + " is not within delta");
  int l = b;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] != z[i]) l = std::max(l, detail::vdiff(y[i], z[i], c.p, c.size(), w) + 1);
  auto separated = [&](const std::vector<std::uint64_t>& v, std::uint64_t q) {
    std::vector<std::uint64_t> cls;
    for (auto x : v) cls.push_back(x % q);
    return distinct(cls);
  };
  while (l < w && !(separated(y, c.pow(l)) && separated(z, c.pow(l)))) ++l;
  std::uint64_t ql = c.pow(l), n = c.size();
  // shift[class] = translation applied on that ball
  std::vector<std::uint64_t> shift(ql, 0);
  std::vector<char> src(ql, 0), dst(ql, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    shift[y[i] % ql] = (z[i] + n - y[i]) % n;
    src[y[i] % ql] = 1;
    dst[z[i] % ql] = 1;
  }
  std::map<std::uint64_t, std::vector<std::uint64_t>> free_src, free_dst;
  for (std::uint64_t k = 0; k < ql; ++k) {
    if (!src[k] && !dst[k]) continue;  // stays put
    if (!src[k]) free_src[k % qb].push_back(k);
    if (!dst[k]) free_dst[k % qb].push_back(k);
  }
  for (auto& [ball, srcs] : free_src) {
    auto& dsts = free_dst[ball];
    for (std::size_t i = 0; i < srcs.size(); ++i) shift[srcs[i]] = (dsts[i] + n - srcs[i]) % n;
  }
  auto table = std::make_shared<std::vector<std::uint64_t>>(n);
  for (std::uint64_t r = 0; r < n; ++r) (*table)[r] = (r + shift[r % ql]) % n;
  ConjugacyMap h;
  h.ctx = c;
  h.table = table;
  h.certified = w;
  h.direction = "h(y_n) = z_n";
  h.closeness = detail::closeness_of(c, *table, w);
  return h;
}

/// true when the table is a permutation of the residues
inline bool is_bijection(const ConjugacyMap& h) {
  std::vector<char> hit(h.table->size(), 0);
  for (auto v : *h.table) {
    if (v >= hit.size() || hit[v]) return false;
    hit[v] = 1;
  }
  return true;
}

}  // namespace padic
