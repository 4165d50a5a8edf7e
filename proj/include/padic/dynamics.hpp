#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "padic/core.hpp"
#include "padic/parallel.hpp"

namespace padic {

using Params = std::map<std::string, std::string>;

/// Evaluable map on a context. eval takes a value written from u_min at
/// any precision n and returns its image at the precision that input
/// certifies (n - loss for expanding maps, more for contractions).
/// operator() clips input and output to the context resolution.
struct DynamicMap {
  Context ctx;
  std::function<PAdic(const PAdic&)> eval;
  int loss = 0;
  NormValue lip_upper = NormValue::one();
  std::optional<NormValue> lip_lower;
  std::string tag;
  Params params;

  PAdic operator()(const PAdic& x) const { return ctx.admit(eval(ctx.admit(x))); }
  PAdic at(std::uint64_t r) const { return ctx.admit(eval(ctx.element(r))); }
  // image of the representative r read as exact to `digits` digits
  PAdic exact_at(std::uint64_t r, int digits) const {
    return eval(PAdic(ctx.p, ctx.u_min, digits, r)).rebased(ctx.u_min);
  }
};

namespace detail {

// precision used for values that are exact
inline int exact_digits(std::uint32_t p) { return max_digits(p) - 2; }

inline PAdic out(const Context& c, std::uint64_t r, int n) {
  n = std::clamp(n, 0, exact_digits(c.p));
  return PAdic(c.p, c.u_min, n, r);
}

// zero-padded copy treated as exact
inline PAdic exact(const PAdic& x) {
  return PAdic(x.prime(), x.base_exp(), std::max(exact_digits(x.prime()), x.precision()), x.mantissa());
}

// same value written from u_min, no truncation
inline PAdic based(const Context& c, const PAdic& x) {
  if (x.base_exp() == c.u_min) return x;
  if (x.base_exp() > c.u_min && x.precision() + (x.base_exp() - c.u_min) > exact_digits(c.p))
    return x.truncated(c.u_min + exact_digits(c.p)).rebased(c.u_min);
  try {
    return x.rebased(c.u_min);
  } catch (const Error&) {
    throw Error(Errc::WindowViolation, "value has digits below exponent " + std::to_string(c.u_min));
  }
}

inline PAdic param_value(const Context& c, const Params& ps, const std::string& key) {
  auto it = ps.find(key);
  if (it == ps.end()) throw Error(Errc::BadParams, "missing parameter '" + key + "'");
  const std::string& s = it->second;
  if (s.rfind("p:", 0) == 0) {
    PAdic v = parse(s);
    if (v.prime() != c.p) throw Error(Errc::BadParams, "parameter '" + key + "' has the wrong prime");
    return exact(v);
  }
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    std::uint64_t mod = ipow(c.p, exact_digits(c.p));
    std::uint64_t r = v >= 0 ? static_cast<std::uint64_t>(v) % mod
                             : (mod - static_cast<std::uint64_t>(-(v + 1)) % mod - 1) % mod;
    return PAdic(c.p, 0, exact_digits(c.p), r);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error(Errc::BadParams, "parameter '" + key + "' is neither an integer nor p:..;u:..;d:..");
  }
}

inline long long param_int(const Params& ps, const std::string& key, std::optional<long long> dflt = {}) {
  auto it = ps.find(key);
  if (it == ps.end()) {
    if (dflt) return *dflt;
    throw Error(Errc::BadParams, "missing parameter '" + key + "'");
  }
  try {
    std::size_t used = 0;
    long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::BadParams, "parameter '" + key + "' must be an integer");
  }
}

// digit i of the result is a_i + a_{i-1} mod p; an isometric bijection of Z_p
inline PAdic digit_mix(const PAdic& x) {
  std::uint32_t p = x.prime();
  std::uint64_t m = x.mantissa(), y = 0, pw = 1;
  std::uint64_t prev = 0;
  for (int i = 0; i < x.precision(); ++i, pw *= p) {
    std::uint64_t d = m % p;
    m /= p;
    y += ((d + prev) % p) * pw;
    prev = d;
  }
  return PAdic(p, x.base_exp(), x.precision(), y);
}

}  // namespace detail

inline PAdic iterate(const DynamicMap& f, int n, PAdic x) {
  for (int i = 0; i < n; ++i) x = f(x);
  return x;
}

/// f∘g; losses add, Lipschitz bounds multiply.
inline DynamicMap compose(const DynamicMap& f, const DynamicMap& g) {
  DynamicMap h;
  h.ctx = f.ctx;
  auto fe = f.eval, ge = g.eval;
  Context c = f.ctx;
  h.eval = [fe, ge, c](const PAdic& x) { return detail::based(c, fe(detail::based(c, ge(x)))); };
  h.loss = f.loss + g.loss;
  h.lip_upper = f.lip_upper.times(g.lip_upper);
  if (f.lip_lower && g.lip_lower) h.lip_lower = f.lip_lower->times(*g.lip_lower);
  h.tag = f.tag + "∘" + g.tag;
  return h;
}

/// Map given by a residue table at context resolution.
inline DynamicMap table_map(const Context& ctx, std::shared_ptr<const std::vector<std::uint64_t>> table, std::string tag,
                            int lost = 0) {
  DynamicMap m;
  m.ctx = ctx;
  m.eval = [ctx, table, lost](const PAdic& x) {
    return detail::out(ctx, (*table)[ctx.admit(x).mantissa()], std::min(x.precision(), ctx.width()) - lost);
  };
  m.loss = lost;
  m.tag = std::move(tag);
  return m;
}

/// f tabulated on full-width residues; inputs with fewer known digits go
/// through f itself.
struct MemoMap {
  DynamicMap f;
  std::vector<PAdic> at;

  explicit MemoMap(DynamicMap g) : f(std::move(g)), at(f.ctx.size()) {
    parallel_for(at.size(), [&](std::uint64_t r) { at[r] = f.at(r); });
  }
  PAdic operator()(const PAdic& x) const {
    PAdic y = f.ctx.admit(x);
    return y.precision() >= f.ctx.width() ? at[y.mantissa()] : f(y);
  }
};

// Catalog -----------------------------------------------------------------

inline DynamicMap builtin_map(const std::string& name, const Params& ps, const Context& ctx) {
  using detail::out;
  const std::uint32_t p = ctx.p;
  DynamicMap m;
  m.ctx = ctx;
  m.tag = name;
  m.params = ps;
  auto need_zp = [&] {
    if (ctx.space != Space::Zp) throw Error(Errc::BadParams, name + " is defined on Z_p");
  };
  auto need_qp = [&] {
    if (ctx.space != Space::Qp) throw Error(Errc::BadParams, name + " needs a Q_p context");
  };
  auto contraction_params = [&](const char* key) {
    PAdic v = detail::param_value(ctx, ps, key);
    if (v.is_zero() || v.valuation() <= 0) throw Error(Errc::BadParams, name + " needs 0 < |" + key + "| < 1");
    return v;
  };

  if (name == "shift_zp") {
    need_zp();
    m.eval = [ctx](const PAdic& x) { return out(ctx, x.mantissa() / ctx.p, x.precision() - 1); };
    m.loss = 1;
    m.lip_upper = NormValue::pow(-1);
  } else if (name == "shift_qp") {
    need_qp();
    m.eval = [ctx](const PAdic& x) {
      if (x.mantissa() % ctx.p != 0) throw Error(Errc::WindowViolation, "x/p leaves the exponent window");
      return out(ctx, x.mantissa() / ctx.p, x.precision() - 1);
    };
    m.loss = 1;
    m.lip_upper = NormValue::pow(-1);
    m.lip_lower = NormValue::pow(-1);
  } else if (name == "example2_R") {
    need_zp();
    m.eval = [ctx](const PAdic& x) {
      int n = std::min(2 * x.precision() + 1, detail::exact_digits(ctx.p));
      std::uint64_t r = x.mantissa(), y = 0, pw = ctx.p;
      const std::uint64_t p2 = std::uint64_t(ctx.p) * ctx.p;
      for (int i = 0; i < x.precision() && 2 * i + 1 < n; ++i, pw *= p2) {
        y += (r % ctx.p) * pw;
        r /= ctx.p;
      }
      return out(ctx, y, n);
    };
    m.lip_upper = NormValue::pow(1);
  } else if (name == "example2_L") {
    need_zp();
    m.eval = [ctx](const PAdic& x) {
      int known = x.precision() / 2;
      std::uint64_t r = x.mantissa() / ctx.p, y = 0, pw = 1;
      for (int i = 0; i < known; ++i, pw *= ctx.p) {
        y += (r % ctx.p) * pw;
        r /= std::uint64_t(ctx.p) * ctx.p;
      }
      return out(ctx, y, known);
    };
    m.loss = ctx.width() - ctx.width() / 2;
    m.lip_upper = NormValue::pow(-1);
  } else if (name == "example2_phi_n") {
    need_zp();
    int n = static_cast<int>(detail::param_int(ps, "n"));
    if (n < 0) throw Error(Errc::BadParams, "n must be >= 0");
    m.eval = [ctx, n](const PAdic& x) {
      int prec = detail::exact_digits(ctx.p);
      if (2 * n + 1 >= prec) return out(ctx, 0, prec);
      if (n >= x.precision()) return out(ctx, 0, 2 * n + 1);
      std::uint64_t mod = ctx.pow(prec);
      std::uint64_t a = (x.mantissa() / ctx.pow(n)) % ctx.p;
      return out(ctx, (mod - a * ctx.pow(2 * n + 1) % mod) % mod, prec);
    };
    m.lip_upper = NormValue::pow(n + 1);
  } else if (name == "rho_open_Ra") {
    long long a = detail::param_int(ps, "a");
    if (a < 0 || a >= static_cast<long long>(p)) throw Error(Errc::BadParams, "a must be a digit");
    int fm = -ctx.u_min;
    m.eval = [ctx, a, fm](const PAdic& x) {
      int n = std::min(x.precision() + 2, detail::exact_digits(ctx.p));
      std::uint64_t mod = ctx.pow(n);
      std::uint64_t q = ctx.pow(fm);
      std::uint64_t frac = x.mantissa() % q, whole = x.mantissa() / q;
      std::uint64_t y = frac * ctx.p % mod;
      if (fm + 1 < n) y = (y + static_cast<std::uint64_t>(a) * ctx.pow(fm + 1)) % mod;
      if (fm + 2 < n) y = (y + detail::mulmod(whole, ctx.pow(fm + 2), mod)) % mod;
      return out(ctx, y, n);
    };
    m.lip_upper = NormValue::pow(1);
    m.lip_lower = NormValue::pow(2);
  } else if (name == "affine") {
    PAdic v = detail::param_value(ctx, ps, "v");
    PAdic w = detail::param_value(ctx, ps, "w");
    if (v.is_zero()) throw Error(Errc::BadParams, "affine needs v != 0");
    int vv = v.valuation();
    if (ps.count("contraction") && vv <= 0) throw Error(Errc::BadParams, "contraction tag needs 0 < |v| < 1");
    ctx.admit(w);
    m.eval = [ctx, v, w](const PAdic& x) { return detail::based(ctx, x * v + w); };
    m.loss = std::max(0, -vv);
    m.lip_upper = NormValue::pow(vv);
    m.lip_lower = NormValue::pow(vv);
  } else if (name == "quadratic_contraction") {
    // v x + s x^2 + w with |s| < |v| < 1: scaling with kappa(d) = |v| d on Z_p
    need_zp();
    PAdic v = contraction_params("v");
    PAdic s = detail::param_value(ctx, ps, "s");
    PAdic w = detail::param_value(ctx, ps, "w");
    if (!s.is_zero() && !(s.norm() < v.norm())) throw Error(Errc::BadParams, "quadratic_contraction needs |s| < |v|");
    m.eval = [ctx, v, s, w](const PAdic& x) { return detail::based(ctx, x * v + x * x * s + w); };
    m.lip_upper = v.norm();
    m.lip_lower = v.norm();
  } else if (name == "digit_mix_contraction") {
    // v σ(x) + w where σ adds each digit to its lower neighbour mod p
    need_zp();
    PAdic v = contraction_params("v");
    PAdic w = detail::param_value(ctx, ps, "w");
    m.eval = [ctx, v, w](const PAdic& x) { return detail::based(ctx, detail::digit_mix(x) * v + w); };
    m.lip_upper = v.norm();
    m.lip_lower = v.norm();
  } else if (name == "remark2_uvw") {
    need_qp();
    PAdic u = detail::param_value(ctx, ps, "u");
    PAdic v = detail::param_value(ctx, ps, "v");
    PAdic w = detail::param_value(ctx, ps, "w");
    if (v.is_zero() || u.is_zero()) throw Error(Errc::BadParams, "remark2_uvw needs nonzero u, v");
    NormValue nu = u.norm(), nv = v.norm();
    if (!(nv < nu && nu < NormValue::one())) throw Error(Errc::BadParams, "remark2_uvw needs 0 < |v| < |u| < 1");
    ctx.admit(w);
    m.eval = [ctx, u, v, w](const PAdic& x) {
      auto [whole, frac] = int_frac_split(x);
      return detail::based(ctx, u * detail::exact(frac) + v * whole + w);
    };
    m.lip_upper = nu;
    m.lip_lower = nv;
  } else if (name == "thm1_qp_example") {
    need_qp();
    m.eval = [ctx](const PAdic& x) {
      // p^-1 * sum_{i>=0} a_i p^-i + p^-2 * sum_{i>=2} a_i p^i, first sum over i >= 0 as displayed
      int e = x.end();
      PAdic acc(ctx.p, ctx.u_min, std::max(0, e - 2 - ctx.u_min), 0);
      for (int i = 0; i < e; ++i) {
        int a = x.digit(i);
        if (a == 0) continue;
        if (-1 - i < ctx.u_min) throw Error(Errc::WindowViolation, "fractional image digit below window");
        acc = acc + PAdic(ctx.p, -1 - i, e + 1 + i, static_cast<std::uint64_t>(a));
      }
      for (int i = 2; i < e; ++i) {
        int a = x.digit(i);
        if (a) acc = acc + PAdic(ctx.p, i - 2, e - i + 2, static_cast<std::uint64_t>(a));
      }
      return detail::based(ctx, acc);
    };
    m.loss = 2;
    m.lip_upper = NormValue::pow(-(2 * ctx.end() - 1));
  } else {
    throw Error(Errc::UnknownMap, "unknown map '" + name + "'");
  }
  return m;
}

struct MapSpec {
  std::string name;
  Params params;
};

/// `name(key=value, ...)`. Values may contain ',' (digit lists); a new
/// parameter starts only where a comma is followed by `ident=`.
inline MapSpec parse_map_spec(const std::string& s) {
  MapSpec spec;
  std::size_t i = 0;
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < s.size() && s[i] == ' ') ++i;
  std::size_t start = i;
  while (i < s.size() && ident_char(s[i])) ++i;
  spec.name = s.substr(start, i - start);
  if (spec.name.empty()) throw Error(Errc::ParseError, "map spec: expected a name at " + std::to_string(i), i);
  if (i == s.size()) return spec;
  if (s[i] != '(') throw Error(Errc::ParseError, "map spec: expected '(' at " + std::to_string(i), i);
  if (s.back() != ')') throw Error(Errc::ParseError, "map spec: expected ')' at " + std::to_string(s.size()), s.size());
  std::string body = s.substr(i + 1, s.size() - i - 2);
  std::size_t off = i + 1;
  // split points
  std::vector<std::size_t> cuts;
  for (std::size_t j = 0; j < body.size(); ++j) {
    if (body[j] != ',') continue;
    std::size_t k = j + 1;
    while (k < body.size() && body[k] == ' ') ++k;
    std::size_t a = k;
    while (k < body.size() && ident_char(body[k])) ++k;
    if (k > a && k < body.size() && body[k] == '=' && !std::isdigit(static_cast<unsigned char>(body[a]))) cuts.push_back(j);
  }
  std::size_t prev = 0;
  cuts.push_back(body.size());
  for (std::size_t c : cuts) {
    std::string item = body.substr(prev, c - prev);
    std::size_t lead = 0;
    while (lead < item.size() && item[lead] == ' ') ++lead;
    if (item.size() > lead) {
      auto eq = item.find('=');
      if (eq == std::string::npos || eq == lead)
        throw Error(Errc::ParseError, "map spec: expected key=value at " + std::to_string(off + prev + lead), off + prev + lead);
      std::string key = item.substr(lead, eq - lead);
      std::string val = item.substr(eq + 1);
      while (!val.empty() && val.back() == ' ') val.pop_back();
      while (!val.empty() && val.front() == ' ') val.erase(val.begin());
      spec.params[key] = val;
    }
    prev = c + 1;
  }
  return spec;
}

inline DynamicMap map_from_spec(const std::string& s, const Context& ctx) {
  MapSpec spec = parse_map_spec(s);
  return builtin_map(spec.name, spec.params, ctx);
}

// Perturbations -------------------------------------------------------------

struct LipschitzPerturbation {
  DynamicMap map;
  NormValue delta;
  std::string kind;

  PAdic operator()(const PAdic& x) const { return map(x); }
};

namespace detail {
inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// kinds:
///   digit_local    output digit at exponent k+t is a seeded function of the
///                  input digits t-1 and t (window indices from u_min); k = -log_p δ
///   constant       φ ≡ c; c from params["c"] or seeded with |c| ≤ δ
///   example2_phi_n φ(x) = -x_n p^(2n+1), δ = p^-(n+1)
inline LipschitzPerturbation make_lipschitz_perturbation(const Context& ctx, NormValue delta, const std::string& kind,
                                                         std::uint64_t seed, const Params& ps = {}) {
  if (delta.zero || delta.k > ctx.end())
    throw Error(Errc::DeltaTooSmall, "delta below context resolution " + ctx.resolution().str());
  LipschitzPerturbation phi;
  phi.delta = delta;
  phi.kind = kind;
  DynamicMap& m = phi.map;
  m.ctx = ctx;
  m.tag = kind;
  m.params = ps;
  m.lip_upper = delta;
  int k = delta.k;
  if (kind == "digit_local") {
    int shift = k - ctx.u_min;
    m.eval = [ctx, shift, seed](const PAdic& x) {
      int n = std::min(x.precision() + shift, detail::exact_digits(ctx.p));
      std::uint64_t r = x.mantissa(), y = 0;
      for (int t = 0; t < x.precision() && t + shift < n; ++t) {
        if (t + shift < 0) continue;
        std::uint64_t cur = (r / ctx.pow(t)) % ctx.p;
        std::uint64_t prev = t > 0 ? (r / ctx.pow(t - 1)) % ctx.p : ctx.p;
        std::uint64_t h = detail::splitmix(seed ^ detail::splitmix((std::uint64_t(t) << 32) ^ (prev << 16) ^ cur));
        y += (h % ctx.p) * ctx.pow(t + shift);
      }
      return detail::out(ctx, y, n);
    };
  } else if (kind == "constant") {
    PAdic c;
    if (ps.count("c")) {
      c = ctx.admit(detail::param_value(ctx, ps, "c"));
    } else {
      int from = std::max(k, ctx.u_min);
      std::uint64_t span = ctx.pow(ctx.end() - from);
      c = ctx.admit(PAdic(ctx.p, from, ctx.end() - from, detail::splitmix(seed) % span));
    }
    if (c.norm() > delta) throw Error(Errc::BadParams, "constant exceeds delta");
    PAdic ce = detail::exact(c);
    m.eval = [ce](const PAdic&) { return ce; };
    m.params["c"] = format(c);
  } else if (kind == "example2_phi_n") {
    Params q = ps;
    if (!q.count("n")) q["n"] = std::to_string(std::max(0, k - 1));
    m = builtin_map("example2_phi_n", q, ctx);
    int n = static_cast<int>(detail::param_int(q, "n"));
    if (delta < NormValue::pow(n + 1)) throw Error(Errc::BadParams, "example2_phi_n needs delta >= p^-(n+1)");
  } else {
    throw Error(Errc::BadParams, "unknown perturbation kind '" + kind + "'");
  }
  return phi;
}

/// g = f + φ
inline DynamicMap perturb(const DynamicMap& f, const LipschitzPerturbation& phi) {
  DynamicMap g;
  g.ctx = f.ctx;
  auto fe = f.eval;
  auto pe = phi.map.eval;
  Context c = f.ctx;
  g.eval = [fe, pe, c](const PAdic& x) { return detail::based(c, fe(x) + pe(x)); };
  g.loss = std::max(f.loss, phi.map.loss);
  g.lip_upper = max(f.lip_upper, phi.delta);
  g.tag = f.tag + "+" + phi.kind;
  return g;
}

// Right-inverse families -------------------------------------------------

struct RightInverseFamily {
  std::vector<DynamicMap> members;
  std::vector<std::string> labels;
  bool covering = false;
  bool disjoint_open = false;
  std::function<std::optional<std::size_t>(const PAdic&)> membership;
  NormValue max_lip() const {
    NormValue l = NormValue::zero_below(0);
    for (auto& r : members) l = max(l, r.lip_upper);
    return l;
  }
};

/// R_i(x) = i + p x
inline RightInverseFamily shift_right_inverses(const Context& ctx) {
  if (ctx.space != Space::Zp) throw Error(Errc::BadParams, "shift inverses are defined on Z_p");
  RightInverseFamily fam;
  for (std::uint32_t i = 0; i < ctx.p; ++i) {
    DynamicMap r;
    r.ctx = ctx;
    r.eval = [ctx, i](const PAdic& x) {
      int n = std::min(x.precision() + 1, detail::exact_digits(ctx.p));
      return detail::out(ctx, (x.mantissa() % ctx.pow(n - 1)) * ctx.p + i, n);
    };
    r.lip_upper = NormValue::pow(1);
    r.lip_lower = NormValue::pow(1);
    r.tag = "R_" + std::to_string(i);
    fam.members.push_back(r);
    fam.labels.push_back(std::to_string(i));
  }
  fam.covering = fam.disjoint_open = true;
  std::uint32_t p = ctx.p;
  fam.membership = [p](const PAdic& x) -> std::optional<std::size_t> { return x.mantissa() % p; };
  return fam;
}

/// Family from arbitrary members; images, covering and disjointness come
/// from an exhaustive residue scan. Ties go to the smallest index.
inline RightInverseFamily family_from_members(const Context& ctx, std::vector<DynamicMap> members,
                                              std::vector<std::string> labels = {}) {
  RightInverseFamily fam;
  fam.members = std::move(members);
  if (labels.empty())
    for (std::size_t i = 0; i < fam.members.size(); ++i) labels.push_back(std::to_string(i));
  fam.labels = std::move(labels);
  std::uint64_t n = ctx.size();
  auto owner = std::make_shared<std::vector<std::int32_t>>(n, -1);
  bool overlap = false;
  for (std::size_t i = 0; i < fam.members.size(); ++i)
    for (std::uint64_t r = 0; r < n; ++r) {
      std::uint64_t y = ctx.index(fam.members[i].at(r));
      auto& o = (*owner)[y];
      if (o < 0) o = static_cast<std::int32_t>(i);
      else if (o != static_cast<std::int32_t>(i)) overlap = true;
    }
  fam.covering = std::none_of(owner->begin(), owner->end(), [](std::int32_t o) { return o < 0; });
  fam.disjoint_open = !overlap;
  fam.membership = [owner, ctx](const PAdic& x) -> std::optional<std::size_t> {
    auto o = (*owner)[ctx.index(x)];
    if (o < 0) return std::nullopt;
    return static_cast<std::size_t>(o);
  };
  return fam;
}

/// Exhaustive check that w is a loss-free isometric bijection; returns w^-1 as a table.
inline std::shared_ptr<std::vector<std::uint64_t>> invert_isometry(const DynamicMap& w) {
  const Context& ctx = w.ctx;
  if (w.loss != 0) throw Error(Errc::NotIsometry, "w loses precision");
  std::uint64_t n = ctx.size();
  std::vector<std::uint64_t> img(n);
  auto inv = std::make_shared<std::vector<std::uint64_t>>(n, UINT64_MAX);
  for (std::uint64_t r = 0; r < n; ++r) {
    img[r] = ctx.index(w.at(r));
    if ((*inv)[img[r]] != UINT64_MAX) throw Error(Errc::NotBijective, "w is not injective on residues");
    (*inv)[img[r]] = r;
  }
  // isometry iff for every j the induced map on residues mod p^j is well defined and injective
  for (int j = 1; j < ctx.width(); ++j) {
    std::uint64_t q = ctx.pow(j);
    std::vector<std::uint64_t> cls(q, UINT64_MAX);
    std::vector<char> hit(q, 0);
    for (std::uint64_t r = 0; r < q; ++r) {
      std::uint64_t c = img[r] % q;
      if (hit[c]) throw Error(Errc::NotIsometry, "w merges two balls of radius p^-" + std::to_string(j));
      hit[c] = 1;
      cls[r] = c;
    }
    for (std::uint64_t r = q; r < n; ++r)
      if (img[r] % q != cls[r % q]) throw Error(Errc::NotIsometry, "w splits a ball of radius p^-" + std::to_string(j));
  }
  return inv;
}

/// f = S^k ∘ w
inline DynamicMap furno_compose(const DynamicMap& w, int k, const Context& ctx) {
  if (k < 1) throw Error(Errc::BadParams, "k must be >= 1");
  if (ctx.space != Space::Zp) throw Error(Errc::BadParams, "Furno composition is built on Z_p");
  invert_isometry(w);
  DynamicMap f;
  f.ctx = ctx;
  auto we = w.eval;
  f.eval = [ctx, we, k](const PAdic& x) {
    PAdic y = detail::based(ctx, we(x));
    return detail::out(ctx, y.mantissa() / ctx.pow(k), y.precision() - k);
  };
  f.loss = k;
  f.lip_upper = NormValue::pow(-k);
  f.tag = "S^" + std::to_string(k) + "∘" + w.tag;
  return f;
}

/// R_a = w^-1 ∘ R_{a1} ∘ ... ∘ R_{ak}, a word of length k
inline RightInverseFamily locally_scaling_inverses(const DynamicMap& w, int k, const Context& ctx) {
  if (k < 1) throw Error(Errc::BadParams, "k must be >= 1");
  auto inv = invert_isometry(w);
  RightInverseFamily fam;
  std::uint64_t words = ctx.pow(k);
  for (std::uint64_t a = 0; a < words; ++a) {
    DynamicMap r;
    r.ctx = ctx;
    r.eval = [ctx, inv, a, k](const PAdic& x) {
      std::uint64_t y = (detail::mulmod(ctx.admit(x).mantissa(), ctx.pow(k), ctx.size()) + a) % ctx.size();
      return detail::out(ctx, (*inv)[y], ctx.width());
    };
    r.lip_upper = NormValue::pow(k);
    r.lip_lower = NormValue::pow(k);
    std::string label;
    for (int j = 0; j < k; ++j) label += std::to_string((a / ctx.pow(j)) % ctx.p);
    r.tag = "R_" + label;
    fam.members.push_back(r);
    fam.labels.push_back(label);
  }
  fam.covering = fam.disjoint_open = true;
  auto we = w.eval;
  fam.membership = [ctx, we, k](const PAdic& x) -> std::optional<std::size_t> {
    return detail::based(ctx, we(x)).mantissa() % ctx.pow(k);
  };
  return fam;
}

}  // namespace padic
