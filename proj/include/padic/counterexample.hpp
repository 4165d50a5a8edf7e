#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "padic/dynamics.hpp"
#include "padic/shadowing.hpp"

namespace padic {

/// Words over {0..p-1} stored as digit characters, first letter first.
using Word = std::string;

struct SubshiftApprox {
  std::uint32_t p = 2;
  int depth = 0;
  std::string name;
  std::function<bool(const Word&)> admissible;
  std::vector<std::vector<Word>> allowed_words;  // by length, 0..depth
  std::map<Word, std::vector<char>> follower;    // words shorter than depth

  std::vector<Word> extensions(const Word& w) const {
    std::vector<Word> out;
    for (std::uint32_t a = 0; a < p; ++a) {
      Word v = w + static_cast<char>('0' + a);
      if (admissible(v)) out.push_back(std::move(v));
    }
    return out;
  }
};

namespace detail {

inline SubshiftApprox materialize(SubshiftApprox x, std::uint64_t cap = 1u << 22) {
  x.allowed_words.assign(1, {Word()});
  std::uint64_t total = 1;
  for (int len = 1; len <= x.depth; ++len) {
    std::vector<Word> next;
    for (const auto& w : x.allowed_words.back()) {
      auto ext = x.extensions(w);
      auto& fol = x.follower[w];
      for (auto& v : ext) fol.push_back(v.back());
      for (auto& v : ext) next.push_back(std::move(v));
    }
    total += next.size();
    if (total > cap) throw Error(Errc::BudgetExceeded, "too many admissible words at depth " + std::to_string(len));
    x.allowed_words.push_back(std::move(next));
  }
  return x;
}

// every maximal 0-block with a 1 on both sides has even length; letters in {0,1}
inline bool even_shift_word(const Word& w) {
  int last_one = -1;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) {
    if (w[i] != '0' && w[i] != '1') return false;
    if (w[i] == '1') {
      if (last_one >= 0 && (i - last_one - 1) % 2 == 1) return false;
      last_one = i;
    }
  }
  return true;
}

}  // namespace detail

inline SubshiftApprox build_even_subshift(std::uint32_t p, int depth) {
  if (p < 2 || p > 10) throw Error(Errc::BadParams, "need 2 <= p <= 10");
  if (depth < 2) throw Error(Errc::BadParams, "need depth >= 2");
  SubshiftApprox x;
  x.p = p;
  x.depth = depth;
  x.name = "even";
  x.admissible = detail::even_shift_word;
  return detail::materialize(std::move(x));
}

/// Full shift over {0..p-1}, the SFT control.
inline SubshiftApprox build_full_shift(std::uint32_t p, int depth) {
  if (p < 2 || p > 10) throw Error(Errc::BadParams, "need 2 <= p <= 10");
  SubshiftApprox x;
  x.p = p;
  x.depth = depth;
  x.name = "full";
  x.admissible = [p](const Word& w) {
    return std::all_of(w.begin(), w.end(), [p](char c) { return c >= '0' && c < static_cast<char>('0' + p); });
  };
  return detail::materialize(std::move(x));
}

// Chart -----------------------------------------------------------------------

struct ChartNode {
  std::vector<Word> group;            // cylinders mapped onto this ball, equal lengths
  std::vector<Word> refined;          // their extensions used for the split
  std::vector<std::size_t> block;     // refined[block[j] .. block[j+1]) goes to child j
  std::vector<std::int32_t> child;
};

struct CantorChart {
  std::uint32_t p = 2;
  int depth = 0;
  std::vector<ChartNode> nodes;                        // nodes[0] is the root, Z_p
  std::vector<std::vector<std::int32_t>> level_index;  // [m][r]: node of the ball r + p^m Z_p
  // s = w∘S∘w^-1 on balls: [m][r] = (residue, digits known)
  std::vector<std::vector<std::pair<std::uint64_t, int>>> s_table;

  /// Ball of the cylinder set: deepest node whose subtree holds every word.
  std::pair<std::uint64_t, int> forward(const std::vector<Word>& ws) const {
    std::uint64_t r = 0, pw = 1;
    int m = 0;
    std::int32_t at = 0;
    while (m < depth && !ws.empty()) {
      const auto& nd = nodes[at];
      std::size_t len = nd.refined.front().size();
      int j = -1;
      for (const auto& w : ws) {
        if (w.size() < len) return {r, m};
        auto it = std::lower_bound(nd.refined.begin(), nd.refined.end(), w.substr(0, len));
        if (it == nd.refined.end() || *it != w.substr(0, len)) return {r, m};
        auto k = static_cast<std::size_t>(it - nd.refined.begin());
        int jj = static_cast<int>(std::upper_bound(nd.block.begin(), nd.block.end(), k) - nd.block.begin()) - 1;
        if (j >= 0 && jj != j) return {r, m};
        j = jj;
      }
      r += static_cast<std::uint64_t>(j) * pw;
      pw *= p;
      ++m;
      at = nd.child[j];
    }
    return {r, m};
  }
  std::pair<std::uint64_t, int> forward(const Word& w) const { return forward(std::vector<Word>{w}); }

  /// Cylinders behind the ball r + p^m Z_p.
  const std::vector<Word>& backward(int m, std::uint64_t r) const { return nodes[level_index[m][r]].group; }
};

/// Splits each ball's cylinders into p lexicographic blocks, refining the
/// words until there are at least p of them.
inline CantorChart build_cantor_chart(const SubshiftApprox& x, int depth, int max_word = 60) {
  const std::uint32_t p = x.p;
  CantorChart ch;
  ch.p = p;
  ch.depth = depth;
  ch.nodes.push_back({{Word()}, {}, {}, {}});
  ch.level_index.assign(1, {0});
  for (int m = 0; m < depth; ++m) {
    std::vector<std::int32_t> next(ch.level_index[m].size() * p);
    std::uint64_t pm = ch.level_index[m].size();
    for (std::uint64_t r = 0; r < pm; ++r) {
      std::int32_t id = ch.level_index[m][r];
      std::vector<Word> ws = ch.nodes[id].group;
      int still = 0;
      while (ws.size() < p) {
        std::vector<Word> more;
        for (auto& w : ws)
          for (auto& v : x.extensions(w)) more.push_back(std::move(v));
        if (more.empty()) throw Error(Errc::IsolatedPoint, "dead end below '" + ws.front() + "'");
        still = more.size() == ws.size() ? still + 1 : 0;
        if (still > 4 * static_cast<int>(p)) throw Error(Errc::IsolatedPoint, "isolated point near '" + ws.front() + "'");
        ws = std::move(more);
        if (static_cast<int>(ws.front().size()) > max_word)
          throw Error(Errc::Exhausted, "cannot split into p groups within words of length " + std::to_string(max_word));
      }
      std::sort(ws.begin(), ws.end());
      std::vector<std::size_t> block;
      std::size_t n = ws.size(), at = 0;
      for (std::uint32_t j = 0; j < p; ++j) {
        block.push_back(at);
        at += n / p + (j < n % p ? 1 : 0);
      }
      std::vector<std::int32_t> kids;
      for (std::uint32_t j = 0; j < p; ++j) {
        std::size_t hi = j + 1 < p ? block[j + 1] : n;
        ChartNode c;
        c.group.assign(ws.begin() + static_cast<std::ptrdiff_t>(block[j]), ws.begin() + static_cast<std::ptrdiff_t>(hi));
        kids.push_back(static_cast<std::int32_t>(ch.nodes.size()));
        next[r + j * pm] = kids.back();
        ch.nodes.push_back(std::move(c));
      }
      auto& nd = ch.nodes[id];
      nd.refined = std::move(ws);
      nd.block = std::move(block);
      nd.child = std::move(kids);
    }
    ch.level_index.push_back(std::move(next));
  }
  // s on every ball
  ch.s_table.resize(depth + 1);
  for (int m = 0; m <= depth; ++m) {
    ch.s_table[m].resize(ch.level_index[m].size());
    for (std::uint64_t r = 0; r < ch.level_index[m].size(); ++r) {
      std::vector<Word> tails;
      for (const auto& w : ch.backward(m, r)) tails.push_back(w.empty() ? w : w.substr(1));
      std::sort(tails.begin(), tails.end());
      tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
      bool open = std::any_of(tails.begin(), tails.end(), [](const Word& t) { return t.empty(); });
      ch.s_table[m][r] = open ? std::pair<std::uint64_t, int>{0, 0} : ch.forward(tails);
    }
  }
  return ch;
}

// Theorem-2 map -------------------------------------------------------------

struct EvenShiftSystem {
  Context ctx;
  SubshiftApprox subshift;
  CantorChart chart;
  DynamicMap s;  // w∘S∘w^-1 on Z_p
  DynamicMap f;
  RightInverseFamily family;  // R_a(x) = a + p^2 x, a != 0
};

inline DynamicMap chart_shift_map(const CantorChart& chart, const Context& ctx) {
  auto ch = std::make_shared<CantorChart>(chart);
  DynamicMap s;
  s.ctx = ctx;
  s.eval = [ch, ctx](const PAdic& x) {
    int m = std::min({x.precision(), ch->depth, ctx.width()});
    auto [v, prec] = ch->s_table[m][x.mantissa() % ctx.pow(m)];
    return detail::out(ctx, v, prec);
  };
  s.tag = "s";
  std::uint64_t worst = 0;
  for (std::uint64_t r = 0; r < ctx.size(); ++r) worst = std::max<std::uint64_t>(worst, ctx.width() - s.at(r).precision());
  s.loss = static_cast<int>(worst);
  s.lip_upper = NormValue::pow(-ctx.width());  // not Lipschitz; any residue map is at resolution
  return s;
}

/// f(a + bp + zp^2) = x, z, a + (b+1)p + s(z)p^2 or a + p + s(z)p^2 by the cases on a and b.
inline EvenShiftSystem build_thm2_map(const SubshiftApprox& X, const CantorChart& chart, const Context& ctx) {
  const std::uint32_t p = ctx.p;
  if (p < 3) throw Error(Errc::BadParams, "the construction needs p >= 3");
  if (ctx.space != Space::Zp) throw Error(Errc::BadParams, "built on Z_p");
  if (chart.p != p) throw Error(Errc::BadParams, "chart prime differs from context");
  if (chart.depth < ctx.width() - 2) throw Error(Errc::DepthInsufficient, "chart depth must reach N - 2 digits of z");
  EvenShiftSystem sys;
  sys.ctx = ctx;
  sys.subshift = X;
  sys.chart = chart;
  Context zc = Context::zp(p, std::max(1, ctx.width() - 2));
  sys.s = chart_shift_map(chart, zc);
  auto se = sys.s.eval;
  DynamicMap& f = sys.f;
  f.ctx = ctx;
  f.eval = [ctx, se, p](const PAdic& x) {
    int n = x.precision();
    std::uint64_t m = x.mantissa();
    if (n == 0) return detail::out(ctx, 0, 0);
    std::uint64_t a = m % p;
    if (a == 0) return x;
    if (n == 1) return detail::out(ctx, a, 1);
    std::uint64_t b = (m / p) % p;
    PAdic z(p, 0, n - 2, m / (std::uint64_t(p) * p));
    if (b == 0) return z;
    PAdic sz = se(z);
    std::uint64_t nb = b <= p - 2 ? b + 1 : 1;
    return detail::out(ctx, a + nb * p + sz.mantissa() * p * p, 2 + sz.precision());
  };
  f.tag = "thm2_f";
  std::uint64_t worst = 0;
  for (std::uint64_t r = 0; r < ctx.size(); ++r) worst = std::max<std::uint64_t>(worst, ctx.width() - f.at(r).precision());
  f.loss = static_cast<int>(worst);
  f.lip_upper = NormValue::pow(-ctx.width());
  std::vector<DynamicMap> members;
  for (std::uint32_t a = 1; a < p; ++a) {
    DynamicMap r;
    r.ctx = ctx;
    r.eval = [ctx, a, p](const PAdic& x) {
      int n = std::min(x.precision() + 2, detail::exact_digits(p));
      return detail::out(ctx, a + (x.mantissa() % ctx.pow(n - 2)) * p * p, n);
    };
    r.lip_upper = NormValue::pow(2);
    r.lip_lower = NormValue::pow(2);
    r.tag = "R_" + std::to_string(a);
    members.push_back(r);
  }
  sys.family = family_from_members(ctx, members);
  return sys;
}

// Non-shadowing witness -------------------------------------------------------

struct SpliceAttempt {
  int k = 0;                         // zero run 2k against 2k+1
  std::vector<PAdic> s_orbit;        // pseudo-orbit of s
  PseudoOrbit lifted;                // pseudo-orbit of f
  bool pseudo_ok = false;            // jumps within delta
  NormValue best_error_f = NormValue::zero_below(0);
  NormValue best_error = NormValue::zero_below(0);  // at the level of s
  PAdic best_point;
};

/// s-orbit of 1 0^{2k} 1 1... for one step, then of 1 0^{2k+1} 1 1...;
/// the glued sequence has an odd zero run, lifted with a and the cycling b_n.
inline SpliceAttempt splice_attempt(const EvenShiftSystem& sys, NormValue delta, int k, std::uint32_t a = 1,
                                    std::uint64_t budget = 1u << 24) {
  const Context& c = sys.ctx;
  const std::uint32_t p = c.p;
  SpliceAttempt at;
  at.k = k;
  int zw = c.width() - 2;
  int tail = 4 * zw + 8;
  Word xi = "1" + Word(2 * k, '0') + Word(tail, '1');
  Word zeta = "1" + Word(2 * k + 1, '0') + Word(tail, '1');
  int L = 2 * k + 3;
  auto ball = [&](const Word& w) {
    auto [r, m] = sys.chart.forward(w);
    if (m < zw) throw Error(Errc::DepthInsufficient, "chart resolves only " + std::to_string(m) + " digits");
    return PAdic(p, 0, zw, r % c.pow(zw));
  };
  at.s_orbit.push_back(ball(xi));
  for (int n = 1; n <= L; ++n) at.s_orbit.push_back(ball(zeta.substr(n)));
  at.pseudo_ok = verify_pseudo_orbit(sys.s, at.s_orbit, delta).ok;
  at.lifted.delta = delta.scaled(-2);
  at.lifted.map_tag = sys.f.tag;
  for (int n = 0; n <= L; ++n) {
    std::uint64_t b = static_cast<std::uint64_t>(n % (p - 1)) + 1;
    at.lifted.points.push_back(c.element(a + b * p + at.s_orbit[n].mantissa() * p * p));
  }
  auto bf = brute_force_shadow(sys.f, at.lifted, c, budget, true);
  at.best_point = bf.best_point;
  at.best_error_f = bf.best_error;
  // f-level errors below p^-2 keep a and b, and then scale by exactly p^-2
  at.best_error = bf.best_error < NormValue::pow(2) ? bf.best_error.scaled(2) : NormValue::one();
  return at;
}

struct NonShadowingWitness {
  SpliceAttempt witness;
  std::vector<SpliceAttempt> tried;
};

/// First splice whose pseudo-orbit is a δ-pseudo-orbit of s yet no residue
/// ε-shadows its lift; best errors are lower bounds, so the witness is sound.
inline NonShadowingWitness demonstrate_non_shadowing(const EvenShiftSystem& sys, NormValue delta, NormValue epsilon,
                                                     int max_k = 16) {
  NonShadowingWitness out;
  for (int k = 1; k <= max_k; ++k) {
    SpliceAttempt at;
    try {
      at = splice_attempt(sys, delta, k);
    } catch (const Error& e) {
      if (e.code() == Errc::DepthInsufficient) break;
      throw;
    }
    bool hit = at.pseudo_ok && at.best_error > epsilon;
    out.tried.push_back(at);
    if (hit) {
      out.witness = out.tried.back();
      return out;
    }
  }
  throw Error(Errc::NoWitnessFound, "no splice defeats epsilon " + epsilon.str() + " at this resolution; try a deeper chart");
}

/// Residues with |x| ≤ p^-1 solving x = f(x) + φ(x), φ = p^k on pZ_p and 0 elsewhere.
/// A conjugacy h with f∘h = h∘(f + φ) would need such points; none exist.
inline std::uint64_t stability_obstruction_count(const DynamicMap& f, int k) {
  const Context& c = f.ctx;
  std::uint64_t hits = 0;
  PAdic bump = detail::exact(c.admit(PAdic(c.p, k, 1, 1)));
  for (std::uint64_t r = 0; r < c.size(); r += c.p) {
    PAdic x = c.element(r);
    PAdic y = c.admit(f(x) + bump);
    std::uint64_t mod = c.pow(y.precision());
    if (y.mantissa() % mod == r % mod) ++hits;
  }
  return hits;
}

}  // namespace padic
