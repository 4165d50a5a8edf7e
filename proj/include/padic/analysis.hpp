#pragma once

#include <algorithm>
#include <climits>
#include <map>
#include <optional>
#include <vector>

#include "padic/dynamics.hpp"
#include "padic/parallel.hpp"
#include "padic/rng.hpp"

namespace padic {

namespace detail {

// valuation of (a - b) mod p^prec, prec when equal
inline int vdiff(std::uint64_t a, std::uint64_t b, std::uint32_t p, std::uint64_t mod, int prec) {
  std::uint64_t d = (a >= b ? a - b : b - a) % mod;
  if (d == 0) return prec;
  if (a < b) d = mod - d;
  int v = 0;
  if (p == 2) return __builtin_ctzll(d);
  while (d % p == 0) {
    d /= p;
    ++v;
  }
  return v;
}

struct Images {
  std::vector<std::uint64_t> m;
  int prec = 0;  // common certified digit count
};

inline Images images(const DynamicMap& f) {
  const Context& c = f.ctx;
  Images im;
  im.m.resize(c.size());
  im.prec = c.width();
  std::vector<int> pr(c.size());
  parallel_for(c.size(), [&](std::uint64_t r) {
    PAdic y = f.at(r);
    im.m[r] = y.mantissa();
    pr[r] = y.precision();
  });
  for (int v : pr) im.prec = std::min(im.prec, v);
  std::uint64_t mod = c.pow(im.prec);
  for (auto& v : im.m) v %= mod;
  return im;
}

}  // namespace detail

struct LipschitzEstimate {
  std::optional<NormValue> c1_lower;  // none when no pair was resolvable
  std::optional<NormValue> c2_upper;
  bool exhaustive = true;
  std::uint64_t pairs = 0;
  std::uint64_t unresolved = 0;  // image pairs equal to known precision
};

/// Min and max of |f(x)-f(y)| / |x-y| over residue pairs whose images
/// differ at the certified precision. Exhaustive up to `budget` pairs,
/// otherwise `budget` seeded random pairs.
inline LipschitzEstimate estimate_lipschitz(const DynamicMap& f, std::uint64_t budget = 1ull << 28, std::uint64_t seed = 1) {
  const Context& c = f.ctx;
  auto im = detail::images(f);
  std::uint64_t n = c.size(), omod = c.pow(im.prec), imod = c.size();
  LipschitzEstimate est;
  unsigned __int128 total = static_cast<unsigned __int128>(n) * (n - 1) / 2;
  est.exhaustive = total <= budget;
  // per-row extremes of vout - vin
  std::vector<int> lo(n, INT_MAX), hi(n, INT_MIN);
  std::vector<std::uint64_t> unres(n, 0), cnt(n, 0);
  auto visit = [&](std::uint64_t a, std::uint64_t b, std::uint64_t row) {
    int vout = detail::vdiff(im.m[a], im.m[b], c.p, omod, im.prec);
    ++cnt[row];
    if (vout == im.prec) {
      ++unres[row];
      return;
    }
    int d = vout - detail::vdiff(a, b, c.p, imod, c.width());
    lo[row] = std::min(lo[row], d);
    hi[row] = std::max(hi[row], d);
  };
  if (est.exhaustive) {
    parallel_for(n, [&](std::uint64_t a) {
      for (std::uint64_t b = a + 1; b < n; ++b) visit(a, b, a);
    }, 16);
  } else {
    std::uint64_t rows = std::min<std::uint64_t>(n, 4096), per = budget / rows + 1;
    parallel_for(rows, [&](std::uint64_t row) {
      Rng rng(seed * 1000003 + row);
      for (std::uint64_t t = 0; t < per; ++t) {
        std::uint64_t a = rng.below(n), b = rng.below(n);
        if (a != b) visit(a, b, row);
      }
    }, 1);
  }
  int mn = INT_MAX, mx = INT_MIN;
  for (std::uint64_t r = 0; r < n; ++r) {
    mn = std::min(mn, lo[r]);
    mx = std::max(mx, hi[r]);
    est.unresolved += unres[r];
    est.pairs += cnt[r];
  }
  if (mn != INT_MAX) est.c2_upper = NormValue::pow(mn);
  if (mx != INT_MIN) est.c1_lower = NormValue::pow(mx);
  return est;
}

struct PairWitness {
  PAdic x, y;
};

struct ScalingCheck {
  bool ok = true;
  std::optional<PairWitness> witness;
};

/// |f(x) - f(y)| = p^m |x - y| whenever |x - y| ≤ p^-k (m defaults to k).
inline ScalingCheck check_locally_scaling(const DynamicMap& f, int k, std::optional<int> m = {}) {
  const Context& c = f.ctx;
  int mm = m.value_or(k);
  if (mm > k) throw Error(Errc::BadParams, "need m <= k");
  auto im = detail::images(f);
  std::uint64_t omod = c.pow(im.prec);
  int kk = k - c.u_min;  // digits fixed by |x - y| ≤ p^-k
  if (kk >= c.width()) return {};
  std::uint64_t step = c.pow(std::max(kk, 0)), n = c.size();
  ScalingCheck res;
  for (std::uint64_t a = 0; a < n && res.ok; ++a)
    for (std::uint64_t b = a + step; b < n; b += step) {
      int vin = detail::vdiff(a, b, c.p, n, c.width());
      int want = vin - mm;
      int vout = detail::vdiff(im.m[a], im.m[b], c.p, omod, im.prec);
      bool good = want >= im.prec ? vout == im.prec : vout == want;
      if (!good) {
        res.ok = false;
        res.witness = PairWitness{c.element(a), c.element(b)};
        break;
      }
    }
  return res;
}

struct ScalingProfile {
  // input distance exponent j (|x-y| = p^-(j+u_min) relative digits) -> output distance
  std::map<int, NormValue> kappa;
  bool consistent = true;
  std::optional<PairWitness> witness;
};

/// Groups residue pairs by input distance; consistent iff every class
/// has a single output distance. Unresolvable outputs count as ZERO.
inline ScalingProfile scaling_profile(const DynamicMap& f) {
  const Context& c = f.ctx;
  auto im = detail::images(f);
  std::uint64_t omod = c.pow(im.prec), n = c.size();
  int w = c.width();
  // out[j] = output valuation seen at input level j, or sentinel
  const int unset = INT_MIN;
  std::vector<int> seen(w, unset);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> first(w);
  ScalingProfile prof;
  for (std::uint64_t a = 0; a < n && prof.consistent; ++a)
    for (std::uint64_t b = a + 1; b < n; ++b) {
      int j = detail::vdiff(a, b, c.p, n, w);
      int vout = detail::vdiff(im.m[a], im.m[b], c.p, omod, im.prec);
      if (seen[j] == unset) {
        seen[j] = vout;
        first[j] = {a, b};
      } else if (seen[j] != vout) {
        prof.consistent = false;
        prof.witness = PairWitness{c.element(a), c.element(b)};
        break;
      }
    }
  for (int j = 0; j < w; ++j) {
    if (seen[j] == unset) continue;
    int e = seen[j] + c.u_min;
    prof.kappa[j + c.u_min] = seen[j] == im.prec ? NormValue::zero_below(im.prec + c.u_min) : NormValue::pow(e);
  }
  return prof;
}

struct InjectivityCheck {
  bool injective = true;
  std::optional<PairWitness> collision;
  int precision = 0;  // digits at which images were compared
};

/// Injectivity of the class map x mod p^W -> f(x) at the precision the
/// class certifies (beyond W for contractions).
inline InjectivityCheck check_injective(const DynamicMap& f) {
  const Context& c = f.ctx;
  std::uint64_t n = c.size();
  std::vector<std::uint64_t> m(n);
  std::vector<int> pr(n);
  parallel_for(n, [&](std::uint64_t r) {
    PAdic y = f.exact_at(r, c.width());
    m[r] = y.mantissa();
    pr[r] = y.precision();
  });
  InjectivityCheck res;
  res.precision = *std::min_element(pr.begin(), pr.end());
  std::uint64_t mod = c.pow(res.precision);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> keyed(n);
  for (std::uint64_t r = 0; r < n; ++r) keyed[r] = {m[r] % mod, r};
  std::sort(keyed.begin(), keyed.end());
  for (std::uint64_t i = 1; i < n; ++i)
    if (keyed[i].first == keyed[i - 1].first) {
      res.injective = false;
      res.collision = PairWitness{c.element(keyed[i - 1].second), c.element(keyed[i].second)};
      break;
    }
  return res;
}

/// Sorted residue indices of f(X) at context resolution.
inline std::vector<std::uint64_t> image_set(const DynamicMap& f) {
  auto im = detail::images(f);
  std::vector<std::uint64_t> out;
  out.reserve(im.m.size());
  if (im.prec < f.ctx.width()) {
    // unknown high digits: the image is a union of balls at that precision
    std::uint64_t q = f.ctx.pow(f.ctx.width() - im.prec), step = f.ctx.pow(im.prec);
    for (auto v : im.m)
      for (std::uint64_t t = 0; t < q; ++t) out.push_back(v + t * step);
  } else {
    out = im.m;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Largest ρ = p^-n0 with f(X) a union of radius-ρ balls, none when only
/// radii within two digits of the resolution work.
inline std::optional<NormValue> image_openness(const DynamicMap& f) {
  const Context& c = f.ctx;
  auto img = image_set(f);
  int w = c.width();
  for (int t = 0; t <= w - 2; ++t) {
    std::uint64_t q = c.pow(t);
    std::vector<char> cls(q, 0);
    std::uint64_t classes = 0;
    for (auto v : img)
      if (!cls[v % q]) {
        cls[v % q] = 1;
        ++classes;
      }
    if (classes * c.pow(w - t) == img.size()) return NormValue::pow(t + c.u_min);
  }
  return std::nullopt;
}

/// Largest c = p^-k such that every distinct residue pair reaches distance
/// ≥ c within `horizon` steps; ZERO when some pair never separates visibly.
inline NormValue expansivity_constant(const DynamicMap& f, int horizon) {
  const Context& c = f.ctx;
  std::uint64_t n = c.size();
  int w = c.width();
  std::vector<std::vector<std::uint64_t>> orb(horizon + 1, std::vector<std::uint64_t>(n));
  std::vector<int> prec(horizon + 1, w);
  for (std::uint64_t r = 0; r < n; ++r) orb[0][r] = r;
  for (int t = 1; t <= horizon; ++t) {
    prec[t] = std::max(0, prec[t - 1] - f.loss);
    parallel_for(n, [&](std::uint64_t r) { orb[t][r] = f(c.element(orb[t - 1][r])).mantissa(); });
  }
  std::vector<int> worst(n, INT_MIN);
  parallel_for(n, [&](std::uint64_t a) {
    int wa = INT_MIN;  // max over pairs of (min over t of output valuation)
    for (std::uint64_t b = a + 1; b < n; ++b) {
      int best = INT_MAX / 4;  // never visibly apart
      for (int t = 0; t <= horizon && prec[t] > 0; ++t) {
        std::uint64_t mod = c.pow(prec[t]);
        int v = detail::vdiff(orb[t][a] % mod, orb[t][b] % mod, c.p, mod, prec[t]);
        if (v < prec[t]) best = std::min(best, v);
      }
      wa = std::max(wa, best);
    }
    worst[a] = wa;
  }, 16);
  int k = *std::max_element(worst.begin(), worst.end());
  if (k >= INT_MAX / 4) return NormValue::zero_below(c.end());
  return NormValue::pow(k + c.u_min);
}

/// max |f(x) - g(x)| over residues, compared at the precision both certify
inline NormValue sup_distance(const DynamicMap& f, const DynamicMap& g) {
  const Context& c = f.ctx;
  auto a = detail::images(f), b = detail::images(g);
  int prec = std::min(a.prec, b.prec);
  std::uint64_t mod = c.pow(prec);
  int v = prec;
  for (std::uint64_t r = 0; r < c.size(); ++r) v = std::min(v, detail::vdiff(a.m[r] % mod, b.m[r] % mod, c.p, mod, prec));
  if (v == prec) return NormValue::zero_below(prec + c.u_min);
  return NormValue::pow(v + c.u_min);
}

struct ScalingIdentityCheck {
  bool ok = true;
  std::uint64_t pairs = 0;
  std::optional<PairWitness> witness;
  int step = -1;
};

/// |T^n(x) - T^n(y)| = |R^n(x) - R^n(y)| for every residue pair and n <= horizon,
/// compared on the digits both orbits certify.
inline ScalingIdentityCheck check_scaling_identity(const DynamicMap& R, const DynamicMap& T, int horizon) {
  const Context& c = R.ctx;
  const std::uint64_t n = c.size();
  std::vector<std::vector<std::uint64_t>> oR(horizon + 1, std::vector<std::uint64_t>(n)), oT = oR;
  std::vector<int> prec(horizon + 1, c.width());
  for (std::uint64_t r = 0; r < n; ++r) oR[0][r] = oT[0][r] = r;
  for (int t = 1; t <= horizon; ++t) {
    std::vector<int> pr(n);
    parallel_for(n, [&](std::uint64_t r) {
      PAdic a = R(c.element(oR[t - 1][r])), b = T(c.element(oT[t - 1][r]));
      oR[t][r] = a.mantissa();
      oT[t][r] = b.mantissa();
      pr[r] = std::min(a.precision(), b.precision());
    });
    prec[t] = std::min(prec[t - 1], *std::min_element(pr.begin(), pr.end()));
  }
  ScalingIdentityCheck out;
  std::vector<std::uint64_t> bad(n, n);
  std::vector<int> bad_t(n, -1);
  parallel_for(n, [&](std::uint64_t a) {
    for (std::uint64_t b = a + 1; b < n; ++b)
      for (int t = 1; t <= horizon && prec[t] > 0; ++t) {
        std::uint64_t mod = c.pow(prec[t]);
        int vr = detail::vdiff(oR[t][a] % mod, oR[t][b] % mod, c.p, mod, prec[t]);
        int vt = detail::vdiff(oT[t][a] % mod, oT[t][b] % mod, c.p, mod, prec[t]);
        if (vr != vt) {
          bad[a] = b;
          bad_t[a] = t;
          return;
        }
      }
  }, 16);
  out.pairs = n * (n - 1) / 2;
  for (std::uint64_t a = 0; a < n; ++a)
    if (bad[a] < n) {
      out.ok = false;
      out.witness = PairWitness{c.element(a), c.element(bad[a])};
      out.step = bad_t[a];
      break;
    }
  return out;
}

}  // namespace padic
