#pragma once

#include <compare>
#include <ostream>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace padic {

enum class Errc {
  AlphabetViolation,
  WindowViolation,
  ParseError,
  BudgetExceeded,
  UnknownMap,
  BadParams,
  DeltaTooSmall,
  CoveringViolation,
  PrecisionExhausted,
  DeltaTooLarge,
  NonConvergence,
  NotInjective,
  BiLipschitzViolation,
  WindowTooSmall,
  NotProper,
  NotClose,
  NotIsometry,
  NotBijective,
  IsolatedPoint,
  Exhausted,
  DepthInsufficient,
  NoWitnessFound,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::AlphabetViolation: return "AlphabetViolation";
    case Errc::WindowViolation: return "WindowViolation";
    case Errc::ParseError: return "ParseError";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::UnknownMap: return "UnknownMap";
    case Errc::BadParams: return "BadParams";
    case Errc::DeltaTooSmall: return "DeltaTooSmall";
    case Errc::CoveringViolation: return "CoveringViolation";
    case Errc::PrecisionExhausted: return "PrecisionExhausted";
    case Errc::DeltaTooLarge: return "DeltaTooLarge";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::NotInjective: return "NotInjective";
    case Errc::BiLipschitzViolation: return "BiLipschitzViolation";
    case Errc::WindowTooSmall: return "WindowTooSmall";
    case Errc::NotProper: return "NotProper";
    case Errc::NotClose: return "NotClose";
    case Errc::NotIsometry: return "NotIsometry";
    case Errc::NotBijective: return "NotBijective";
    case Errc::IsolatedPoint: return "IsolatedPoint";
    case Errc::Exhausted: return "Exhausted";
    case Errc::DepthInsufficient: return "DepthInsufficient";
    case Errc::NoWitnessFound: return "NoWitnessFound";
  }
  return "?";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::size_t pos = 0)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), pos_(pos) {}
  Errc code() const { return code_; }
  // character offset, only meaningful for ParseError
  std::size_t position() const { return pos_; }

 private:
  Errc code_;
  std::size_t pos_;
};

namespace detail {

inline std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

}  // namespace detail

namespace detail {
inline int max_digits_slow(std::uint32_t p) {
  int n = 0;
  unsigned __int128 v = 1;
  while (v * p < (static_cast<unsigned __int128>(1) << 62)) {
    v *= p;
    ++n;
  }
  return n;
}

// powers p^0..p^max_digits(p) for small primes, built once
struct PowTable {
  int digits[65] = {};
  std::uint64_t pw[65][64] = {};
  PowTable() {
    for (std::uint32_t p = 2; p <= 64; ++p) {
      digits[p] = max_digits_slow(p);
      pw[p][0] = 1;
      for (int e = 1; e <= digits[p]; ++e) pw[p][e] = pw[p][e - 1] * p;
    }
  }
};
inline const PowTable& pow_table() {
  static const PowTable t;
  return t;
}
}  // namespace detail

// Largest n with p^n < 2^62; every mantissa lives below this.
inline int max_digits(std::uint32_t p) { return p <= 64 ? detail::pow_table().digits[p] : detail::max_digits_slow(p); }

/// A value p^-k, or ZERO. For ZERO, k is the exponent of the certified
/// upper bound p^-k (zero to known precision).
struct NormValue {
  bool zero = false;
  int k = 0;

  static NormValue pow(int k) { return {false, k}; }
  static NormValue zero_below(int k) { return {true, k}; }
  static NormValue one() { return {false, 0}; }

  // multiply by p^j
  NormValue scaled(int j) const { return zero ? *this : NormValue{false, k - j}; }
  NormValue times(NormValue o) const {
    if (zero || o.zero) return zero_below((zero ? k : 0) + (o.zero ? o.k : 0));
    return {false, k + o.k};
  }
  // ratio this / o, o nonzero
  NormValue over(NormValue o) const { return zero ? *this : NormValue{false, k - o.k}; }

  friend bool operator==(NormValue a, NormValue b) {
    if (a.zero || b.zero) return a.zero == b.zero;
    return a.k == b.k;
  }
  friend std::strong_ordering operator<=>(NormValue a, NormValue b) {
    if (a.zero || b.zero) return b.zero <=> a.zero;
    return b.k <=> a.k;
  }

  std::string str() const {
    if (zero) return "0";
    if (k == 0) return "1";
    return "p^" + std::to_string(-k);
  }
};

inline std::ostream& operator<<(std::ostream& os, NormValue v) { return os << v.str(); }

inline NormValue max(NormValue a, NormValue b) { return a < b ? b : a; }
inline NormValue min(NormValue a, NormValue b) { return a < b ? a : b; }

// Accepts "0", "1", "p^-3", "p^2".
inline NormValue parse_norm(std::string_view s) {
  if (s == "0") return NormValue::zero_below(0);
  if (s == "1") return NormValue::one();
  if (s.size() < 3 || s[0] != 'p' || s[1] != '^')
    throw Error(Errc::ParseError, "expected p^<int>, got '" + std::string(s) + "'", 0);
  std::string rest(s.substr(2));
  std::size_t used = 0;
  int e = 0;
  try {
    e = std::stoi(rest, &used);
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "bad exponent in '" + std::string(s) + "'", 2);
  }
  if (used != rest.size()) throw Error(Errc::ParseError, "trailing text in '" + std::string(s) + "'", 2 + used);
  return NormValue::pow(-e);
}

/// Truncated p-adic number p^u * m, exact modulo p^(u+n).
/// Digits are little-endian from exponent u; m < p^n.
class PAdic {
 public:
  PAdic() = default;
  PAdic(std::uint32_t p, int u, int n, std::uint64_t m) : p_(p), u_(u), n_(n), m_(0) {
    if (p < 2) throw Error(Errc::BadParams, "prime must be >= 2");
    if (n < 0) n_ = 0;
    if (n_ > max_digits(p)) throw Error(Errc::BudgetExceeded, "precision exceeds 64-bit mantissa");
    m_ = m % (p <= 64 ? detail::pow_table().pw[p][n_] : detail::ipow(p, n_));
  }

  static PAdic from_digits(std::uint32_t p, int u, const std::vector<int>& digits) {
    if (p < 2) throw Error(Errc::BadParams, "prime must be >= 2");
    if (static_cast<int>(digits.size()) > max_digits(p))
      throw Error(Errc::BudgetExceeded, "too many digits");
    std::uint64_t m = 0;
    for (std::size_t i = digits.size(); i-- > 0;) {
      if (digits[i] < 0 || static_cast<std::uint32_t>(digits[i]) >= p)
        throw Error(Errc::AlphabetViolation, "digit " + std::to_string(digits[i]) + " not below " + std::to_string(p));
      m = m * p + static_cast<std::uint64_t>(digits[i]);
    }
    return PAdic(p, u, static_cast<int>(digits.size()), m);
  }

  std::uint32_t prime() const { return p_; }
  int base_exp() const { return u_; }
  int precision() const { return n_; }
  int end() const { return u_ + n_; }
  std::uint64_t mantissa() const { return m_; }
  NormValue known_radius() const { return NormValue::pow(end()); }
  bool is_zero() const { return m_ == 0; }

  std::vector<int> digits() const {
    std::vector<int> d(static_cast<std::size_t>(n_));
    std::uint64_t m = m_;
    for (auto& x : d) {
      x = static_cast<int>(m % p_);
      m /= p_;
    }
    return d;
  }

  // a_e(x); zero below the base exponent
  int digit(int e) const {
    if (e >= end()) throw std::out_of_range("digit beyond known precision");
    if (e < u_) return 0;
    return static_cast<int>((m_ / detail::ipow(p_, e - u_)) % p_);
  }

  // u_p(x), or end() when zero to known precision
  int valuation() const {
    if (m_ == 0) return end();
    int v = u_;
    std::uint64_t m = m_;
    while (m % p_ == 0) {
      m /= p_;
      ++v;
    }
    return v;
  }

  NormValue norm() const { return m_ == 0 ? NormValue::zero_below(end()) : NormValue::pow(valuation()); }

  // exact multiplication by p^j
  PAdic shifted(int j) const { return PAdic(p_, u_ + j, n_, m_); }

  PAdic truncated(int new_end) const {
    if (new_end >= end()) return *this;
    return PAdic(p_, u_, new_end - u_, m_);
  }

  // same value written from exponent new_u; raising u needs the dropped digits to be zero
  PAdic rebased(int new_u) const {
    if (new_u == u_) return *this;
    if (new_u < u_) {
      int d = u_ - new_u;
      int n = std::min(n_ + d, max_digits(p_));
      return PAdic(p_, new_u, n, detail::mulmod(m_, detail::ipow(p_, std::min(d, n)), detail::ipow(p_, n)));
    }
    int d = new_u - u_;
    if (d >= n_) {
      if (m_ != 0) throw Error(Errc::WindowViolation, "nonzero digits below new base exponent");
      return PAdic(p_, new_u, 0, 0);
    }
    std::uint64_t q = detail::ipow(p_, d);
    if (m_ % q != 0) throw Error(Errc::WindowViolation, "nonzero digits below new base exponent");
    return PAdic(p_, new_u, n_ - d, m_ / q);
  }

  friend bool operator==(const PAdic&, const PAdic&) = default;

 private:
  std::uint32_t p_ = 2;
  int u_ = 0;
  int n_ = 0;
  std::uint64_t m_ = 0;
};

namespace detail {
inline void same_prime(const PAdic& x, const PAdic& y) {
  if (x.prime() != y.prime()) throw Error(Errc::BadParams, "mixed primes");
}
}  // namespace detail

inline PAdic add(const PAdic& x, const PAdic& y) {
  detail::same_prime(x, y);
  std::uint32_t p = x.prime();
  int u = std::min(x.base_exp(), y.base_exp());
  int e = std::min(x.end(), y.end());
  int n = e - u;
  std::uint64_t mod = detail::ipow(p, n);
  auto lift = [&](const PAdic& a) -> std::uint64_t {
    int d = a.base_exp() - u;
    if (d >= n) return 0;
    return detail::mulmod(a.mantissa() % mod, detail::ipow(p, d), mod);
  };
  std::uint64_t a = lift(x), b = lift(y);
  return PAdic(p, u, n, (a + b) % mod);
}

inline PAdic neg(const PAdic& x) {
  std::uint64_t mod = detail::ipow(x.prime(), x.precision());
  return PAdic(x.prime(), x.base_exp(), x.precision(), (mod - x.mantissa()) % mod);
}

inline PAdic sub(const PAdic& x, const PAdic& y) { return add(x, neg(y)); }

inline PAdic mul(const PAdic& x, const PAdic& y) {
  detail::same_prime(x, y);
  std::uint32_t p = x.prime();
  auto rel_val = [&](const PAdic& a) { return a.is_zero() ? a.precision() : a.valuation() - a.base_exp(); };
  int n = std::min(x.precision() + rel_val(y), y.precision() + rel_val(x));
  n = std::min(n, max_digits(p));
  std::uint64_t mod = detail::ipow(p, n);
  return PAdic(p, x.base_exp() + y.base_exp(), n, detail::mulmod(x.mantissa() % mod, y.mantissa() % mod, mod));
}

inline PAdic operator+(const PAdic& x, const PAdic& y) { return add(x, y); }
inline PAdic operator-(const PAdic& x, const PAdic& y) { return sub(x, y); }
inline PAdic operator-(const PAdic& x) { return neg(x); }
inline PAdic operator*(const PAdic& x, const PAdic& y) { return mul(x, y); }

inline NormValue dist(const PAdic& x, const PAdic& y) { return sub(x, y).norm(); }

/// (floor, frac): digits at exponents >= 0 and < 0 respectively.
inline std::pair<PAdic, PAdic> int_frac_split(const PAdic& x) {
  std::uint32_t p = x.prime();
  int low = std::clamp(-x.base_exp(), 0, x.precision());
  std::uint64_t q = detail::ipow(p, low);
  PAdic frac(p, x.base_exp(), x.precision(), x.mantissa() % q);
  PAdic whole(p, x.base_exp() + low, x.precision() - low, x.mantissa() / q);
  return {whole, frac};
}

enum class Space { Zp, Qp };

/// Finite model: residues of p^u_min Z_p modulo p^end().
struct Context {
  std::uint32_t p = 2;
  int budget = 8;
  int u_min = 0;
  int u_max = 0;
  Space space = Space::Zp;

  static Context zp(std::uint32_t p, int n) { return make(p, n, 0, 0, Space::Zp); }
  static Context qp(std::uint32_t p, int n, int u_min, int u_max = 0) { return make(p, n, u_min, u_max, Space::Qp); }

  static Context make(std::uint32_t p, int n, int u_min, int u_max, Space s) {
    if (p < 2) throw Error(Errc::BadParams, "prime must be >= 2");
    for (std::uint32_t d = 2; d * d <= p; ++d)
      if (p % d == 0) throw Error(Errc::BadParams, std::to_string(p) + " is not prime");
    if (n < 1) throw Error(Errc::BadParams, "digit budget must be >= 1");
    if (u_min > u_max) throw Error(Errc::BadParams, "empty exponent window");
    Context c{p, n, u_min, u_max, s};
    if (c.width() > max_digits(p)) throw Error(Errc::BudgetExceeded, "window wider than 64-bit mantissa");
    return c;
  }

  int end() const { return u_max + budget; }
  int width() const { return end() - u_min; }
  std::uint64_t size() const { return detail::ipow(p, width()); }
  std::uint64_t pow(int k) const {
    return p <= 64 && k >= 0 && k <= max_digits(p) ? detail::pow_table().pw[p][k] : detail::ipow(p, k);
  }
  NormValue resolution() const { return NormValue::pow(end()); }

  PAdic element(std::uint64_t r) const { return PAdic(p, u_min, width(), r); }
  PAdic zero() const { return element(0); }
  PAdic integer(std::int64_t v) const {
    std::uint64_t mod = detail::ipow(p, end());
    std::uint64_t r = v >= 0 ? static_cast<std::uint64_t>(v) % mod
                             : (mod - static_cast<std::uint64_t>(-(v + 1)) % mod - 1) % mod;
    return admit(PAdic(p, 0, end(), r));
  }

  // rebase to u_min and clip to end(); rejects digits below the window
  PAdic admit(const PAdic& x) const {
    if (x.prime() != p) throw Error(Errc::BadParams, "prime mismatch");
    PAdic y = x.truncated(end());
    if (y.base_exp() < u_min) {
      try {
        y = y.rebased(u_min);
      } catch (const Error&) {
        throw Error(Errc::WindowViolation, "value has digits below exponent " + std::to_string(u_min));
      }
    }
    if (y.base_exp() > u_min) y = y.rebased(u_min);
    return y;
  }

  // residue index; unknown high digits read as zero
  std::uint64_t index(const PAdic& x) const { return admit(x).mantissa(); }

  // full-width residue with unknown high digits set to zero
  PAdic lift(const PAdic& x) const { return element(index(x)); }
};

/// make_padic: validated construction inside a context.
inline PAdic make_padic(const Context& ctx, int u, const std::vector<int>& digits) {
  if (u < ctx.u_min || u > ctx.u_max)
    throw Error(Errc::WindowViolation, "base exponent " + std::to_string(u) + " outside window");
  for (int d : digits)
    if (d < 0 || static_cast<std::uint32_t>(d) >= ctx.p)
      throw Error(Errc::AlphabetViolation, "digit " + std::to_string(d) + " not below " + std::to_string(ctx.p));
  std::vector<int> kept(digits.begin(), digits.begin() + std::min<std::ptrdiff_t>(digits.size(), ctx.end() - u));
  return PAdic::from_digits(ctx.p, u, kept);
}

/// All residues of B(center, p^-k) at context resolution, each once.
inline std::vector<PAdic> enumerate_ball(const Context& ctx, const PAdic& center, NormValue radius,
                                         std::uint64_t max_count = 1u << 24) {
  int k = radius.zero ? ctx.end() : std::min(radius.k, ctx.end());
  if (k < ctx.u_min) throw Error(Errc::WindowViolation, "ball larger than the exponent window");
  int free_digits = ctx.end() - k;
  if (free_digits > 40 || ctx.pow(free_digits) > max_count)
    throw Error(Errc::BudgetExceeded, "ball has more than " + std::to_string(max_count) + " residues");
  std::uint64_t step = ctx.pow(k - ctx.u_min);
  std::uint64_t base = ctx.index(center) % step;
  std::uint64_t count = ctx.pow(free_digits);
  std::vector<PAdic> out;
  out.reserve(count);
  for (std::uint64_t j = 0; j < count; ++j) out.push_back(ctx.element(base + j * step));
  return out;
}

/// Canonical text "p:<prime>;u:<base_exp>;d:<d0,d1,...>".
inline std::string format(const PAdic& x) {
  std::string s = "p:" + std::to_string(x.prime()) + ";u:" + std::to_string(x.base_exp()) + ";d:";
  auto d = x.digits();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(d[i]);
  }
  return s;
}

inline PAdic parse(std::string_view t) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> Error { return Error(Errc::ParseError, msg + " at " + std::to_string(pos), pos); };
  auto expect = [&](std::string_view lit) {
    if (t.substr(pos, lit.size()) != lit) throw fail("expected '" + std::string(lit) + "'");
    pos += lit.size();
  };
  auto integer = [&](bool allow_sign) -> long long {
    std::size_t start = pos;
    bool negv = false;
    if (allow_sign && pos < t.size() && t[pos] == '-') {
      negv = true;
      ++pos;
    }
    if (pos >= t.size() || t[pos] < '0' || t[pos] > '9') {
      pos = start;
      throw fail("expected integer");
    }
    long long v = 0;
    while (pos < t.size() && t[pos] >= '0' && t[pos] <= '9') {
      v = v * 10 + (t[pos] - '0');
      if (v > (1LL << 40)) throw fail("integer too large");
      ++pos;
    }
    return negv ? -v : v;
  };
  expect("p:");
  long long p = integer(false);
  if (p < 2) throw fail("prime must be >= 2");
  expect(";u:");
  long long u = integer(true);
  expect(";d:");
  std::vector<int> digits;
  if (pos < t.size()) {
    while (true) {
      std::size_t at = pos;
      long long d = integer(false);
      if (d >= p) {
        pos = at;
        throw fail("digit " + std::to_string(d) + " not below " + std::to_string(p));
      }
      digits.push_back(static_cast<int>(d));
      if (pos == t.size()) break;
      expect(",");
    }
  }
  if (static_cast<int>(digits.size()) > max_digits(static_cast<std::uint32_t>(p))) throw fail("too many digits");
  return PAdic::from_digits(static_cast<std::uint32_t>(p), static_cast<int>(u), digits);
}

}  // namespace padic
