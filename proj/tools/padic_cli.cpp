// padic-cli: shadowing, conjugacy, analysis and counterexample experiments
// with JSON reports. Exit 0 when every asserted invariant holds, 1 when one
// fails (the report is still written), 2 on configuration errors.
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "padic/suite.hpp"

using namespace padic;
using nlohmann::json;

namespace {

constexpr const char* kSchema = "padic-report/1";

// configuration problem: exit 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out = "-";
  int workers = 0;
};

struct Invariants {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;  // name -> (checked, failed)
  void check(const std::string& name, bool ok) {
    auto& c = counts[name];
    ++c.first;
    c.second += !ok;
  }
  bool pass() const {
    return std::all_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second.second == 0; });
  }
  json summary() const {
    json s = json::object();
    for (const auto& [k, v] : counts) s[k] = {{"checked", v.first}, {"failed", v.second}, {"pass", v.second == 0}};
    return {{"invariants", s}, {"pass", pass()}};
  }
};

NormValue norm_arg(const std::string& s, const char* flag) {
  try {
    return parse_norm(s);
  } catch (const Error& e) {
    throw ConfigError(std::string(flag) + ": " + e.what() + "\n  " + s + "\n  " + std::string(e.position(), ' ') + "^");
  }
}

Context make_ctx(std::uint32_t p, int n, int u_min) {
  try {
    return u_min < 0 ? Context::qp(p, n, u_min) : Context::zp(p, n);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

DynamicMap map_arg(const std::string& spec, const Context& ctx) {
  try {
    return map_from_spec(spec, ctx);
  } catch (const Error& e) {
    std::string msg = std::string("--map: ") + e.what();
    if (e.code() == Errc::ParseError) msg += "\n  " + spec + "\n  " + std::string(e.position(), ' ') + "^";
    throw ConfigError(msg);
  }
}

// Options of the config file that were not given on the command line are
// appended as flags, so the command line wins.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") path = args[i + 1];
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("--config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("--config: expected a JSON object");
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  for (const auto& [k, v] : j.items()) {
    if (k == "subcommand" || given.count(k)) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + k);
    } else {
      args.push_back("--" + k);
      args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  if (j.contains("subcommand") && (args.empty() || args[0].rfind("--", 0) == 0))
    args.insert(args.begin(), j["subcommand"].get<std::string>());
  return args;
}

json norm_json(NormValue v) { return v.str(); }

// shadow -------------------------------------------------------------------

struct ShadowCfg {
  std::string map = "shift_zp";
  std::uint32_t p = 3;
  int n = 12;
  std::string delta = "p^-3";
  int length = 50;
  int seeds = 200;
  std::uint64_t seed = 0;
  std::string oracle = "off";
  int oracle_seeds = 10;
  int oracle_length = 6;
};

json run_shadow(const ShadowCfg& c, Invariants& inv) {
  auto ctx = make_ctx(c.p, c.n, 0);
  auto f = map_arg(c.map, ctx);
  NormValue delta = norm_arg(c.delta, "--delta");
  if (f.tag != "shift_zp") throw ConfigError("--map: right inverses are built in only for shift_zp");
  auto fam = shift_right_inverses(ctx);
  json cases = json::array();
  for (int i = 0; i < c.seeds; ++i) {
    std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
    PseudoOrbit orb;
    try {
      orb = random_pseudo_orbit(f, delta, c.length, seed, ctx);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    auto res = solve_shadowing(f, fam, orb);
    bool bound_ok = res.achieved_bound <= delta.scaled(1);
    inv.check("bound_le_delta_over_p", bound_ok);
    inv.check("steps_verified", res.steps_verified);
    json rec = {{"seed", seed},
                {"achieved_bound", norm_json(res.achieved_bound)},
                {"bound_ok", bound_ok},
                {"steps_verified", res.steps_verified},
                {"forward_verified", res.forward_verified},
                {"start_point", format(res.start_point)}};
    if (c.oracle == "on" && i < c.oracle_seeds) {
      int L = std::min(c.length, c.oracle_length);
      PseudoOrbit pre = orb;
      pre.points.resize(static_cast<std::size_t>(L) + 1);
      auto sub_res = solve_shadowing(f, fam, pre);
      auto bf = brute_force_shadow(f, pre, ctx);
      bool ok = bf.best_error <= sub_res.achieved_bound;
      inv.check("oracle_le_solver", ok);
      rec["oracle"] = {{"prefix_length", L},
                       {"best_error", norm_json(bf.best_error)},
                       {"solver_bound", norm_json(sub_res.achieved_bound)},
                       {"ok", ok}};
    }
    cases.push_back(rec);
  }
  return cases;
}

// conjugate ----------------------------------------------------------------

struct ConjCfg {
  std::string map = "shift_zp";
  std::uint32_t p = 3;
  int n = 8;
  int u_min = 0;
  std::string delta = "p^-2";
  std::string perturbation = "digit_local";
  int seeds = 5;
  std::uint64_t seed = 0;
  int depth = 6;
  std::string mode = "auto";
};

json run_conjugate(const ConjCfg& c, Invariants& inv) {
  auto ctx = make_ctx(c.p, c.n, c.u_min);
  auto f = map_arg(c.map, ctx);
  NormValue delta = norm_arg(c.delta, "--delta");
  std::string mode = c.mode == "auto" ? (f.tag == "shift_zp" ? "thm1" : "contraction") : c.mode;
  if (mode != "thm1" && mode != "contraction") throw ConfigError("--mode: expected auto, thm1 or contraction");
  if (mode == "thm1" && f.tag != "shift_zp") throw ConfigError("--mode thm1: right inverses are built in only for shift_zp");
  json cases = json::array();
  for (int i = 0; i < c.seeds; ++i) {
    std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
    json rec = {{"seed", seed}, {"mode", mode}};
    try {
      auto phi = make_lipschitz_perturbation(ctx, delta, c.perturbation, seed);
      auto g = perturb(f, phi);
      if (mode == "thm1") {
        auto fam = shift_right_inverses(ctx);
        auto h = build_conjugacy_thm1(f, fam, g, c.depth);
        auto rep = verify_conjugacy(f, g, h);
        auto ht = build_inverse_conjugacy_thm1(f, g, transfer_family(f, fam, phi).family, c.depth);
        bool inv_ok = composition_defect(ht, h).zero;
        inv.check("zero_defect", rep.zero_defect());
        inv.check("closeness_le_delta_over_p", h.closeness <= delta.scaled(1));
        inv.check("inverse_composes_to_id", inv_ok);
        rec.update({{"certified_digits", h.certified},
                    {"compared_digits", rep.precision},
                    {"max_defect", norm_json(rep.max_defect)},
                    {"closeness", norm_json(h.closeness)},
                    {"inverse_ok", inv_ok}});
      } else {
        auto res = build_conjugacy_thm3(f, phi);
        auto rep = verify_conjugacy(f, g, res.h);
        bool bij = is_bijection(res.h);
        inv.check("zero_defect", rep.zero_defect());
        inv.check("bijective", bij);
        inv.check("closeness_le_delta", res.h.closeness <= delta);
        if (res.fixed_T && res.fixed_R) {
          bool fx = res.h(*res.fixed_T) == ctx.admit(*res.fixed_R);
          inv.check("fixed_points_match", fx);
          rec["fixed_T"] = format(*res.fixed_T);
          rec["fixed_R"] = format(*res.fixed_R);
        }
        rec.update({{"compared_digits", rep.precision},
                    {"max_defect", norm_json(rep.max_defect)},
                    {"closeness", norm_json(res.h.closeness)},
                    {"bijective", bij},
                    {"layers", res.partition.layers.size()},
                    {"core_size", res.partition.core.size()}});
      }
    } catch (const Error& e) {
      // precondition failures of the inputs are configuration errors
      switch (e.code()) {
        case Errc::DeltaTooLarge:
        case Errc::DeltaTooSmall:
        case Errc::BadParams:
        case Errc::BiLipschitzViolation:
        case Errc::NotInjective:
        case Errc::PrecisionExhausted:
          throw ConfigError(e.what());
        default:
          inv.check("construction_succeeds", false);
          rec["error"] = e.what();
      }
    }
    cases.push_back(rec);
  }
  return cases;
}

// analyze ------------------------------------------------------------------

struct AnalyzeCfg {
  std::string map = "example2_R";
  std::uint32_t p = 2;
  int n = 8;
  int u_min = 0;
  int horizon = 0;
  std::uint64_t seed = 1;
};

json run_analyze(const AnalyzeCfg& c, Invariants& inv) {
  auto ctx = make_ctx(c.p, c.n, c.u_min);
  auto f = map_arg(c.map, ctx);
  json rec = {{"map", f.tag}, {"declared_lip_upper", norm_json(f.lip_upper)}, {"loss", f.loss}};
  auto lip = estimate_lipschitz(f, 1ull << 28, c.seed);
  rec["lipschitz"] = {{"c1_lower", lip.c1_lower ? json(lip.c1_lower->str()) : json(nullptr)},
                      {"c2_upper", lip.c2_upper ? json(lip.c2_upper->str()) : json(nullptr)},
                      {"exhaustive", lip.exhaustive},
                      {"pairs", lip.pairs},
                      {"unresolved", lip.unresolved}};
  inv.check("estimate_within_declared_lipschitz", !lip.c2_upper || *lip.c2_upper <= f.lip_upper);
  auto injc = check_injective(f);
  rec["injective"] = injc.injective;
  rec["injectivity_digits"] = injc.precision;
  if (injc.collision) rec["collision"] = {format(injc.collision->x), format(injc.collision->y)};
  auto rho = image_openness(f);
  rec["openness_rho"] = rho ? json(rho->str()) : json(nullptr);
  auto prof = scaling_profile(f);
  json kappa = json::object();
  for (const auto& [k, v] : prof.kappa) kappa["p^" + std::to_string(-k)] = v.str();
  rec["scaling_profile"] = {{"consistent", prof.consistent}, {"kappa", kappa}};
  if (c.horizon > 0) rec["expansivity"] = expansivity_constant(f, c.horizon).str();
  return json::array({rec});
}

// counterexample -----------------------------------------------------------

struct CounterCfg {
  std::uint32_t p = 3;
  int depth = 10;
  int n = 10;
  std::string delta = "p^-6";
  std::string epsilon = "p^-2";
};

json run_counterexample(const CounterCfg& c, Invariants& inv) {
  NormValue delta = norm_arg(c.delta, "--delta"), eps = norm_arg(c.epsilon, "--epsilon");
  auto ctx = make_ctx(c.p, c.n, 0);
  EvenShiftSystem sys, ctl;
  try {
    auto even = build_even_subshift(c.p, std::max(c.depth + 2, 4));
    sys = build_thm2_map(even, build_cantor_chart(even, c.depth), ctx);
    auto full = build_full_shift(c.p, 4);
    ctl = build_thm2_map(full, build_cantor_chart(full, c.depth), ctx);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  json rec = json::object();
  try {
    auto w = demonstrate_non_shadowing(sys, delta, eps);
    const auto& a = w.witness;
    json pts = json::array();
    for (const auto& x : a.lifted.points) pts.push_back(format(x));
    rec["witness"] = {{"k", a.k},
                      {"lifted_orbit", pts},
                      {"best_error_f", a.best_error_f.str()},
                      {"best_error_s", a.best_error.str()},
                      {"best_point", format(a.best_point)}};
    inv.check("witness_error_gt_epsilon", a.best_error > eps);
    auto cs = splice_attempt(ctl, delta, a.k);
    rec["control"] = {{"k", a.k}, {"pseudo_orbit", cs.pseudo_ok}, {"best_error_s", cs.best_error.str()}};
    inv.check("control_shadows", cs.pseudo_ok && cs.best_error <= eps);
  } catch (const Error& e) {
    if (e.code() != Errc::NoWitnessFound) throw;
    rec["witness"] = nullptr;
    rec["error"] = e.what();
    inv.check("witness_error_gt_epsilon", false);
  }
  bool ri = true;
  for (auto& R : sys.family.members)
    for (std::uint64_t x = 0; x < ctx.size() && ri; ++x) {
      PAdic y = ctx.admit(sys.f.eval(R.eval(ctx.element(x))));
      ri = y.precision() == ctx.width() && y.mantissa() == x;
    }
  inv.check("right_inverse_exact", ri);
  std::vector<char> hit(ctx.size(), 0);
  for (auto& R : sys.family.members)
    for (std::uint64_t x = 0; x < ctx.size(); ++x) hit[ctx.index(R.at(x))] = 1;
  auto covered = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
  inv.check("family_not_covering", covered == (c.p - 1) * ctx.pow(c.n - 2) && covered < ctx.size());
  rec["covered_residues"] = covered;
  rec["total_residues"] = ctx.size();
  return json::array({rec});
}

// suite --------------------------------------------------------------------

json run_suite_cmd(bool quick, Invariants& inv, json& timing) {
  json cases = json::array();
  for (const auto& cr : run_suite({quick})) {
    inv.check(cr.name, cr.pass);
    timing[cr.name + "_ms"] = cr.millis;
    cases.push_back({{"id", cr.id},
                     {"name", cr.name},
                     {"invariant", cr.invariant},
                     {"pass", cr.pass},
                     {"cases", cr.cases},
                     {"failures", cr.failures},
                     {"detail", cr.detail}});
  }
  return cases;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-adic shadowing and stability experiments"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Common common;
  ShadowCfg sh;
  ConjCfg cj;
  AnalyzeCfg an;
  CounterCfg ce;
  bool quick = false;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", common.config, "JSON file whose keys mirror the long flags");
    s->add_option("--out", common.out, "report path, - for stdout");
    s->add_option("--workers", common.workers, "worker threads (overrides PADIC_WORKERS)");
  };
  auto* s_sh = app.add_subcommand("shadow", "solve shadowing for seeded pseudo-orbits");
  add_common(s_sh);
  s_sh->add_option("--map", sh.map);
  s_sh->add_option("--p", sh.p);
  s_sh->add_option("--n", sh.n, "digit budget");
  s_sh->add_option("--delta", sh.delta, "pseudo-orbit size as p^-k");
  s_sh->add_option("--length", sh.length);
  s_sh->add_option("--seeds", sh.seeds);
  s_sh->add_option("--seed", sh.seed, "first seed");
  s_sh->add_option("--oracle", sh.oracle)->check(CLI::IsMember({"on", "off"}));
  s_sh->add_option("--oracle-seeds", sh.oracle_seeds);
  s_sh->add_option("--oracle-length", sh.oracle_length);

  auto* s_cj = app.add_subcommand("conjugate", "build and verify conjugacies to perturbed maps");
  add_common(s_cj);
  s_cj->add_option("--map", cj.map);
  s_cj->add_option("--p", cj.p);
  s_cj->add_option("--n", cj.n);
  s_cj->add_option("--u-min", cj.u_min, "lowest exponent; negative selects Q_p");
  s_cj->add_option("--delta", cj.delta);
  s_cj->add_option("--perturbation", cj.perturbation)->check(CLI::IsMember({"digit_local", "constant"}));
  s_cj->add_option("--seeds", cj.seeds);
  s_cj->add_option("--seed", cj.seed);
  s_cj->add_option("--depth", cj.depth, "backward depth for right-invertible maps");
  s_cj->add_option("--mode", cj.mode, "auto, thm1 (right-invertible) or contraction");

  auto* s_an = app.add_subcommand("analyze", "Lipschitz, injectivity, openness and scaling scans");
  add_common(s_an);
  s_an->add_option("--map", an.map);
  s_an->add_option("--p", an.p);
  s_an->add_option("--n", an.n);
  s_an->add_option("--u-min", an.u_min);
  s_an->add_option("--horizon", an.horizon, "expansivity horizon, 0 skips");
  s_an->add_option("--seed", an.seed, "sampling seed when the pair scan is over budget");

  auto* s_ce = app.add_subcommand("counterexample", "even-shift map: non-shadowing witness and full-shift control");
  add_common(s_ce);
  s_ce->add_option("--p", ce.p);
  s_ce->add_option("--depth", ce.depth, "chart depth");
  s_ce->add_option("--n", ce.n);
  s_ce->add_option("--delta", ce.delta);
  s_ce->add_option("--epsilon", ce.epsilon);

  auto* s_su = app.add_subcommand("suite", "the acceptance battery");
  add_common(s_su);
  s_su->add_flag("--quick", quick, "p in {2,3}, N <= 8, fewer seeds");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = merge_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (common.workers > 0) setenv("PADIC_WORKERS", std::to_string(common.workers).c_str(), 1);

  CLI::App* sub = app.get_subcommands().front();
  json cfg = json::object();
  for (const auto* opt : sub->get_options()) {
    std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "config" || name == "out" || name == "workers") continue;
    if (opt->get_type_size() == 0) cfg[name] = opt->count() > 0;
    else cfg[name] = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
  }

  Invariants inv;
  json timing = json::object();
  json cases;
  auto t0 = std::chrono::steady_clock::now();
  try {
    const std::string n = sub->get_name();
    if (n == "shadow") cases = run_shadow(sh, inv);
    else if (n == "conjugate") cases = run_conjugate(cj, inv);
    else if (n == "analyze") cases = run_analyze(an, inv);
    else if (n == "counterexample") cases = run_counterexample(ce, inv);
    else cases = run_suite_cmd(quick, inv, timing);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  timing["total_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();

  json report = {{"schema", kSchema},
                 {"subcommand", sub->get_name()},
                 {"config", cfg},
                 {"cases", cases},
                 {"summary", inv.summary()},
                 {"timing", timing}};
  std::string text = report.dump(2) + "\n";
  if (common.out == "-") {
    std::cout << text;
  } else {
    std::ofstream o(common.out);
    if (!o) {
      std::cerr << "error: cannot write '" << common.out << "'\n";
      return 2;
    }
    o << text;
  }
  return inv.pass() ? 0 : 1;
}
