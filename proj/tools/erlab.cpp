// erlab: command-line front end. Every run prints one JSON document holding
// the effective run configuration and the result.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "erlab/erlab.hpp"

namespace {

using erlab::json;

constexpr int kOk = 0, kUsage = 2, kInconclusive = 3, kNumerical = 4;
constexpr int kSchema = 1;

/// Everything a run depends on. Loaded from --config, then overridden by flags.
struct RunConfig {
  std::string command;
  std::string function;
  std::vector<std::string> vars;
  std::vector<double> box;
  std::string theorem;
  std::vector<std::string> params;  // key=value, values exact ("1/6", "0.5")
  std::vector<double> base;
  double theta = 1;
  std::vector<std::string> inputs;  // fractal specs
  std::string ladder;
  double slack = 0.05;
  std::optional<double> delta_min;
  std::vector<double> range;
  double tolerance = 1e-6;
  double det_tol = 1e-9;
  int nodes = 257;
  int grid = 0;
  std::vector<std::string> psi;
  std::vector<std::string> params_u;
  std::vector<double> point;
  std::vector<double> at;
  std::string output;
  std::string csv;
  std::string components;
  std::string points_out;
  std::string ladder_csv;
  std::uint64_t seed = 0;
  unsigned threads = erlab::default_threads();
  bool no_timestamp = false;
};

// JSON keys match the long flag names.
json config_json(const RunConfig& c) {
  json j;
  j["schema"] = kSchema;
  j["command"] = c.command;
  auto put = [&](const char* k, const auto& v, bool present) {
    if (present) j[k] = v;
  };
  put("function", c.function, !c.function.empty());
  put("vars", c.vars, !c.vars.empty());
  put("box", c.box, !c.box.empty());
  put("theorem", c.theorem, !c.theorem.empty());
  put("param", c.params, !c.params.empty());
  put("base", c.base, !c.base.empty());
  put("theta", c.theta, c.command == "fold");
  put("input", c.inputs, !c.inputs.empty());
  put("ladder", c.ladder, !c.ladder.empty());
  put("slack", c.slack, c.command == "expand");
  if (c.delta_min) j["delta-min"] = *c.delta_min;
  put("range", c.range, !c.range.empty());
  put("tolerance", c.tolerance, c.command == "recover" || c.command == "verify-recovery");
  put("nodes", c.nodes, c.command == "recover");
  put("grid", c.grid, c.grid > 0);
  put("det-tol", c.det_tol, c.command == "surface-distance");
  put("psi", c.psi, !c.psi.empty());
  put("surface-params", c.params_u, !c.params_u.empty());
  put("point", c.point, !c.point.empty());
  put("at", c.at, !c.at.empty());
  put("output", c.output, !c.output.empty());
  put("csv", c.csv, !c.csv.empty());
  put("components", c.components, !c.components.empty());
  put("points-out", c.points_out, !c.points_out.empty());
  put("ladder-csv", c.ladder_csv, !c.ladder_csv.empty());
  j["seed"] = c.seed;
  return j;
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw erlab::PreconditionError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw erlab::ParseError(std::string("config ") + path + ": " + e.what(), 0);
  }
  if (j.value("schema", kSchema) != kSchema) throw erlab::PreconditionError("unsupported config schema");
  RunConfig c;
  try {
    take(j, "command", c.command);
    take(j, "function", c.function);
    take(j, "vars", c.vars);
    take(j, "box", c.box);
    take(j, "theorem", c.theorem);
    take(j, "param", c.params);
    take(j, "base", c.base);
    take(j, "theta", c.theta);
    take(j, "input", c.inputs);
    take(j, "ladder", c.ladder);
    take(j, "slack", c.slack);
    if (j.contains("delta-min")) c.delta_min = j.at("delta-min").get<double>();
    take(j, "range", c.range);
    take(j, "tolerance", c.tolerance);
    take(j, "nodes", c.nodes);
    take(j, "grid", c.grid);
    take(j, "det-tol", c.det_tol);
    take(j, "psi", c.psi);
    take(j, "surface-params", c.params_u);
    take(j, "point", c.point);
    take(j, "at", c.at);
    take(j, "output", c.output);
    take(j, "csv", c.csv);
    take(j, "components", c.components);
    take(j, "points-out", c.points_out);
    take(j, "ladder-csv", c.ladder_csv);
    take(j, "seed", c.seed);
    take(j, "threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw erlab::ParseError(std::string("config ") + path + ": " + e.what(), 0);
  }
  return c;
}

// ---- argument helpers ----

erlab::Rational exact_value(const std::string& text) {
  erlab::Expr e = erlab::simplify(erlab::parse(text));
  if (!e.is_const() || !e.value().exact()) {
    throw erlab::PreconditionError("'" + text + "' is not an exact rational constant");
  }
  return e.value().rational();
}

std::map<std::string, erlab::Rational> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, erlab::Rational> out;
  for (const auto& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw erlab::PreconditionError("parameter '" + s + "' is not key=value");
    out[s.substr(0, eq)] = exact_value(s.substr(eq + 1));
  }
  return out;
}

erlab::Box make_box(const RunConfig& c, std::size_t arity, double lo = 0.5, double hi = 1.5) {
  if (c.box.empty()) return erlab::Box(arity, erlab::Interval{lo, hi});
  if (c.box.size() == 2) return erlab::Box(arity, erlab::Interval{c.box[0], c.box[1]});
  if (c.box.size() != 2 * arity) {
    throw erlab::PreconditionError("--box needs 2 or " + std::to_string(2 * arity) + " numbers");
  }
  erlab::Box b;
  for (std::size_t i = 0; i < arity; ++i) b.push_back({c.box[2 * i], c.box[2 * i + 1]});
  return b;
}

std::vector<std::string> default_vars(const RunConfig& c) {
  if (!c.vars.empty()) return c.vars;
  // Variables in the canonical order x, y, z.
  auto used = erlab::variables(erlab::parse(c.function));
  std::vector<std::string> out;
  for (const char* v : {"x", "y", "z"}) {
    if (std::find(used.begin(), used.end(), v) != used.end()) out.push_back(v);
  }
  if (out.size() != used.size()) throw erlab::PreconditionError("--vars is required for variables other than x, y, z");
  return out;
}

erlab::FunctionSpec function_spec(const RunConfig& c) {
  if (c.function.empty()) throw erlab::PreconditionError("missing -f/--function");
  auto vars = default_vars(c);
  erlab::FunctionSpec f{erlab::parse(c.function), vars, make_box(c, vars.size())};
  f.validate();
  return f;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

// Exact forms like 1/3 or 2^-10, else a plain decimal such as 1e-3.
double number(const std::string& s) {
  try {
    return exact_value(s).to_double();
  } catch (const erlab::Error&) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw erlab::PreconditionError("'" + s + "' is not a number");
    return v;
  }
}

// Fractal input grammar:
//   b<base>d<digits>:<n>             digit set, e.g. b4d01:12
//   mt:<n>                           middle thirds
//   cantor:m=2,r=1/3,n=10[,rule=mid] equal-gap self-similar set
//   file:<path>                      binary point set
// A trailing @lo,hi maps the set onto [lo, hi].
erlab::PointSet1D fractal_input(std::string spec, unsigned threads) {
  double lo = 0, hi = 1;
  if (auto at = spec.find('@'); at != std::string::npos) {
    auto iv = split(spec.substr(at + 1), ',');
    if (iv.size() != 2) throw erlab::PreconditionError("interval suffix must be @lo,hi");
    lo = number(iv[0]);
    hi = number(iv[1]);
    spec = spec.substr(0, at);
  }
  if (spec.rfind("file:", 0) == 0) return erlab::load_point_set(spec.substr(5));
  if (spec.rfind("mt:", 0) == 0) {
    erlab::CantorSpec s;
    s.n = std::stoi(spec.substr(3));
    s.lo = lo;
    s.hi = hi;
    return erlab::cantor_points(s, threads);
  }
  if (spec.rfind("cantor:", 0) == 0) {
    erlab::CantorSpec s;
    s.lo = lo;
    s.hi = hi;
    for (const auto& kv : split(spec.substr(7), ',')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw erlab::PreconditionError("cantor field '" + kv + "' is not key=value");
      std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "m") {
        s.m = std::stoi(v);
      } else if (k == "r") {
        s.r = number(v);
      } else if (k == "dim") {
        s.r = erlab::ratio_for_dimension(number(v), s.m);
      } else if (k == "n") {
        s.n = std::stoi(v);
      } else if (k == "rule") {
        if (v != "left" && v != "mid") throw erlab::PreconditionError("rule must be left or mid");
        s.rule = v == "mid" ? erlab::Representative::Midpoint : erlab::Representative::Left;
      } else {
        throw erlab::PreconditionError("unknown cantor field '" + k + "'");
      }
    }
    return erlab::cantor_points(s, threads);
  }
  if (spec.size() > 1 && spec[0] == 'b') {
    auto d = spec.find('d'), colon = spec.find(':');
    if (d != std::string::npos && colon != std::string::npos && d < colon) {
      erlab::DigitSpec s;
      s.base = std::stoi(spec.substr(1, d - 1));
      s.digits.clear();
      for (char ch : spec.substr(d + 1, colon - d - 1)) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) throw erlab::PreconditionError("digits must be 0-9");
        s.digits.push_back(ch - '0');
      }
      s.n = std::stoi(spec.substr(colon + 1));
      s.lo = lo;
      s.hi = hi;
      return erlab::digit_points(s, threads);
    }
  }
  throw erlab::PreconditionError("unrecognized fractal spec '" + spec + "'");
}

// Ladder grammar: "b^-k0..b^-k1" (delta = b^-k), or a comma list of deltas.
std::vector<double> parse_ladder(const std::string& s) {
  if (auto dots = s.find(".."); dots != std::string::npos) {
    auto lhs = s.substr(0, dots), rhs = s.substr(dots + 2);
    auto c1 = lhs.find("^-"), c2 = rhs.find("^-");
    if (c1 == std::string::npos || c2 == std::string::npos || lhs.substr(0, c1) != rhs.substr(0, c2)) {
      throw erlab::PreconditionError("ladder range must look like 2^-6..2^-20");
    }
    double b = number(lhs.substr(0, c1));
    int k0 = std::stoi(lhs.substr(c1 + 2)), k1 = std::stoi(rhs.substr(c2 + 2));
    if (!(b > 1)) throw erlab::PreconditionError("ladder base must exceed 1");
    return erlab::geometric_ladder(1, 1 / b, std::min(k0, k1), std::max(k0, k1));
  }
  std::vector<double> out;
  for (const auto& t : split(s, ',')) out.push_back(number(t));
  if (out.empty()) throw erlab::PreconditionError("empty ladder");
  return out;
}

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Outcome {
  json result;
  int code = kOk;
};

// ---- commands ----

Outcome cmd_thresholds(const RunConfig& c) {
  if (c.theorem.empty()) throw erlab::PreconditionError("missing --theorem");
  return {erlab::to_json(erlab::thresholds(erlab::theorem_from_name(c.theorem), parse_params(c.params))), kOk};
}

Outcome cmd_classify(const RunConfig& c) {
  auto f = function_spec(c);
  erlab::ClassifyOptions opt;
  opt.zero.seed = c.seed;
  auto rep = erlab::classify(f, opt);
  Outcome o;
  o.result = erlab::to_json(rep);
  if (!c.theorem.empty()) {
    o.result["thresholds"] = erlab::to_json(erlab::thresholds(erlab::theorem_from_name(c.theorem), parse_params(c.params)));
  }
  o.code = rep.classification == erlab::Classification::Inconclusive ? kInconclusive : kOk;
  return o;
}

std::vector<std::string> component_names(std::size_t arity) {
  return arity == 3 ? std::vector<std::string>{"H1", "H2", "H3", "G0"} : std::vector<std::string>{"h", "k", "g"};
}

int recovery_code(const erlab::RecoveryResult& r) {
  switch (r.verdict) {
    case erlab::RecoveryVerdict::Success: return kOk;
    case erlab::RecoveryVerdict::ResidualTooLarge: return kNumerical;
    default: return kInconclusive;
  }
}

Outcome cmd_recover(const RunConfig& c) {
  auto f = function_spec(c);
  erlab::RecoveryOptions opt;
  opt.tolerance = c.tolerance;
  opt.nodes = static_cast<std::size_t>(c.nodes);
  opt.verify_grid = c.grid;
  opt.threads = c.threads;
  erlab::RecoveryResult r;
  if (f.arity() == 3) {
    r = erlab::recover_trivariate(f, c.base, opt);
  } else if (f.arity() == 2) {
    r = erlab::recover_bivariate(f, c.base, opt);
  } else {
    throw erlab::PreconditionError("recover needs 2 or 3 variables");
  }
  Outcome o{erlab::to_json(r), recovery_code(r)};
  if (!c.csv.empty() && r.success()) {
    auto names = component_names(f.arity());
    json files = json::array();
    for (std::size_t i = 0; i <= r.inner.size(); ++i) {
      const auto& comp = i < r.inner.size() ? r.inner[i] : r.outer;
      std::string path = c.csv + "_" + names[i] + ".csv";
      erlab::save_csv(comp.fn, path);
      files.push_back(path);
    }
    o.result["files"] = files;
  }
  return o;
}

Outcome cmd_verify_recovery(const RunConfig& c) {
  auto f = function_spec(c);
  if (c.components.empty()) throw erlab::PreconditionError("missing --components (prefix used by recover --csv)");
  auto names = component_names(f.arity());
  erlab::RecoveryResult r;
  r.vars = f.vars;
  for (std::size_t i = 0; i < f.arity(); ++i) {
    r.inner.push_back({names[i], f.vars[i], erlab::load_csv(c.components + "_" + names[i] + ".csv")});
  }
  r.outer = {names.back(), "", erlab::load_csv(c.components + "_" + names.back() + ".csv")};
  r.base = c.base;
  erlab::RecoveryOptions opt;
  opt.tolerance = c.tolerance;
  opt.threads = c.threads;
  auto v = erlab::verify_recovery(f, r, c.grid, opt);
  return {erlab::to_json(v), recovery_code(v)};
}

Outcome cmd_fold(const RunConfig& c) {
  auto f = function_spec(c);
  if (f.arity() != 2) throw erlab::PreconditionError("fold needs a function of two variables");
  erlab::FoldReport r;
  if (c.base.empty()) {
    r = erlab::fold_verify(f, c.theta);
  } else {
    if (c.base.size() != 2) throw erlab::PreconditionError("--base needs x,y");
    r = erlab::fold_verify(f, c.base[0], c.base[1], c.theta);
  }
  return {erlab::to_json(r), r.verified() ? kOk : kInconclusive};
}

Outcome cmd_expand(const RunConfig& c) {
  auto vars = default_vars(c);
  if (vars.size() != 2 && vars.size() != 3) throw erlab::PreconditionError("expand needs 2 or 3 variables");
  if (c.inputs.empty()) throw erlab::PreconditionError("missing --input (one fractal spec, or one per variable)");
  if (c.inputs.size() != 1 && c.inputs.size() != vars.size()) {
    throw erlab::PreconditionError("give one --input, or one per variable");
  }
  if (c.ladder.empty()) throw erlab::PreconditionError("missing --ladder");
  erlab::ExperimentConfig cfg;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    cfg.inputs.push_back({fractal_input(c.inputs[c.inputs.size() == 1 ? 0 : i], c.threads), {}});
  }
  // Default box: the inputs' own intervals.
  erlab::Box box;
  for (const auto& in : cfg.inputs) box.push_back({in.set.lo, in.set.hi});
  if (!c.box.empty()) box = make_box(c, vars.size());
  cfg.f = erlab::FunctionSpec{erlab::parse(c.function), vars, box};
  cfg.f.validate();
  cfg.ladder = parse_ladder(c.ladder);
  cfg.theorem = !c.theorem.empty()               ? erlab::theorem_from_name(c.theorem)
                : vars.size() == 2               ? erlab::Theorem::BivariateAnalytic
                                                 : erlab::Theorem::TrivariateAnalytic;
  cfg.params = parse_params(c.params);
  cfg.slack = c.slack;
  cfg.image.threads = c.threads;
  cfg.image.delta_min = c.delta_min;
  if (!c.range.empty()) {
    if (c.range.size() != 2) throw erlab::PreconditionError("--range needs lo,hi");
    cfg.image.lo = c.range[0];
    cfg.image.hi = c.range[1];
  }
  erlab::ClassifyOptions copt;
  copt.zero.seed = c.seed;
  cfg.classification = erlab::classify(cfg.f, copt);
  auto rep = erlab::expansion_experiment(cfg);
  Outcome o{erlab::to_json(rep), kOk};
  o.result["classification"] = erlab::to_string(cfg.classification->classification);
  if (!c.ladder_csv.empty()) {
    erlab::save_text(erlab::ladder_csv(rep.image.ladder), c.ladder_csv);
    o.result["ladder_csv"] = c.ladder_csv;
  }
  return o;
}

Outcome cmd_surface_distance(const RunConfig& c) {
  if (c.psi.empty()) throw erlab::PreconditionError("missing --psi (comma-separated components)");
  std::vector<erlab::Expr> psi;
  for (const auto& s : c.psi) psi.push_back(erlab::parse(s));
  const std::size_t d = psi.size();
  std::vector<std::string> u = c.params_u;
  if (u.empty()) {
    for (std::size_t i = 0; i + 1 < d; ++i) u.push_back(d == 2 ? "u" : "u" + std::to_string(i + 1));
  }
  Outcome o;
  o.result["d"] = d;
  o.result["thresholds"] = erlab::to_json(erlab::thresholds(erlab::Theorem::DistanceSurface, {{"d", erlab::Rational(static_cast<std::int64_t>(d))}}));
  if (!c.point.empty() || !c.at.empty()) {
    auto chk = erlab::surface_distance_check(psi, u, c.point, c.at, c.det_tol);
    o.result["check"] = erlab::to_json(chk);
    o.code = chk.tangent ? kInconclusive : kOk;
  }
  return o;
}

Outcome cmd_gen_fractal(const RunConfig& c) {
  if (c.inputs.size() != 1) throw erlab::PreconditionError("gen-fractal takes exactly one --input");
  auto p = fractal_input(c.inputs[0], c.threads);
  Outcome o;
  o.result["spec"] = p.provenance;
  o.result["hash"] = p.hash;
  o.result["count"] = p.size();
  o.result["dimension"] = erlab::real_json(p.dimension);
  o.result["interval"] = {p.lo, p.hi};
  if (!c.ladder.empty()) {
    auto l = erlab::box_counts(p, parse_ladder(c.ladder));
    o.result["box_counts"] = erlab::to_json(l);
    if (!c.ladder_csv.empty()) erlab::save_text(erlab::ladder_csv(l), c.ladder_csv);
    try {
      o.result["estimate"] = erlab::to_json(erlab::dim_estimate(l));
    } catch (const erlab::PreconditionError& e) {
      o.result["estimate"] = nullptr;
      o.result["estimate_note"] = e.what();
    }
  }
  if (!c.points_out.empty()) {
    erlab::save_point_set(p, c.points_out);
    o.result["file"] = c.points_out;
  }
  return o;
}

int fail(const RunConfig& c, int code, const std::string& kind, const std::string& msg, std::optional<std::size_t> offset) {
  json j;
  j["config"] = config_json(c);
  j["error"] = {{"kind", kind}, {"message", msg}};
  if (offset) j["error"]["offset"] = *offset;
  j["exit_code"] = code;
  std::cout << j.dump(2) << std::endl;
  std::cerr << "erlab: " << msg << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  // --config is read before the flags so that flags override its fields.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    if (path.empty()) continue;
    try {
      cfg = load_config(path);
    } catch (const erlab::ParseError& e) {
      return fail(cfg, kUsage, "parse", e.what(), std::nullopt);
    } catch (const erlab::Error& e) {
      return fail(cfg, kUsage, "usage", e.what(), std::nullopt);
    }
  }
  static const std::vector<std::string> commands = {"classify", "thresholds", "recover", "fold", "expand",
                                                    "surface-distance", "verify-recovery", "gen-fractal"};
  bool has_command = false;
  for (const auto& a : args) has_command |= std::find(commands.begin(), commands.end(), a) != commands.end();
  if (!has_command && !cfg.command.empty()) args.insert(args.begin(), cfg.command);

  CLI::App app{"erlab: expansion laboratory for smooth and analytic functions"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration; flags override its fields");
  app.add_option("--threads", cfg.threads, "worker threads (default: ERLAB_THREADS or hardware)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "master seed for sampled decisions");
  app.add_flag("--no-timestamp", cfg.no_timestamp, "omit the timestamp for byte-identical output");
  app.add_option("-o,--output", cfg.output, "write the JSON report here instead of stdout");

  auto fn_opts = [&](CLI::App* s, bool required) {
    auto* o = s->add_option("-f,--function", cfg.function, "expression, e.g. \"x^2 + x*y\"");
    if (required && cfg.function.empty()) o->required();
    s->add_option("--vars", cfg.vars, "ordered variables (default: x,y[,z] as used)")->delimiter(',');
    s->add_option("--box", cfg.box, "lo,hi for all variables or lo1,hi1,lo2,hi2,...")->delimiter(',');
  };
  auto theorem_opts = [&](CLI::App* s) {
    s->add_option("--theorem,--thresholds", cfg.theorem, "theorem selector");
    s->add_option("--param", cfg.params, "theorem parameter key=value (exact)");
  };

  auto* classify = app.add_subcommand("classify", "special form or expanding, with witnesses");
  fn_opts(classify, true);
  theorem_opts(classify);

  auto* thresholds = app.add_subcommand("thresholds", "exact dimension thresholds of a theorem");
  theorem_opts(thresholds);

  auto* recover = app.add_subcommand("recover", "recover G0(H1 + H2 [+ H3]) components");
  fn_opts(recover, true);
  recover->add_option("--base", cfg.base, "normalization point (default: box center)")->delimiter(',');
  recover->add_option("--tolerance", cfg.tolerance, "relative residual bound");
  recover->add_option("--nodes", cfg.nodes, "grid nodes per inner component");
  recover->add_option("--grid", cfg.grid, "verification grid per axis");
  recover->add_option("--csv", cfg.csv, "write components to PREFIX_<name>.csv");

  auto* verify = app.add_subcommand("verify-recovery", "check saved components against f");
  fn_opts(verify, true);
  verify->add_option("--components", cfg.components, "prefix used by recover --csv");
  verify->add_option("--tolerance", cfg.tolerance, "relative residual bound");
  verify->add_option("--grid", cfg.grid, "verification grid per axis");

  auto* fold = app.add_subcommand("fold", "Whitney fold checks at a critical configuration");
  fn_opts(fold, true);
  fold->add_option("--base", cfg.base, "x,y (default: classifier witness)")->delimiter(',');
  fold->add_option("--theta", cfg.theta, "theta");

  auto* expand = app.add_subcommand("expand", "image dimension experiment over fractal inputs");
  fn_opts(expand, true);
  expand->add_option("--input,--cantor", cfg.inputs, "fractal spec: b4d01:12, mt:10, cantor:m=2,r=1/3,n=10, file:P");
  expand->add_option("--ladder", cfg.ladder, "image deltas: 2^-6..2^-20 or a comma list");
  theorem_opts(expand);
  expand->add_option("--slack", cfg.slack, "allowed shortfall of the estimate below the bound");
  expand->add_option("--delta-min", cfg.delta_min, "quantization resolution");
  expand->add_option("--range", cfg.range, "declared image range lo,hi")->delimiter(',');
  expand->add_option("--ladder-csv", cfg.ladder_csv, "write the image ladder as CSV");

  auto* surface = app.add_subcommand("surface-distance", "distance-to-hypersurface tangency and thresholds");
  surface->add_option("--psi", cfg.psi, "parametrization components, e.g. cos(u),sin(u)")->delimiter(',');
  surface->add_option("--surface-params", cfg.params_u, "parameter names (default u or u1..)")->delimiter(',');
  surface->add_option("--point", cfg.point, "x in R^d")->delimiter(',');
  surface->add_option("--at", cfg.at, "parameter value u")->delimiter(',');
  surface->add_option("--det-tol", cfg.det_tol, "tangency tolerance on the determinant");

  auto* gen = app.add_subcommand("gen-fractal", "generate a point set");
  gen->add_option("--input,--cantor", cfg.inputs, "fractal spec");
  gen->add_option("--points-out", cfg.points_out, "binary point-set file");
  gen->add_option("--ladder", cfg.ladder, "box-count ladder");
  gen->add_option("--ladder-csv", cfg.ladder_csv, "write box counts as CSV");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  for (auto* s : app.get_subcommands()) cfg.command = s->get_name();

  Outcome out;
  try {
    if (cfg.command == "classify") out = cmd_classify(cfg);
    else if (cfg.command == "thresholds") out = cmd_thresholds(cfg);
    else if (cfg.command == "recover") out = cmd_recover(cfg);
    else if (cfg.command == "verify-recovery") out = cmd_verify_recovery(cfg);
    else if (cfg.command == "fold") out = cmd_fold(cfg);
    else if (cfg.command == "expand") out = cmd_expand(cfg);
    else if (cfg.command == "surface-distance") out = cmd_surface_distance(cfg);
    else out = cmd_gen_fractal(cfg);
  } catch (const erlab::ParseError& e) {
    return fail(cfg, kUsage, "parse", e.what(), e.offset());
  } catch (const erlab::AdditivelyDegenerate& e) {
    return fail(cfg, kInconclusive, "degenerate", e.what(), std::nullopt);
  } catch (const erlab::PreconditionError& e) {
    return fail(cfg, kUsage, "precondition", e.what(), std::nullopt);
  } catch (const erlab::DomainError& e) {
    return fail(cfg, kNumerical, "domain", e.what(), std::nullopt);
  } catch (const erlab::NumericalError& e) {
    return fail(cfg, kNumerical, "numerical", e.what(), std::nullopt);
  } catch (const erlab::Error& e) {
    return fail(cfg, kUsage, "error", e.what(), std::nullopt);
  } catch (const std::invalid_argument& e) {
    return fail(cfg, kUsage, "usage", std::string("bad number: ") + e.what(), std::nullopt);
  } catch (const std::out_of_range& e) {
    return fail(cfg, kUsage, "usage", std::string("number out of range: ") + e.what(), std::nullopt);
  }

  json doc;
  doc["config"] = config_json(cfg);
  if (!cfg.no_timestamp) doc["timestamp"] = timestamp();
  doc["result"] = out.result;
  doc["exit_code"] = out.code;
  std::string text = doc.dump(2) + "\n";
  if (cfg.output.empty()) {
    std::cout << text;
  } else {
    try {
      erlab::save_text(text, cfg.output);
    } catch (const erlab::Error& e) {
      return fail(cfg, kUsage, "io", e.what(), std::nullopt);
    }
  }
  return out.code;
}
