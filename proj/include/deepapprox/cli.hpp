#pragma once

// Experiment configs (JSON) and the build/eval/sweep/gap/breakpoints
// commands behind tools/deepapprox.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepapprox/analysis.hpp"
#include "deepapprox/combinators.hpp"
#include "deepapprox/multivar.hpp"
#include "deepapprox/report.hpp"
#include "deepapprox/serialize.hpp"
#include "deepapprox/uni_builder.hpp"

namespace deepapprox::cli {

using json = nlohmann::json;

/// Malformed or incomplete configs and command lines.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name;
  std::string kind;
  std::vector<double> eps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid_points;
  std::string out_dir;
  json params;
};

/// A number, or a string "2^-k".
inline double parse_eps_value(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.rfind("2^", 0) == 0) {
      try {
        std::size_t used = 0;
        int k = std::stoi(s.substr(2), &used);
        if (used + 2 == s.size()) return std::ldexp(1.0, k);
      } catch (const std::exception&) {
      }
    }
    throw ConfigError("cannot read eps value '" + s + "'");
  }
  throw ConfigError("eps values must be numbers or \"2^-k\" strings");
}

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& kind) {
  if (!j.contains(key)) throw ConfigError("kind '" + kind + "' needs '" + key + "'");
  return j.at(key);
}

inline std::vector<double> number_list(const json& j, const char* key, const std::string& kind) {
  const json& v = require(j, key, kind);
  if (!v.is_array() || v.empty()) throw ConfigError(std::string("'") + key + "' must be a nonempty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(std::string("'") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::vector<std::string> name_list(const json& j, const char* key, const std::string& kind) {
  const json& v = require(j, key, kind);
  if (!v.is_array() || v.empty()) throw ConfigError(std::string("'") + key + "' must be a nonempty array");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw ConfigError(std::string("'") + key + "' must hold function names");
    out.push_back(x.get<std::string>());
  }
  return out;
}

inline std::vector<ApproxTarget> targets(const std::vector<std::string>& names) {
  std::vector<ApproxTarget> out;
  for (const auto& n : names) out.push_back(named_target(n));
  return out;
}

inline MultinomialSpec multinomial_terms(const json& j, const std::string& kind) {
  const json& v = require(j, "terms", kind);
  if (!v.is_array() || v.empty()) throw ConfigError("'terms' must be a nonempty array");
  MultinomialSpec C;
  for (const auto& t : v) {
    if (!t.is_object() || !t.contains("alpha") || !t.contains("coeff"))
      throw ConfigError("each term needs 'alpha' and 'coeff'");
    MultiIndex a;
    for (const auto& e : t.at("alpha")) {
      if (!e.is_number_integer()) throw ConfigError("'alpha' entries must be integers");
      a.push_back(e.get<int>());
    }
    if (!t.at("coeff").is_number()) throw ConfigError("'coeff' must be a number");
    C[a] += t.at("coeff").get<double>();
  }
  return C;
}

}  // namespace detail

/// Checks that every parameter the kind needs is present and well typed.
inline void validate(const ExperimentConfig& c) {
  const json& p = c.params;
  const std::string& k = c.kind;
  if (k == "polynomial") detail::number_list(p, "coeffs", k);
  else if (k == "smooth") named_target(detail::require(p, "target", k).get<std::string>());
  else if (k == "sum") {
    auto n = detail::name_list(p, "targets", k);
    if (detail::number_list(p, "weights", k).size() != n.size()) throw ConfigError("'weights' must match 'targets'");
    detail::targets(n);
  } else if (k == "product") detail::targets(detail::name_list(p, "targets", k));
  else if (k == "compose") detail::targets(detail::name_list(p, "stages", k));
  else if (k == "ridge") {
    detail::number_list(p, "direction", k);
    named_target(detail::require(p, "target", k).get<std::string>());
  } else if (k == "gaussian") {
    if (!detail::require(p, "dim", k).is_number_unsigned()) throw ConfigError("'dim' must be a positive integer");
  } else if (k == "linear_product") {
    const json& f = detail::require(p, "forms", k);
    if (!f.is_array() || f.empty()) throw ConfigError("'forms' must be a nonempty array");
    for (const auto& row : f)
      if (!row.is_array() || row.empty()) throw ConfigError("each form must be a nonempty array");
  } else if (k == "multinomial") detail::multinomial_terms(p, k);
  else if (k == "poly_chain") {
    detail::multinomial_terms(p, k);
    if (p.contains("chain")) detail::targets(detail::name_list(p, "chain", k));
  } else if (k == "gap") {
    ApproxTarget t = named_target(p.value("target", std::string("square")));
    if (!t.mu) throw ConfigError("gap target '" + t.name + "' has no strong convexity parameter");
  } else if (k != "square")
    throw ConfigError("unknown kind '" + k + "'");
}

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("config needs a string 'kind'");
  c.kind = j.at("kind").get<std::string>();
  c.name = j.value("name", c.kind);
  if (j.contains("eps")) {
    const json& e = j.at("eps");
    if (e.is_array())
      for (const auto& v : e) c.eps.push_back(parse_eps_value(v));
    else
      c.eps.push_back(parse_eps_value(e));
  } else if (j.contains("eps_log2")) {
    const json& r = j.at("eps_log2");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      throw ConfigError("'eps_log2' must be [from, to] integers");
    int a = r[0].get<int>(), b = r[1].get<int>();
    for (int k = a;; k += a <= b ? 1 : -1) {
      c.eps.push_back(std::ldexp(1.0, k));
      if (k == b) break;
    }
  } else if (c.kind == "gap") {
    for (int k = 4; k <= 12; ++k) c.eps.push_back(std::ldexp(1.0, -k));
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const json& pts = g.is_object() ? g.value("points", json()) : g;
    if (!pts.is_number_unsigned() || pts.get<std::size_t>() == 0)
      throw ConfigError("'grid' must give a positive point count");
    c.grid_points = pts.get<std::size_t>();
  }
  c.out_dir = j.value("out", std::string());
  c.params = j;
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

/// Flag, then config, then DEEPAPPROX_SEED, then 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* env = std::getenv("DEEPAPPROX_SEED")) {
    try {
      std::size_t used = 0;
      unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("DEEPAPPROX_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

struct Outcome {
  Network net{1};
  BuildReport report;
  std::vector<std::string> notes;
};

namespace detail {

inline std::vector<std::string> composition_notes(const Composed& c) {
  std::vector<std::string> out;
  char buf[200];
  for (std::size_t m = 0; m < c.plan.names.size(); ++m) {
    std::snprintf(buf, sizeof buf, "stage %zu %s: tol %.6g clamp %.12g lip %.6g", m + 1, c.plan.names[m].c_str(),
                  c.plan.tolerances[m], c.plan.clamps[m], c.plan.outer_lip[m]);
    out.push_back(buf);
  }
  std::snprintf(buf, sizeof buf, "audit max %.6g, cascade bound %.6g, stage outputs in [%.6g, %.6g]", c.audit_max,
                c.cascade_bound, c.stage_min, c.stage_max);
  out.push_back(buf);
  return out;
}

inline Outcome from_built(Built&& b) { return {std::move(b.net), std::move(b.report), {}}; }

inline Outcome from_composed(Composed&& c) {
  Outcome o{std::move(c.built.net), std::move(c.built.report), composition_notes(c)};
  return o;
}

}  // namespace detail

/// Runs the builder for one eps.
inline Outcome run_build(const ExperimentConfig& c, double eps, const BuildOptions& opts) {
  const json& p = c.params;
  const std::string& k = c.kind;
  if (k == "square") return detail::from_built(build_square(eps, opts));
  if (k == "polynomial") return detail::from_built(build_polynomial(detail::number_list(p, "coeffs", k), eps, opts));
  if (k == "smooth") return detail::from_built(build_smooth(named_target(p.at("target").get<std::string>()), eps, opts));
  if (k == "sum")
    return detail::from_built(combine_sum(detail::targets(detail::name_list(p, "targets", k)),
                                          detail::number_list(p, "weights", k), eps, opts));
  if (k == "product") return detail::from_built(combine_product(detail::targets(detail::name_list(p, "targets", k)), eps, opts));
  if (k == "compose") return detail::from_composed(compose(detail::targets(detail::name_list(p, "stages", k)), eps, opts));
  if (k == "ridge")
    return detail::from_built(
        build_ridge(detail::number_list(p, "direction", k), named_target(p.at("target").get<std::string>()), eps, opts));
  if (k == "gaussian") return detail::from_built(build_gaussian(p.at("dim").get<std::size_t>(), eps, opts));
  if (k == "linear_product") {
    LinearFormSet W;
    for (const auto& row : p.at("forms")) W.push_back(row.get<std::vector<double>>());
    return detail::from_built(build_linear_product(W, eps, opts));
  }
  if (k == "multinomial") return detail::from_built(build_multinomial(detail::multinomial_terms(p, k), eps, opts));
  if (k == "poly_chain") {
    std::vector<ApproxTarget> chain;
    if (p.contains("chain")) chain = detail::targets(detail::name_list(p, "chain", k));
    return detail::from_composed(build_poly_then_chain(detail::multinomial_terms(p, k), chain, eps, opts));
  }
  throw ConfigError("kind '" + k + "' does not build a single network");
}

struct CommandOptions {
  std::string config;
  std::string net_file;
  std::string out;
  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid;
  int resolution = 20;
  bool verbose = false;
};

namespace detail {

inline ExperimentConfig load_config(const CommandOptions& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  return parse_config(read_file(o.config));
}

inline std::string out_dir(const CommandOptions& o, const ExperimentConfig* c) {
  std::string dir = !o.out.empty() ? o.out : (c && !c->out_dir.empty() ? c->out_dir : std::string("."));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline BuildOptions build_options(const CommandOptions& o, const ExperimentConfig& c) {
  BuildOptions b;
  b.seed = resolve_seed(o.seed, c.seed);
  if (o.grid) b.grid_points = *o.grid;
  else if (c.grid_points) b.grid_points = *c.grid_points;
  return b;
}

inline bool within_bound(const BuildReport& r) { return r.measured <= r.bound + bound_slack; }

inline std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

}  // namespace detail

/// Writes <name>.net.json and <name>.csv.
inline int cmd_build(const CommandOptions& o, std::ostream& log) {
  ExperimentConfig c = detail::load_config(o);
  if (c.kind == "gap") throw ConfigError("kind 'gap' runs through the gap command");
  if (c.eps.size() != 1) throw ConfigError("build takes a single eps; use sweep for lists");
  BuildOptions opts = detail::build_options(o, c);
  Outcome r = run_build(c, c.eps[0], opts);
  std::string dir = detail::out_dir(o, &c);
  write_file(detail::join(dir, c.name + ".net.json"), serialize(r.net));
  write_file(detail::join(dir, c.name + ".csv"), std::string(report_csv_header) + "\n" + report_csv_row(r.report) + "\n");
  if (o.verbose)
    for (const auto& n : r.notes) log << n << "\n";
  log << report_csv_row(r.report) << "\n";
  return detail::within_bound(r.report) ? 0 : 1;
}

/// CSV of grid points and network values on stdout (or <stem>_eval.csv).
inline int cmd_eval(const CommandOptions& o, std::ostream& out, std::ostream& log) {
  if (o.net_file.empty()) throw ConfigError("eval needs a network file");
  Network net = deserialize(read_file(o.net_file));
  const std::size_t M = o.grid.value_or(1001);
  const std::size_t d = net.input_dim();
  GridSpec grid = d == 1 ? GridSpec(UniformGrid{M}) : GridSpec(RandomGrid{d, M, resolve_seed(o.seed, std::nullopt), false});
  PointSet pts = make_points(grid);
  std::vector<double> values = eval_points(net, pts);
  std::optional<ApproxTarget> target;
  if (!o.target.empty()) {
    if (d != 1) throw ConfigError("--target names a univariate function; the network has input_dim " + std::to_string(d));
    target = named_target(o.target);
  }

  std::ostringstream csv;
  for (std::size_t k = 0; k < d; ++k) csv << (d == 1 ? std::string("x") : "x" + std::to_string(k + 1)) << ',';
  csv << "value" << (target ? ",target,error" : "") << "\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (double x : pts[i]) csv << fmt_double(x) << ',';
    csv << fmt_double(values[i]);
    if (target) {
      double t = (*target)(pts[i][0]);
      worst = std::max(worst, std::abs(values[i] - t));
      csv << ',' << fmt_double(t) << ',' << fmt_double(std::abs(values[i] - t));
    }
    csv << "\n";
  }
  if (o.out.empty()) {
    out << csv.str();
  } else {
    std::string dir = detail::out_dir(o, nullptr);
    write_file(detail::join(dir, detail::stem(o.net_file) + "_eval.csv"), csv.str());
  }
  if (target) log << "sup_error," << fmt_double(worst) << "\n";
  return 0;
}

/// One report row per eps, plus log2 error against size.
inline int cmd_sweep(const CommandOptions& o, std::ostream& log) {
  ExperimentConfig c = detail::load_config(o);
  if (c.kind == "gap") throw ConfigError("kind 'gap' runs through the gap command");
  if (c.eps.empty()) throw ConfigError("sweep needs a nonempty eps list");
  BuildOptions opts = detail::build_options(o, c);
  std::vector<std::future<Outcome>> jobs;
  for (double eps : c.eps) jobs.push_back(std::async(std::launch::async, [&, eps] { return run_build(c, eps, opts); }));
  std::vector<Outcome> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  std::string csv = std::string(report_csv_header) + "\n";
  Series measured{"log2 measured", {}, {}}, bound{"log2 bound", {}, {}}, eps{"log2 eps", {}, {}};
  bool ok = true;
  for (const auto& r : rows) {
    csv += report_csv_row(r.report) + "\n";
    ok = ok && detail::within_bound(r.report);
    double size = static_cast<double>(r.report.counts.total);
    measured.x.push_back(size);
    measured.y.push_back(std::log2(std::max(r.report.measured, 1e-300)));
    bound.x.push_back(size);
    bound.y.push_back(std::log2(r.report.bound));
    eps.x.push_back(size);
    eps.y.push_back(std::log2(r.report.epsilon));
    if (o.verbose)
      for (const auto& n : r.notes) log << n << "\n";
  }
  std::string dir = detail::out_dir(o, &c);
  write_file(detail::join(dir, c.name + "_sweep.csv"), csv);
  write_file(detail::join(dir, c.name + "_sweep.svg"),
             render_svg({measured, bound, eps}, {c.name + ": error against size", "total units", "log2 error"}));
  log << csv;
  return ok ? 0 : 1;
}

inline const char* gap_csv_header =
    "function,epsilon,depth,relu,step,total,strict_total,bound,measured,grid,seed,ns,nd,ls,ld,verdict_a,verdict_b,"
    "verdict_c,verdict_d";

/// Deep and shallow sizes per eps with the four consistency verdicts.
inline int cmd_gap(const CommandOptions& o, std::ostream& log) {
  ExperimentConfig c = detail::load_config(o);
  if (c.kind != "gap") throw ConfigError("gap needs a config of kind 'gap'");
  if (c.eps.empty()) throw ConfigError("gap needs a nonempty eps list");
  GapOptions g;
  g.build = detail::build_options(o, c);
  g.shallow.grid_points = g.build.grid_points;
  g.rho = c.params.value("rho", 2.0);
  ApproxTarget t = named_target(c.params.value("target", std::string("square")));
  GapResult res = gap_experiment(t, c.eps, g);

  std::string csv = std::string(gap_csv_header) + "\n";
  Series ns{"shallow N_s", {}, {}}, nd{"deep N_d", {}, {}};
  for (const auto& r : res.rows) {
    csv += report_csv_row(r.deep_report) + ',' + std::to_string(r.ns) + ',' + std::to_string(r.nd) + ',' +
           std::to_string(r.ls) + ',' + std::to_string(r.ld) + ',' + r.verdict_a + ',' + r.verdict_b + ',' +
           r.verdict_c + ',' + r.verdict_d + "\n";
    double x = std::log2(1 / r.eps);
    ns.x.push_back(x);
    ns.y.push_back(static_cast<double>(r.ns));
    nd.x.push_back(x);
    nd.y.push_back(static_cast<double>(r.nd));
    if (o.verbose) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "eps %.6g: breakpoints %zu (need %lld), shallow bound %.6g, depth-free bound %.6g",
                    r.eps, r.deep_breakpoints, static_cast<long long>(r.required.count), r.shallow_bound.value,
                    r.depth_free.value);
      log << buf << "\n";
    }
  }
  std::string dir = detail::out_dir(o, &c);
  write_file(detail::join(dir, c.name + "_gap.csv"), csv);
  write_file(detail::join(dir, c.name + "_gap.svg"),
             render_svg({ns, nd}, {c.name + ": network size against log2(1/eps)", "log2(1/eps)", "total units"}));
  log << csv;
  if (o.verbose) log << "fitted c = " << fmt_double(res.fitted_c) << "\n";
  return res.all_pass() ? 0 : 1;
}

/// Break points of a 1-D network as CSV rows (x, kind).
inline int cmd_breakpoints(const CommandOptions& o, std::ostream& out, std::ostream& log) {
  if (o.net_file.empty()) throw ConfigError("breakpoints needs a network file");
  Network net = deserialize(read_file(o.net_file));
  PieceScan scan = count_breakpoints_1d(net, o.resolution);
  std::string csv = "x,kind\n";
  for (const auto& p : scan.points) csv += fmt_double(p.x) + ',' + to_string(p.kind) + "\n";
  if (o.out.empty()) {
    out << csv;
  } else {
    std::string dir = detail::out_dir(o, nullptr);
    write_file(detail::join(dir, detail::stem(o.net_file) + "_breakpoints.csv"), csv);
  }
  if (o.verbose) log << scan.size() << " break points at resolution 2^-" << o.resolution << "\n";
  return 0;
}

}  // namespace deepapprox::cli
