#pragma once

// Break-point detection on 1-D networks, the size lower bounds for strongly
// convex targets, a one-hidden-layer interpolation baseline and the
// deep-versus-shallow size experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/grid.hpp"
#include "deepapprox/net_core.hpp"
#include "deepapprox/target.hpp"
#include "deepapprox/uni_builder.hpp"

namespace deepapprox {

enum class BreakKind { jump, kink };

inline const char* to_string(BreakKind k) { return k == BreakKind::jump ? "jump" : "kink"; }

struct BreakPoint {
  double x = 0.0;
  BreakKind kind = BreakKind::kink;
};

struct ScanOptions {
  double jump_tol = 1e-7;
  double kink_tol = 1e-5;
  int bisections = 40;
};

struct PieceScan {
  std::vector<BreakPoint> points;
  int resolution = 0;
  double jump_tol = 0.0;
  double kink_tol = 0.0;

  std::size_t size() const { return points.size(); }
  std::vector<double> locations() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.x);
    return out;
  }
};

namespace detail {

struct Line {
  double x0, y0, slope;
  double operator()(double x) const { return y0 + slope * (x - x0); }
  bool holds(double x, double y) const {
    double l = (*this)(x);
    return std::abs(y - l) <= 1e-12 * (1 + std::abs(l));
  }
};

}  // namespace detail

/// Scans 2^m uniform intervals, flags nodes where adjacent secant slopes
/// disagree, then localizes each flagged run by bisecting against the line
/// through the clean interval on its left (or right, at the boundary).
/// Endpoints 0 and 1 are never reported.
inline PieceScan count_breakpoints_1d(const Network& net, int m, const ScanOptions& o = {}) {
  if (net.input_dim() != 1) throw std::invalid_argument("break-point scan needs input_dim 1");
  if (m < 2 || m > 26) throw std::invalid_argument("scan resolution must be in [2, 26]");
  const std::size_t M = std::size_t{1} << m;
  const double h = std::ldexp(1.0, -m);
  PieceScan scan;
  scan.resolution = m;
  scan.jump_tol = o.jump_tol;
  scan.kink_tol = o.kink_tol;

  PointSet pts = make_points(UniformGrid{M + 1});
  std::vector<double> s = eval_points(net, pts);
  auto x_at = [&](std::size_t i) { return static_cast<double>(i) * h; };
  // slope of interval i = [x_{i-1}, x_i], i = 1..M
  auto slope = [&](std::size_t i) { return (s[i] - s[i - 1]) / h; };

  std::vector<char> flag(M + 1, 0);
  for (std::size_t j = 1; j < M; ++j) {
    double a = slope(j), b = slope(j + 1);
    if (std::abs(b - a) > o.kink_tol * std::max({1.0, std::abs(a), std::abs(b)})) flag[j] = 1;
  }

  Evaluator ev(net);
  auto f = [&](double x) { return ev(x); };
  auto bisect = [&](double lo, double hi, auto on_lo_side) {
    for (int it = 0; it < o.bisections; ++it) {
      double mid = lo + (hi - lo) / 2;
      if (mid <= lo || mid >= hi) break;
      (on_lo_side(mid) ? lo : hi) = mid;
    }
    return std::pair{lo, hi};
  };

  std::vector<BreakPoint> found;
  auto record = [&](double lo, double hi, double at) {
    if (at <= 0.0 || at >= 1.0) return;
    BreakKind kind = std::abs(f(hi) - f(lo)) > o.jump_tol ? BreakKind::jump : BreakKind::kink;
    found.push_back({at, kind});
  };

  for (std::size_t u = 1; u < M; ++u) {
    if (!flag[u]) continue;
    std::size_t w = u;
    while (w + 1 < M && flag[w + 1]) ++w;
    // interval u is clean when node u - 1 is an unflagged interior node
    if (u >= 2) {
      detail::Line left{x_at(u), s[u], slope(u)};
      std::size_t k = u + 1;
      while (k <= w + 1 && left.holds(x_at(k), s[k])) ++k;
      if (k <= w + 1) {
        auto [lo, hi] = bisect(x_at(k - 1), x_at(k), [&](double x) { return left.holds(x, f(x)); });
        record(lo, hi, hi);
      }
    }
    // mirrored search from the clean interval w + 1 on the right
    if (w + 2 <= M) {
      detail::Line right{x_at(w), s[w], slope(w + 1)};
      std::size_t k = w;  // node index, walking left
      while (k >= u && right.holds(x_at(k - 1), s[k - 1])) --k;
      if (k >= u) {
        auto [lo, hi] = bisect(x_at(k - 1), x_at(k), [&](double x) { return !right.holds(x, f(x)); });
        record(lo, hi, hi);
      }
    }
    u = w;
  }

  std::sort(found.begin(), found.end(), [](const BreakPoint& a, const BreakPoint& b) { return a.x < b.x; });
  for (const auto& p : found) {
    if (!scan.points.empty() && p.x - scan.points.back().x < h / 2) {
      if (p.kind == BreakKind::jump) scan.points.back().kind = BreakKind::jump;
      continue;
    }
    scan.points.push_back(p);
  }
  return scan;
}

/// (N/L)^L, computed in the log domain.
inline double telgarsky_capacity(double N, double L) {
  if (L <= 0) throw std::invalid_argument("depth L must be at least 1");
  if (N < L) throw std::invalid_argument("size N must be at least the depth L");
  return std::exp(L * std::log(N / L));
}

struct BreakpointRequirement {
  std::int64_t count = 0;
  /// The four-point argument needs 6 sqrt(rho eps / mu) <= 1.
  bool vacuous = false;
};

/// ceil(sqrt(mu / (rho eps)) / 4) break points for a mu-strongly convex
/// target approximated within eps.
inline BreakpointRequirement required_breakpoints(double mu, double eps, double rho) {
  if (!(rho > 1.0)) throw std::invalid_argument("rho must exceed 1");
  if (!(mu > 0.0) || !(eps > 0.0)) throw std::invalid_argument("mu and eps must be positive");
  BreakpointRequirement r;
  r.count = static_cast<std::int64_t>(std::ceil(0.25 * std::sqrt(mu / (rho * eps))));
  r.vacuous = 6 * std::sqrt(rho * eps / mu) > 1.0;
  return r;
}

struct LowerBound {
  double value = 0.0;
  bool vacuous = false;
};

/// L (mu/16eps)^{1/(2L)} for depth L, log2(mu/16eps) without a depth.
/// eps >= mu/16 gives a vacuous bound of 0.
inline LowerBound size_lower_bound(double mu, double eps, std::optional<int> L = std::nullopt) {
  if (!(mu > 0.0) || !(eps > 0.0)) throw std::invalid_argument("mu and eps must be positive");
  if (L && *L < 1) throw std::invalid_argument("depth L must be at least 1");
  const double r = mu / (16 * eps);
  if (r <= 1.0) return {0.0, true};
  if (!L) return {std::log2(r), false};
  return {*L * std::pow(r, 1.0 / (2.0 * *L)), false};
}

/// Depth maximizing the bound's usefulness: max(1, floor(log2(mu/16eps)/2)).
inline int optimal_depth(double mu, double eps) {
  double r = mu / (16 * eps);
  return r <= 1.0 ? 1 : std::max(1, static_cast<int>(std::floor(0.5 * std::log2(r))));
}

struct ShallowOptions {
  std::size_t grid_points = 100000;
  std::size_t max_pieces = 10000000;
};

namespace detail {

/// Piecewise-linear interpolant of f at K + 1 equispaced knots as relus:
/// f(0) + s_0 (relu(x) - relu(-x)) + sum_{j>=1} (s_j - s_{j-1}) relu(x - j/K).
inline Network shallow_interpolant(const ApproxTarget& f, std::size_t K) {
  const double kk = static_cast<double>(K);
  std::vector<double> y(K + 1), slope(K);
  for (std::size_t j = 0; j <= K; ++j) y[j] = f(static_cast<double>(j) / kk);
  for (std::size_t j = 0; j < K; ++j) slope[j] = (y[j + 1] - y[j]) * kk;
  Network net(1);
  AffineForm out{{}, y[0]};
  NodeRef neg = net.add({Activation::relu, {{net.input(0), -1.0}}, 0.0, true});
  out.terms.push_back({neg, -slope[0]});
  for (std::size_t j = 0; j < K; ++j) {
    NodeRef r = net.add({Activation::relu, {{net.input(0), 1.0}}, -static_cast<double>(j) / kk, true});
    out.terms.push_back({r, j == 0 ? slope[0] : slope[j] - slope[j - 1]});
  }
  net.set_readout(out);
  return net;
}

/// Uniform points plus the midpoint of every interpolation interval.
inline PointSet shallow_points(std::size_t K, std::size_t grid_points) {
  PointSet ps = make_points(UniformGrid{grid_points});
  for (std::size_t j = 0; j < K; ++j) ps.coords.push_back((static_cast<double>(j) + 0.5) / static_cast<double>(K));
  return ps;
}

inline double shallow_error(const ApproxTarget& f, std::size_t K, std::size_t grid_points) {
  const double kk = static_cast<double>(K);
  std::vector<double> y(K + 1);
  for (std::size_t j = 0; j <= K; ++j) y[j] = f(static_cast<double>(j) / kk);
  double worst = 0.0;
  for (double x : shallow_points(K, grid_points).coords) {
    std::size_t j = std::min(K - 1, static_cast<std::size_t>(x * kk));
    double t = x * kk - static_cast<double>(j);
    double v = y[j] + t * (y[j + 1] - y[j]);
    worst = std::max(worst, std::abs(v - f(x)));
  }
  return worst;
}

}  // namespace detail

struct ShallowBuilt {
  Network net;
  BuildReport report;
  std::size_t pieces = 0;
};

/// Smallest K (doubling, then bisection) whose interpolant meets eps on the
/// measurement points; K + 1 relus in one hidden layer.
inline ShallowBuilt build_shallow_baseline(const ApproxTarget& f, double eps, const ShallowOptions& o = {}) {
  check_epsilon(eps);
  auto ok = [&](std::size_t K) { return detail::shallow_error(f, K, o.grid_points) <= eps; };
  std::size_t hi = 1;
  while (!ok(hi)) {
    if (hi >= o.max_pieces) throw BuildError("shallow baseline needs more than " + std::to_string(o.max_pieces) + " pieces");
    hi = std::min(hi * 2, o.max_pieces);
  }
  std::size_t lo = hi / 2;  // fails, or 0
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  ShallowBuilt out{detail::shallow_interpolant(f, hi), {}, hi};
  PointSet ps = detail::shallow_points(hi, o.grid_points);
  double measured = sup_error(out.net, ps, f.f);
  out.report = make_report("shallow(" + f.name + ")", eps, out.net, 0, 1, eps, measured, UniformGrid{o.grid_points}, 0);
  out.report.grid += "+mid" + std::to_string(hi);
  check_report(out.report);
  return out;
}

/// Verdicts are "pass" or "fail"; the size bounds report "vacuous" when
/// eps >= mu/16.
struct GapRow {
  double eps = 0.0;
  std::size_t nd = 0, ld = 0, ns = 0, ls = 0;
  double deep_measured = 0.0, shallow_measured = 0.0;
  int deep_bits = 0;
  std::size_t deep_breakpoints = 0;
  BreakpointRequirement required;
  LowerBound shallow_bound;  // L_s = 1
  LowerBound depth_free;
  std::string verdict_a, verdict_b, verdict_c, verdict_d;
  BuildReport deep_report, shallow_report;
};

struct GapResult {
  std::vector<GapRow> rows;
  /// c with N_d <= c log2^2(1/eps), fitted on the first row.
  double fitted_c = 0.0;
  bool all_pass() const {
    for (const auto& r : rows)
      for (const auto* v : {&r.verdict_a, &r.verdict_b, &r.verdict_c, &r.verdict_d})
        if (*v == "fail") return false;
    return true;
  }
};

struct GapOptions {
  BuildOptions build;
  ShallowOptions shallow;
  double rho = 2.0;
  int min_resolution = 20;
  int max_resolution = 24;
};

inline GapResult gap_experiment(const ApproxTarget& f, const std::vector<double>& eps_list, const GapOptions& o = {}) {
  if (eps_list.empty()) throw std::invalid_argument("gap experiment needs at least one eps");
  if (!f.mu) throw std::invalid_argument("target '" + f.name + "' has no strong convexity parameter");
  const double mu = *f.mu;

  std::vector<std::future<GapRow>> jobs;
  for (double eps : eps_list)
    jobs.push_back(std::async(std::launch::async, [&, eps] {
      auto fail = [&](const std::exception& e) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "eps = %.6g: ", eps);
        return BuildError(buf + std::string(e.what()));
      };
      try {
        GapRow row;
        row.eps = eps;
        Built deep = build_smooth(f, eps, o.build);
        ShallowBuilt shallow = build_shallow_baseline(f, eps, o.shallow);
        row.nd = deep.report.counts.total;
        row.ld = deep.report.counts.depth;
        row.ns = shallow.report.counts.total;
        row.ls = shallow.report.counts.depth;
        row.deep_measured = deep.report.measured;
        row.shallow_measured = shallow.report.measured;
        row.deep_bits = deep.report.bits;
        row.deep_report = deep.report;
        row.shallow_report = shallow.report;
        int m = std::clamp(deep.report.bits + 4, o.min_resolution, o.max_resolution);
        row.deep_breakpoints = count_breakpoints_1d(deep.net, m).size();
        row.required = required_breakpoints(mu, eps, o.rho);
        row.shallow_bound = size_lower_bound(mu, eps, 1);
        row.depth_free = size_lower_bound(mu, eps);
        return row;
      } catch (const std::exception& e) {
        throw fail(e);
      }
    }));

  GapResult out;
  for (auto& j : jobs) out.rows.push_back(j.get());

  auto log2sq = [](double eps) { return std::pow(std::log2(1 / eps), 2); };
  out.fitted_c = static_cast<double>(out.rows[0].nd) / log2sq(out.rows[0].eps);
  for (auto& r : out.rows) {
    r.verdict_a = static_cast<double>(r.nd) <= out.fitted_c * log2sq(r.eps) * (1 + 1e-12) ? "pass" : "fail";
    r.verdict_b = r.shallow_bound.vacuous ? "vacuous"
                  : static_cast<double>(r.ns) >= r.shallow_bound.value ? "pass"
                                                                        : "fail";
    r.verdict_c = r.deep_measured <= r.eps && static_cast<std::int64_t>(r.deep_breakpoints) >= r.required.count
                      ? "pass"
                      : "fail";
    r.verdict_d = r.depth_free.vacuous ? "vacuous"
                  : static_cast<double>(r.nd) >= r.depth_free.value ? "pass"
                                                                     : "fail";
  }
  return out;
}

}  // namespace deepapprox
