#pragma once

// Sums, products and compositions of univariate targets, plus the ridge and
// Gaussian constructions.

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/grid.hpp"
#include "deepapprox/net_core.hpp"
#include "deepapprox/target.hpp"
#include "deepapprox/uni_builder.hpp"

namespace deepapprox {

namespace detail {

inline void check_l1_unit(std::span<const double> w, const char* what, bool nonneg) {
  if (w.empty()) throw std::invalid_argument(std::string(what) + " must be nonempty");
  double s = 0.0;
  for (double v : w) {
    if (nonneg && v < 0.0) throw std::invalid_argument(std::string(what) + " must be nonnegative");
    s += std::abs(v);
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + " must have l1 norm 1");
}

inline std::string stage_prefix(std::size_t m) { return "s" + std::to_string(m) + "."; }

}  // namespace detail

/// sum_i beta_i h_i on one decoder and one ladder of degree N = ceil(log2(2/eps)).
inline Built combine_sum(const std::vector<ApproxTarget>& h, const std::vector<double>& beta, double eps,
                         const BuildOptions& opts = {}) {
  check_epsilon(eps);
  if (h.size() != beta.size()) throw std::invalid_argument("combine_sum needs one weight per target");
  detail::check_l1_unit(beta, "sum weights", false);

  std::vector<double> coeffs;
  double bound = 0.0;
  int bits = 0;
  std::string name = "sum(";
  for (std::size_t i = 0; i < h.size(); ++i) {
    SmoothPlan plan = plan_smooth(h[i], eps, opts);
    bits = plan.bits;
    if (coeffs.size() < plan.coeffs.size()) coeffs.resize(plan.coeffs.size(), 0.0);
    for (std::size_t j = 0; j < plan.coeffs.size(); ++j) coeffs[j] += beta[i] * plan.coeffs[j];
    bound += std::abs(beta[i]) * plan.bound;
    name += (i ? "," : "") + h[i].name;
  }
  name += ")";

  SmoothPlan plan;
  plan.name = name;
  plan.bits = bits;
  plan.coeffs = coeffs;
  plan.degree = static_cast<int>(coeffs.size()) - 1;
  plan.bound = bound;

  ApproxTarget sum;
  sum.name = name;
  sum.f = [h, beta](double x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) acc += beta[i] * h[i](x);
    return acc;
  };
  return build_from_plan(sum, plan, eps, opts);
}

/// N = ceil(4k log2(4k) + 4k + 2 log2(2/eps)), the interpolation degree for a
/// product of k factors.
inline int product_degree(std::size_t k, double eps) {
  const double kk = static_cast<double>(k);
  return static_cast<int>(std::ceil(4 * kk * std::log2(4 * kk) + 4 * kk + 2 * std::log2(2 / eps) - 1e-9));
}

/// 2^{2k + k log2 N - N}, the remainder bound for the product interpolant.
inline double product_remainder(std::size_t k, int N) {
  const double kk = static_cast<double>(k);
  return std::exp2(2 * kk + kk * std::log2(static_cast<double>(N)) - N);
}

inline Built combine_product(const std::vector<ApproxTarget>& h, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  if (h.empty()) throw std::invalid_argument("combine_product needs at least one factor");
  const std::size_t k = h.size();
  const int N = product_degree(k, eps);
  if (N > opts.max_degree)
    throw BuildError("product of " + std::to_string(k) + " factors needs degree N = " + std::to_string(N) +
                     ", above the conditioning cap " + std::to_string(opts.max_degree));
  const double remainder = product_remainder(k, N);
  if (remainder > eps / 2) throw BuildError("product remainder bound exceeds eps/2 at N = " + std::to_string(N));

  std::string name = "product(";
  bool precise = true;
  for (std::size_t i = 0; i < k; ++i) {
    if (!h[i].certified()) throw BuildError("target '" + h[i].name + "' has no certified derivative profile");
    double fact = 1.0;
    for (int n = 0; n <= N + 1; ++n) {
      if (n > 0) fact *= n;
      if (h[i].profile(n) > fact * (1 + 1e-12))
        throw BuildError("target '" + h[i].name + "' violates |f^(" + std::to_string(n) + ")| <= " +
                         std::to_string(n) + "!");
    }
    precise = precise && static_cast<bool>(h[i].precise);
    name += (i ? "," : "") + h[i].name;
  }
  name += ")";

  ApproxTarget f;
  f.name = name;
  f.f = [h](double x) {
    double acc = 1.0;
    for (const auto& t : h) acc *= t(x);
    return acc;
  };
  if (precise)
    f.precise = [h](const Precise& x) {
      Precise acc = 1;
      for (const auto& t : h) acc *= t.precise(x);
      return acc;
    };

  std::vector<double> c = interpolate_target(f, N, opts.max_degree).c;
  const double tail = trim_coefficients(c);
  if (l1_tail(c) > 1.0 + 1e-9)
    throw BuildError("product interpolant violates sum_{i>=1} |c_i| <= 1 (got " + std::to_string(l1_tail(c)) + ")");

  const int n = ceil_log2(2.0 * N / eps) + 1;
  SmoothPlan plan;
  plan.name = name;
  plan.bits = n;
  plan.coeffs = c;
  plan.degree = static_cast<int>(c.size()) - 1;
  plan.tail = tail;
  plan.bound = remainder + N * std::ldexp(1.0, 1 - n) + tail;
  Built out = build_from_plan(f, plan, eps, opts);
  out.report.degree = N;
  return out;
}

/// Stage schedule for F = h_1 o h_2 o ... o h_K (h_1 outermost). Stage m >= 2
/// feeds its output, scaled by clamp[m], into stage m - 1.
struct CompositionPlan {
  std::vector<std::string> names;
  std::vector<double> lipschitz;   // sup |h_m'|
  std::vector<double> outer_lip;   // Lip(h_1 o ... o h_{m-1}); 1 for m = 1
  std::vector<double> tolerances;  // per stage
  std::vector<double> clamps;      // 1/(1 + t_m) for m >= 2, 1 for m = 1
};

/// t_1 = eps/3^{K-1}; t_m = eps/(3^{K-m+1} Lip(F_{m-1})) for m >= 2. With
/// 1-Lipschitz stages this is the eps/3^{K-m} cascade; steeper outer stages
/// shrink the inner tolerances so the total stays within eps.
inline CompositionPlan plan_composition(const std::vector<std::string>& names, const std::vector<double>& lipschitz,
                                        double eps) {
  const std::size_t K = names.size();
  if (K == 0) throw std::invalid_argument("composition needs at least one stage");
  CompositionPlan plan{names, lipschitz, {}, {}, {}};
  double lip = 1.0;
  for (std::size_t m = 1; m <= K; ++m) {
    plan.outer_lip.push_back(lip);
    double t = m == 1 ? eps / std::pow(3.0, static_cast<double>(K - 1))
                      : eps / (std::pow(3.0, static_cast<double>(K - m + 1)) * lip);
    plan.tolerances.push_back(t);
    plan.clamps.push_back(m == 1 ? 1.0 : 1.0 / (1.0 + t));
    lip *= lipschitz[m - 1];
  }
  return plan;
}

struct StageOutput {
  AffineForm out;
  double bound = 0.0;
  int bits = 0;
  int degree = 0;
};

/// The innermost stage reads the network input directly.
struct InnerStage {
  std::string name;
  std::function<StageOutput(Network&, double tol)> add;
  MultiFn truth;
};

struct Composed {
  Built built;
  CompositionPlan plan;
  /// Scaled stage outputs as fed to the next stage (index m - 1 for stage m).
  std::vector<AffineForm> stage_inputs;
  double stage_max = 0.0;
  double stage_min = 0.0;
  /// max over grid points of sum_m Lip(F_{m-1}) |h_m(z_m) - c_m o_m|.
  double audit_max = 0.0;
  /// Deviation bound of the realized cascade.
  double cascade_bound = 0.0;
};

namespace detail {

inline Composed compose_impl(std::size_t input_dim, const std::vector<ApproxTarget>& outer, const InnerStage& inner,
                             double eps, const GridSpec& grid, const MultiFn& truth, const std::string& name,
                             const BuildOptions& opts) {
  std::vector<std::string> names;
  std::vector<double> lips;
  for (const auto& h : outer) {
    if (!h.certified()) throw BuildError("target '" + h.name + "' has no certified derivative profile");
    names.push_back(h.name);
    lips.push_back(h.profile(1));
  }
  names.push_back(inner.name);
  lips.push_back(1.0);
  const std::size_t K = names.size();

  Composed out{Built{Network(input_dim), {}, {}}, plan_composition(names, lips, eps), {}, 0, 0, 0, 0};
  const CompositionPlan& plan = out.plan;
  Network& net = out.built.net;

  std::vector<StageOutput> stages(K);
  stages[K - 1] = inner.add(net, plan.tolerances[K - 1]);
  for (std::size_t m = K - 1; m >= 1; --m) {
    AffineForm input = stages[m].out.scaled(plan.clamps[m]);
    SmoothPlan sp = plan_smooth(outer[m - 1], plan.tolerances[m - 1], opts);
    stages[m - 1] = {add_smooth_stage(net, input, sp, stage_prefix(m)), sp.bound, sp.bits, sp.degree};
  }
  net.set_readout(stages[0].out);

  double B = 0.0;
  int bits = 0, degree = 0;
  for (std::size_t m = 1; m <= K; ++m) {
    double b = stages[m - 1].bound, t = plan.tolerances[m - 1];
    if (b > t * (1 + 1e-12))
      throw BuildError("stage " + std::to_string(m) + " (" + names[m - 1] + ") misses its tolerance");
    B += m == 1 ? b : plan.outer_lip[m - 1] * (b + (1 + b) * t / (1 + t));
    bits = std::max(bits, stages[m - 1].bits);
    degree = std::max(degree, stages[m - 1].degree);
  }
  if (B > eps * (1 + 1e-12)) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "composition deviation bound %.6g exceeds eps %.6g", B, eps);
    throw BuildError(buf);
  }
  out.cascade_bound = B;
  for (std::size_t m = 1; m <= K; ++m) out.stage_inputs.push_back(stages[m - 1].out.scaled(plan.clamps[m - 1]));

  // per-point measurement, stage range and triangle-inequality audit
  PointSet pts = make_points(grid);
  Evaluator ev(net);
  double measured = 0.0, smax = -INFINITY, smin = INFINITY, audit = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto x = pts[i];
    ev.run(x);
    double y = ev.value(net.readout());
    measured = std::max(measured, std::abs(y - truth(x)));
    double sum = 0.0;
    for (std::size_t m = K; m >= 1; --m) {
      double o = ev.value(out.stage_inputs[m - 1]);
      double expect;
      if (m == K) {
        expect = inner.truth(x);
      } else {
        double z = std::max(0.0, ev.value(out.stage_inputs[m]));
        expect = outer[m - 1](z);
      }
      if (m >= 2) {
        smax = std::max(smax, o);
        smin = std::min(smin, o);
      }
      sum += plan.outer_lip[m - 1] * std::abs(expect - o);
    }
    audit = std::max(audit, sum);
  }
  if (K >= 2 && smax > 1.0 + bound_slack) throw BuildError("a scaled stage output exceeds 1");
  out.stage_max = K >= 2 ? smax : 0.0;
  out.stage_min = K >= 2 ? smin : 0.0;
  out.audit_max = audit;

  out.built.report = make_report(name, eps, net, bits, degree, B, measured, grid, opts.seed);
  check_report(out.built.report);
  if (audit > eps + bound_slack) throw BuildError("composition audit exceeds eps");
  return out;
}

inline InnerStage univariate_inner(const ApproxTarget& h, const BuildOptions& opts, std::size_t index) {
  return {h.name,
          [h, opts, index](Network& net, double tol) {
            SmoothPlan sp = plan_smooth(h, tol, opts);
            AffineForm x = form_of(net.input(0));
            return StageOutput{add_smooth_stage(net, x, sp, stage_prefix(index)), sp.bound, sp.bits, sp.degree};
          },
          [h](std::span<const double> x) { return h(x[0]); }};
}

}  // namespace detail

/// h_1 o h_2 o ... o h_k on [0,1]; the stages are listed outermost first.
inline Composed compose(const std::vector<ApproxTarget>& h, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  if (h.empty()) throw std::invalid_argument("compose needs at least one stage");
  std::vector<ApproxTarget> outer(h.begin(), h.end() - 1);
  std::string name;
  for (std::size_t i = 0; i < h.size(); ++i) name += (i ? " o " : "") + h[i].name;
  MultiFn truth = [h](std::span<const double> x) {
    double v = x[0];
    for (auto it = h.rbegin(); it != h.rend(); ++it) v = (*it)(v);
    return v;
  };
  int bits_hint = ceil_log2(2.0 / eps) + static_cast<int>(h.size());
  return detail::compose_impl(1, outer, detail::univariate_inner(h.back(), opts, h.size()), eps,
                              verification_grid_1d(bits_hint, opts.grid_points), truth, name, opts);
}

/// g(a^T x) with a >= 0 and |a|_1 = 1; the decoder reads the affine form a^T x.
inline Built build_ridge(const std::vector<double>& a, const ApproxTarget& g, double eps,
                         const BuildOptions& opts = {}) {
  check_epsilon(eps);
  detail::check_l1_unit(a, "ridge direction", true);
  SmoothPlan plan = plan_smooth(g, eps, opts);
  Network net(a.size());
  AffineForm t;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0.0) t.terms.push_back({net.input(i), a[i]});
  net.set_readout(add_smooth_stage(net, t, plan));

  GridSpec grid = verification_grid_nd(a.size(), opts.seed, opts.grid_points);
  double measured = sup_error(net, make_points(grid), MultiFn([&](std::span<const double> x) {
                                double s = 0.0;
                                for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
                                return g(s);
                              }));
  Built out{std::move(net), {}, plan.coeffs};
  out.report = make_report("ridge(" + g.name + ")", eps, out.net, plan.bits, plan.degree, plan.bound, measured, grid,
                           opts.seed);
  check_report(out.report);
  return out;
}

/// exp(-|x|^2 / 2) on [0,1]^d: d square subnets within eps/d feed
/// u = sum g_i / (2d) into an approximation of u -> exp(-d u) within eps/2.
inline Built build_gaussian(std::size_t d, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  if (d == 0) throw std::invalid_argument("gaussian dimension must be positive");
  const double dd = static_cast<double>(d);
  const int n = ceil_log2(dd / eps) + 1;
  Network net(d);
  AffineForm u;
  for (std::size_t i = 0; i < d; ++i) {
    std::string prefix = "x" + std::to_string(i + 1) + ".";
    DecoderFragment dec = add_decoder(net, form_of(net.input(i)), n, prefix);
    for (int j = 0; j <= n; ++j) {
      NodeRef unit = net.add(bit_gate(dec.bit(j), dec.truncation().scaled(std::ldexp(1.0, -j))));
      net.tag(prefix + "g_2." + std::to_string(j), unit);
      u.terms.push_back({unit, 1.0 / (2.0 * dd)});
    }
  }
  const double square_part = dd * std::ldexp(1.0, 1 - n) / 2.0;

  // u -> exp(-d u) has |f^(m)| <= d^m, so the degree may need to exceed
  // ceil(log2(2 / (eps/2))) before the remainder certifies eps/2.
  ApproxTarget outer = exp_scaled_target(dd);
  const double tol = eps / 2;
  SmoothPlan plan;
  for (int N = std::max(1, ceil_log2(2.0 / tol));; ++N) {
    if (N > opts.max_degree)
      throw BuildError("gaussian outer stage needs degree above the conditioning cap " +
                       std::to_string(opts.max_degree));
    plan = plan_smooth_degree(outer, N, opts);
    if (plan.bound <= tol) break;
  }
  net.set_readout(add_smooth_stage(net, u, plan, "outer."));

  GridSpec grid = verification_grid_nd(d, opts.seed, opts.grid_points);
  double measured = sup_error(net, make_points(grid), MultiFn([](std::span<const double> x) {
                                double s = 0.0;
                                for (double v : x) s += v * v;
                                return std::exp(-s / 2);
                              }));
  Built out{std::move(net), {}, plan.coeffs};
  out.report = make_report("gaussian", eps, out.net, plan.bits, plan.degree, square_part + plan.bound, measured, grid,
                           opts.seed);
  check_report(out.report);
  return out;
}

}  // namespace deepapprox
