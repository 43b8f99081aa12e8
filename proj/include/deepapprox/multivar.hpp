#pragma once

// Multivariate constructions on [0,1]^d: products of linear forms, general
// polynomials, and polynomials followed by a chain of univariate stages.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/bit_decoder.hpp"
#include "deepapprox/combinators.hpp"
#include "deepapprox/grid.hpp"
#include "deepapprox/net_core.hpp"
#include "deepapprox/uni_builder.hpp"

namespace deepapprox {

using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

/// C(n, k) in double precision (exact while it fits in 53 bits).
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

/// All alpha in N^d with |alpha| <= p in lexicographic order; C(p+d, d) of them.
inline std::vector<MultiIndex> enumerate_multi_indices(int d, int p, std::size_t cap = 1000000) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (p < 0) throw std::invalid_argument("degree must be nonnegative");
  const double total = binomial(p + d, d);
  if (total > static_cast<double>(cap))
    throw std::invalid_argument("multi-index count " + std::to_string(static_cast<long long>(total)) +
                                " exceeds the cap " + std::to_string(cap));
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(total));
  MultiIndex a(d, 0);
  // the first coordinate varies slowest, which gives lexicographic order
  std::function<void(int, int)> fill = [&](int j, int left) {
    if (j == d) {
      out.push_back(a);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[j] = v;
      fill(j + 1, left - v);
    }
    a[j] = 0;
  };
  fill(0, p);
  return out;
}

/// Rows w_1..w_p of length d, each with |w_i|_1 = 1.
using LinearFormSet = std::vector<std::vector<double>>;

namespace detail {

inline std::vector<DecoderFragment> add_coordinate_decoders(Network& net, const std::vector<bool>& used, int n) {
  std::vector<DecoderFragment> decs(used.size());
  for (std::size_t k = 0; k < used.size(); ++k)
    if (used[k]) decs[k] = add_decoder(net, form_of(net.input(k)), n, "x" + std::to_string(k + 1) + ".", 1);
  return decs;
}

/// sum_r gate(bit_r, 2^-r g) over the fractional bits of one coordinate,
/// scaled by w.
inline AffineForm add_coordinate_stage(Network& net, const DecoderFragment& dec, const AffineForm& g, double w,
                                       const std::string& tag) {
  AffineForm out;
  for (int r = dec.first_bit; r <= dec.bit_count; ++r) {
    NodeRef unit = net.add(bit_gate(dec.bit(r), g.scaled(std::ldexp(1.0, -r))));
    net.tag(tag + "." + std::to_string(r), unit);
    out.terms.push_back({unit, w});
  }
  return out;
}

}  // namespace detail

struct RangeCheck {
  bool ok = true;
  std::vector<double> witness;
  std::string message;
};

/// prod_i (w_i^T x) with n = ceil(log2(pd/eps)) fractional bits per coordinate.
/// Stage l computes g_l = sum_k w_lk sum_r gate(x_r^(k), 2^-r g_{l-1}) with
/// g_0 = 1; the gadget needs every intermediate g_l in [0,1], which is checked
/// on the grid.
inline Built build_linear_product(const LinearFormSet& W, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  if (W.empty()) throw std::invalid_argument("linear product needs at least one form");
  const std::size_t p = W.size(), d = W[0].size();
  for (const auto& row : W) {
    if (row.size() != d) throw std::invalid_argument("linear forms must share one dimension");
    detail::check_l1_unit(row, "linear form", false);
  }
  const int n = ceil_log2(static_cast<double>(p * d) / eps);
  Network net(d);
  std::vector<bool> used(d, false);
  for (const auto& row : W)
    for (std::size_t k = 0; k < d; ++k) used[k] = used[k] || row[k] != 0.0;
  std::vector<DecoderFragment> decs = detail::add_coordinate_decoders(net, used, n);

  std::vector<AffineForm> g{AffineForm{{}, 1.0}};
  for (std::size_t l = 0; l < p; ++l) {
    AffineForm next;
    for (std::size_t k = 0; k < d; ++k)
      if (W[l][k] != 0.0)
        next += detail::add_coordinate_stage(net, decs[k], g.back(), W[l][k],
                                             "g_" + std::to_string(l + 1) + ".x" + std::to_string(k + 1));
    g.push_back(std::move(next));
  }
  net.set_readout(g.back());

  GridSpec grid = verification_grid_nd(d, opts.seed, opts.grid_points);
  PointSet pts = make_points(grid);
  Evaluator ev(net);
  double measured = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto x = pts[i];
    ev.run(x);
    double exact = 1.0, truncated = 1.0;
    for (std::size_t l = 0; l < p; ++l) {
      double s = 0.0, st = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        if (W[l][k] == 0.0) continue;
        s += W[l][k] * x[k];
        st += W[l][k] * ev.value(decs[k].truncation());
      }
      exact *= s;
      truncated *= st;
      double gl = ev.value(g[l + 1]);
      bool intermediate = l + 1 < p;
      bool bad = intermediate ? (truncated < -bound_slack || truncated > 1 + bound_slack || gl < -bound_slack ||
                                 gl > 1 + bound_slack)
                              : std::abs(gl) > 1 + bound_slack;
      if (bad) {
        std::string where;
        for (std::size_t k = 0; k < d; ++k) where += (k ? "," : "") + std::to_string(x[k]);
        throw BuildError("linear product: g_" + std::to_string(l + 1) + " leaves [0,1] at x = (" + where + ")");
      }
    }
    measured = std::max(measured, std::abs(ev.value(net.readout()) - exact));
  }
  Built out{std::move(net), {}, {}};
  out.report = make_report("linear_product", eps, out.net, n, static_cast<int>(p),
                           static_cast<double>(p * d) * std::ldexp(1.0, -n), measured, grid, opts.seed);
  check_report(out.report);
  return out;
}

/// Coefficients C_alpha; equal multi-indices are merged.
using MultinomialSpec = std::map<MultiIndex, double>;

inline double evaluate_multinomial(const MultinomialSpec& C, std::span<const double> x) {
  double acc = 0.0;
  for (const auto& [alpha, c] : C) {
    double term = c;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      for (int e = 0; e < alpha[j]; ++e) term *= x[j];
    acc += term;
  }
  return acc;
}

/// p^2 C(p+d-1, d-1) log2(pd/eps).
inline double multinomial_size_formula(int d, int p, double eps) {
  return static_cast<double>(p) * p * binomial(p + d - 1, d - 1) * std::log2(static_cast<double>(p) * d / eps);
}

struct MultinomialStage {
  AffineForm out;
  int bits = 0;
  int degree = 0;
  double bound = 0.0;
};

namespace detail {

inline void check_multinomial(const MultinomialSpec& C, std::size_t& d, int& p) {
  if (C.empty()) throw std::invalid_argument("multinomial needs at least one term");
  d = C.begin()->first.size();
  if (d == 0) throw std::invalid_argument("multi-index dimension must be positive");
  double l1 = 0.0;
  p = 0;
  for (const auto& [alpha, c] : C) {
    if (alpha.size() != d) throw std::invalid_argument("multi-indices must share one dimension");
    for (int v : alpha)
      if (v < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
    l1 += std::abs(c);
    p = std::max(p, degree(alpha));
  }
  if (l1 > 1.0 + bound_slack) throw std::invalid_argument("multinomial coefficients violate sum |C_alpha| <= 1");
}

}  // namespace detail

/// Shared fractional decoders for the coordinates in use; each term x^alpha
/// starts from the truncated first factor and multiplies in the remaining
/// |alpha| - 1 factors one gadget stage at a time.
inline MultinomialStage add_multinomial(Network& net, const MultinomialSpec& C, double eps,
                                        const std::string& prefix = "") {
  std::size_t d = 0;
  int p = 0;
  detail::check_multinomial(C, d, p);
  if (net.input_dim() != d) throw std::invalid_argument("multinomial dimension does not match the network");
  const int pp = std::max(p, 1);
  const int n = ceil_log2(static_cast<double>(pp) * d / eps);

  std::vector<bool> used(d, false);
  for (const auto& [alpha, c] : C)
    for (std::size_t j = 0; j < d; ++j) used[j] = used[j] || (alpha[j] > 0 && c != 0.0);
  bool any = false;
  for (bool u : used) any = any || u;
  if (!any) used[0] = true;  // keep at least one hidden layer
  std::vector<DecoderFragment> decs(d);
  for (std::size_t j = 0; j < d; ++j)
    if (used[j]) decs[j] = add_decoder(net, form_of(net.input(j)), n, prefix + "x" + std::to_string(j + 1) + ".", 1);

  MultinomialStage stage;
  stage.bits = n;
  stage.degree = p;
  stage.bound = static_cast<double>(pp) * d * std::ldexp(1.0, -n);
  std::size_t term = 0;
  for (const auto& [alpha, c] : C) {
    ++term;
    if (c == 0.0) continue;
    if (degree(alpha) == 0) {
      stage.out.bias += c;
      continue;
    }
    AffineForm g;
    bool first = true;
    int step = 0;
    for (std::size_t j = 0; j < d; ++j)
      for (int e = 0; e < alpha[j]; ++e) {
        if (first) {
          g = decs[j].truncation();
          first = false;
        } else {
          g = detail::add_coordinate_stage(net, decs[j], g, 1.0,
                                           prefix + "t" + std::to_string(term) + "." + std::to_string(++step));
        }
      }
    stage.out += g.scaled(c);
  }
  return stage;
}

inline Built build_multinomial(const MultinomialSpec& C, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  std::size_t d = 0;
  int p = 0;
  detail::check_multinomial(C, d, p);
  Network net(d);
  MultinomialStage stage = add_multinomial(net, C, eps);
  net.set_readout(stage.out);
  GridSpec grid = verification_grid_nd(d, opts.seed, opts.grid_points);
  double measured =
      sup_error(net, make_points(grid), MultiFn([&](std::span<const double> x) { return evaluate_multinomial(C, x); }));
  std::vector<double> coeffs;
  for (const auto& [alpha, c] : C) coeffs.push_back(c);
  Built out{std::move(net), {}, coeffs};
  out.report = make_report("multinomial", eps, out.net, stage.bits, p, stage.bound, measured, grid, opts.seed);
  check_report(out.report);
  return out;
}

/// Grid check that the inner polynomial maps into [0,1].
inline RangeCheck check_unit_range(const MultinomialSpec& C, const PointSet& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = evaluate_multinomial(C, pts[i]);
    if (v < -bound_slack || v > 1 + bound_slack) {
      RangeCheck r;
      r.ok = false;
      r.witness.assign(pts[i].begin(), pts[i].end());
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      r.message = "inner polynomial takes value " + std::string(buf) + " at x = (";
      for (std::size_t k = 0; k < r.witness.size(); ++k) r.message += (k ? "," : "") + std::to_string(r.witness[k]);
      r.message += ")";
      return r;
    }
  }
  return {};
}

/// h_1 o ... o h_k o l with l a multinomial into [0,1]; k = 0 is l alone.
inline Composed build_poly_then_chain(const MultinomialSpec& l, const std::vector<ApproxTarget>& chain, double eps,
                                      const BuildOptions& opts = {}) {
  check_epsilon(eps);
  std::size_t d = 0;
  int p = 0;
  detail::check_multinomial(l, d, p);
  GridSpec grid = verification_grid_nd(d, opts.seed, opts.grid_points);
  RangeCheck range = check_unit_range(l, make_points(grid));
  if (!range.ok) throw BuildError("poly_then_chain: " + range.message);

  if (chain.empty()) {
    Built b = build_multinomial(l, eps, opts);
    CompositionPlan plan = plan_composition({"multinomial"}, {1.0}, eps);
    AffineForm out = b.net.readout();
    const double measured = b.report.measured, bound = b.report.bound;
    return {std::move(b), plan, {out}, 0.0, 0.0, measured, bound};
  }

  InnerStage inner{"multinomial",
                   [l](Network& net, double tol) {
                     MultinomialStage s = add_multinomial(net, l, tol, "s0.");
                     return StageOutput{s.out, s.bound, s.bits, s.degree};
                   },
                   [l](std::span<const double> x) { return evaluate_multinomial(l, x); }};
  std::string name;
  for (const auto& h : chain) name += h.name + " o ";
  name += "multinomial";
  MultiFn truth = [l, chain](std::span<const double> x) {
    double v = evaluate_multinomial(l, x);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) v = (*it)(v);
    return v;
  };
  return detail::compose_impl(d, chain, inner, eps, grid, truth, name, opts);
}

}  // namespace deepapprox
