#pragma once

// Univariate constructions: x^2, polynomials through a ladder of monomials,
// and smooth functions through Chebyshev interpolation.
//
// Multiplication by a bit uses one relu: max(0, 2(b - 1) + y) = b * y for
// b in {0,1} and y in [0,2].

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/bit_decoder.hpp"
#include "deepapprox/cheb_interp.hpp"
#include "deepapprox/grid.hpp"
#include "deepapprox/net_core.hpp"
#include "deepapprox/target.hpp"

namespace deepapprox {

/// A construction could not meet its tolerance or its preconditions on the
/// target (conditioning cap, missing derivative profile, range violation).
class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BuildOptions {
  std::size_t grid_points = 100000;
  std::uint64_t seed = 0;
  int max_degree = default_max_degree;
};

struct BuildReport {
  std::string function;
  double epsilon = 0.0;
  Counts counts;
  std::size_t strict_total = 0;
  int bits = 0;
  int degree = 0;
  double bound = 0.0;
  double measured = 0.0;
  std::string grid;
  std::uint64_t seed = 0;
};

struct Built {
  Network net;
  BuildReport report;
  std::vector<double> readout_coefficients;
};

inline constexpr double bound_slack = 1e-12;

/// Smallest k with 2^k >= x, exact at powers of two.
inline int ceil_log2(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("ceil_log2 needs a positive finite argument");
  int e = 0;
  double m = std::frexp(x, &e);
  return m == 0.5 ? e - 1 : e;
}

inline void check_epsilon(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps out of range (0, 1)");
}

inline AffineForm form_of(NodeRef ref, double weight = 1.0) { return {{{ref, weight}}, 0.0}; }

inline Neuron bit_gate(NodeRef b, const AffineForm& y) {
  Neuron n;
  n.act = Activation::relu;
  n.bias = -2.0 + y.bias;
  n.inputs.push_back({b, 2.0});
  n.inputs.insert(n.inputs.end(), y.terms.begin(), y.terms.end());
  n.nonneg = true;
  return n;
}

/// Stages g_1..g_p with g_m = sum_j gate(bit_j, 2^-j g_{m-1}) and g_0 = 1.
/// powers[m] is g_m as a form over the stage's units; unit j of stage m is
/// tagged prefix + "g_m.j".
inline std::vector<AffineForm> add_power_stages(Network& net, const DecoderFragment& dec, int p,
                                                const std::string& prefix = "") {
  std::vector<AffineForm> powers{AffineForm{{}, 1.0}};
  for (int m = 1; m <= p; ++m) {
    AffineForm g;
    for (int j = dec.first_bit; j <= dec.bit_count; ++j) {
      NodeRef unit = net.add(bit_gate(dec.bit(j), powers.back().scaled(std::ldexp(1.0, -j))));
      net.tag(prefix + "g_" + std::to_string(m) + "." + std::to_string(j), unit);
      g.terms.push_back({unit, 1.0});
    }
    powers.push_back(std::move(g));
  }
  return powers;
}

struct Ladder {
  DecoderFragment decoder;
  std::vector<AffineForm> powers;
};

inline Ladder add_ladder(Network& net, const AffineForm& input, int n, int p, const std::string& prefix = "") {
  if (p < 0) throw std::invalid_argument("ladder degree must be nonnegative");
  Ladder ladder;
  ladder.decoder = add_decoder(net, input, n, prefix);
  ladder.powers = add_power_stages(net, ladder.decoder, p, prefix);
  return ladder;
}

/// c_0 + sum_{i>=1} c_i powers[i].
inline AffineForm combine_powers(const std::vector<AffineForm>& powers, const std::vector<double>& c) {
  if (c.size() > powers.size()) throw std::invalid_argument("more coefficients than ladder stages");
  AffineForm out;
  if (!c.empty()) out.bias = c[0];
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] != 0.0) out += powers[i].scaled(c[i]);
  return out;
}

struct MonomialNet {
  Network net;
  Ladder ladder;
};

/// Decoder with n bits and p stages; the readout is g_p.
inline MonomialNet build_monomials(int p, int n) {
  if (p < 1) throw std::invalid_argument("monomial ladder needs p >= 1");
  if (n < 0) throw std::invalid_argument("bit count must be nonnegative");
  Network net(1);
  Ladder ladder = add_ladder(net, form_of(net.input(0)), n, p);
  net.set_readout(ladder.powers.back());
  return {std::move(net), std::move(ladder)};
}

/// sup over the points of |net(x) - f(x)|.
inline double measure_1d(const Network& net, const std::function<double(double)>& f, const GridSpec& grid) {
  return sup_error(net, make_points(grid), f);
}

inline BuildReport make_report(std::string function, double eps, const Network& net, int bits, int degree,
                               double bound, double measured, const GridSpec& grid, std::uint64_t seed) {
  BuildReport r;
  r.function = std::move(function);
  r.epsilon = eps;
  r.counts = count(net);
  r.strict_total = count(to_strict(net)).total;
  r.bits = bits;
  r.degree = degree;
  r.bound = bound;
  r.measured = measured;
  r.grid = describe(grid);
  r.seed = seed;
  return r;
}

inline void check_report(const BuildReport& r) {
  if (!(r.measured <= r.bound + bound_slack)) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: measured error %.6g exceeds the bound %.6g", r.function.c_str(), r.measured,
                  r.bound);
    throw BuildError(buf);
  }
}

/// Decoder with n = ceil(log2(1/eps)) + 1 bits and one layer of n + 1 gates
/// computing sum_i bit_i 2^-i sum_j 2^-j bit_j, which is truncate(x, n)^2.
inline Built build_square(double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  const int n = ceil_log2(1.0 / eps) + 1;
  Network net(1);
  DecoderFragment dec = add_decoder(net, form_of(net.input(0)), n);
  AffineForm readout;
  for (int i = 0; i <= n; ++i) {
    NodeRef unit = net.add(bit_gate(dec.bit(i), dec.truncation().scaled(std::ldexp(1.0, -i))));
    net.tag("g_2." + std::to_string(i), unit);
    readout.terms.push_back({unit, 1.0});
  }
  net.set_readout(readout);

  GridSpec grid = verification_grid_1d(n, opts.grid_points);
  double measured = measure_1d(net, [](double x) { return x * x; }, grid);
  Built out{std::move(net), {}, {0.0, 0.0, 1.0}};
  out.report = make_report("square", eps, out.net, n, 2, std::ldexp(1.0, 1 - n), measured, grid, opts.seed);
  check_report(out.report);
  return out;
}

inline double l1_tail(const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t i = 1; i < a.size(); ++i) s += std::abs(a[i]);
  return s;
}

/// sum a_i x^i with sum_{i>=1} |a_i| <= 1 on n = ceil(log2(p/eps)) + 1 bits.
inline Built build_polynomial(std::vector<double> a, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  if (a.size() < 2) throw std::invalid_argument("polynomial degree must be at least 1");
  if (l1_tail(a) > 1.0 + bound_slack)
    throw std::invalid_argument("polynomial coefficients violate sum_{i>=1} |a_i| <= 1");
  const int p = static_cast<int>(a.size()) - 1;
  const int n = ceil_log2(p / eps) + 1;
  Network net(1);
  Ladder ladder = add_ladder(net, form_of(net.input(0)), n, p);
  net.set_readout(combine_powers(ladder.powers, a));

  ApproxTarget target = polynomial_target(a);
  GridSpec grid = verification_grid_1d(n, opts.grid_points);
  double measured = measure_1d(net, target.f, grid);
  Built out{std::move(net), {}, a};
  out.report = make_report("polynomial", eps, out.net, n, p, p * std::ldexp(1.0, 1 - n), measured, grid, opts.seed);
  check_report(out.report);
  return out;
}

/// Interpolation coefficients with the trailing negligible part removed.
struct SmoothPlan {
  std::string name;
  int bits = 0;
  int degree = 0;
  std::vector<double> coeffs;
  /// Guaranteed sup error of the stage on inputs in [0,1].
  double bound = 0.0;
  /// Sum of the dropped coefficient magnitudes (included in bound).
  double tail = 0.0;
};

inline constexpr double trim_threshold = 1e-20;

/// Drops trailing coefficients while their total magnitude stays below the
/// threshold; returns that total.
inline double trim_coefficients(std::vector<double>& c, double threshold = trim_threshold) {
  double tail = 0.0;
  while (c.size() > 1 && tail + std::abs(c.back()) <= threshold) {
    tail += std::abs(c.back());
    c.pop_back();
  }
  return tail;
}

/// Degree-N interpolant on N bits. The stage error splits into the decoder
/// part sup|f'| 2^-N and the interpolation remainder.
inline SmoothPlan plan_smooth_degree(const ApproxTarget& t, int N, const BuildOptions& opts = {}) {
  if (!t.certified()) throw BuildError("target '" + t.name + "' has no certified derivative profile");
  if (N > opts.max_degree)
    throw BuildError("target '" + t.name + "' needs degree " + std::to_string(N) + ", above the conditioning cap " +
                     std::to_string(opts.max_degree));
  SmoothPlan plan;
  plan.name = t.name;
  plan.bits = N;
  plan.coeffs = interpolate_target(t, N, opts.max_degree).c;
  plan.tail = trim_coefficients(plan.coeffs);
  plan.degree = static_cast<int>(plan.coeffs.size()) - 1;
  plan.bound = t.profile(1) * std::ldexp(1.0, -N) + remainder_bound(N, t.profile(N + 1)) + plan.tail;
  return plan;
}

/// N = ceil(log2(2/tol)); rejects targets whose profile does not certify tol.
inline SmoothPlan plan_smooth(const ApproxTarget& t, double tol, const BuildOptions& opts = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!t.certified()) throw BuildError("target '" + t.name + "' has no certified derivative profile");
  const int N = std::max(1, ceil_log2(2.0 / tol));
  SmoothPlan plan = plan_smooth_degree(t, N, opts);
  if (plan.bound > tol) {
    char buf[240];
    std::snprintf(buf, sizeof buf, "target '%s': derivative profile only certifies %.6g at degree %d, need %.6g",
                  t.name.c_str(), plan.bound, N, tol);
    throw BuildError(buf);
  }
  return plan;
}

/// Adds decoder and ladder for the plan over the input form; returns the
/// stage output sum c_n g_n.
inline AffineForm add_smooth_stage(Network& net, const AffineForm& input, const SmoothPlan& plan,
                                   const std::string& prefix = "") {
  Ladder ladder = add_ladder(net, input, plan.bits, plan.degree, prefix);
  return combine_powers(ladder.powers, plan.coeffs);
}

inline Built build_from_plan(const ApproxTarget& t, const SmoothPlan& plan, double eps, const BuildOptions& opts) {
  Network net(1);
  net.set_readout(add_smooth_stage(net, form_of(net.input(0)), plan));
  GridSpec grid = verification_grid_1d(plan.bits, opts.grid_points);
  double measured = measure_1d(net, t.f, grid);
  Built out{std::move(net), {}, plan.coeffs};
  out.report = make_report(t.name, eps, out.net, plan.bits, plan.degree, plan.bound, measured, grid, opts.seed);
  check_report(out.report);
  return out;
}

inline Built build_smooth(const ApproxTarget& t, double eps, const BuildOptions& opts = {}) {
  check_epsilon(eps);
  return build_from_plan(t, plan_smooth(t, eps, opts), eps, opts);
}

}  // namespace deepapprox
