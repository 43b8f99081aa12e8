#pragma once

// Univariate approximation targets on [0,1] with declared derivative bounds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/cheb_interp.hpp"

namespace deepapprox {

struct ApproxTarget {
  std::string name;
  std::function<double(double)> f;
  /// Optional high-precision evaluator used for interpolation samples.
  std::function<Precise(const Precise&)> precise;
  /// profile(n) >= sup_{[0,1]} |f^(n)|. Empty means uncertified.
  std::function<double(int)> profile;
  /// Strong convexity parameter, when the target has one.
  std::optional<double> mu;

  double operator()(double x) const { return f(x); }
  bool certified() const { return static_cast<bool>(profile); }
};

/// Monomial coefficients of f, sampled precisely when possible.
inline MonomialPoly interpolate_target(const ApproxTarget& t, int N, int max_degree = default_max_degree) {
  if (t.precise) return interpolate([&](const Precise& x) { return t.precise(x); }, N, max_degree);
  return interpolate([&](double x) { return t.f(x); }, N, max_degree);
}

/// sum a_i x^i. The profile uses sup |x| = 1 on [0,1].
inline ApproxTarget polynomial_target(std::vector<double> a, std::string name = "polynomial") {
  if (a.empty()) throw std::invalid_argument("polynomial needs at least one coefficient");
  ApproxTarget t;
  t.name = std::move(name);
  t.f = [a](double x) {
    double acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  t.precise = [a](const Precise& x) {
    Precise acc = 0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  t.profile = [a](int n) {
    double bound = 0.0;
    for (std::size_t i = static_cast<std::size_t>(std::max(n, 0)); i < a.size(); ++i) {
      double falling = 1.0;
      for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) falling *= static_cast<double>(i - k);
      bound += std::abs(a[i]) * falling;
    }
    return bound;
  };
  // second derivative bounded below on [0,1] when every coefficient is >= 0
  // and a_2 > 0; only that easy case is recorded
  bool nonneg = true;
  for (double c : a) nonneg = nonneg && c >= 0.0;
  if (nonneg && a.size() > 2 && a[2] > 0.0) t.mu = 2.0 * a[2];
  return t;
}

inline ApproxTarget identity_target() { return polynomial_target({0.0, 1.0}, "identity"); }
inline ApproxTarget square_target() { return polynomial_target({0.0, 0.0, 1.0}, "square"); }
inline ApproxTarget cube_target() { return polynomial_target({0.0, 0.0, 0.0, 1.0}, "cube"); }

/// e^{x-1}; every derivative is bounded by 1.
inline ApproxTarget exp_shift_target() {
  ApproxTarget t;
  t.name = "exp_shift";
  t.f = [](double x) { return std::exp(x - 1.0); };
  t.precise = [](const Precise& x) { return Precise(boost::multiprecision::exp(x - 1)); };
  t.profile = [](int) { return 1.0; };
  t.mu = std::exp(-1.0);
  return t;
}

/// e^{-x}.
inline ApproxTarget exp_neg_target() {
  ApproxTarget t;
  t.name = "exp_neg";
  t.f = [](double x) { return std::exp(-x); };
  t.precise = [](const Precise& x) { return Precise(boost::multiprecision::exp(-x)); };
  t.profile = [](int) { return 1.0; };
  t.mu = std::exp(-1.0);
  return t;
}

/// e^{-scale * x}; |f^(n)| <= scale^n.
inline ApproxTarget exp_scaled_target(double scale) {
  ApproxTarget t;
  t.name = "exp_neg_scaled";
  t.f = [scale](double x) { return std::exp(-scale * x); };
  t.precise = [scale](const Precise& x) { return Precise(boost::multiprecision::exp(-Precise(scale) * x)); };
  t.profile = [scale](int n) { return std::pow(scale, n); };
  return t;
}

/// log(1 + x); |f^(n)| <= (n-1)! for n >= 1.
inline ApproxTarget log1p_target() {
  ApproxTarget t;
  t.name = "log1p";
  t.f = [](double x) { return std::log1p(x); };
  t.precise = [](const Precise& x) { return Precise(boost::multiprecision::log(1 + x)); };
  t.profile = [](int n) { return n == 0 ? std::log(2.0) : std::tgamma(static_cast<double>(n)); };
  return t;
}

/// sin(x)/2 + 1/2 without a declared profile; builders reject it.
inline ApproxTarget sin_half_target() {
  ApproxTarget t;
  t.name = "sin_half";
  t.f = [](double x) { return std::sin(x) / 2.0 + 0.5; };
  return t;
}

inline ApproxTarget named_target(const std::string& name) {
  if (name == "identity") return identity_target();
  if (name == "square") return square_target();
  if (name == "cube") return cube_target();
  if (name == "exp_shift") return exp_shift_target();
  if (name == "exp_neg") return exp_neg_target();
  if (name == "log1p") return log1p_target();
  if (name == "sin_half") return sin_half_target();
  throw std::invalid_argument("unknown function '" + name + "'");
}

}  // namespace deepapprox
