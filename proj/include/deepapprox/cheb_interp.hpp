#pragma once

// Polynomial interpolation at Chebyshev nodes mapped to [0,1].
//
// Monomial coefficients come from expanding the Newton form of the divided
// difference table. The expansion is badly conditioned in double precision
// (coefficients lose ~1e-5 already at degree 15), so it runs in 100-digit
// binary floating point. Samples are taken in that precision too when the
// function accepts a Precise argument; a double-only function gets double
// samples and correspondingly noisier coefficients.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace deepapprox {

using Precise = boost::multiprecision::cpp_bin_float_100;

inline constexpr int default_max_degree = 48;

struct ChebGrid {
  int degree = 0;
  std::vector<double> z;       // cos((i + 1/2) pi / (N + 1)), decreasing
  std::vector<double> mapped;  // (z + 1) / 2
};

inline ChebGrid cheb_points(int N) {
  if (N < 0) throw std::invalid_argument("Chebyshev degree must be nonnegative");
  ChebGrid g;
  g.degree = N;
  for (int i = 0; i <= N; ++i) {
    double z = std::cos((i + 0.5) * std::numbers::pi / (N + 1));
    g.z.push_back(z);
    g.mapped.push_back((z + 1.0) / 2.0);
  }
  return g;
}

/// Coefficients c_0..c_N of P(x) = sum c_n x^n.
struct MonomialPoly {
  std::vector<double> c;

  int degree() const { return static_cast<int>(c.size()) - 1; }

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
};

namespace detail {

inline std::vector<Precise> precise_mapped_nodes(int N) {
  const Precise pi = boost::math::constants::pi<Precise>();
  std::vector<Precise> nodes;
  for (int i = 0; i <= N; ++i) nodes.push_back((boost::multiprecision::cos((Precise(i) + 0.5) * pi / (N + 1)) + 1) / 2);
  return nodes;
}

inline std::vector<double> newton_to_monomial(const std::vector<Precise>& nodes, std::vector<Precise> values) {
  const std::size_t m = nodes.size();
  // values becomes the divided differences f[x_0..x_k]
  for (std::size_t k = 1; k < m; ++k)
    for (std::size_t i = m - 1; i >= k; --i) values[i] = (values[i] - values[i - 1]) / (nodes[i] - nodes[i - k]);

  std::vector<Precise> poly{values[m - 1]};
  for (std::size_t k = m - 1; k-- > 0;) {
    std::vector<Precise> next(poly.size() + 1, Precise(0));
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] += poly[i];
      next[i] -= nodes[k] * poly[i];
    }
    next[0] += values[k];
    poly = std::move(next);
  }
  std::vector<double> c;
  for (const auto& v : poly) c.push_back(static_cast<double>(v));
  return c;
}

inline void check_degree(int N, int max_degree) {
  if (N < 0) throw std::invalid_argument("interpolation degree must be nonnegative");
  if (N > max_degree)
    throw std::invalid_argument("interpolation degree " + std::to_string(N) + " exceeds the conditioning cap " +
                                std::to_string(max_degree));
}

}  // namespace detail

/// Degree-N interpolant of f at the mapped Chebyshev nodes.
template <class F>
MonomialPoly interpolate(F&& f, int N, int max_degree = default_max_degree) {
  detail::check_degree(N, max_degree);
  std::vector<Precise> nodes = detail::precise_mapped_nodes(N);
  std::vector<Precise> values;
  if constexpr (std::is_invocable_v<F&, const Precise&>) {
    for (const auto& x : nodes) values.push_back(Precise(f(x)));
  } else {
    // use the double nodes so samples and nodes describe the same points
    for (auto& x : nodes) {
      double xd = static_cast<double>(x);
      x = xd;
      values.push_back(Precise(f(xd)));
    }
  }
  return {detail::newton_to_monomial(nodes, std::move(values))};
}

/// Barycentric evaluation from samples f(mapped_i), i = 0..N. Returns the
/// sample itself when x coincides with a node.
inline double lagrange_eval(std::span<const double> samples, double x) {
  if (samples.empty()) throw std::invalid_argument("lagrange_eval needs at least one sample");
  const int N = static_cast<int>(samples.size()) - 1;
  ChebGrid g = cheb_points(N);
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= N; ++i) {
    double diff = x - g.mapped[i];
    if (diff == 0.0) return samples[i];
    double w = ((i % 2) ? -1.0 : 1.0) * std::sin((i + 0.5) * std::numbers::pi / (N + 1)) / diff;
    num += w * samples[i];
    den += w;
  }
  return num / den;
}

/// deriv_bound / (2^N (N+1)!), in the log domain once (N+1)! overflows.
inline double remainder_bound(int N, double deriv_bound) {
  if (N < 0) throw std::invalid_argument("degree must be nonnegative");
  if (!(deriv_bound >= 0.0)) throw std::invalid_argument("derivative bound must be nonnegative");
  if (deriv_bound == 0.0) return 0.0;
  if (N + 1 <= 170) {
    double fact = 1.0;
    for (int k = 2; k <= N + 1; ++k) fact *= k;
    return deriv_bound / std::ldexp(fact, N);
  }
  return std::exp(std::log(deriv_bound) - N * std::log(2.0) - std::lgamma(N + 2.0));
}

}  // namespace deepapprox
