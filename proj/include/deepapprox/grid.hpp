#pragma once

// Evaluation grids on [0,1]^d and sup-norm measurement helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "deepapprox/net_core.hpp"

namespace deepapprox {

/// M equispaced points i/(M-1) on [0,1] (the single point 0 when M = 1).
struct UniformGrid {
  std::size_t points = 0;
};

/// Uniform grid plus k/2^level +- delta for every k, clipped to [0,1].
struct DyadicGrid {
  std::size_t points = 0;
  int level = 0;
  double delta = 1e-9;
};

/// Seeded uniform sample of M points in [0,1]^dim, optionally followed by the
/// corners {0, 0.5, 1}^dim.
struct RandomGrid {
  std::size_t dim = 1;
  std::size_t points = 0;
  std::uint64_t seed = 0;
  bool corners = false;
};

using GridSpec = std::variant<UniformGrid, DyadicGrid, RandomGrid>;

/// Points stored row-major, dim coordinates each.
struct PointSet {
  std::size_t dim = 1;
  std::vector<double> coords;

  std::size_t size() const { return coords.size() / dim; }
  std::span<const double> operator[](std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

inline std::string describe(const GridSpec& spec) {
  struct {
    std::string operator()(const UniformGrid& g) const { return "uniform:" + std::to_string(g.points); }
    std::string operator()(const DyadicGrid& g) const {
      char buf[96];
      std::snprintf(buf, sizeof buf, "uniform:%zu+dyadic:%d:%g", g.points, g.level, g.delta);
      return buf;
    }
    std::string operator()(const RandomGrid& g) const {
      return "random:" + std::to_string(g.dim) + "x" + std::to_string(g.points) + ":seed=" +
             std::to_string(g.seed) + (g.corners ? "+corners" : "");
    }
  } visitor;
  return std::visit(visitor, spec);
}

namespace detail {

inline std::vector<double> uniform_points(std::size_t m) {
  std::vector<double> xs(m);
  if (m == 1) return {0.0};
  for (std::size_t i = 0; i < m; ++i) xs[i] = static_cast<double>(i) / static_cast<double>(m - 1);
  xs.back() = 1.0;
  return xs;
}

// 53 random bits mapped to [0,1); identical on every platform for a given seed.
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

inline PointSet make_points(const GridSpec& spec) {
  if (const auto* g = std::get_if<UniformGrid>(&spec)) {
    if (g->points == 0) throw std::invalid_argument("grid needs at least one point");
    return {1, detail::uniform_points(g->points)};
  }
  if (const auto* g = std::get_if<DyadicGrid>(&spec)) {
    if (g->points == 0) throw std::invalid_argument("grid needs at least one point");
    if (g->level < 0 || g->level > 30) throw std::invalid_argument("dyadic level must be in [0, 30]");
    std::vector<double> xs = detail::uniform_points(g->points);
    const double step = std::ldexp(1.0, -g->level);
    const std::size_t cells = std::size_t{1} << g->level;
    for (std::size_t k = 0; k <= cells; ++k) {
      double c = static_cast<double>(k) * step;
      for (double x : {c - g->delta, c, c + g->delta})
        if (x >= 0.0 && x <= 1.0) xs.push_back(x);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return {1, std::move(xs)};
  }
  const auto& g = std::get<RandomGrid>(spec);
  if (g.points == 0) throw std::invalid_argument("grid needs at least one point");
  if (g.dim == 0) throw std::invalid_argument("grid dimension must be positive");
  PointSet ps{g.dim, {}};
  std::mt19937_64 rng(g.seed);
  ps.coords.reserve(g.points * g.dim);
  for (std::size_t i = 0; i < g.points * g.dim; ++i) ps.coords.push_back(detail::unit_double(rng));
  if (g.corners) {
    std::vector<int> digits(g.dim, 0);
    for (;;) {
      for (int d : digits) ps.coords.push_back(0.5 * d);
      std::size_t j = 0;
      while (j < g.dim && digits[j] == 2) digits[j++] = 0;
      if (j == g.dim) break;
      ++digits[j];
    }
  }
  return ps;
}

/// Runs body(begin, end, worker) over [0, n) in contiguous chunks. Results
/// must be written by index so the outcome is independent of scheduling.
inline void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  if (n < 4096 || workers == 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back(body, b, e);
  }
  for (auto& t : pool) t.join();
}

struct GridValues {
  PointSet points;
  std::vector<double> values;
};

inline std::vector<double> eval_points(const Network& net, const PointSet& pts) {
  if (pts.dim != net.input_dim())
    throw std::invalid_argument("grid dimension does not match network input_dim");
  std::vector<double> values(pts.size());
  parallel_chunks(pts.size(), [&](std::size_t b, std::size_t e) {
    Evaluator ev(net);
    for (std::size_t i = b; i < e; ++i) values[i] = ev(pts[i]);
  });
  return values;
}

inline GridValues eval_grid(const Network& net, const GridSpec& spec) {
  GridValues out{make_points(spec), {}};
  out.values = eval_points(net, out.points);
  return out;
}

using MultiFn = std::function<double(std::span<const double>)>;

/// max_i |net(p_i) - f(p_i)|.
inline double sup_error(const Network& net, const PointSet& pts, const MultiFn& f) {
  std::vector<double> values = eval_points(net, pts);
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::abs(values[i] - f(pts[i])));
  return worst;
}

inline double sup_error(const Network& net, const PointSet& pts, const std::function<double(double)>& f) {
  return sup_error(net, pts, MultiFn([&](std::span<const double> x) { return f(x[0]); }));
}

/// Default univariate verification grid: 10^5 uniform points plus points
/// flanking the dyadic cells of the given bit level (capped at 2^16 cells).
inline GridSpec verification_grid_1d(int bits, std::size_t points = 100000) {
  return DyadicGrid{points, std::clamp(bits + 1, 1, 16), 1e-9};
}

/// Default multivariate verification grid: seeded sample plus {0,0.5,1}^d for d <= 5.
inline GridSpec verification_grid_nd(std::size_t dim, std::uint64_t seed, std::size_t points = 100000) {
  return RandomGrid{dim, points, seed, dim <= 5};
}

}  // namespace deepapprox
