// One line per acceptance criterion; exit status 1 when any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "deepapprox/deepapprox.hpp"

using namespace deepapprox;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
  void need(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

/// Least-squares slope of y on x with intercept.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size(), my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

/// Least-squares slope of y on x through the origin.
double slope0(const std::vector<double>& x, const std::vector<double>& y) {
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += x[i] * y[i], sxx += x[i] * x[i];
  return sxy / sxx;
}

Verdict criterion1() {
  Verdict v;
  std::vector<double> ns, steps, relus;
  for (int k = 2; k <= 20; ++k) {
    const double eps = std::ldexp(1.0, -k);
    Built b = build_square(eps);
    const int n = ceil_log2(1 / eps) + 1;
    v.need(b.report.bits == n, "bits mismatch at k=" + std::to_string(k));
    v.need(b.report.measured <= std::ldexp(1.0, 1 - n) && std::ldexp(1.0, 1 - n) <= eps,
           fmt("error %.3g above 2^(1-n) at k=%g", b.report.measured, k));
    ns.push_back(n);
    steps.push_back(static_cast<double>(b.report.counts.step));
    relus.push_back(static_cast<double>(b.report.counts.relu));
  }
  // per-bit constants of the construction: one step unit and one gate per bit
  double ss = slope(ns, steps), sr = slope(ns, relus);
  v.need(std::abs(ss - 1.0) <= 0.1 && std::abs(sr - 1.0) <= 0.1, fmt("slopes step %.4g relu %.4g", ss, sr));
  v.detail = v.ok ? fmt("k=2..20 within 2^(1-n); step slope %.4g, relu slope %.4g (per-bit constant 1)", ss, sr)
                  : v.detail;
  return v;
}

Verdict criterion2() {
  Verdict v;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pn, relus;
  double worst_ratio = 0;
  for (int p : {2, 4, 8})
    for (double eps : {std::ldexp(1.0, -4), std::ldexp(1.0, -8)})
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> a(p + 1);
        for (double& c : a) c = u(rng);
        double l1 = 0;
        for (int i = 1; i <= p; ++i) l1 += std::abs(a[i]);
        for (int i = 1; i <= p; ++i) a[i] /= l1 * (1 + 1e-15);
        Built b = build_polynomial(a, eps);
        const int n = ceil_log2(p / eps) + 1;
        double bound = p * std::ldexp(1.0, 1 - n);
        v.need(b.report.bits == n && b.report.measured <= bound, fmt("p=%g eps=%g error %.3g", p, eps, b.report.measured));
        worst_ratio = std::max(worst_ratio, b.report.measured / bound);
        pn.push_back(static_cast<double>(p) * n);
        relus.push_back(static_cast<double>(b.report.counts.relu));
      }
  double s = slope0(pn, relus);
  v.need(std::abs(s - 1.0) <= 0.1, fmt("relu / (p n) slope %.4g", s));
  if (v.ok) v.detail = fmt("18 polynomials, worst error/bound %.3g; relu vs p*n slope %.4g", worst_ratio, s);
  return v;
}

Verdict criterion3() {
  Verdict v;
  double worst = 0;
  for (int k = 4; k <= 16; ++k) {
    const double eps = std::ldexp(1.0, -k);
    Built b = build_smooth(exp_shift_target(), eps);
    v.need(b.report.measured <= eps, fmt("exp error %.3g at eps 2^-%g", b.report.measured, k));
    worst = std::max(worst, b.report.measured / eps);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double coef_err = 0;
  for (int N = 0; N <= 15; ++N)
    for (int t = 0; t < 5; ++t) {
      std::vector<double> q(N + 1);
      for (double& c : q) c = u(rng);
      MonomialPoly p = interpolate(
          [&](const Precise& x) {
            Precise acc = 0;
            for (auto it = q.rbegin(); it != q.rend(); ++it) acc = acc * x + *it;
            return acc;
          },
          N);
      for (int i = 0; i <= N; ++i) coef_err = std::max(coef_err, std::abs(p.c[i] - q[i]));
    }
  v.need(coef_err <= 1e-9, fmt("reproduction error %.3g", coef_err));
  if (v.ok) v.detail = fmt("e^(x-1) eps=2^-4..2^-16 worst error/eps %.3g; degree<=15 reproduction %.3g", worst, coef_err);
  return v;
}

Verdict criterion4() {
  Verdict v;
  Network net(2);
  NodeRef g = net.add(bit_gate(net.input(0), form_of(net.input(1))));
  net.set_readout(form_of(g));
  Evaluator ev(net);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> ys{0.0, 2.0};
  for (int i = 0; i < 10000; ++i) ys.push_back(u(rng));
  std::size_t checked = 0, bad = 0;
  for (double b : {0.0, 1.0})
    for (double y : ys) {
      std::vector<double> x{b, y};
      double direct = std::max(0.0, 2 * (b - 1) + y);
      if (ev(x) != b * y || direct != b * y) ++bad;
      ++checked;
    }
  v.need(bad == 0, std::to_string(bad) + " mismatches");
  if (v.ok) v.detail = std::to_string(checked) + " pairs, zero tolerance";
  return v;
}

Verdict criterion5() {
  Verdict v;
  const double eps = 1.0 / 32;
  auto check = [&](const std::string& what, const BuildReport& r) {
    v.need(r.measured <= eps, what + fmt(" error %.3g", r.measured));
  };
  check("sum k=1", combine_sum({exp_shift_target()}, {1.0}, eps).report);
  check("sum x/2+x^2/2", combine_sum({identity_target(), square_target()}, {0.5, 0.5}, eps).report);
  check("product k=1", combine_product({exp_shift_target()}, eps).report);
  check("product x*x", combine_product({identity_target(), identity_target()}, eps).report);
  check("compose k=1", compose({exp_shift_target()}, eps).built.report);
  Composed c = compose({square_target(), square_target()}, eps);
  check("compose x^2 o x^2", c.built.report);
  v.need(c.stage_max <= 1.0, fmt("stage output max %.17g", c.stage_max));
  Counts one = build_smooth(exp_shift_target(), eps).report.counts;
  Counts two = combine_sum({exp_shift_target(), log1p_target()}, {0.5, 0.5}, eps).report.counts;
  Counts three = combine_sum({exp_shift_target(), log1p_target(), square_target()}, {0.4, 0.3, 0.3}, eps).report.counts;
  v.need(one == two && one == three, "sum size depends on k");
  if (v.ok) v.detail = fmt("all at eps=2^-5; stage max %.6g; sum size %g for k=1,2,3", c.stage_max, one.total);
  return v;
}

Verdict criterion6() {
  Verdict v;
  const double eps = 1.0 / 32;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 1.0), s(-1.0, 1.0);
  double worst = 0;
  for (std::size_t d : {2u, 3u})
    for (int p : {2, 3}) {
      LinearFormSet W;
      for (int l = 0; l < p; ++l) {
        std::vector<double> row(d);
        double sum = 0;
        for (double& w : row) sum += w = u(rng);
        for (double& w : row) w /= sum;
        W.push_back(row);
      }
      try {
        Built b = build_linear_product(W, eps);  // throws when some g_l leaves [0,1]
        v.need(b.report.measured <= eps, fmt("linear product d=%g p=%g error %.3g", d, p, b.report.measured));
        worst = std::max(worst, b.report.measured);
      } catch (const BuildError& e) {
        v.need(false, e.what());
      }
      MultinomialSpec C;
      std::vector<MultiIndex> all = enumerate_multi_indices(static_cast<int>(d), p);
      double l1 = 0;
      for (const auto& a : all) l1 += std::abs(C[a] = s(rng));
      for (auto& [a, c] : C) c /= l1 * (1 + 1e-15);
      Built m = build_multinomial(C, eps);
      v.need(m.report.measured <= eps, fmt("multinomial d=%g p=%g error %.3g", d, p, m.report.measured));
      worst = std::max(worst, m.report.measured);
    }
  for (int d = 1; d <= 8; ++d)
    for (int p = 0; p <= 8; ++p) {
      std::size_t brute = 0;
      std::vector<int> a(d, 0);
      while (true) {
        int sum = 0;
        for (int x : a) sum += x;
        brute += sum <= p;
        int j = d - 1;
        while (j >= 0 && a[j] == p) a[j--] = 0;
        if (j < 0) break;
        ++a[j];
      }
      std::size_t got = enumerate_multi_indices(d, p).size();
      v.need(got == brute && static_cast<double>(got) == binomial(p + d, d), fmt("count d=%g p=%g", d, p));
    }
  if (v.ok) v.detail = fmt("worst error %.3g at eps=2^-5, range checks passed; counts match for d,p<=8", worst);
  return v;
}

Verdict criterion7() {
  Verdict v;
  const double eps = 1.0 / 32;
  double worst = 0;
  for (std::size_t d : {1u, 2u, 3u}) {
    Built g = build_gaussian(d, eps);
    v.need(g.report.measured <= eps, fmt("gaussian d=%g error %.3g", d, g.report.measured));
    worst = std::max(worst, g.report.measured);
  }
  Built r1 = build_ridge({1.0, 0.0}, square_target(), eps);
  Built r2 = build_ridge({1.0 / 3, 1.0 / 3, 1.0 / 3}, exp_shift_target(), eps);
  v.need(r1.report.measured <= eps && r2.report.measured <= eps, "ridge error");
  worst = std::max({worst, r1.report.measured, r2.report.measured});
  if (v.ok) v.detail = fmt("gaussian d=1..3 and two ridges, worst error %.3g at eps=2^-5", worst);
  return v;
}

int scan_resolution(const BuildReport& r) { return std::clamp(r.bits + 4, 16, 22); }

Verdict criterion8() {
  Verdict v;
  LowerBound a = size_lower_bound(1.0, 1.0 / (16 * 1024));
  v.need(a.value == 10.0, fmt("(a) got %.17g", a.value));

  for (int k = 2; k <= 16; ++k) {
    const double eps = std::ldexp(1.0, -k);
    for (const Built& b : {build_square(eps), build_smooth(square_target(), eps)})
      v.need(static_cast<double>(b.report.counts.total) >= size_lower_bound(2.0, eps).value,
             fmt("(b) size %g below bound at eps 2^-%g", b.report.counts.total, k));
  }

  Built sq = build_square(1.0 / 16);
  std::size_t found = count_breakpoints_1d(sq.net, 20).size();
  auto need = required_breakpoints(2.0, sq.report.measured, 2.0).count;
  v.need(found == 31 && static_cast<std::int64_t>(found) >= need, fmt("(c) %g break points, need %g", found, need));

  std::vector<Built> nets;
  for (int k = 2; k <= 9; ++k) nets.push_back(build_square(std::ldexp(1.0, -k)));
  nets.push_back(build_polynomial({0.0, 0.5, 0.5}, 1.0 / 64));
  nets.push_back(build_polynomial({0.1, 0.3, -0.3, 0.4}, 1.0 / 128));
  nets.push_back(build_smooth(exp_shift_target(), 1.0 / 256));
  nets.push_back(build_smooth(log1p_target(), 1.0 / 64));
  nets.push_back(combine_sum({identity_target(), square_target()}, {0.5, 0.5}, 1.0 / 32));
  nets.push_back(combine_product({identity_target(), identity_target()}, 1.0 / 32));
  nets.push_back(compose({square_target(), square_target()}, 1.0 / 32).built);
  std::size_t checked = 0;
  for (const Built& b : nets) {
    std::size_t count = count_breakpoints_1d(b.net, scan_resolution(b.report)).size();
    double cap = telgarsky_capacity(static_cast<double>(b.report.counts.total), static_cast<double>(b.report.counts.depth));
    v.need(static_cast<double>(count) <= cap, "(d) " + b.report.function + fmt(" %g break points above %g", count, cap));
    ++checked;
  }
  ShallowBuilt sh = build_shallow_baseline(square_target(), 1.0 / 256);
  std::size_t count = count_breakpoints_1d(sh.net, 20).size();
  v.need(static_cast<double>(count) <= telgarsky_capacity(sh.report.counts.total, 1), "(d) shallow baseline");
  ++checked;
  if (v.ok)
    v.detail = fmt("(a) 10 exactly; (c) 31 break points >= %g required; (d) %g nets within capacity", need, checked);
  return v;
}

Verdict criterion9() {
  Verdict v;
  std::vector<double> eps;
  for (int k = 4; k <= 12; ++k) eps.push_back(std::ldexp(1.0, -k));
  GapResult g = gap_experiment(square_target(), eps);
  for (const GapRow& r : g.rows) {
    // oracle: smallest K whose chord error, maximized by dense sampling, is <= eps
    std::size_t K = 1;
    auto chord = [](std::size_t K) {
      double worst = 0;
      for (std::size_t j = 0; j < K; ++j) {
        double a = double(j) / K, b = double(j + 1) / K;
        for (int i = 0; i <= 2000; ++i) {
          double x = a + (b - a) * i / 2000.0;
          worst = std::max(worst, a * a + (x - a) * (a + b) - x * x);
        }
      }
      return worst;
    };
    while (chord(K) > r.eps) ++K;
    std::size_t pieces = r.ns - 1;
    double ref = std::ceil(1 / std::sqrt(8 * r.eps));
    v.need(pieces == K, fmt("baseline K %g differs from oracle %g at eps %g", pieces, K, r.eps));
    v.need(pieces <= 2 * ref && 2 * pieces >= ref, fmt("K %g not within factor 2 of %g", pieces, ref));
    v.need(r.verdict_a == "pass", fmt("N_d above c log2^2(1/eps) at eps %g", r.eps));
  }
  for (std::size_t i = g.rows.size() - 3; i < g.rows.size(); ++i) {
    const GapRow& r = g.rows[i];
    double rhs = 4 * std::pow(std::log2(static_cast<double>(r.ns)), 2);
    v.need(static_cast<double>(r.nd) <= rhs, fmt("N_d %g > 4 log2^2 N_s = %g", r.nd, rhs));
  }
  const GapRow& last = g.rows.back();
  if (v.ok)
    v.detail = fmt("c = %.4g; at eps=2^-12 N_s=%g, N_d=%g", g.fitted_c, last.ns, last.nd) +
               fmt(" <= %.4g", 4 * std::pow(std::log2(static_cast<double>(last.ns)), 2));
  return v;
}

Verdict criterion10() {
  Verdict v;
  std::vector<Network> nets;
  nets.push_back(build_square(1.0 / 128).net);
  nets.push_back(build_smooth(exp_shift_target(), 1.0 / 64).net);
  nets.push_back(compose({square_target(), exp_shift_target()}, 1.0 / 16).built.net);
  nets.push_back(build_gaussian(2, 1.0 / 16).net);
  nets.push_back(build_multinomial({{{1, 1, 0}, 0.5}, {{0, 0, 2}, 0.5}}, 1.0 / 16).net);
  nets.push_back(build_shallow_baseline(square_target(), 1.0 / 64).net);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (const Network& net : nets) {
    std::string text = serialize(net);
    Network back = deserialize(text);
    v.need(serialize(back) == text, "serialization round trip changed the text");
    Network strict = to_strict(net);
    Evaluator a(net), b(back), c(strict);
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> x(net.input_dim());
      for (double& t : x) t = u(rng);
      double y = a(x);
      v.need(b(x) == y, "round trip changed a value");
      worst = std::max(worst, std::abs(c(x) - y));
    }
  }
  v.need(worst <= 1e-12, fmt("strict form deviates by %.3g", worst));

  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("deepapprox_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file((dir / "sweep.json").string(),
             R"({"name": "det", "kind": "multinomial", "eps_log2": [-3, -6], "seed": 5,
                 "terms": [{"alpha": [1, 1], "coeff": 0.5}, {"alpha": [0, 2], "coeff": -0.5}]})");
  std::ostringstream sink;
  cli::CommandOptions o;
  o.config = (dir / "sweep.json").string();
  o.out = (dir / "a").string();
  int s1 = cli::cmd_sweep(o, sink);
  o.out = (dir / "b").string();
  int s2 = cli::cmd_sweep(o, sink);
  bool same = read_file((dir / "a/det_sweep.csv").string()) == read_file((dir / "b/det_sweep.csv").string()) &&
              read_file((dir / "a/det_sweep.svg").string()) == read_file((dir / "b/det_sweep.svg").string());
  v.need(s1 == 0 && s2 == 0 && same, "sweep reruns differ");
  fs::remove_all(dir);
  if (v.ok) v.detail = fmt("%g nets round-trip exactly; strict deviation %.3g; sweep CSV/SVG byte-identical", nets.size(), worst);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.ok;
    std::printf("criterion %zu %s: %s\n", i + 1, v.ok ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
