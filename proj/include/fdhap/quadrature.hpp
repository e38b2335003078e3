#pragma once

#include <cmath>
#include <vector>

#include "fdhap/errors.hpp"

namespace fdhap {

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  double small_z_cutoff = 1e-12;  // analytic leading term used below this
  int max_subdivisions = 4000;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(small_z_cutoff > 0.0) || max_subdivisions < 8)
      throw config_error("QuadratureConfig: tolerances must be positive");
  }
};

namespace quad_detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
// nodes[i], gauss weight, kronrod weight; node 0 is the midpoint.
inline constexpr double kNW[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

template <class F>
double g7k15(const F& f, double a, double b, double& err) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double y0 = f(mid);
  double g7 = kNW[0][1] * y0;
  double k15 = kNW[0][2] * y0;
  for (int i = 1; i < 8; ++i) {
    const double dx = half * kNW[i][0];
    const double yi = f(mid + dx) + f(mid - dx);
    g7 += kNW[i][1] * yi;
    k15 += kNW[i][2] * yi;
  }
  g7 *= half;
  k15 *= half;
  err = std::pow(200.0 * std::abs(g7 - k15), 1.5);
  return k15;
}

}  // namespace quad_detail

// Adaptive integration on a finite interval with an interval stack.
template <class F>
double integrate_adaptive(const F& f, double a, double b, const QuadratureConfig& cfg) {
  cfg.validate();
  struct Interval {
    double a, b, value, error;
  };
  std::vector<Interval> stack;
  double err0;
  const double v0 = quad_detail::g7k15(f, a, b, err0);
  stack.push_back({a, b, v0, err0});
  double total = 0.0;
  double total_err = 0.0;
  int splits = 0;
  // rough scale for the relative test, refined as segments are accepted
  double scale = std::abs(v0);
  while (!stack.empty()) {
    const Interval iv = stack.back();
    stack.pop_back();
    if (iv.error <= cfg.abs_tol + cfg.rel_tol * std::max(scale, std::abs(iv.value)) ||
        splits >= cfg.max_subdivisions) {
      total += iv.value;
      total_err += iv.error;
      scale = std::max(scale, std::abs(total));
      continue;
    }
    const double mid = 0.5 * (iv.a + iv.b);
    double e1, e2;
    const double v1 = quad_detail::g7k15(f, iv.a, mid, e1);
    const double v2 = quad_detail::g7k15(f, mid, iv.b, e2);
    stack.push_back({iv.a, mid, v1, e1});
    stack.push_back({mid, iv.b, v2, e2});
    ++splits;
  }
  if (splits >= cfg.max_subdivisions && total_err > 100.0 * (cfg.abs_tol + cfg.rel_tol * std::abs(total))) {
    throw numerical_error("integrate_adaptive: subdivision budget exhausted, achieved error " +
                          std::to_string(total_err));
  }
  return total;
}

// Integral over (0, inf) of an integrand that is finite at 0 (value
// `leading`) and dominated by exp(-decay_rate * z) in the tail. The segment
// below small_z_cutoff contributes leading * cutoff; the upper limit is
// placed where the exponential weight falls under 1e-14 and extended until
// the tail bound is negligible.
template <class F>
double integrate_semi_infinite(const F& f, double leading, double decay_rate,
                               const QuadratureConfig& cfg) {
  if (!(decay_rate > 0.0)) throw domain_error("integrate_semi_infinite: decay rate must be positive");
  const double a = cfg.small_z_cutoff;
  double b = std::max(1.0, -std::log(1e-14) / decay_rate);
  double total = leading * a + integrate_adaptive(f, a, b, cfg);
  // extend while the crude tail bound matters
  for (int i = 0; i < 60; ++i) {
    const double tail = std::abs(f(b)) / decay_rate;
    if (tail <= cfg.abs_tol + cfg.rel_tol * std::abs(total)) break;
    const double b2 = 2.0 * b;
    total += integrate_adaptive(f, b, b2, cfg);
    b = b2;
  }
  return total;
}

}  // namespace fdhap
