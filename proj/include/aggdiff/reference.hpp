#pragma once
// Reference profiles the long-time checks compare against:
//
//  * rarefaction(x, t, A): the centered fan connecting -1/2 to 1/2, the
//    inviscid large-time limit of the primitive U.
//  * viscous_rarefaction(x, t, A, eps): the exact solution of
//    Z_t = eps Z_xx - A Z Z_x with Z(x, 0) = (1/2) sign(x), evaluated in
//    closed form through the Hopf-Cole transform.  Writing the linearized
//    heat solution as a pair of erfc integrals G+- (one per initial half
//    line) gives Z = (1/2) tanh((log G+ - log G-)/2); everything is done in
//    log space so the formula is usable far outside the fan where G+-
//    underflow.
//  * burgers_oracle: an independent Godunov + explicit-diffusion march of the
//    same initial-value problem, used to validate the closed form.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/grid.hpp"

namespace aggdiff {

// Centered rarefaction wave with edge states -+1/2 and fan |x| < A t / 2.
inline double rarefaction(double x, double t, double amplitude) {
  if (!(t > 0.0)) throw std::invalid_argument("rarefaction: t must be positive");
  if (!(amplitude > 0.0)) throw std::invalid_argument("rarefaction: amplitude must be positive");
  const double edge = 0.5 * amplitude * t;
  if (x <= -edge) return -0.5;
  if (x >= edge) return 0.5;
  return x / (amplitude * t);
}

// Its spatial derivative: 1/(A t) inside the fan, 0 outside (edges included).
inline double rarefaction_derivative(double x, double t, double amplitude) {
  if (!(t > 0.0)) throw std::invalid_argument("rarefaction_derivative: t must be positive");
  if (!(amplitude > 0.0))
    throw std::invalid_argument("rarefaction_derivative: amplitude must be positive");
  const double edge = 0.5 * amplitude * t;
  if (x <= -edge || x >= edge) return 0.0;
  return 1.0 / (amplitude * t);
}

namespace detail {

// e^{v^2} erfc(v) for v >= 0 without overflow; asymptotic series beyond the
// range where erfc is representable.
inline double erfcx_pos(double v) {
  if (v <= 25.0) return std::exp(v * v) * std::erfc(v);
  const double ivs = 1.0 / (v * v);
  // 1/(v sqrt(pi)) (1 - 1/(2v^2) + 3/(4v^4) - 15/(8v^6) + 105/(16v^8))
  double s = 1.0 + ivs * (-0.5 + ivs * (0.75 + ivs * (-1.875 + ivs * 6.5625)));
  return s / (v * 1.7724538509055160273);
}

// log erfc(v) over the whole real line, accurate in both tails.
inline double log_erfc(double v) {
  if (v >= 0.0) return -v * v + std::log(erfcx_pos(v));
  // erfc(v) = 2 - erfc(-v); for strongly negative v the correction underflows
  const double w = erfcx_pos(-v) * std::exp(-v * v);
  return std::log(2.0 - w);
}

}  // namespace detail

struct ViscousPoint {
  double z = 0.0;        // profile value
  double slope = 0.0;    // spatial derivative
  bool clamped = false;  // true when tanh saturated and z was nudged inside (-1/2, 1/2)
};

// Closed-form viscous rarefaction and its slope at one point.
inline ViscousPoint viscous_rarefaction_eval(double x, double t, double amplitude, double eps) {
  if (!(t > 0.0)) throw std::invalid_argument("viscous_rarefaction: t must be positive");
  if (!(amplitude > 0.0))
    throw std::invalid_argument("viscous_rarefaction: amplitude must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("viscous_rarefaction: eps must be positive");
  if (!std::isfinite(x)) throw std::invalid_argument("viscous_rarefaction: x must be finite");

  const double a = amplitude / (4.0 * eps);  // half the far-field slope of log G
  const double s = eps * t;                  // heat time
  const double rs = std::sqrt(s);

  // G+- = e^{-+ a x} erfc((2 a s -+ x) / (2 sqrt(s))), kept as logs
  const double vp = (2.0 * a * s - x) / (2.0 * rs);
  const double vm = (2.0 * a * s + x) / (2.0 * rs);
  const double lgp = -a * x + detail::log_erfc(vp);
  const double lgm = a * x + detail::log_erfc(vm);
  const double delta = lgp - lgm;

  ViscousPoint out;
  out.z = 0.5 * std::tanh(0.5 * delta);
  if (out.z >= 0.5 || out.z <= -0.5) {
    // tanh saturated in double precision; report a value still strictly inside
    out.z = std::copysign(0.5 - 0x1p-53, out.z);
    out.clamped = true;
  }

  // d/dx log G+- = -+ a + W / G+- with W the shared Gaussian factor
  const double logw = -x * x / (4.0 * s) - a * a * s - 0.5 * std::log(3.14159265358979323846 * s);
  const double dlogdelta = -2.0 * a + std::exp(logw - lgp) + std::exp(logw - lgm);
  const double e = std::exp(-std::fabs(delta));  // sech^2(delta/2)/4 = e/(1+e)^2
  out.slope = e / ((1.0 + e) * (1.0 + e)) * dlogdelta;
  return out;
}

inline double viscous_rarefaction(double x, double t, double amplitude, double eps) {
  return viscous_rarefaction_eval(x, t, amplitude, eps).z;
}

inline double viscous_rarefaction_slope(double x, double t, double amplitude, double eps) {
  return viscous_rarefaction_eval(x, t, amplitude, eps).slope;
}

namespace detail {

// Sampling reach for the viscous profile: the fan edge plus diffusive and
// kernel-smoothing margins; beyond it the profile is flat to ~e^{-36}.
inline double viscous_sample_reach(double t, double amplitude, double eps) {
  return 0.5 * amplitude * t + 12.0 * std::sqrt(eps * t) + 24.0 * eps / amplitude + 6.0;
}

}  // namespace detail

// sup_x |Z(x, t) - W(x, t)| by dense symmetric sampling (both profiles are
// odd, so x >= 0 suffices).
inline double viscous_wr_distance_sup(double amplitude, double eps, double t, int samples = 4001) {
  const double reach = detail::viscous_sample_reach(t, amplitude, eps);
  double sup = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = reach * i / (samples - 1);
    const double d = std::fabs(viscous_rarefaction(x, t, amplitude, eps) -
                               rarefaction(x, t, amplitude));
    if (d > sup) sup = d;
  }
  return sup;
}

// L^p norm of the slope Z_x(., t); p = inf gives the sampled sup.  The slope
// is even in x, so the quadrature doubles the half line (trapezoid on the
// dense sample grid).
inline double viscous_slope_lp(double p, double amplitude, double eps, double t,
                               int samples = 4001) {
  if (!(p >= 1.0)) throw std::invalid_argument("viscous_slope_lp: p must be >= 1");
  const double reach = detail::viscous_sample_reach(t, amplitude, eps);
  const double h = reach / (samples - 1);
  if (std::isinf(p)) {
    double sup = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double d = viscous_rarefaction_slope(h * i, t, amplitude, eps);
      if (d > sup) sup = d;
    }
    return sup;
  }
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double d = viscous_rarefaction_slope(h * i, t, amplitude, eps);
    const double w = (i == 0 || i == samples - 1) ? 0.5 : 1.0;
    acc += w * std::pow(d, p);
  }
  return std::pow(2.0 * h * acc, 1.0 / p);
}

// Independent check of the closed form: march Z_t + (A Z^2 / 2)_x = eps Z_xx
// from the sharp step with a Godunov flux and explicit diffusion, Dirichlet
// far-field values -+1/2.  Requires dx <= eps / (5 A) so the viscous layer is
// resolved from the first instant.
inline Field burgers_oracle(const Grid& g, double amplitude, double eps, double t_final) {
  if (!(amplitude > 0.0)) throw std::invalid_argument("burgers_oracle: amplitude must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("burgers_oracle: eps must be positive");
  if (!(t_final > 0.0)) throw std::invalid_argument("burgers_oracle: t_final must be positive");
  const double dx = g.dx();
  if (dx > eps / (5.0 * amplitude))
    throw std::invalid_argument("burgers_oracle: grid too coarse, need dx <= eps/(5 A) = " +
                                std::to_string(eps / (5.0 * amplitude)) + ", got dx = " +
                                std::to_string(dx));

  const int n = g.cells;
  std::vector<double> z(n), znew(n);
  for (int j = 0; j < n; ++j) z[j] = 0.5 * std::tanh(g.center(j) / dx);

  // |Z| <= 1/2 for all time (monotone scheme, extreme ghost states), so one
  // fixed dt satisfies both CFL conditions for the whole march
  const double dt_limit = 0.9 / (2.0 * eps / (dx * dx) + 0.5 * amplitude / dx);
  auto godunov = [amplitude](double l, double r) {
    // convex flux A z^2/2 with minimum at 0
    if (l <= r) return (l <= 0.0 && 0.0 <= r) ? 0.0 : 0.5 * amplitude * std::min(l * l, r * r);
    return 0.5 * amplitude * std::max(l * l, r * r);
  };

  double t = 0.0;
  while (t < t_final) {
    const double dt = std::min(dt_limit, t_final - t);
    const double rd = eps * dt / (dx * dx);
    const double ra = dt / dx;
    for (int j = 0; j < n; ++j) {
      const double zl = j > 0 ? z[j - 1] : -0.5;
      const double zr = j + 1 < n ? z[j + 1] : 0.5;
      const double fl = godunov(zl, z[j]);
      const double fr = godunov(z[j], zr);
      znew[j] = z[j] + rd * (zr - 2.0 * z[j] + zl) - ra * (fr - fl);
    }
    z.swap(znew);
    t += dt;
  }

  Field out(g, t_final);
  out.values = std::move(z);
  return out;
}

}  // namespace aggdiff
