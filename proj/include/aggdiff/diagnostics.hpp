#pragma once
// Measurements the harness records and checks: L^p norms, the predicted decay
// envelope, distances of the primitive to the inviscid and viscous reference
// profiles, log-log rate fits, weak pairings against smooth test functions,
// and the slow-growth monitor for |U - Z|_1.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/grid.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/quadrature.hpp"
#include "aggdiff/reference.hpp"
#include "aggdiff/solver.hpp"

namespace aggdiff {

// L^p norm by midpoint quadrature; p = inf gives the sampled max.
inline double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 (or inf)");
  require_finite(f, "lp_norm");
  if (std::isinf(p)) return max_abs(f);
  if (p == 1.0) {
    double s = 0.0;
    for (double v : f.values) s += std::fabs(v);
    return f.grid.dx() * s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(f.grid.dx() * s);
  }
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::fabs(v), p);
  return std::pow(f.grid.dx() * s, 1.0 / p);
}

// The decay envelope |u(t)|_p <= (A - |V_x|_1)^{(1-p)/p} M^{1/p} t^{(1-p)/p}
// guaranteed for admissible kernels; p = inf reads the exponents as limits,
// p = 1 collapses to the conserved mass.
inline double decay_bound(double p, double t, double amplitude, double tv_vx, double m = 1.0) {
  if (!(p >= 1.0)) throw std::invalid_argument("decay_bound: p must be >= 1 (or inf)");
  if (!(t > 0.0)) throw std::invalid_argument("decay_bound: t must be positive");
  const double gap = amplitude - tv_vx;
  if (!(gap > 0.0))
    throw std::invalid_argument("decay_bound: requires |V_x|_1 < A");
  if (!(m > 0.0)) throw std::invalid_argument("decay_bound: mass must be positive");
  if (std::isinf(p)) return 1.0 / (gap * t);
  const double e = (1.0 - p) / p;
  return std::pow(gap, e) * std::pow(m, 1.0 / p) * std::pow(t, e);
}

// |U(., t) - W(., t)|_p on the grid of U, W the rarefaction fan at U.time.
inline double distance_to_rarefaction(const Field& U, double p, double amplitude) {
  if (!(U.time > 0.0))
    throw std::invalid_argument("distance_to_rarefaction: field time must be positive");
  Field diff(U.grid, U.time);
  for (int j = 0; j < U.size(); ++j)
    diff.values[j] = U.values[j] - rarefaction(U.grid.center(j), U.time, amplitude);
  return lp_norm(diff, p);
}

// |U(., t) - Z(., t)|_1 against the viscous profile; eps = 0 degenerates Z to
// the rarefaction fan (its vanishing-viscosity limit).
inline double distance_to_viscous_l1(const Field& U, double amplitude, double eps) {
  if (!(U.time > 0.0))
    throw std::invalid_argument("distance_to_viscous_l1: field time must be positive");
  Field diff(U.grid, U.time);
  for (int j = 0; j < U.size(); ++j) {
    const double x = U.grid.center(j);
    const double z = eps > 0.0 ? viscous_rarefaction(x, U.time, amplitude, eps)
                               : rarefaction(x, U.time, amplitude);
    diff.values[j] = U.values[j] - z;
  }
  return lp_norm(diff, 1.0);
}

// dx Sum |x_j| u_j; finite spread measure for localized data.
inline double first_absolute_moment(const Field& u) {
  double s = 0.0;
  for (int j = 0; j < u.size(); ++j) s += std::fabs(u.grid.center(j)) * u.values[j];
  return u.grid.dx() * s;
}

// Least-squares slope of log(value) against log(time).  Demands at least five
// positive samples spanning 1.5 decades so a "rate" actually means something.
inline double fit_rate(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit_rate: times and values differ in length");
  if (times.size() < 5)
    throw std::invalid_argument("fit_rate: need at least 5 samples, got " +
                                std::to_string(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !std::isfinite(times[i]))
      throw std::invalid_argument("fit_rate: times must be positive and finite");
    if (i > 0 && times[i] <= times[i - 1])
      throw std::invalid_argument("fit_rate: times must be strictly increasing");
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw std::invalid_argument("fit_rate: values must be positive and finite");
  }
  if (times.back() / times.front() < 31.62)  // 10^1.5
    throw std::invalid_argument("fit_rate: time window must span at least 1.5 decades");

  const std::size_t n = times.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(times[i]);
    my += std::log(values[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dxl = std::log(times[i]) - mx;
    sxx += dxl * dxl;
    sxy += dxl * (std::log(values[i]) - my);
  }
  return sxy / sxx;
}

// Smooth compactly supported test functions for weak-form probes.
//   Bump: C-infinity plateau bump, identically 1 on |x - c| <= width/2,
//         identically 0 on |x - c| >= width (glued with e^{-1/s} mollifiers).
//   GaussianTest: exp(-(x-c)^2 / (2 width^2)), effectively compact.
struct TestFunction {
  enum class Kind { Bump, GaussianTest };
  Kind kind = Kind::Bump;
  double center = 0.0;
  double width = 2.0;

  // smooth step g: 0 for s <= 0, 1 for s >= 1
  static double smoothstep(double s) {
    if (s <= 0.02) return 0.0;  // e^{-1/s} below double noise here
    if (s >= 0.98) return 1.0;
    const double f = std::exp(-1.0 / s);
    const double g = std::exp(-1.0 / (1.0 - s));
    return f / (f + g);
  }

  static double smoothstep_derivative(double s) {
    if (s <= 0.02 || s >= 0.98) return 0.0;
    const double f = std::exp(-1.0 / s);
    const double g = std::exp(-1.0 / (1.0 - s));
    const double fp = f / (s * s);
    const double gp = -g / ((1.0 - s) * (1.0 - s));
    return (fp * g - f * gp) / ((f + g) * (f + g));
  }

  double operator()(double x) const {
    const double r = std::fabs(x - center);
    if (kind == Kind::GaussianTest) {
      const double z = r / width;
      return std::exp(-0.5 * z * z);
    }
    return smoothstep((width - r) / (0.5 * width));
  }

  double derivative(double x) const {
    const double d = x - center;
    if (kind == Kind::GaussianTest) {
      const double z = d / width;
      return -z / width * std::exp(-0.5 * z * z);
    }
    const double r = std::fabs(d);
    const double s = (width - r) / (0.5 * width);
    const double sp = -(d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / (0.5 * width);
    return smoothstep_derivative(s) * sp;
  }

  // radius beyond which the function is negligible for every pairing
  // tolerance in use (6 sigma leaves relative tails below 2e-8)
  double support_radius() const {
    return kind == Kind::GaussianTest ? 6.0 * width : width;
  }
};

// dx Sum u_j phi(x_j).  The support of phi must fit inside the domain or the
// pairing silently loses mass, so that case is rejected.
inline double weak_pairing(const Field& u, const TestFunction& phi) {
  require_finite(u, "weak_pairing");
  if (std::fabs(phi.center) + phi.support_radius() > u.grid.half_width)
    throw std::invalid_argument("weak_pairing: test function support leaves the domain");
  double s = 0.0;
  for (int j = 0; j < u.size(); ++j) s += u.values[j] * phi(u.grid.center(j));
  return u.grid.dx() * s;
}

// Exact limiting pairing <(W)_x, phi> = (1/(A t0)) int_{fan} phi by adaptive
// quadrature over the intersection of the fan with the support of phi.
inline double rarefaction_pairing(const TestFunction& phi, double t0, double amplitude) {
  if (!(t0 > 0.0)) throw std::invalid_argument("rarefaction_pairing: t0 must be positive");
  if (!(amplitude > 0.0))
    throw std::invalid_argument("rarefaction_pairing: amplitude must be positive");
  const double edge = 0.5 * amplitude * t0;
  const double lo = std::max(-edge, phi.center - phi.support_radius());
  const double hi = std::min(edge, phi.center + phi.support_radius());
  if (lo >= hi) return 0.0;
  return integrate([&phi](double x) { return phi(x); }, lo, hi, 1e-12) / (amplitude * t0);
}

// Pairing of the parabolically rescaled density u^lambda(x) = lambda
// u(lambda x, lambda t0) with phi, evaluated from the stored state at time
// lambda t0: the substitution y = lambda x turns it into dx Sum u_j
// phi(x_j / lambda), no interpolation involved.
inline double rescaled_pairing(const Field& u_at_lambda_t0, double lambda,
                               const TestFunction& phi) {
  if (!(lambda > 0.0)) throw std::invalid_argument("rescaled_pairing: lambda must be positive");
  require_finite(u_at_lambda_t0, "rescaled_pairing");
  const Field& u = u_at_lambda_t0;
  if (lambda * (std::fabs(phi.center) + phi.support_radius()) > u.grid.half_width)
    throw std::invalid_argument("rescaled_pairing: rescaled support leaves the domain");
  double s = 0.0;
  for (int j = 0; j < u.size(); ++j) s += u.values[j] * phi(u.grid.center(j) / lambda);
  return u.grid.dx() * s;
}

// Slow-growth monitor for a series d(t) ~ log(2 + t): the late-window max
// (t >= split) must stay within growth_slack of the early-window max.
struct LogBoundReport {
  double max_early = 0.0;
  double max_late = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

inline LogBoundReport log_bound_monitor(std::span<const double> times,
                                        std::span<const double> values, double split = 100.0,
                                        double growth_slack = 1.1) {
  if (times.size() != values.size())
    throw std::invalid_argument("log_bound_monitor: times and values differ in length");
  if (times.size() < 3) throw std::invalid_argument("log_bound_monitor: series too short");
  LogBoundReport r;
  bool any_early = false, any_late = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
      throw std::invalid_argument("log_bound_monitor: values must be finite and nonnegative");
    if (times[i] <= split) {
      any_early = true;
      r.max_early = std::max(r.max_early, values[i]);
    }
    if (times[i] >= split) {
      any_late = true;
      r.max_late = std::max(r.max_late, values[i]);
    }
  }
  if (!any_early || !any_late)
    throw std::invalid_argument("log_bound_monitor: series must straddle the split time");
  if (!(r.max_early > 0.0)) {
    // a flat-zero early window only passes if the late window is zero too
    r.ratio = r.max_late > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    r.ratio = r.max_late / r.max_early;
  }
  r.pass = r.ratio <= growth_slack;
  return r;
}

// One diagnostics row per checkpoint.
struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  double min_u = 0.0;
  double l1 = 0.0, l2 = 0.0, linf = 0.0;
  double bound2 = 0.0, boundinf = 0.0;  // norm / predicted envelope
  double dwr2 = 0.0, dwrinf = 0.0;      // |U - W|_p
  double dz1 = 0.0;                     // |U - Z|_1
};

inline DiagnosticsRecord measure_state(const Field& u, const KernelSpec& k, double eps) {
  DiagnosticsRecord r;
  r.t = u.time;
  r.mass = mass(u);
  r.min_u = min_value(u);
  r.l1 = lp_norm(u, 1.0);
  r.l2 = lp_norm(u, 2.0);
  r.linf = lp_norm(u, std::numeric_limits<double>::infinity());
  const double inf = std::numeric_limits<double>::infinity();
  r.bound2 = r.l2 / decay_bound(2.0, u.time, k.amplitude, k.tv_vx, 1.0);
  r.boundinf = r.linf / decay_bound(inf, u.time, k.amplitude, k.tv_vx, 1.0);
  const Field U = primitive(u);
  r.dwr2 = distance_to_rarefaction(U, 2.0, k.amplitude);
  r.dwrinf = distance_to_rarefaction(U, inf, k.amplitude);
  r.dz1 = distance_to_viscous_l1(U, k.amplitude, eps);
  return r;
}

}  // namespace aggdiff
