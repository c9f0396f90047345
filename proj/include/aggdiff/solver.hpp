#pragma once
// Explicit finite-volume solver for u_t = (eps u_x + a u)_x with the nonlocal
// transport velocity a = -(A/2)(sign * u) + (V * u) and zero-flux walls.
//
// The interface flux eps (u_{j+1} - u_j)/dx + a_{j+1/2} u_upwind is assembled
// once per step and applied in conservation form, so mass is telescoped
// exactly; upwinding picks the donor cell of the transport direction -a.
// Forward Euler in time under the usual advective and diffusive CFL limits.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/grid.hpp"
#include "aggdiff/kernel.hpp"

namespace aggdiff {

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double epsilon = 0.1;  // viscosity, >= 0
  double cfl = 0.4;
  double t_end = 1.0;
  std::vector<double> checkpoints;  // strictly increasing, within (0, t_end]
  double boundary_tol = 1e-8;       // admissible mass in the two wall cells
};

inline void validate(const SolverConfig& c) {
  if (!std::isfinite(c.epsilon) || c.epsilon < 0.0)
    throw std::invalid_argument("SolverConfig: epsilon must be >= 0");
  if (!std::isfinite(c.cfl) || c.cfl <= 0.0 || c.cfl > 1.0)
    throw std::invalid_argument("SolverConfig: cfl must lie in (0, 1]");
  if (!std::isfinite(c.t_end) || c.t_end <= 0.0)
    throw std::invalid_argument("SolverConfig: t_end must be positive");
  if (!std::isfinite(c.boundary_tol) || c.boundary_tol <= 0.0)
    throw std::invalid_argument("SolverConfig: boundary_tol must be positive");
  double prev = 0.0;
  for (double t : c.checkpoints) {
    if (!std::isfinite(t) || t <= prev)
      throw std::invalid_argument("SolverConfig: checkpoints must be finite, positive, strictly increasing");
    if (t > c.t_end * (1.0 + 1e-12))
      throw std::invalid_argument("SolverConfig: checkpoint " + std::to_string(t) +
                                  " lies beyond t_end");
    prev = t;
  }
}

struct InitialDatum {
  enum class Kind { Gaussian, Box, DoubleBump };
  Kind kind = Kind::Gaussian;
  double center = 0.0;
  double sigma = 1.0;       // Gaussian / DoubleBump width
  double width = 2.0;       // Box full width
  double separation = 6.0;  // DoubleBump center spacing
};

namespace detail {

inline double datum_density(const InitialDatum& d, double x) {
  switch (d.kind) {
    case InitialDatum::Kind::Gaussian: {
      double z = (x - d.center) / d.sigma;
      return std::exp(-0.5 * z * z);
    }
    case InitialDatum::Kind::Box:
      return std::fabs(x - d.center) <= 0.5 * d.width ? 1.0 : 0.0;
    case InitialDatum::Kind::DoubleBump: {
      double zl = (x - d.center + 0.5 * d.separation) / d.sigma;
      double zr = (x - d.center - 0.5 * d.separation) / d.sigma;
      return std::exp(-0.5 * zl * zl) + std::exp(-0.5 * zr * zr);
    }
  }
  return 0.0;
}

inline double datum_support_radius(const InitialDatum& d) {
  switch (d.kind) {
    case InitialDatum::Kind::Gaussian: return std::fabs(d.center) + 8.0 * d.sigma;
    case InitialDatum::Kind::Box: return std::fabs(d.center) + 0.5 * d.width;
    case InitialDatum::Kind::DoubleBump:
      return std::fabs(d.center) + 0.5 * d.separation + 8.0 * d.sigma;
  }
  return 0.0;
}

inline void validate(const InitialDatum& d) {
  if (!std::isfinite(d.center)) throw std::invalid_argument("InitialDatum: center must be finite");
  if (d.kind != InitialDatum::Kind::Box && (!std::isfinite(d.sigma) || d.sigma <= 0.0))
    throw std::invalid_argument("InitialDatum: sigma must be positive");
  if (d.kind == InitialDatum::Kind::Box && (!std::isfinite(d.width) || d.width <= 0.0))
    throw std::invalid_argument("InitialDatum: width must be positive");
  if (d.kind == InitialDatum::Kind::DoubleBump &&
      (!std::isfinite(d.separation) || d.separation < 0.0))
    throw std::invalid_argument("InitialDatum: separation must be nonnegative");
}

}  // namespace detail

// Sample the datum at cell centers and normalize to unit mass.  The effective
// support must fit well inside the domain (within [-L/2, L/2]) so the wave has
// room to spread; a datum that already loads the wall cells is rejected.
inline Field initial_datum(const InitialDatum& d, const Grid& g, double boundary_tol = 1e-8) {
  detail::validate(d);
  if (detail::datum_support_radius(d) > 0.5 * g.half_width)
    throw std::invalid_argument(
        "initial_datum: datum support radius " +
        std::to_string(detail::datum_support_radius(d)) +
        " exceeds half_width/2 = " + std::to_string(0.5 * g.half_width) +
        "; enlarge the domain");

  Field u(g, 0.0);
  double sum = 0.0;
  for (int j = 0; j < g.cells; ++j) {
    double v = detail::datum_density(d, g.center(j));
    u.values[j] = v;
    sum += v;
  }
  if (sum <= 0.0) throw std::invalid_argument("initial_datum: datum vanishes on this grid");
  const double scale = 1.0 / (g.dx() * sum);
  for (double& v : u.values) v *= scale;

  if (g.dx() * (u.values.front() + u.values.back()) > boundary_tol)
    throw std::invalid_argument("initial_datum: datum places mass in the wall cells");
  return u;
}

namespace detail {

inline double dt_from_velocity(double amax, double dx, const SolverConfig& cfg, double gap) {
  const double adv = dx / std::max(amax, 1e-14);
  const double dif = cfg.epsilon > 0.0 ? dx * dx / (2.0 * cfg.epsilon)
                                       : std::numeric_limits<double>::infinity();
  return cfg.cfl * std::min(std::min(adv, dif), gap);
}

// first scheduled stop strictly after time t (a checkpoint or t_end)
inline double next_event(const SolverConfig& cfg, double t) {
  for (double c : cfg.checkpoints)
    if (c > t * (1.0 + 1e-14) && c > t) return c;
  return cfg.t_end;
}

}  // namespace detail

// Largest admissible forward-Euler step from the current state: the advective
// and diffusive CFL limits and the gap to the next scheduled output, all
// scaled by the CFL number.
inline double stable_dt(const Field& u, const KernelSpec& k, const SolverConfig& cfg) {
  validate(cfg);
  const Field a = interaction_velocity(k, u);
  double gap = detail::next_event(cfg, u.time) - u.time;
  if (!(gap > 0.0)) gap = std::numeric_limits<double>::infinity();
  return detail::dt_from_velocity(max_abs(a), u.grid.dx(), cfg, gap);
}

// Preallocated per-run buffers so the hot loop never touches the allocator.
struct SolverWorkspace {
  VConvolver conv;
  std::vector<double> vel;   // a at cell centers
  std::vector<double> flux;  // interface fluxes, size N+1, walls pinned to 0

  SolverWorkspace(const KernelSpec& k, const Grid& g)
      : conv(k, g), vel(g.cells, 0.0), flux(g.cells + 1, 0.0) {}
};

namespace detail {

// Fill ws.vel with the transport velocity of state u; returns max |a|.
inline double compute_velocity(Field& u, const KernelSpec& k, SolverWorkspace& ws) {
  const int n = u.size();
  const double dx = u.grid.dx();
  ws.conv.apply(u.values, ws.vel);
  double total = 0.0;
  for (double v : u.values) total += v;
  const double m = dx * total;
  const double half_a = 0.5 * k.amplitude;
  double run = 0.0;
  double amax = 0.0;
  for (int j = 0; j < n; ++j) {
    const double pj = dx * (run + 0.5 * u.values[j]);
    const double a = ws.vel[j] - half_a * (2.0 * pj - m);
    ws.vel[j] = a;
    run += u.values[j];
    const double aa = std::fabs(a);
    if (aa > amax) amax = aa;
  }
  return amax;
}

// One conservative update with the velocity already in ws.vel.
inline void apply_step(Field& u, const SolverConfig& cfg, double dt, SolverWorkspace& ws) {
  const int n = u.size();
  const double dx = u.grid.dx();
  const double eps_over_dx = cfg.epsilon / dx;
  const double* uv = u.values.data();
  const double* a = ws.vel.data();
  double* f = ws.flux.data();

  f[0] = 0.0;
  f[n] = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double am = 0.5 * (a[j] + a[j + 1]);
    // flux eps u_x + a u; the transported quantity moves with speed -a, so a
    // positive interface a draws from the right cell
    const double donor = am > 0.0 ? uv[j + 1] : uv[j];
    f[j + 1] = eps_over_dx * (uv[j + 1] - uv[j]) + am * donor;
  }

  const double r = dt / dx;
  double mn = 0.0;
  bool finite = true;
  for (int j = 0; j < n; ++j) {
    const double nv = u.values[j] + r * (f[j + 1] - f[j]);
    u.values[j] = nv;
    if (nv < mn) mn = nv;
    if (!std::isfinite(nv)) finite = false;
  }
  u.time += dt;

  if (!finite) throw solver_error("solver state became non-finite (time step too large?)");
  if (mn < -1e-10)
    throw solver_error("positivity lost: min u = " + std::to_string(mn) +
                       "; the time step violates the CFL limit");
  if (dx * (u.values.front() + u.values.back()) > cfg.boundary_tol)
    throw solver_error("boundary mass " +
                       std::to_string(dx * (u.values.front() + u.values.back())) +
                       " exceeds boundary_tol; domain too small for this horizon");
}

}  // namespace detail

// Single forward-Euler step (convenience wrapper; evolve() drives the
// workspace version).  dt is taken as given, but the positivity and boundary
// checks still reject steps that break the scheme's guarantees.
inline Field step(const Field& u0, const KernelSpec& k, const SolverConfig& cfg, double dt) {
  validate(cfg);
  require_finite(u0, "step");
  if (!std::isfinite(dt) || dt < 0.0) throw std::invalid_argument("step: dt must be >= 0");
  Field u = u0;
  if (dt == 0.0) return u;
  SolverWorkspace ws(k, u.grid);
  detail::compute_velocity(u, k, ws);
  detail::apply_step(u, cfg, dt, ws);
  return u;
}

// March from u0.time to cfg.t_end, invoking observer(u) exactly at each
// checkpoint (checkpoint times are landed on exactly, not straddled).
template <class Observer>
Field evolve(const Field& u0, const KernelSpec& k, const SolverConfig& cfg, Observer&& observer) {
  validate(cfg);
  require_finite(u0, "evolve");
  if (u0.time > cfg.t_end * (1.0 + 1e-12))
    throw std::invalid_argument("evolve: initial state is already past t_end");

  Field u = u0;
  if (u.time >= cfg.t_end) return u;  // zero steps to take
  SolverWorkspace ws(k, u.grid);

  std::vector<double> events;
  for (double c : cfg.checkpoints)
    if (c > u.time) events.push_back(c);
  if (events.empty() || events.back() < cfg.t_end) events.push_back(cfg.t_end);

  for (double target : events) {
    while (u.time < target) {
      const double amax = detail::compute_velocity(u, k, ws);
      const double gap = target - u.time;
      double dt = detail::dt_from_velocity(amax, u.grid.dx(), cfg,
                                           std::numeric_limits<double>::infinity());
      bool land = false;
      if (!(dt < gap * (1.0 - 1e-12))) {  // also catches dt = inf for a zero state
        dt = gap;
        land = true;
      }
      try {
        detail::apply_step(u, cfg, dt, ws);
      } catch (const solver_error& e) {
        throw solver_error(std::string(e.what()) + " (at t = " + std::to_string(u.time) + ")");
      }
      if (land) u.time = target;  // pin the timestamp, no float accumulation drift
    }
    const bool is_checkpoint =
        std::find(cfg.checkpoints.begin(), cfg.checkpoints.end(), target) != cfg.checkpoints.end();
    if (is_checkpoint) observer(u);
  }
  return u;
}

inline Field evolve(const Field& u0, const KernelSpec& k, const SolverConfig& cfg) {
  return evolve(u0, k, cfg, [](const Field&) {});
}

// Primitive U(x_j) = int_{-L}^{x_j} u - 1/2 by the same midpoint prefix the
// velocity uses; for a unit-mass density it runs from -1/2 to +1/2.
inline Field primitive(const Field& u) {
  require_finite(u, "primitive");
  Field out(u.grid, u.time);
  const double dx = u.grid.dx();
  double run = 0.0;
  for (int j = 0; j < u.size(); ++j) {
    out.values[j] = dx * (run + 0.5 * u.values[j]) - 0.5;
    run += u.values[j];
  }
  return out;
}

}  // namespace aggdiff
