#pragma once
// Deterministic particle system mirroring the PDE: N unit-weight/N particles
// moving with the same interaction velocity, X_k' = (A/(2N)) sum_i sign(X_k -
// X_i) - (1/N) sum_{i != k} V(X_k - X_i).  Coincident particles exert no sign
// force on each other (sign(0) = 0), matching the H(0) = 0 convention of the
// continuum operator.
//
// Velocities are computed either by the O(N^2) direct sum or by an O(N log N)
// sorted pass: the sign force is a rank count, and for the exponential family
// the V sum collapses to two geometric prefixes over the sorted gaps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/grid.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/solver.hpp"

namespace aggdiff {

struct ParticleEnsemble {
  std::vector<double> positions;
  double time = 0.0;
  std::uint64_t seed = 0;  // recorded for reproducibility metadata

  int count() const { return static_cast<int>(positions.size()); }
};

// Draw count particles from the datum by inverse-CDF sampling of its
// piecewise-linear grid CDF.  Same seed, same grid, same count: identical
// positions, bit for bit.
inline ParticleEnsemble sample_particles(const InitialDatum& d, const Grid& g, int count,
                                         std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_particles: count must be positive");
  const Field u = initial_datum(d, g);
  const int n = g.cells;
  const double dx = g.dx();

  std::vector<double> cdf(n + 1);  // CDF at cell edges
  cdf[0] = 0.0;
  for (int j = 0; j < n; ++j) cdf[j + 1] = cdf[j] + dx * u.values[j];
  cdf[n] = 1.0;  // normalized datum; pin the top against rounding

  ParticleEnsemble e;
  e.positions.resize(count);
  e.seed = seed;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < count; ++k) {
    // uniform in [0, 1) from the top 53 bits; avoids distribution objects so
    // the draw is identical across standard libraries
    const double xi = static_cast<double>(rng() >> 11) * 0x1p-53;
    int j = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), xi) - cdf.begin()) - 1;
    j = std::clamp(j, 0, n - 1);
    const double du = cdf[j + 1] - cdf[j];
    e.positions[k] = g.left_edge(j) + (du > 0.0 ? dx * (xi - cdf[j]) / du : 0.0);
  }
  return e;
}

// O(N^2) reference velocities.
inline std::vector<double> particle_velocities_direct(const ParticleEnsemble& e,
                                                      const KernelSpec& k) {
  const int n = e.count();
  const double sgn_w = 0.5 * k.amplitude / n;
  const double v_w = 1.0 / n;
  std::vector<double> vel(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = e.positions[i] - e.positions[j];
      s += sgn_w * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) - v_w * k.v(d);
    }
    vel[i] = s;
  }
  return vel;
}

namespace detail {

// Sorted-pass velocities.  ranks: for each particle, how many are strictly
// left minus strictly right of it, which is all the sign force needs.  For
// ExponentialBump the V force uses gap-weighted geometric prefixes; the other
// smooth families fall back to the direct sum for the V part only.
inline std::vector<double> particle_velocities_sorted(const ParticleEnsemble& e,
                                                      const KernelSpec& k) {
  const int n = e.count();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return e.positions[a] < e.positions[b]; });

  std::vector<double> vel(n, 0.0);
  const double sgn_w = 0.5 * k.amplitude / n;

  // sign force via ranks, tied positions grouped so sign(0) contributes 0
  int i = 0;
  while (i < n) {
    int j = i;
    const double x = e.positions[order[i]];
    while (j < n && e.positions[order[j]] == x) ++j;
    const double f = sgn_w * (i - (n - j));  // (#left) - (#right)
    for (int q = i; q < j; ++q) vel[order[q]] = f;
    i = j;
  }

  switch (k.family) {
    case KernelFamily::ZeroV:
      break;
    case KernelFamily::ExponentialBump: {
      // sum_{i != k} e^{-|X_k - X_i|} = Lk + Rk - 2 with Lk, Rk the decayed
      // counts accumulated along the sorted axis
      const double v_w = k.beta / n;
      std::vector<double> acc(n);
      double run = 0.0;
      double prev = 0.0;
      for (int q = 0; q < n; ++q) {
        const double x = e.positions[order[q]];
        run = (q == 0) ? 1.0 : 1.0 + std::exp(-(x - prev)) * run;
        acc[q] = run;
        prev = x;
      }
      run = 0.0;
      for (int q = n - 1; q >= 0; --q) {
        const double x = e.positions[order[q]];
        run = (q == n - 1) ? 1.0 : 1.0 + std::exp(-(prev - x)) * run;
        acc[q] += run - 2.0;  // subtract the self term counted in both sweeps
        prev = x;
      }
      for (int q = 0; q < n; ++q) vel[order[q]] -= v_w * acc[q];
      break;
    }
    default: {
      const double v_w = 1.0 / n;
      for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int b = 0; b < n; ++b) {
          if (b == a) continue;
          s += k.v(e.positions[a] - e.positions[b]);
        }
        vel[a] -= v_w * s;
      }
      break;
    }
  }
  return vel;
}

}  // namespace detail

// Interaction velocities for every particle (fast path; agrees with the
// direct sum to rounding).
inline std::vector<double> particle_velocities(const ParticleEnsemble& e, const KernelSpec& k) {
  for (double x : e.positions)
    if (!std::isfinite(x))
      throw std::invalid_argument("particle_velocities: non-finite particle position");
  return detail::particle_velocities_sorted(e, k);
}

// Forward-Euler step of the whole ensemble.
inline ParticleEnsemble particle_step(const ParticleEnsemble& e, const KernelSpec& k, double dt) {
  if (!std::isfinite(dt) || dt < 0.0) throw std::invalid_argument("particle_step: dt must be >= 0");
  const std::vector<double> vel = particle_velocities(e, k);
  ParticleEnsemble out = e;
  for (int i = 0; i < e.count(); ++i) out.positions[i] += dt * vel[i];
  out.time += dt;
  return out;
}

// Step size keeping the ordering stable: at most cap, and at most half the
// closing time of the tightest approaching neighbor pair.
inline double stable_particle_dt(const ParticleEnsemble& e, const KernelSpec& k, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("stable_particle_dt: cap must be positive");
  const int n = e.count();
  const std::vector<double> vel = particle_velocities(e, k);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return e.positions[a] < e.positions[b]; });
  double dt = cap;
  for (int q = 0; q + 1 < n; ++q) {
    const double gap = e.positions[order[q + 1]] - e.positions[order[q]];
    const double closing = vel[order[q]] - vel[order[q + 1]];
    if (gap > 0.0 && closing > 0.0) dt = std::min(dt, 0.5 * gap / closing);
  }
  return dt;
}

// March the ensemble to t_end with adaptively capped steps.
inline ParticleEnsemble evolve_particles(ParticleEnsemble e, const KernelSpec& k, double t_end,
                                         double dt_cap) {
  if (!(t_end >= e.time)) throw std::invalid_argument("evolve_particles: t_end before ensemble time");
  while (e.time < t_end) {
    const double dt = std::min(stable_particle_dt(e, k, dt_cap), t_end - e.time);
    e = particle_step(e, k, dt);
  }
  e.time = t_end;
  return e;
}

// Empirical CDF F_N(x_j) = (#{X_k <= x_j}) / N sampled at cell centers.
inline Field empirical_cdf(const ParticleEnsemble& e, const Grid& g) {
  std::vector<double> sorted = e.positions;
  std::sort(sorted.begin(), sorted.end());
  Field out(g, e.time);
  const double w = 1.0 / e.count();
  for (int j = 0; j < g.cells; ++j) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), g.center(j));
    out.values[j] = w * static_cast<double>(it - sorted.begin());
  }
  return out;
}

}  // namespace aggdiff
