#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "aggdiff/solver.hpp"

using namespace aggdiff;
using Catch::Approx;

TEST_CASE("solver config validation", "[solver]") {
  SolverConfig c;
  CHECK_NOTHROW(validate(c));

  SolverConfig bad = c;
  bad.epsilon = -0.1;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = c;
  bad.cfl = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = c;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = c;
  bad.t_end = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = c;
  bad.boundary_tol = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = c;
  bad.t_end = 1.0;
  bad.checkpoints = {0.5, 0.25};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.checkpoints = {0.5, 2.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.checkpoints = {0.25, 0.5, 1.0};
  CHECK_NOTHROW(validate(bad));
}

TEST_CASE("initial data are normalized to unit mass", "[solver]") {
  const Grid g(20.0, 1024);

  InitialDatum gauss;
  const Field ug = initial_datum(gauss, g);
  CHECK(mass(ug) == Approx(1.0).margin(1e-13));
  CHECK(min_value(ug) >= 0.0);

  InitialDatum two;
  two.kind = InitialDatum::Kind::DoubleBump;
  two.sigma = 0.5;
  two.separation = 4.0;
  const Field ud = initial_datum(two, g);
  CHECK(mass(ud) == Approx(1.0).margin(1e-13));
  for (int j = 0; j < g.cells; ++j)
    CHECK(ud.values[j] == Approx(ud.values[g.cells - 1 - j]).margin(1e-13));
}

TEST_CASE("a grid-aligned box normalizes to its exact height", "[solver]") {
  // dx = 1/32 puts the box edges x = +-1 on cell edges: 64 interior cells,
  // each of height exactly 1/2 after normalization (powers of two throughout)
  const Grid g(32.0, 2048);
  InitialDatum box;
  box.kind = InitialDatum::Kind::Box;
  box.width = 2.0;
  const Field u = initial_datum(box, g);
  int inside = 0;
  for (int j = 0; j < g.cells; ++j) {
    if (u.values[j] != 0.0) {
      CHECK(u.values[j] == 0.5);
      ++inside;
    }
  }
  CHECK(inside == 64);

  // its primitive is exactly x/2 across the box and saturates at -+1/2
  const Field U = primitive(u);
  for (int j = 0; j < g.cells; ++j) {
    const double x = g.center(j);
    if (std::fabs(x) < 1.0)
      CHECK(U.values[j] == Approx(0.5 * x).margin(1e-14));
    else if (x > 1.0)
      CHECK(U.values[j] == Approx(0.5).margin(1e-14));
    else
      CHECK(U.values[j] == Approx(-0.5).margin(1e-14));
  }
}

TEST_CASE("initial data that crowd the domain are rejected", "[solver]") {
  CHECK_THROWS_AS(initial_datum(InitialDatum{}, Grid(10.0, 256)), std::invalid_argument);

  InitialDatum bad;
  bad.sigma = -1.0;
  CHECK_THROWS_AS(initial_datum(bad, Grid(20.0, 256)), std::invalid_argument);
  bad = InitialDatum{};
  bad.kind = InitialDatum::Kind::Box;
  bad.width = 0.0;
  CHECK_THROWS_AS(initial_datum(bad, Grid(20.0, 256)), std::invalid_argument);
}

TEST_CASE("stable_dt picks the binding constraint", "[solver]") {
  const Grid g(16.0, 512);
  const KernelSpec k = make_kernel(KernelFamily::ExponentialBump, 2.0, 0.5);
  const Field u = initial_datum(InitialDatum{}, g);
  const double dx = g.dx();
  const double amax = max_abs(interaction_velocity(k, u));
  REQUIRE(amax > 0.1);  // a unit-mass profile really does move

  SolverConfig cfg;
  cfg.t_end = 100.0;

  cfg.epsilon = 0.0;  // advective limit binds
  CHECK(stable_dt(u, k, cfg) == Approx(cfg.cfl * dx / amax).epsilon(1e-14));

  cfg.epsilon = 50.0;  // diffusive limit binds
  CHECK(stable_dt(u, k, cfg) ==
        Approx(cfg.cfl * dx * dx / (2.0 * cfg.epsilon)).epsilon(1e-14));

  cfg.epsilon = 0.0;  // an imminent checkpoint binds tighter than either
  cfg.checkpoints = {1e-6, 50.0};
  CHECK(stable_dt(u, k, cfg) == Approx(cfg.cfl * 1e-6).epsilon(1e-14));
}

TEST_CASE("single steps conserve mass and advance time", "[solver]") {
  const Grid g(20.0, 512);
  const KernelSpec k = make_kernel(KernelFamily::ExponentialBump, 2.0, 0.5);
  const Field u0 = initial_datum(InitialDatum{}, g);
  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.t_end = 10.0;

  const double dt = stable_dt(u0, k, cfg);
  const Field u1 = step(u0, k, cfg, dt);
  CHECK(u1.time == Approx(dt));
  CHECK(mass(u1) == Approx(mass(u0)).margin(1e-14));

  const Field same = step(u0, k, cfg, 0.0);
  CHECK(same.values == u0.values);
  CHECK_THROWS_AS(step(u0, k, cfg, -1e-3), std::invalid_argument);
}

TEST_CASE("diffusion-dominated run reproduces the heat kernel", "[solver]") {
  // With a vanishing interaction (A ~ 1e-6) the dynamics are the heat
  // equation; a Gaussian stays Gaussian with sigma_t^2 = sigma^2 + 2 eps t.
  const Grid g(20.0, 2048);
  const KernelSpec k = make_kernel(KernelFamily::ZeroV, 1e-6, 0.0);
  SolverConfig cfg;
  cfg.epsilon = 0.5;
  cfg.t_end = 2.0;

  Field u = evolve(initial_datum(InitialDatum{}, g), k, cfg);
  CHECK(u.time == cfg.t_end);
  CHECK(mass(u) == Approx(1.0).margin(1e-12));

  const double s2 = 1.0 + 2.0 * cfg.epsilon * cfg.t_end;
  double sup = 0.0;
  for (int j = 0; j < g.cells; ++j) {
    const double x = g.center(j);
    const double exact = std::exp(-0.5 * x * x / s2) / std::sqrt(2.0 * 3.14159265358979323846 * s2);
    sup = std::max(sup, std::fabs(u.values[j] - exact));
  }
  CHECK(sup < 1e-4);
}

TEST_CASE("mass and positivity survive a hundred thousand steps", "[solver]") {
  const Grid g(20.0, 512);
  const KernelSpec k = make_kernel(KernelFamily::ExponentialBump, 2.0, 0.5);
  SolverConfig cfg;
  cfg.epsilon = 4.0;  // diffusive limit binds: ~1e5 steps to reach t = 31
  cfg.t_end = 31.0;
  cfg.boundary_tol = 1e9;  // the wave is allowed to reach the walls here

  const Field u = evolve(initial_datum(InitialDatum{}, g), k, cfg);
  CHECK(u.time == cfg.t_end);
  CHECK(mass(u) == Approx(1.0).margin(1e-11));
  CHECK(min_value(u) >= -1e-10);
}

TEST_CASE("evolve lands on every checkpoint exactly", "[solver]") {
  const Grid g(20.0, 256);
  const KernelSpec k = make_kernel(KernelFamily::ExponentialBump, 2.0, 0.5);
  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.t_end = 1.0;
  cfg.checkpoints = {0.3, 0.7, 1.0};

  std::vector<double> seen;
  const Field u = evolve(initial_datum(InitialDatum{}, g), k, cfg, [&](const Field& s) {
    seen.push_back(s.time);
    CHECK(mass(s) == Approx(1.0).margin(1e-12));
  });
  REQUIRE(seen.size() == 3);
  CHECK(seen[0] == 0.3);  // exact: landing pins the timestamp
  CHECK(seen[1] == 0.7);
  CHECK(seen[2] == 1.0);
  CHECK(u.time == 1.0);
}

TEST_CASE("evolve is deterministic", "[solver]") {
  const Grid g(20.0, 256);
  const KernelSpec k = make_kernel(KernelFamily::GaussianBump, 2.0, 0.5);
  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.t_end = 0.5;
  const Field u0 = initial_datum(InitialDatum{}, g);
  const Field a = evolve(u0, k, cfg);
  const Field b = evolve(u0, k, cfg);
  CHECK(a.values == b.values);  // bitwise identical
}

TEST_CASE("evolve preserves even symmetry under odd kernels", "[solver]") {
  // only the sign part and an odd V keep the velocity odd; even V families
  // genuinely push symmetric data off-center and are excluded on purpose
  const Grid g(20.0, 512);
  const KernelSpec k = make_kernel(KernelFamily::OddSmooth, 2.0, 0.8);
  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.t_end = 1.0;
  const Field u = evolve(initial_datum(InitialDatum{}, g), k, cfg);
  for (int j = 0; j < g.cells; ++j)
    CHECK(u.values[j] == Approx(u.values[g.cells - 1 - j]).margin(1e-11));
}

TEST_CASE("a state at or beyond t_end is returned unchanged", "[solver]") {
  const Grid g(20.0, 256);
  const KernelSpec k = make_kernel(KernelFamily::ZeroV, 2.0, 0.0);
  Field u0 = initial_datum(InitialDatum{}, g);
  u0.time = 1.0;
  SolverConfig cfg;
  cfg.t_end = 1.0;
  const Field u = evolve(u0, k, cfg);
  CHECK(u.values == u0.values);
  CHECK(u.time == 1.0);

  u0.time = 2.0;
  CHECK_THROWS_AS(evolve(u0, k, cfg), std::invalid_argument);
}

TEST_CASE("mass reaching the walls aborts the run", "[solver]") {
  const Grid g(4.0, 64);
  InitialDatum box;
  box.kind = InitialDatum::Kind::Box;
  box.width = 2.0;
  const KernelSpec k = make_kernel(KernelFamily::ZeroV, 2.0, 0.0);
  SolverConfig cfg;
  cfg.epsilon = 1.0;  // strong diffusion hits the wall well before t = 10
  cfg.t_end = 10.0;
  cfg.boundary_tol = 1e-12;
  CHECK_THROWS_AS(evolve(initial_datum(box, g), k, cfg), solver_error);
}

TEST_CASE("primitive of a unit-mass field spans [-1/2, 1/2]", "[solver]") {
  const Grid g(20.0, 512);
  const Field u = initial_datum(InitialDatum{}, g);
  const Field U = primitive(u);
  CHECK(U.values.front() == Approx(-0.5).margin(1e-9));
  CHECK(U.values.back() == Approx(0.5).margin(1e-9));
  for (int j = 0; j + 1 < g.cells; ++j) CHECK(U.values[j + 1] >= U.values[j]);
}
