#pragma once
// Uniform cell-centered mesh on [-L, L] and sampled fields on it.
// Cell centers sit at x_j = -L + (j + 1/2) dx; all spatial operators in the
// library use midpoint quadrature on this layout.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace aggdiff {

struct Grid {
  double half_width = 0.0;  // L
  int cells = 0;            // N

  Grid() = default;
  Grid(double L, int N) : half_width(L), cells(N) {
    if (!std::isfinite(L) || L <= 0.0)
      throw std::invalid_argument("Grid: half-width must be positive and finite");
    if (N < 16)
      throw std::invalid_argument("Grid: need at least 16 cells, got " + std::to_string(N));
  }

  double dx() const { return 2.0 * half_width / cells; }
  double center(int j) const { return -half_width + (j + 0.5) * dx(); }
  double left_edge(int j) const { return -half_width + j * dx(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// A scalar sample per cell plus the time it represents.  Plain value type;
// whether values are a density, a primitive, or a velocity is up to the caller.
struct Field {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  Field() = default;
  explicit Field(const Grid& g, double t = 0.0) : grid(g), values(g.cells, 0.0), time(t) {}

  int size() const { return static_cast<int>(values.size()); }
};

inline double mass(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return f.grid.dx() * s;
}

inline double min_value(const Field& f) {
  double m = f.values.empty() ? 0.0 : f.values[0];
  for (double v : f.values)
    if (v < m) m = v;
  return m;
}

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values) {
    double a = std::fabs(v);
    if (a > m) m = a;
  }
  return m;
}

inline void require_finite(const Field& f, const char* what) {
  for (double v : f.values)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(what) + ": field contains a non-finite value");
}

inline void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (!(a.grid == b.grid))
    throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

}  // namespace aggdiff
