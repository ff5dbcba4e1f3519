#ifndef FDAPOI_GRID_HPP
#define FDAPOI_GRID_HPP

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "fdapoi/errors.hpp"

namespace fdapoi {

/// Equidistant observation grid t_j = a + (j-1)(b-a)/(p-1), j = 1..p.
struct Grid {
  double a = 0.0;
  double b = 1.0;
  int p = 0;

  Grid() = default;
  Grid(double a_, double b_, int p_) : a(a_), b(b_), p(p_) {
    if (!(b > a)) throw spec_error("grid: requires b > a");
    if (p < 3) throw spec_error("grid: requires p >= 3, got " + std::to_string(p));
  }

  double h() const { return (b - a) / (p - 1); }

  /// Zero-based index j -> t_{j+1}.
  double point(int j) const { return a + j * (b - a) / (p - 1); }

  Eigen::VectorXd points() const {
    Eigen::VectorXd t(p);
    for (int j = 0; j < p; ++j) t[j] = point(j);
    return t;
  }

  /// Zero-based index of the grid point nearest to t (ties toward lower index).
  int nearest_index(double t) const {
    double x = (t - a) / h();
    int j = static_cast<int>(std::floor(x + 0.5));
    if (j > 0 && std::abs(point(j - 1) - t) <= std::abs(point(j) - t)) --j;
    if (j < 0) j = 0;
    if (j >= p) j = p - 1;
    return j;
  }

  bool operator==(const Grid& o) const { return a == o.a && b == o.b && p == o.p; }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline void require_same_grid(const Grid& g1, const Grid& g2, const char* where) {
  if (g1 != g2)
    throw data_error(std::string(where) + ": grid mismatch (" +
                     std::to_string(g1.p) + " points on [" + std::to_string(g1.a) + "," +
                     std::to_string(g1.b) + "] vs " + std::to_string(g2.p) + " points on [" +
                     std::to_string(g2.a) + "," + std::to_string(g2.b) + "])");
}

}  // namespace fdapoi

#endif  // FDAPOI_GRID_HPP
