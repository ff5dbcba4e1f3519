#ifndef FDAPOI_QUADRATURE_HPP
#define FDAPOI_QUADRATURE_HPP

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"

namespace fdapoi {

/// Weights discretizing the inner product <f,g> = int_a^b f(t)g(t) dt on a
/// grid. Weights are nonnegative and sum to b-a.
struct QuadratureRule {
  Eigen::VectorXd weights;

  QuadratureRule() = default;
  explicit QuadratureRule(Eigen::VectorXd w, double span) : weights(std::move(w)) {
    if ((weights.array() < 0.0).any())
      throw spec_error("quadrature: negative weight");
    if (std::abs(weights.sum() - span) > 1e-12 * std::max(1.0, std::abs(span)))
      throw spec_error("quadrature: weights sum to " + std::to_string(weights.sum()) +
                       ", expected " + std::to_string(span));
  }

  /// Composite trapezoid: h/2 at the endpoints, h inside.
  static QuadratureRule trapezoid(const Grid& grid) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.p, grid.h());
    w[0] *= 0.5;
    w[grid.p - 1] *= 0.5;
    return QuadratureRule(std::move(w), grid.b - grid.a);
  }

  /// Uniform (b-a)/p weights, the plain Riemann approximation.
  static QuadratureRule riemann(const Grid& grid) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.p, (grid.b - grid.a) / grid.p);
    return QuadratureRule(std::move(w), grid.b - grid.a);
  }

  int size() const { return static_cast<int>(weights.size()); }
};

/// <f,g> under the rule; symmetric and bilinear.
inline double quadrature_inner(const Eigen::Ref<const Eigen::VectorXd>& f,
                               const Eigen::Ref<const Eigen::VectorXd>& g,
                               const QuadratureRule& rule) {
  if (f.size() != g.size() || f.size() != rule.weights.size())
    throw data_error("quadrature_inner: dimension mismatch (" + std::to_string(f.size()) +
                     ", " + std::to_string(g.size()) + ", " +
                     std::to_string(rule.weights.size()) + ")");
  return (f.array() * g.array() * rule.weights.array()).sum();
}

inline double quadrature_norm(const Eigen::Ref<const Eigen::VectorXd>& f,
                              const QuadratureRule& rule) {
  return std::sqrt(quadrature_inner(f, f, rule));
}

}  // namespace fdapoi

#endif  // FDAPOI_QUADRATURE_HPP
