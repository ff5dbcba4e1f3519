#ifndef FDAPOI_IMPACT_MODEL_HPP
#define FDAPOI_IMPACT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fdapoi/dataset.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"
#include "fdapoi/quadrature.hpp"
#include "fdapoi/rng.hpp"

namespace fdapoi {

/// Slope function beta(t): identically zero, a polynomial in t
/// (coefficients in ascending powers), or an arbitrary grid-sampled curve.
struct SlopeFunction {
  enum class Kind { Zero, Polynomial, Sampled };

  Kind kind = Kind::Zero;
  std::vector<double> coeffs;  // Polynomial
  Eigen::VectorXd samples;     // Sampled

  static SlopeFunction zero() { return SlopeFunction{}; }

  static SlopeFunction polynomial(std::vector<double> ascending_coeffs) {
    SlopeFunction s;
    s.kind = Kind::Polynomial;
    s.coeffs = std::move(ascending_coeffs);
    return s;
  }

  static SlopeFunction sampled(Eigen::VectorXd values) {
    SlopeFunction s;
    s.kind = Kind::Sampled;
    s.samples = std::move(values);
    return s;
  }

  Eigen::VectorXd evaluate(const Grid& grid) const {
    switch (kind) {
      case Kind::Zero:
        return Eigen::VectorXd::Zero(grid.p);
      case Kind::Polynomial: {
        Eigen::VectorXd out(grid.p);
        for (int j = 0; j < grid.p; ++j) {
          const double t = grid.point(j);
          double acc = 0.0;
          for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
          out[j] = acc;
        }
        return out;
      }
      case Kind::Sampled:
        if (samples.size() != grid.p)
          throw data_error("slope: sampled curve has " + std::to_string(samples.size()) +
                           " values, grid has " + std::to_string(grid.p));
        return samples;
    }
    throw spec_error("slope: unknown kind");
  }

  bool is_zero() const { return kind == Kind::Zero; }
};

/// Ground-truth generator for the impact model: locations tau_r with
/// coefficients beta_r, a slope function, and Gaussian noise level.
struct ImpactModelSpec {
  std::vector<double> taus;
  std::vector<double> betas;
  SlopeFunction slope;
  double noise_sd = 0.0;

  int impact_count() const { return static_cast<int>(taus.size()); }

  void validate(const Grid& grid) const {
    if (taus.size() != betas.size())
      throw spec_error("impact model: " + std::to_string(taus.size()) + " locations vs " +
                       std::to_string(betas.size()) + " coefficients");
    if (noise_sd < 0.0) throw spec_error("impact model: noise_sd must be >= 0");
    for (std::size_t r = 0; r < taus.size(); ++r) {
      if (!(taus[r] > grid.a && taus[r] < grid.b))
        throw spec_error("impact model: tau = " + std::to_string(taus[r]) +
                         " not strictly inside (" + std::to_string(grid.a) + "," +
                         std::to_string(grid.b) + ")");
      if (r > 0 && !(taus[r] > taus[r - 1]))
        throw spec_error("impact model: taus must be strictly increasing");
    }
  }
};

struct SnappedTaus {
  std::vector<int> indices;        // zero-based grid indices
  std::vector<double> locations;   // the snapped grid values
  double max_shift = 0.0;          // largest |tau - snapped|
  bool moved = false;              // any location shifted beyond round-off
};

/// Snaps each tau to the nearest grid point. Locations end up interior
/// grid points; a shift beyond round-off sets `moved` (caller may warn).
inline SnappedTaus snap_taus(const Grid& grid, const std::vector<double>& taus) {
  SnappedTaus out;
  const double tol = 1e-9 * grid.h();
  for (double tau : taus) {
    const int j = grid.nearest_index(tau);
    const double shift = std::abs(grid.point(j) - tau);
    if (shift > grid.h() / 2 + tol)
      throw data_error("impact model: tau = " + std::to_string(tau) + " is off-grid");
    if (j == 0 || j == grid.p - 1)
      throw data_error("impact model: tau = " + std::to_string(tau) +
                       " snaps to a grid endpoint");
    out.indices.push_back(j);
    out.locations.push_back(grid.point(j));
    out.max_shift = std::max(out.max_shift, shift);
    if (shift > tol) out.moved = true;
  }
  return out;
}

/// Y_i = <beta, X_i> + sum_r beta_r X_i(tau_r) + eps_i with eps_i iid
/// N(0, noise_sd^2); the noise stream for case i derives from (seed, i).
inline Eigen::VectorXd generate_response(const FunctionalDataset& data,
                                         const ImpactModelSpec& spec,
                                         const QuadratureRule& rule, std::uint64_t seed) {
  spec.validate(data.grid);
  if (rule.size() != data.grid.p)
    throw data_error("generate_response: rule and grid disagree");
  const SnappedTaus snapped = snap_taus(data.grid, spec.taus);

  const int n = data.n();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  if (!spec.slope.is_zero()) {
    const Eigen::VectorXd weighted =
        (spec.slope.evaluate(data.grid).array() * rule.weights.array()).matrix();
    y.noalias() = data.curves * weighted;
  }
  for (std::size_t r = 0; r < snapped.indices.size(); ++r)
    y += spec.betas[r] * data.curves.col(snapped.indices[r]);
  if (spec.noise_sd > 0.0) {
    for (int i = 0; i < n; ++i) {
      NormalSampler normal(derive_seed(seed, static_cast<std::uint64_t>(i)));
      y[i] += spec.noise_sd * normal();
    }
  }
  return y;
}

}  // namespace fdapoi

#endif  // FDAPOI_IMPACT_MODEL_HPP
