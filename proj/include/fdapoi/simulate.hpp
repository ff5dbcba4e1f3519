#ifndef FDAPOI_SIMULATE_HPP
#define FDAPOI_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "fdapoi/dataset.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"
#include "fdapoi/parallel.hpp"
#include "fdapoi/process.hpp"
#include "fdapoi/rng.hpp"

namespace fdapoi {

/// Exact OU sampling via the one-step updating formula
///   X(t+h) = e^{-theta h} X(t) + sqrt(sigma_u^2/(2 theta) (1 - e^{-2 theta h})) xi.
/// The process starts at zero at time origin 0, so X(a) is drawn with
/// variance sigma(a,a); for a = 0 this pins X(a) = 0 and the sample
/// covariance matches the closed form exactly. No stationary-start variant.
inline FunctionalDataset simulate_ou(int n, const Grid& grid, double theta, double sigma_u,
                                     std::uint64_t seed, int threads = 1) {
  if (n < 1) throw spec_error("simulate_ou: n must be >= 1");
  const ProcessSpec spec = ProcessSpec::ornstein_uhlenbeck(theta, sigma_u);
  const double h = grid.h();
  const double decay = std::exp(-theta * h);
  const double v = sigma_u * sigma_u / (2.0 * theta);
  const double innov_sd = std::sqrt(v * (1.0 - std::exp(-2.0 * theta * h)));
  const double start_sd = std::sqrt(std::max(0.0, covariance_eval(spec, grid.a, grid.a)));

  FunctionalDataset data;
  data.grid = grid;
  data.curves.resize(n, grid.p);
  parallel_for(n, threads, [&](int i) {
    NormalSampler normal(derive_seed(seed, static_cast<std::uint64_t>(i)));
    double x = start_sd * normal();
    data.curves(i, 0) = x;
    for (int j = 1; j < grid.p; ++j) {
      x = decay * x + innov_sd * normal();
      data.curves(i, j) = x;
    }
  });
  return data;
}

/// Exact sampler for any supported covariance via dense Cholesky of the
/// grid covariance matrix. Factors once; sampling draws are cheap after
/// that. A ridge of 1e-12 * trace/p is added when the plain factorization
/// fails (BM/fBM grids that contain t = 0 are only semidefinite).
class CovarianceSampler {
 public:
  static constexpr int kMaxDenseP = 20000;

  CovarianceSampler(const ProcessSpec& spec, const Grid& grid) : grid_(grid) {
    spec.validate_domain(grid.a, grid.b);
    if (grid.p > kMaxDenseP)
      throw spec_error("covariance sampler: p = " + std::to_string(grid.p) +
                       " exceeds the dense factorization guard " + std::to_string(kMaxDenseP));
    Eigen::MatrixXd cov(grid.p, grid.p);
    for (int j = 0; j < grid.p; ++j) {
      const double tj = grid.point(j);
      for (int l = 0; l <= j; ++l) {
        const double c = covariance_eval(spec, tj, grid.point(l));
        cov(j, l) = c;
        cov(l, j) = c;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      ridge_ = 1e-12 * cov.trace() / grid.p;
      cov.diagonal().array() += ridge_;
      llt.compute(cov);
      if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
        throw numeric_error("covariance sampler: factorization failed, smallest pivot " +
                            std::to_string(es.eigenvalues().minCoeff()));
      }
    }
    chol_upper_ = llt.matrixU();
  }

  const Grid& grid() const { return grid_; }

  /// Ridge added to the diagonal; 0 when the plain factorization succeeded.
  double ridge_added() const { return ridge_; }

  /// Draws n i.i.d. mean-zero curves. Row i uses the stream derived from
  /// (seed, i), so batching and parallelism do not change the output.
  FunctionalDataset sample(int n, std::uint64_t seed, int threads = 1) const {
    if (n < 1) throw spec_error("covariance sampler: n must be >= 1");
    const int p = grid_.p;
    FunctionalDataset data;
    data.grid = grid_;
    data.curves.resize(n, p);
    Eigen::MatrixXd z(n, p);
    parallel_for(n, threads, [&](int i) {
      NormalSampler normal(derive_seed(seed, static_cast<std::uint64_t>(i)));
      for (int j = 0; j < p; ++j) z(i, j) = normal();
    });
    data.curves.noalias() = z * chol_upper_.triangularView<Eigen::Upper>();
    return data;
  }

 private:
  Grid grid_;
  Eigen::MatrixXd chol_upper_;
  double ridge_ = 0.0;
};

inline FunctionalDataset simulate_from_covariance(int n, const Grid& grid,
                                                  const ProcessSpec& spec, std::uint64_t seed,
                                                  int threads = 1) {
  return CovarianceSampler(spec, grid).sample(n, seed, threads);
}

}  // namespace fdapoi

#endif  // FDAPOI_SIMULATE_HPP
