#ifndef FDAPOI_FPCA_HPP
#define FDAPOI_FPCA_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "fdapoi/dataset.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"
#include "fdapoi/quadrature.hpp"

namespace fdapoi {

struct CenteredData {
  FunctionalDataset data;
  Eigen::VectorXd curve_means;  // length p
  double response_mean = 0.0;
};

/// Subtracts columnwise curve means and the response mean. The means are
/// returned so predictions can re-center new data.
inline CenteredData center(const FunctionalDataset& input) {
  if (input.n() < 2) throw data_error("center: need at least 2 curves");
  CenteredData out;
  out.curve_means = input.curves.colwise().mean();
  out.data.grid = input.grid;
  out.data.curves = input.curves.rowwise() - out.curve_means.transpose();
  if (input.responses) {
    out.response_mean = input.responses->mean();
    out.data.responses = *input.responses - Eigen::VectorXd::Constant(input.n(), out.response_mean);
  }
  out.data.centered = true;
  return out;
}

/// Empirical Karhunen-Loeve triple: eigenvalues of the empirical covariance
/// operator, eigenfunctions orthonormal under the quadrature rule, and the
/// score matrix theta_ij = <X_i, psi_j>.
struct EigenSystem {
  Grid grid;
  QuadratureRule rule;
  Eigen::VectorXd eigenvalues;     // length k, descending
  Eigen::MatrixXd eigenfunctions;  // k x p
  Eigen::MatrixXd scores;          // n x k
  Eigen::VectorXd spectrum;        // full spectrum, descending, clamped at 0
  int requested_k = 0;
  bool truncated = false;          // requested_k exceeded the numerical rank

  int k() const { return static_cast<int>(eigenvalues.size()); }
};

namespace detail {

// Flip eigenfunction j (and its score column) so the entry of largest
// magnitude is positive, first such entry on ties. Keeps serialized
// systems deterministic.
inline void fix_sign(EigenSystem& sys, int j) {
  int arg = 0;
  double best = -1.0;
  for (int l = 0; l < sys.eigenfunctions.cols(); ++l) {
    const double m = std::abs(sys.eigenfunctions(j, l));
    if (m > best) {
      best = m;
      arg = l;
    }
  }
  if (sys.eigenfunctions(j, arg) < 0.0) {
    sys.eigenfunctions.row(j) = -sys.eigenfunctions.row(j);
    sys.scores.col(j) = -sys.scores.col(j);
  }
}

inline int numerical_rank(const Eigen::VectorXd& spectrum) {
  const double lead = spectrum[0];
  int rank = 0;
  while (rank < spectrum.size() && spectrum[rank] > 1e-12 * lead) ++rank;
  return std::max(rank, 1);
}

}  // namespace detail

/// Diagonalizes the empirical covariance operator of centered data. Uses
/// the n x n Gram matrix G_il = <X_i, X_l>/n when n <= p (duality) and the
/// weighted p x p covariance matrix otherwise; both give the operator
/// eigenvalues. If k_max exceeds the numerical rank the output is
/// truncated and flagged.
inline EigenSystem empirical_kl(const FunctionalDataset& data, int k_max,
                                const QuadratureRule& rule) {
  if (!data.centered) throw data_error("empirical_kl: data must be centered first");
  const int n = data.n();
  const int p = data.p();
  if (rule.size() != p) throw data_error("empirical_kl: rule and grid disagree");
  if (k_max < 1) throw spec_error("empirical_kl: k_max must be >= 1");
  if (k_max > std::min(n - 1, p))
    throw spec_error("empirical_kl: k_max = " + std::to_string(k_max) +
                     " exceeds min(n-1, p) = " + std::to_string(std::min(n - 1, p)));

  EigenSystem sys;
  sys.grid = data.grid;
  sys.rule = rule;
  sys.requested_k = k_max;

  const Eigen::MatrixXd& x = data.curves;
  const Eigen::VectorXd& w = rule.weights;

  if (n <= p) {
    // duality route: psi_j = X^T v_j / sqrt(n lambda_j), theta_.j = sqrt(n lambda_j) v_j
    Eigen::MatrixXd gram = x * w.asDiagonal() * x.transpose() / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw numeric_error("empirical_kl: eigensolver failed");
    const int total = static_cast<int>(es.eigenvalues().size());
    sys.spectrum = es.eigenvalues().reverse().cwiseMax(0.0);
    const int k = std::min(k_max, detail::numerical_rank(sys.spectrum));
    sys.truncated = k < k_max;
    sys.eigenvalues = sys.spectrum.head(k);
    sys.eigenfunctions.resize(k, p);
    sys.scores.resize(n, k);
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd v = es.eigenvectors().col(total - 1 - j);
      const double scale = std::sqrt(std::max(n * sys.eigenvalues[j], 1e-300));
      sys.eigenfunctions.row(j) = (x.transpose() * v).transpose() / scale;
      sys.scores.col(j) = scale * v;
      detail::fix_sign(sys, j);
    }
  } else {
    // covariance route: symmetrized weighted operator W^{1/2} C W^{1/2}
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
    Eigen::MatrixXd cov = x.transpose() * x / n;  // p x p
    Eigen::MatrixXd b = sqrt_w.asDiagonal() * cov * sqrt_w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success) throw numeric_error("empirical_kl: eigensolver failed");
    const int total = static_cast<int>(es.eigenvalues().size());
    sys.spectrum = es.eigenvalues().reverse().cwiseMax(0.0);
    const int k = std::min({k_max, detail::numerical_rank(sys.spectrum), n - 1});
    sys.truncated = k < k_max;
    sys.eigenvalues = sys.spectrum.head(k);
    sys.eigenfunctions.resize(k, p);
    sys.scores.resize(n, k);
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd psi =
          es.eigenvectors().col(total - 1 - j).cwiseQuotient(sqrt_w);
      sys.eigenfunctions.row(j) = psi.transpose();
      sys.scores.col(j) = x * (w.asDiagonal() * psi);
      detail::fix_sign(sys, j);
    }
  }
  return sys;
}

/// Scores of one curve against the stored eigenfunctions.
inline Eigen::VectorXd project_scores(const Eigen::Ref<const Eigen::VectorXd>& curve,
                                      const EigenSystem& sys) {
  if (curve.size() != sys.grid.p) throw data_error("project_scores: grid mismatch");
  Eigen::VectorXd out(sys.k());
  for (int j = 0; j < sys.k(); ++j)
    out[j] = quadrature_inner(curve, sys.eigenfunctions.row(j).transpose(), sys.rule);
  return out;
}

/// Decomposition of each curve into a local-variation component around t
/// and an uncorrelated remainder:
///   X_i(s) = remainder_i(s) + zeta_i * f_hat(s),
/// where zeta_i = X_i(t) - (X_i(t-delta) + X_i(t+delta))/2 and f_hat is the
/// least-squares regression of X(s) on zeta.
struct LocalVariationDecomposition {
  double t = 0.0;
  double delta = 0.0;
  Eigen::VectorXd f_hat;      // length p
  Eigen::VectorXd zeta;       // length n
  Eigen::MatrixXd remainder;  // n x p
};

inline LocalVariationDecomposition local_variation_decompose(const FunctionalDataset& data,
                                                             double t, double delta) {
  const Grid& grid = data.grid;
  const double h = grid.h();
  const int jt = grid.nearest_index(t);
  int k = static_cast<int>(std::lround(delta / h));
  if (k < 1) k = 1;
  if (jt - k < 0 || jt + k >= grid.p)
    throw spec_error("local variation: window [t-delta, t+delta] leaves the grid");

  LocalVariationDecomposition out;
  out.t = grid.point(jt);
  out.delta = k * h;
  out.zeta = data.curves.col(jt) -
             0.5 * (data.curves.col(jt - k) + data.curves.col(jt + k));

  const int n = data.n();
  const double zeta_mean = out.zeta.mean();
  const Eigen::VectorXd zc = out.zeta.array() - zeta_mean;
  const double zeta_var = zc.squaredNorm() / n;
  if (zeta_var < 1e-14)
    throw numeric_error("local variation: var(zeta) = " + std::to_string(zeta_var) +
                        " is degenerate in this window");

  const Eigen::VectorXd col_means = data.curves.colwise().mean();
  // cov(X(s), zeta) / var(zeta), one pass over the data matrix
  out.f_hat = ((data.curves.rowwise() - col_means.transpose()).transpose() * zc) /
              (n * zeta_var);
  out.remainder = data.curves - out.zeta * out.f_hat.transpose();
  return out;
}

}  // namespace fdapoi

#endif  // FDAPOI_FPCA_HPP
