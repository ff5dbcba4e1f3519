#ifndef FDAPOI_REGRESSION_HPP
#define FDAPOI_REGRESSION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "fdapoi/dataset.hpp"
#include "fdapoi/detection.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/fpca.hpp"

namespace fdapoi {

/// BIC_s = n log(RSS_s/n) + s log(n). An exact fit (rss = 0) maps to the
/// -infinity sentinel so it wins every comparison.
inline double bic_score(double rss, int n, int s_params) {
  if (rss < 0.0) throw spec_error("bic_score: negative rss");
  if (n < 2) throw spec_error("bic_score: need n >= 2");
  if (rss == 0.0) return -std::numeric_limits<double>::infinity();
  return n * std::log(rss / n) + s_params * std::log(static_cast<double>(n));
}

/// Least-squares fit of centered responses on k leading FPCA scores plus
/// the curve values at the selected impact locations, with the slope
/// curve reassembled from the score coefficients.
struct AugmentedFit {
  int k = 0;
  std::vector<double> selected_taus;  // ascending
  Eigen::VectorXd alpha_hat;          // length k
  Eigen::VectorXd beta_hat_impacts;   // matches selected_taus
  Eigen::VectorXd beta_hat_curve;     // length p
  double rss = 0.0;
  double bic = 0.0;
  double sigma2_hat = std::numeric_limits<double>::quiet_NaN();
  bool exact_fit = false;

  int impact_count() const { return static_cast<int>(selected_taus.size()); }
};

namespace detail {

struct LinearFit {
  Eigen::VectorXd coeffs;
  double rss = 0.0;
};

// QR with column pivoting; impact columns can be nearly collinear with the
// leading score columns, so normal equations are avoided. Rank-deficient
// designs are an error, not a pseudo-inverse fallback.
inline LinearFit solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  LinearFit out;
  if (design.cols() == 0) {
    out.coeffs = Eigen::VectorXd();
    out.rss = y.squaredNorm();
    return out;
  }
  if (design.rows() < design.cols())
    throw numeric_error("least squares: " + std::to_string(design.cols()) +
                        " columns but only " + std::to_string(design.rows()) + " cases");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols())
    throw numeric_error("least squares: singular design (rank " + std::to_string(qr.rank()) +
                        " of " + std::to_string(design.cols()) + " columns)");
  out.coeffs = qr.solve(y);
  out.rss = (y - design * out.coeffs).squaredNorm();
  return out;
}

inline std::vector<int> tau_grid_indices(const Grid& grid, const std::vector<double>& taus) {
  std::vector<int> idx;
  idx.reserve(taus.size());
  for (double tau : taus) {
    const int j = grid.nearest_index(tau);
    if (std::abs(grid.point(j) - tau) > grid.h() / 2 + 1e-9 * grid.h())
      throw data_error("regression: tau = " + std::to_string(tau) + " is off-grid");
    idx.push_back(j);
  }
  return idx;
}

inline AugmentedFit fit_scores_and_impacts(const FunctionalDataset& data,
                                           const EigenSystem* eigsys, int k,
                                           std::vector<double> taus) {
  const Eigen::VectorXd& y = data.require_responses("regression");
  const int n = data.n();
  std::sort(taus.begin(), taus.end());
  const std::vector<int> idx = tau_grid_indices(data.grid, taus);
  const int s = static_cast<int>(taus.size());
  if (k > 0 && eigsys == nullptr) throw spec_error("regression: k > 0 needs an eigensystem");
  if (k < 0 || (eigsys != nullptr && k > eigsys->k()))
    throw spec_error("regression: k = " + std::to_string(k) + " out of range");
  if (k + s + 1 > n)
    throw spec_error("regression: k + S + 1 = " + std::to_string(k + s + 1) +
                     " exceeds n = " + std::to_string(n));

  Eigen::MatrixXd design(n, k + s);
  if (k > 0) design.leftCols(k) = eigsys->scores.leftCols(k);
  for (int r = 0; r < s; ++r) design.col(k + r) = data.curves.col(idx[r]);

  const detail::LinearFit ls = detail::solve_least_squares(design, y);

  AugmentedFit fit;
  fit.k = k;
  fit.selected_taus = std::move(taus);
  fit.alpha_hat = ls.coeffs.head(k);
  fit.beta_hat_impacts = ls.coeffs.tail(s);
  fit.rss = ls.rss;
  // rss at round-off scale is an exact fit; ranking such fits by the log of
  // floating-point residue would be meaningless
  fit.exact_fit = ls.rss <= 1e-24 * y.squaredNorm();
  fit.bic = fit.exact_fit ? -std::numeric_limits<double>::infinity()
                          : bic_score(std::max(ls.rss, 0.0), n, k + s);
  const int dof = n - k - s - 1;
  if (dof > 0) fit.sigma2_hat = ls.rss / dof;
  if (k > 0) {
    fit.beta_hat_curve = eigsys->eigenfunctions.topRows(k).transpose() * fit.alpha_hat;
  } else {
    fit.beta_hat_curve = Eigen::VectorXd::Zero(data.p());
  }
  return fit;
}

}  // namespace detail

/// Least squares of Y on the curve values at the estimated impact points
/// (no functional term).
inline AugmentedFit fit_impact_only(const FunctionalDataset& data,
                                    const std::vector<double>& tau_hats) {
  return detail::fit_scores_and_impacts(data, nullptr, 0, tau_hats);
}

/// Joint least squares on k FPCA scores and the impact columns; k = 0
/// degenerates to fit_impact_only.
inline AugmentedFit fit_augmented(const FunctionalDataset& data, const EigenSystem& eigsys,
                                  const std::vector<double>& tau_hats, int k) {
  return detail::fit_scores_and_impacts(data, &eigsys, k, tau_hats);
}

struct SubsetSearchResult {
  AugmentedFit best;
  std::vector<double> best_bic_by_size;  // index = model size, NaN where empty
  std::vector<double> candidate_pool;
  double delta = std::numeric_limits<double>::quiet_NaN();
  long fits_evaluated = 0;
  long fits_skipped_singular = 0;
};

/// Exhaustive best-subset search minimizing BIC. Score columns enter as
/// nested blocks k in {0..k_max} crossed with every subset of the impact
/// candidates, total size capped by max_vars. Ties take the smaller
/// (k, sorted-tau) key, so the outcome does not depend on pool order.
inline SubsetSearchResult best_subset_bic(const FunctionalDataset& data,
                                          const EigenSystem& eigsys,
                                          const std::vector<double>& candidate_taus, int k_max,
                                          int max_vars) {
  const Eigen::VectorXd& y = data.require_responses("best_subset_bic");
  const int n = data.n();
  const int pool = static_cast<int>(candidate_taus.size());
  if (max_vars < 0) throw spec_error("best_subset_bic: max_vars must be >= 0");
  k_max = std::min(k_max, eigsys.k());
  if (k_max < 0) throw spec_error("best_subset_bic: k_max must be >= 0");

  // enumeration budget
  double planned = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const int room = max_vars - k;
    if (room < 0) continue;
    double subsets = 0.0;
    double binom = 1.0;
    for (int s = 0; s <= std::min(room, pool); ++s) {
      subsets += binom;
      binom = binom * (pool - s) / (s + 1);
    }
    planned += subsets;
  }
  if (planned > static_cast<double>(1 << 20))
    throw numeric_error("best_subset_bic: " + std::to_string(static_cast<long>(planned)) +
                        " fits exceed the enumeration budget of 2^20; shrink the candidate "
                        "pool or max_vars");

  const std::vector<int> pool_idx = detail::tau_grid_indices(data.grid, candidate_taus);

  SubsetSearchResult result;
  result.candidate_pool = candidate_taus;
  result.best_bic_by_size.assign(max_vars + 1, std::numeric_limits<double>::quiet_NaN());

  struct Key {
    int k = 0;
    std::vector<double> taus;
    bool operator<(const Key& o) const {
      if (k != o.k) return k < o.k;
      return taus < o.taus;
    }
  };
  bool have_best = false;
  double best_bic = std::numeric_limits<double>::infinity();
  Key best_key;

  const double y_norm2 = y.squaredNorm();
  Eigen::MatrixXd design;
  std::vector<double> sub_taus;
  std::vector<int> sub_order;

  auto evaluate_subset = [&](const std::vector<int>& members) {
    const int s = static_cast<int>(members.size());
    sub_taus.clear();
    for (int r : members) sub_taus.push_back(candidate_taus[r]);
    // canonical ascending-tau order; keeps fits identical under pool shuffles
    sub_order.resize(s);
    for (int i = 0; i < s; ++i) sub_order[i] = members[i];
    std::sort(sub_order.begin(), sub_order.end(),
              [&](int a, int b) { return candidate_taus[a] < candidate_taus[b]; });

    for (int k = 0; k + s <= max_vars && k <= k_max; ++k) {
      if (k + s + 1 > n) break;
      ++result.fits_evaluated;
      double rss;
      if (k + s == 0) {
        rss = y_norm2;
      } else {
        design.resize(n, k + s);
        if (k > 0) design.leftCols(k) = eigsys.scores.leftCols(k);
        for (int r = 0; r < s; ++r) design.col(k + r) = data.curves.col(pool_idx[sub_order[r]]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < design.cols()) {
          ++result.fits_skipped_singular;
          continue;
        }
        rss = (y - design * qr.solve(y)).squaredNorm();
        if (rss < 0.0) rss = 0.0;
      }
      const double bic = rss <= 1e-24 * y_norm2
                             ? -std::numeric_limits<double>::infinity()
                             : bic_score(rss, n, k + s);
      double& slot = result.best_bic_by_size[k + s];
      if (std::isnan(slot) || bic < slot) slot = bic;

      Key key;
      key.k = k;
      for (int r : sub_order) key.taus.push_back(candidate_taus[r]);
      if (!have_best || bic < best_bic || (bic == best_bic && key < best_key)) {
        have_best = true;
        best_bic = bic;
        best_key = std::move(key);
      }
    }
  };

  std::vector<int> members;
  evaluate_subset(members);  // empty subset
  for (int s = 1; s <= std::min(pool, max_vars); ++s) {
    members.resize(s);
    for (int i = 0; i < s; ++i) members[i] = i;
    for (;;) {
      evaluate_subset(members);
      // next s-combination of {0..pool-1}
      int i = s - 1;
      while (i >= 0 && members[i] == pool - s + i) --i;
      if (i < 0) break;
      ++members[i];
      for (int l = i + 1; l < s; ++l) members[l] = members[l - 1] + 1;
    }
  }
  if (!have_best)
    throw numeric_error("best_subset_bic: every enumerated design was singular");

  result.best = detail::fit_scores_and_impacts(data, &eigsys, best_key.k, best_key.taus);
  return result;
}

struct DeltaSearchResult {
  double delta = 0.0;                // the winning window
  SubsetSearchResult search;
  int deltas_tried = 0;
  int deltas_skipped = 0;
  std::vector<std::string> skip_reasons;
};

/// Runs detection and best-subset selection for every window in the grid
/// and keeps the delta whose best fit minimizes BIC (ties: smaller delta).
/// Failing windows are skipped; only a fully failing grid is an error.
inline DeltaSearchResult select_delta(const FunctionalDataset& data, const EigenSystem& eigsys,
                                      const std::vector<double>& delta_grid,
                                      const DetectionConfig& config, int k_max, int max_vars) {
  if (delta_grid.empty()) throw spec_error("select_delta: empty delta grid");
  DeltaSearchResult out;
  bool have = false;
  for (double delta : delta_grid) {
    ++out.deltas_tried;
    try {
      DetectionConfig cfg = config;
      cfg.delta = delta;
      const CandidateList candidates = detect_candidates(data, cfg);
      std::vector<double> pool;
      pool.reserve(candidates.candidates.size());
      for (const Candidate& c : candidates.candidates) pool.push_back(c.location);
      SubsetSearchResult search = best_subset_bic(data, eigsys, pool, k_max, max_vars);
      search.delta = candidates.delta;
      const bool better =
          !have || search.best.bic < out.search.best.bic ||
          (search.best.bic == out.search.best.bic && candidates.delta < out.delta);
      if (better) {
        have = true;
        out.delta = candidates.delta;
        out.search = std::move(search);
      }
    } catch (const error& e) {
      ++out.deltas_skipped;
      out.skip_reasons.push_back("delta=" + std::to_string(delta) + ": " + e.what());
    }
  }
  if (!have)
    throw numeric_error("select_delta: every window failed; first: " +
                        (out.skip_reasons.empty() ? std::string("?") : out.skip_reasons.front()));
  return out;
}

/// Prediction on the original (uncentered) scale:
///   y_hat = mean_Y + sum_j alpha_j <X - Xbar, psi_j> + sum_r beta_r (X(tau_r) - Xbar(tau_r)).
inline Eigen::VectorXd predict(const AugmentedFit& fit, const EigenSystem& eigsys,
                               const Eigen::MatrixXd& new_curves,
                               const Eigen::VectorXd& curve_means, double response_mean) {
  if (new_curves.cols() != eigsys.grid.p || curve_means.size() != eigsys.grid.p)
    throw data_error("predict: grid mismatch");
  const std::vector<int> idx = detail::tau_grid_indices(eigsys.grid, fit.selected_taus);
  const int m = static_cast<int>(new_curves.rows());
  Eigen::VectorXd out = Eigen::VectorXd::Constant(m, response_mean);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd xc = new_curves.row(i).transpose() - curve_means;
    for (int j = 0; j < fit.k; ++j)
      out[i] += fit.alpha_hat[j] *
                quadrature_inner(xc, eigsys.eigenfunctions.row(j).transpose(), eigsys.rule);
    for (std::size_t r = 0; r < idx.size(); ++r)
      out[i] += fit.beta_hat_impacts[static_cast<int>(r)] * xc[idx[r]];
  }
  return out;
}

}  // namespace fdapoi

#endif  // FDAPOI_REGRESSION_HPP
