#ifndef FDAPOI_EVALUATION_HPP
#define FDAPOI_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fdapoi/dataset.hpp"
#include "fdapoi/detection.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/fpca.hpp"
#include "fdapoi/impact_model.hpp"
#include "fdapoi/parallel.hpp"
#include "fdapoi/process.hpp"
#include "fdapoi/regression.hpp"
#include "fdapoi/simulate.hpp"

namespace fdapoi {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Assignment of estimates to true impact locations. The domain splits at
/// consecutive midpoints (tau_r + tau_{r+1})/2; within each cell the
/// estimate closest to tau_r matches, estimates at an exact midpoint go
/// left. matched_index[r] = -1 marks an unmatched tau_r.
struct ImpactMatch {
  std::vector<int> matched_index;
  std::vector<double> distance;  // |tau_hat - tau_r|, NaN when unmatched

  int unmatched_count() const {
    int c = 0;
    for (int m : matched_index)
      if (m < 0) ++c;
    return c;
  }
};

inline ImpactMatch match_impacts(const std::vector<double>& true_taus,
                                 const std::vector<double>& estimated_taus) {
  const int s = static_cast<int>(true_taus.size());
  for (int r = 1; r < s; ++r)
    if (!(true_taus[r] > true_taus[r - 1]))
      throw spec_error("match_impacts: true locations must be strictly increasing");
  ImpactMatch out;
  out.matched_index.assign(s, -1);
  out.distance.assign(s, kMissing);
  for (int r = 0; r < s; ++r) {
    const double lo = r == 0 ? -std::numeric_limits<double>::infinity()
                             : 0.5 * (true_taus[r - 1] + true_taus[r]);
    const double hi = r == s - 1 ? std::numeric_limits<double>::infinity()
                                 : 0.5 * (true_taus[r] + true_taus[r + 1]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < estimated_taus.size(); ++e) {
      const double est = estimated_taus[e];
      if (!(est > lo && est <= hi)) continue;
      const double d = std::abs(est - true_taus[r]);
      if (d < best) {
        best = d;
        out.matched_index[r] = static_cast<int>(e);
        out.distance[r] = d;
      }
    }
  }
  return out;
}

/// Quadrature of (beta_hat - beta_true)^2 over the grid.
inline double integrated_squared_error(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                       const Eigen::Ref<const Eigen::VectorXd>& beta_true,
                                       const QuadratureRule& rule) {
  if (beta_hat.size() != beta_true.size())
    throw data_error("integrated_squared_error: grid mismatch");
  const Eigen::VectorXd diff = beta_hat - beta_true;
  return quadrature_inner(diff, diff, rule);
}

// ---------------------------------------------------------------------------
// Leave-one-out cross-validation
// ---------------------------------------------------------------------------

enum class CvModel { Augmented, ImpactsOnly, FlrOnly };

inline const char* cv_model_name(CvModel m) {
  switch (m) {
    case CvModel::Augmented: return "augmented";
    case CvModel::ImpactsOnly: return "impacts_only";
    case CvModel::FlrOnly: return "flr_only";
  }
  return "?";
}

struct CvConfig {
  std::vector<double> delta_grid;  // windows scanned during selection
  Exclusion exclusion = Exclusion::SqrtDelta;
  double cutoff_A = 2.0;
  int k_max = 6;
  int max_vars = 6;
  bool reselect_per_fold = false;  // nested variant; default is the two-step protocol
  int threads = 1;

  static std::vector<double> equidistant_deltas(double lo, double hi, int count) {
    std::vector<double> out;
    if (count < 1) throw spec_error("cv: delta grid needs at least one value");
    if (count == 1) {
      out.push_back(lo);
      return out;
    }
    for (int i = 0; i < count; ++i) out.push_back(lo + i * (hi - lo) / (count - 1));
    return out;
  }
};

struct CvResult {
  CvModel model = CvModel::Augmented;
  int k = 0;
  std::vector<double> taus;
  double delta = kMissing;
  double mspe = kMissing;
  double median_se = kMissing;
  std::vector<double> per_case_errors;  // squared errors, NaN on excluded folds
  int excluded_folds = 0;
  double kappa_hat = kMissing;  // at the midpoint of the delta grid
};

namespace detail {

struct StageOneChoice {
  int k = 0;
  std::vector<double> taus;
  double delta = kMissing;
};

inline StageOneChoice cv_stage_one(const FunctionalDataset& centered, const EigenSystem& eigsys,
                                   CvModel model, const CvConfig& config) {
  StageOneChoice choice;
  if (model == CvModel::FlrOnly) {
    SubsetSearchResult r = best_subset_bic(centered, eigsys, {}, config.k_max, config.max_vars);
    choice.k = r.best.k;
    return choice;
  }
  DetectionConfig det;
  det.exclusion = config.exclusion;
  det.cutoff_A = config.cutoff_A;
  const int k_max = model == CvModel::ImpactsOnly ? 0 : config.k_max;
  DeltaSearchResult r =
      select_delta(centered, eigsys, config.delta_grid, det, k_max, config.max_vars);
  choice.k = r.search.best.k;
  choice.taus = r.search.best.selected_taus;
  choice.delta = r.delta;
  return choice;
}

inline double median_of(std::vector<double> values) {
  if (values.empty()) return kMissing;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace detail

/// Two-step LOOCV: the model (delta, impact locations, k) is chosen once on
/// the full data, then coefficients are re-estimated on every
/// leave-one-out fold with the FPCA basis and locations held fixed; the
/// held-out response is predicted from the fold fit. The nested variant
/// (reselect_per_fold) redoes selection inside each fold.
inline CvResult loocv_mspe(const FunctionalDataset& data, CvModel model, const CvConfig& config) {
  data.require_responses("loocv");
  const int n = data.n();
  if (n < 3) throw data_error("loocv: need at least 3 cases");
  if (model != CvModel::FlrOnly && config.delta_grid.empty())
    throw spec_error("loocv: delta grid required for impact selection");

  const QuadratureRule rule = QuadratureRule::trapezoid(data.grid);
  const CenteredData full = center(data);
  const int k_cap = std::min({config.k_max, n - 2, data.grid.p});
  const EigenSystem eigsys = empirical_kl(full.data, std::max(1, k_cap), rule);

  CvResult out;
  out.model = model;
  detail::StageOneChoice choice;
  if (!config.reselect_per_fold) {
    choice = detail::cv_stage_one(full.data, eigsys, model, config);
    out.k = choice.k;
    out.taus = choice.taus;
    out.delta = choice.delta;
  }

  const Eigen::VectorXd& y = *data.responses;
  out.per_case_errors.assign(n, kMissing);
  std::vector<char> excluded(n, 0);

  parallel_for(n, config.threads, [&](int i) {
    // fold = data without case i
    FunctionalDataset fold;
    fold.grid = data.grid;
    fold.curves.resize(n - 1, data.grid.p);
    Eigen::VectorXd fold_y(n - 1);
    int w = 0;
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      fold.curves.row(w) = data.curves.row(l);
      fold_y[w] = y[l];
      ++w;
    }
    fold.responses = fold_y;
    try {
      const CenteredData cf = center(fold);
      detail::StageOneChoice local = choice;
      const EigenSystem* basis = &eigsys;
      EigenSystem fold_sys;
      if (config.reselect_per_fold) {
        const int fold_cap = std::max(1, std::min({config.k_max, n - 3, data.grid.p}));
        fold_sys = empirical_kl(cf.data, fold_cap, rule);
        basis = &fold_sys;
        local = detail::cv_stage_one(cf.data, fold_sys, model, config);
      }
      const std::vector<int> idx = detail::tau_grid_indices(data.grid, local.taus);
      const int k = std::min(local.k, basis->k());
      const int s = static_cast<int>(idx.size());
      Eigen::MatrixXd design(n - 1, k + s);
      for (int j = 0; j < k; ++j)
        design.col(j) =
            cf.data.curves * (rule.weights.asDiagonal() * basis->eigenfunctions.row(j).transpose());
      for (int r = 0; r < s; ++r) design.col(k + r) = cf.data.curves.col(idx[r]);
      const detail::LinearFit ls = detail::solve_least_squares(design, *cf.data.responses);

      const Eigen::VectorXd xc = data.curves.row(i).transpose() - cf.curve_means;
      double pred = cf.response_mean;
      for (int j = 0; j < k; ++j)
        pred += ls.coeffs[j] *
                quadrature_inner(xc, basis->eigenfunctions.row(j).transpose(), rule);
      for (int r = 0; r < s; ++r) pred += ls.coeffs[k + r] * xc[idx[r]];
      const double e = y[i] - pred;
      out.per_case_errors[i] = e * e;
    } catch (const error&) {
      excluded[i] = 1;
    }
  });

  std::vector<double> kept;
  for (int i = 0; i < n; ++i) {
    if (excluded[i]) {
      ++out.excluded_folds;
    } else {
      kept.push_back(out.per_case_errors[i]);
    }
  }
  if (kept.empty()) throw numeric_error("loocv: every fold failed");
  out.mspe = 0.0;
  for (double e : kept) out.mspe += e;
  out.mspe /= static_cast<double>(kept.size());
  out.median_se = detail::median_of(kept);

  if (!config.delta_grid.empty()) {
    const double mid =
        0.5 * (*std::min_element(config.delta_grid.begin(), config.delta_grid.end()) +
               *std::max_element(config.delta_grid.begin(), config.delta_grid.end()));
    try {
      out.kappa_hat = estimate_kappa(full.data, mid);
    } catch (const error&) {
      out.kappa_hat = kMissing;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation study
// ---------------------------------------------------------------------------

struct StudyConfig {
  int replications = 1;
  std::vector<std::pair<int, int>> sizes;  // (p, n) rows of the report
  double domain_a = 0.0;
  double domain_b = 1.0;
  ProcessSpec process = ProcessSpec::ornstein_uhlenbeck(5.0, 3.5);
  ImpactModelSpec model;
  double delta = 0.0;    // fixed window; <= 0 selects delta_c * n^{-1/2}
  double delta_c = 1.0;
  Exclusion exclusion = Exclusion::SqrtDelta;
  double cutoff_A = 2.0;
  int k_max = 6;
  int max_vars = 6;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    if (replications < 1) throw spec_error("study: replications must be >= 1");
    if (sizes.empty()) throw spec_error("study: no (p, n) sizes");
    for (auto [p, n] : sizes) {
      if (n < 3) throw spec_error("study: n must be >= 3");
      if (p < 3) throw spec_error("study: p must be >= 3");
    }
  }
};

struct StudyRow {
  int p = 0;
  int n = 0;
  int replications = 0;
  int failures = 0;
  std::vector<double> mean_abs_tau_err;   // per true r, matched reps only
  std::vector<double> mean_abs_beta_err;  // per true r
  std::vector<int> unmatched;             // per true r
  double mean_s_hat_bic = kMissing;
  double mean_s_hat_cutoff = kMissing;
  double p_s_eq_s_bic = kMissing;
  double p_s_eq_s_cutoff = kMissing;
  double mean_k_hat = kMissing;
  double mean_ise = kMissing;
  double mean_mse = kMissing;
  double mean_kappa_hat = kMissing;
};

struct StudyReport {
  StudyConfig config;
  std::vector<StudyRow> rows;
};

namespace detail {

struct RepRecord {
  bool failed = false;
  std::string failure;
  std::vector<double> tau_err;
  std::vector<double> beta_err;
  int s_bic = 0;
  int s_cutoff = 0;
  int k_hat = 0;
  double ise = kMissing;
  double mse = kMissing;
  double kappa = kMissing;
};

inline double mean_ignoring_nan(const std::vector<double>& v) {
  double sum = 0.0;
  int count = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      sum += x;
      ++count;
    }
  }
  return count == 0 ? kMissing : sum / count;
}

}  // namespace detail

/// Per (p, n) row: simulate, respond, center, detect (cut-off and BIC
/// estimates of S), fit, match, score; replications carry counter-derived
/// seeds so parallel and serial runs aggregate identically.
inline StudyReport run_simulation_study(const StudyConfig& config) {
  config.validate();
  StudyReport report;
  report.config = config;
  const int n_true = config.model.impact_count();

  for (std::size_t row_idx = 0; row_idx < config.sizes.size(); ++row_idx) {
    const auto [p, n] = config.sizes[row_idx];
    const Grid grid(config.domain_a, config.domain_b, p);
    const QuadratureRule rule = QuadratureRule::trapezoid(grid);
    const Eigen::VectorXd true_slope = config.model.slope.evaluate(grid);
    config.model.validate(grid);

    // BM/fBM draws share one factorization across replications
    std::unique_ptr<CovarianceSampler> sampler;
    if (config.process.kind != ProcessSpec::Kind::OrnsteinUhlenbeck)
      sampler = std::make_unique<CovarianceSampler>(config.process, grid);

    std::vector<detail::RepRecord> records(config.replications);
    parallel_for(config.replications, config.threads, [&](int rep) {
      detail::RepRecord& rec = records[rep];
      rec.tau_err.assign(n_true, kMissing);
      rec.beta_err.assign(n_true, kMissing);
      const std::uint64_t rep_seed = derive_seed(config.seed, row_idx, rep);
      try {
        const std::uint64_t x_seed = derive_seed(rep_seed, 1);
        const std::uint64_t y_seed = derive_seed(rep_seed, 2);
        FunctionalDataset data =
            sampler ? sampler->sample(n, x_seed)
                    : simulate_ou(n, grid, config.process.theta, config.process.sigma_u, x_seed);
        data.responses = generate_response(data, config.model, rule, y_seed);

        const CenteredData centered = center(data);
        const double delta_raw =
            config.delta > 0.0 ? config.delta : config.delta_c / std::sqrt(n);
        const ResolvedWindow win = resolve_window(grid, delta_raw);

        DetectionConfig det;
        det.delta = win.delta;
        det.exclusion = config.exclusion;
        det.cutoff_A = config.cutoff_A;
        const CandidateList candidates = detect_candidates(centered.data, det);

        const double lambda = default_cutoff(*centered.data.responses, grid.b - grid.a,
                                             win.delta, config.cutoff_A);
        const SelectionResult cut = threshold_select(candidates, lambda);
        rec.s_cutoff = cut.s_hat;

        const int k_cap = std::max(1, std::min({config.k_max, n - 1, p}));
        const EigenSystem eigsys = empirical_kl(centered.data, k_cap, rule);
        std::vector<double> pool;
        for (const Candidate& c : candidates.candidates) pool.push_back(c.location);
        const SubsetSearchResult search =
            best_subset_bic(centered.data, eigsys, pool, config.k_max, config.max_vars);
        const AugmentedFit& fit = search.best;
        rec.s_bic = fit.impact_count();
        rec.k_hat = fit.k;
        rec.mse = fit.rss / n;
        rec.ise = integrated_squared_error(fit.beta_hat_curve, true_slope, rule);

        const ImpactMatch match = match_impacts(config.model.taus, fit.selected_taus);
        for (int r = 0; r < n_true; ++r) {
          if (match.matched_index[r] >= 0) {
            rec.tau_err[r] = match.distance[r];
            rec.beta_err[r] = std::abs(fit.beta_hat_impacts[match.matched_index[r]] -
                                       config.model.betas[r]);
          }
        }
        try {
          rec.kappa = estimate_kappa(centered.data, delta_raw);
        } catch (const error&) {
          rec.kappa = kMissing;
        }
      } catch (const error& e) {
        rec.failed = true;
        rec.failure = e.what();
      }
    });

    StudyRow row;
    row.p = p;
    row.n = n;
    row.replications = config.replications;
    row.mean_abs_tau_err.assign(n_true, kMissing);
    row.mean_abs_beta_err.assign(n_true, kMissing);
    row.unmatched.assign(n_true, 0);

    std::vector<double> s_bic, s_cut, k_hat, ise, mse, kappa;
    std::vector<std::vector<double>> tau_err(n_true), beta_err(n_true);
    int ok = 0;
    for (const detail::RepRecord& rec : records) {
      if (rec.failed) {
        ++row.failures;
        continue;
      }
      ++ok;
      s_bic.push_back(rec.s_bic);
      s_cut.push_back(rec.s_cutoff);
      k_hat.push_back(rec.k_hat);
      ise.push_back(rec.ise);
      mse.push_back(rec.mse);
      kappa.push_back(rec.kappa);
      for (int r = 0; r < n_true; ++r) {
        tau_err[r].push_back(rec.tau_err[r]);
        beta_err[r].push_back(rec.beta_err[r]);
        if (std::isnan(rec.tau_err[r])) ++row.unmatched[r];
      }
    }
    if (ok > 0) {
      row.mean_s_hat_bic = detail::mean_ignoring_nan(s_bic);
      row.mean_s_hat_cutoff = detail::mean_ignoring_nan(s_cut);
      row.mean_k_hat = detail::mean_ignoring_nan(k_hat);
      row.mean_ise = detail::mean_ignoring_nan(ise);
      row.mean_mse = detail::mean_ignoring_nan(mse);
      row.mean_kappa_hat = detail::mean_ignoring_nan(kappa);
      int hit_bic = 0, hit_cut = 0;
      for (const detail::RepRecord& rec : records) {
        if (rec.failed) continue;
        if (rec.s_bic == n_true) ++hit_bic;
        if (rec.s_cutoff == n_true) ++hit_cut;
      }
      row.p_s_eq_s_bic = static_cast<double>(hit_bic) / ok;
      row.p_s_eq_s_cutoff = static_cast<double>(hit_cut) / ok;
      for (int r = 0; r < n_true; ++r) {
        row.mean_abs_tau_err[r] = detail::mean_ignoring_nan(tau_err[r]);
        row.mean_abs_beta_err[r] = detail::mean_ignoring_nan(beta_err[r]);
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace fdapoi

#endif  // FDAPOI_EVALUATION_HPP
