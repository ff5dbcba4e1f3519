#ifndef FDAPOI_REPORT_HPP
#define FDAPOI_REPORT_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdapoi/detection.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/evaluation.hpp"
#include "fdapoi/fpca.hpp"
#include "fdapoi/regression.hpp"

namespace fdapoi {

using json = nlohmann::json;

// NaN is the internal missing marker; JSON gets null.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Grid& grid) {
  return json{{"a", grid.a}, {"b", grid.b}, {"p", grid.p}};
}

inline json to_json(const EigenSystem& sys) {
  json j;
  j["k"] = sys.k();
  j["p"] = sys.grid.p;
  j["grid"] = to_json(sys.grid);
  j["eigenvalues"] = std::vector<double>(sys.eigenvalues.data(),
                                         sys.eigenvalues.data() + sys.eigenvalues.size());
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(sys.eigenfunctions.size()));
  for (int r = 0; r < sys.eigenfunctions.rows(); ++r)
    for (int c = 0; c < sys.eigenfunctions.cols(); ++c) flat.push_back(sys.eigenfunctions(r, c));
  j["eigenfunctions"] = flat;  // row-major, k rows of p values
  j["truncated"] = sys.truncated;
  return j;
}

struct DetectionReport {
  CandidateList candidates;
  double lambda = 0.0;
  double cutoff_A = 2.0;
  SelectionResult selection;
  double kappa_hat = kMissing;
  double kappa_delta = kMissing;
};

inline json to_json(const DetectionReport& rep) {
  json j;
  j["delta"] = rep.candidates.delta;
  j["k_delta"] = rep.candidates.k_delta;
  j["exclusion"] =
      rep.candidates.exclusion == Exclusion::SqrtDelta ? "sqrt" : "dlogd";
  j["exclusion_radius"] = rep.candidates.radius;
  j["cutoff"] = {{"A", rep.cutoff_A},
                 {"lambda", rep.lambda},
                 {"s_hat", rep.selection.s_hat},
                 {"never_crossed", rep.selection.cutoff_never_crossed},
                 {"locations", rep.selection.locations}};
  j["kappa_hat"] = json_number(rep.kappa_hat);
  j["kappa_delta"] = json_number(rep.kappa_delta);
  json cands = json::array();
  for (const Candidate& c : rep.candidates.candidates) {
    cands.push_back({{"location", c.location},
                     {"raw_stat", c.raw_stat},
                     {"normalized_stat", c.normalized_stat},
                     {"iteration", c.iteration}});
  }
  j["candidates"] = cands;
  return j;
}

inline json to_json(const AugmentedFit& fit, const Grid& grid, double delta = kMissing) {
  json j;
  j["k"] = fit.k;
  j["taus"] = fit.selected_taus;
  j["alpha"] = std::vector<double>(fit.alpha_hat.data(),
                                   fit.alpha_hat.data() + fit.alpha_hat.size());
  j["beta_impacts"] = std::vector<double>(
      fit.beta_hat_impacts.data(), fit.beta_hat_impacts.data() + fit.beta_hat_impacts.size());
  j["rss"] = fit.rss;
  j["bic"] = json_number(fit.bic);
  j["sigma2_hat"] = json_number(fit.sigma2_hat);
  j["exact_fit"] = fit.exact_fit;
  j["delta"] = json_number(delta);
  j["grid"] = to_json(grid);
  j["beta_curve"] = std::vector<double>(
      fit.beta_hat_curve.data(), fit.beta_hat_curve.data() + fit.beta_hat_curve.size());
  return j;
}

inline json to_json(const CvResult& r) {
  json j;
  j["model"] = cv_model_name(r.model);
  j["k"] = r.k;
  j["s_hat"] = static_cast<int>(r.taus.size());
  j["taus"] = r.taus;
  j["delta"] = json_number(r.delta);
  j["mspe"] = json_number(r.mspe);
  j["median_se"] = json_number(r.median_se);
  j["excluded_folds"] = r.excluded_folds;
  json errs = json::array();
  for (double e : r.per_case_errors) errs.push_back(json_number(e));
  j["per_case_errors"] = errs;
  return j;
}

inline json to_json(const StudyRow& row) {
  json j;
  j["p"] = row.p;
  j["n"] = row.n;
  j["replications"] = row.replications;
  j["failures"] = row.failures;
  json tau = json::array();
  for (double v : row.mean_abs_tau_err) tau.push_back(json_number(v));
  json beta = json::array();
  for (double v : row.mean_abs_beta_err) beta.push_back(json_number(v));
  j["mean_abs_tau_err"] = tau;
  j["mean_abs_beta_err"] = beta;
  j["unmatched"] = row.unmatched;
  j["mean_s_hat_bic"] = json_number(row.mean_s_hat_bic);
  j["mean_s_hat_cutoff"] = json_number(row.mean_s_hat_cutoff);
  j["p_s_eq_s_bic"] = json_number(row.p_s_eq_s_bic);
  j["p_s_eq_s_cutoff"] = json_number(row.p_s_eq_s_cutoff);
  j["mean_k_hat"] = json_number(row.mean_k_hat);
  j["mean_ise"] = json_number(row.mean_ise);
  j["mean_mse"] = json_number(row.mean_mse);
  j["mean_kappa_hat"] = json_number(row.mean_kappa_hat);
  return j;
}

inline json to_json(const StudyReport& report) {
  json j;
  j["seed"] = report.config.seed;
  j["replications"] = report.config.replications;
  j["process"] = report.config.process.name();
  json rows = json::array();
  for (const StudyRow& row : report.rows) rows.push_back(to_json(row));
  j["rows"] = rows;
  return j;
}

namespace detail {

inline std::string fmt_cell(double v, int width, int precision) {
  char buf[64];
  if (std::isnan(v)) {
    std::snprintf(buf, sizeof(buf), "%*s", width, "--");
  } else {
    std::snprintf(buf, sizeof(buf), "%*.*f", width, precision, v);
  }
  return buf;
}

}  // namespace detail

/// Aligned plain-text rendering of a study report, one row per (p, n).
inline std::string render_study_table(const StudyReport& report) {
  std::string out;
  const int s = report.rows.empty() ? 0 : static_cast<int>(report.rows[0].mean_abs_tau_err.size());
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%7s %7s", "p", "n");
  out += buf;
  for (int r = 1; r <= s; ++r) {
    std::snprintf(buf, sizeof(buf), "  |t%d-t%d|", r, r);
    out += buf;
  }
  for (int r = 1; r <= s; ++r) {
    std::snprintf(buf, sizeof(buf), "  |b%d-b%d|", r, r);
    out += buf;
  }
  out += "    S_hat  P(S=S)bic/cut    k_hat      ise      mse    kappa  fail\n";
  for (const StudyRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%7d %7d", row.p, row.n);
    out += buf;
    for (double v : row.mean_abs_tau_err) out += detail::fmt_cell(v, 9, 4);
    for (double v : row.mean_abs_beta_err) out += detail::fmt_cell(v, 9, 3);
    out += detail::fmt_cell(row.mean_s_hat_bic, 9, 2);
    out += detail::fmt_cell(row.p_s_eq_s_bic, 9, 2);
    out += "/";
    if (std::isnan(row.p_s_eq_s_cutoff)) {
      out += "--";
    } else {
      std::snprintf(buf, sizeof(buf), "%.2f", row.p_s_eq_s_cutoff);
      out += buf;
    }
    out += detail::fmt_cell(row.mean_k_hat, 9, 2);
    out += detail::fmt_cell(row.mean_ise, 9, 2);
    out += detail::fmt_cell(row.mean_mse, 9, 2);
    out += detail::fmt_cell(row.mean_kappa_hat, 9, 2);
    std::snprintf(buf, sizeof(buf), "%6d", row.failures);
    out += buf;
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("report: cannot write '" + path + "'");
  out << text;
  if (!out) throw data_error("report: write failed for '" + path + "'");
}

inline void write_json_file(const json& j, const std::string& path) {
  write_text_file(j.dump(2) + "\n", path);
}

}  // namespace fdapoi

#endif  // FDAPOI_REPORT_HPP
