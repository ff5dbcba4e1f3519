#ifndef FDAPOI_DETECTION_HPP
#define FDAPOI_DETECTION_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fdapoi/dataset.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"

namespace fdapoi {

/// Exclusion window removed around each selected candidate.
enum class Exclusion {
  SqrtDelta,      // radius sqrt(delta)/2
  DeltaLogDelta,  // radius delta * |log delta|
};

inline double exclusion_radius(Exclusion mode, double delta) {
  return mode == Exclusion::SqrtDelta ? std::sqrt(delta) / 2.0
                                      : delta * std::abs(std::log(delta));
}

struct ResolvedWindow {
  int k_delta = 0;     // delta = k_delta * h on the grid
  double delta = 0.0;  // the representable window actually used
  bool rounded = false;
};

/// Rounds a requested window to the nearest integer multiple of the grid
/// step (nearest even multiple when `even`, as the kappa estimator halves
/// the window). The multiple must stay below (p-1)/2.
inline ResolvedWindow resolve_window(const Grid& grid, double delta, bool even = false) {
  const double h = grid.h();
  if (!(delta > 0.0)) throw spec_error("window: delta must be positive");
  ResolvedWindow out;
  if (even) {
    out.k_delta = 2 * std::max(1, static_cast<int>(std::lround(delta / (2.0 * h))));
  } else {
    out.k_delta = std::max(1, static_cast<int>(std::lround(delta / h)));
  }
  if (2 * out.k_delta >= grid.p - 1)
    throw spec_error("window: delta = " + std::to_string(delta) + " needs k_delta = " +
                     std::to_string(out.k_delta) + " but requires k_delta < (p-1)/2 = " +
                     std::to_string((grid.p - 1) / 2.0));
  out.delta = out.k_delta * h;
  out.rounded = std::abs(out.delta - delta) > 1e-9 * h;
  return out;
}

struct DetectionConfig {
  double delta = 0.0;  // <= 0 means the n^{-1/2} default at run time
  Exclusion exclusion = Exclusion::SqrtDelta;
  double cutoff_A = 2.0;
  std::optional<int> max_candidates;

  double delta_or_default(int n) const { return delta > 0.0 ? delta : 1.0 / std::sqrt(n); }
};

/// Largest number of candidates enumerable before the sqrt-exclusion
/// windows exhaust the interval.
inline int default_max_candidates(const Grid& grid, double delta) {
  return std::max(1, static_cast<int>(std::floor((grid.b - grid.a) / (std::sqrt(delta) / 2.0))));
}

/// Z_delta values over the admissible index set J = {k_delta+1, ..., p-k_delta}
/// (1-based): Z_i(t_j) = X_i(t_j) - (X_i(t_j - delta) + X_i(t_j + delta))/2.
struct ZDeltaMatrix {
  Eigen::MatrixXd z;   // n x |J|
  int k_delta = 0;
  int first_index = 0;  // zero-based grid index of column 0
  Grid grid;

  double location(int col) const { return grid.point(first_index + col); }
  int cols() const { return static_cast<int>(z.cols()); }
};

inline ZDeltaMatrix z_delta(const FunctionalDataset& data, double delta) {
  const ResolvedWindow win = resolve_window(data.grid, delta);
  const int k = win.k_delta;
  const int m = data.grid.p - 2 * k;
  ZDeltaMatrix out;
  out.grid = data.grid;
  out.k_delta = k;
  out.first_index = k;
  out.z.resize(data.n(), m);
  for (int c = 0; c < m; ++c) {
    const int j = k + c;
    out.z.col(c) =
        data.curves.col(j) - 0.5 * (data.curves.col(j - k) + data.curves.col(j + k));
  }
  return out;
}

/// Per-location detection statistics: raw_j = (1/n) sum_i Z_ij Y_i and the
/// biased second moment m_j = (1/n) sum_i Z_ij^2. Computed column by
/// column; the full Z matrix is never materialized.
struct ZProfile {
  Eigen::VectorXd raw;            // length |J|
  Eigen::VectorXd second_moment;  // length |J|
  int k_delta = 0;
  int first_index = 0;
  Grid grid;

  double location(int col) const { return grid.point(first_index + col); }
  double normalized(int col) const {
    const double m = second_moment[col];
    return m > 0.0 ? raw[col] / std::sqrt(m) : 0.0;
  }
};

inline ZProfile z_response_profile(const FunctionalDataset& data, double delta) {
  const Eigen::VectorXd& y = data.require_responses("z_response_profile");
  const ResolvedWindow win = resolve_window(data.grid, delta);
  const int k = win.k_delta;
  const int m = data.grid.p - 2 * k;
  const int n = data.n();

  ZProfile out;
  out.grid = data.grid;
  out.k_delta = k;
  out.first_index = k;
  out.raw.resize(m);
  out.second_moment.resize(m);
  const Eigen::VectorXd xty = data.curves.transpose() * y;
  Eigen::VectorXd zcol(n);
  for (int c = 0; c < m; ++c) {
    const int j = k + c;
    out.raw[c] = (xty[j] - 0.5 * (xty[j - k] + xty[j + k])) / n;
    zcol = data.curves.col(j) - 0.5 * (data.curves.col(j - k) + data.curves.col(j + k));
    out.second_moment[c] = zcol.squaredNorm() / n;
  }
  return out;
}

struct Candidate {
  double location = 0.0;
  double raw_stat = 0.0;         // (1/n) sum_i Z_i(tau) Y_i
  double normalized_stat = 0.0;  // raw / sqrt((1/n) sum_i Z_i(tau)^2)
  int iteration = 0;             // 1-based selection order
  int grid_index = 0;            // zero-based
};

struct CandidateList {
  std::vector<Candidate> candidates;
  double delta = 0.0;
  int k_delta = 0;
  double radius = 0.0;
  Exclusion exclusion = Exclusion::SqrtDelta;

  int size() const { return static_cast<int>(candidates.size()); }
};

/// Iterative argmax of |(1/n) sum_i Z_i(t_j) Y_i| with exclusion windows.
/// Expects centered data with responses. Ties take the smallest grid
/// index; iteration stops when the admissible set empties or the
/// candidate cap is reached.
inline CandidateList detect_candidates(const FunctionalDataset& data,
                                       const DetectionConfig& config) {
  const ResolvedWindow win = resolve_window(data.grid, config.delta_or_default(data.n()));
  const ZProfile profile = z_response_profile(data, win.delta);
  const int m = static_cast<int>(profile.raw.size());
  if (m <= 0) throw spec_error("detect_candidates: empty admissible set");

  CandidateList out;
  out.delta = win.delta;
  out.k_delta = win.k_delta;
  out.exclusion = config.exclusion;
  out.radius = exclusion_radius(config.exclusion, win.delta);
  const int cap = config.max_candidates.value_or(default_max_candidates(data.grid, win.delta));

  std::vector<char> alive(m, 1);
  int alive_count = m;
  int iteration = 0;
  while (alive_count > 0 && out.size() < cap) {
    int best = -1;
    double best_abs = -1.0;
    for (int c = 0; c < m; ++c) {
      if (!alive[c]) continue;
      const double v = std::abs(profile.raw[c]);
      if (v > best_abs) {
        best_abs = v;
        best = c;
      }
    }
    Candidate cand;
    cand.grid_index = profile.first_index + best;
    cand.location = profile.location(best);
    cand.raw_stat = profile.raw[best];
    cand.normalized_stat = profile.normalized(best);
    cand.iteration = ++iteration;
    out.candidates.push_back(cand);
    for (int c = 0; c < m; ++c) {
      if (alive[c] && std::abs(profile.location(c) - cand.location) < out.radius) {
        alive[c] = 0;
        --alive_count;
      }
    }
    // radius < h keeps the picked point alive; drop it explicitly
    if (alive[best]) {
      alive[best] = 0;
      --alive_count;
    }
  }
  return out;
}

/// Theorem-style cut-off lambda = A sqrt(Var(Y)/n log((b-a)/delta)).
/// Var(Y) is the unbiased sample variance.
inline double default_cutoff(const Eigen::Ref<const Eigen::VectorXd>& responses,
                             double domain_length, double delta, double cutoff_A = 2.0) {
  const int n = static_cast<int>(responses.size());
  if (n < 2) throw spec_error("default_cutoff: need at least 2 responses");
  if (!(delta > 0.0 && delta < domain_length))
    throw spec_error("default_cutoff: requires 0 < delta < b-a");
  if (!(cutoff_A > std::sqrt(2.0)))
    throw spec_error("default_cutoff: A must exceed sqrt(2), got " + std::to_string(cutoff_A));
  const double mean = responses.mean();
  const double var = (responses.array() - mean).square().sum() / (n - 1);
  return cutoff_A * std::sqrt(var / n * std::log(domain_length / delta));
}

struct SelectionResult {
  int s_hat = 0;
  std::vector<double> locations;  // tau_1..tau_{s_hat} in selection order
  bool cutoff_never_crossed = false;
};

/// S_hat = first l such that candidate l+1 has |normalized| < lambda. When
/// no candidate falls below lambda, S_hat = all candidates and the result
/// is flagged.
inline SelectionResult threshold_select(const CandidateList& candidates, double lambda) {
  SelectionResult out;
  out.s_hat = candidates.size();
  out.cutoff_never_crossed = candidates.size() > 0;
  for (int l = 0; l < candidates.size(); ++l) {
    if (std::abs(candidates.candidates[l].normalized_stat) < lambda) {
      out.s_hat = l;
      out.cutoff_never_crossed = false;
      break;
    }
  }
  for (int l = 0; l < out.s_hat; ++l)
    out.locations.push_back(candidates.candidates[l].location);
  return out;
}

/// kappa_hat = log2( sum_{j in J} sum_i Z_{delta,i}(t_j)^2 /
///                   sum_{j in J} sum_i Z_{delta/2,i}(t_j)^2 ),
/// both sums over the admissible set J of the larger window. Needs an
/// even k_delta so that delta/2 stays on the grid.
inline double estimate_kappa(const FunctionalDataset& data, double delta) {
  const ResolvedWindow win = resolve_window(data.grid, delta, /*even=*/true);
  const int k = win.k_delta;
  const int k2 = k / 2;
  double num = 0.0;
  double den = 0.0;
  const int p = data.grid.p;
  Eigen::VectorXd zcol(data.n());
  for (int j = k; j < p - k; ++j) {
    zcol = data.curves.col(j) - 0.5 * (data.curves.col(j - k) + data.curves.col(j + k));
    num += zcol.squaredNorm();
    zcol = data.curves.col(j) - 0.5 * (data.curves.col(j - k2) + data.curves.col(j + k2));
    den += zcol.squaredNorm();
  }
  if (den <= 0.0)
    throw numeric_error("estimate_kappa: half-window mean square vanishes (degenerate data)");
  return std::log2(num / den);
}

}  // namespace fdapoi

#endif  // FDAPOI_DETECTION_HPP
