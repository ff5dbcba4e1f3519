#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fdapoi/detection.hpp"
#include "fdapoi/evaluation.hpp"
#include "fdapoi/fpca.hpp"
#include "fdapoi/impact_model.hpp"
#include "fdapoi/rng.hpp"
#include "fdapoi/simulate.hpp"

using namespace fdapoi;

namespace {

// independent Brownian sampler for oracle checks: cumulative sqrt(h) steps
FunctionalDataset brownian_by_increments(int n, const Grid& grid, std::uint64_t seed) {
  FunctionalDataset data;
  data.grid = grid;
  data.curves.resize(n, grid.p);
  const double step_sd = std::sqrt(grid.h());
  for (int i = 0; i < n; ++i) {
    NormalSampler normal(derive_seed(seed, i));
    double x = 0.0;
    data.curves(i, 0) = 0.0;
    for (int j = 1; j < grid.p; ++j) {
      x += step_sd * normal();
      data.curves(i, j) = x;
    }
  }
  return data;
}

FunctionalDataset centered_ou_with_impacts(int n, const Grid& grid,
                                           const ImpactModelSpec& model, std::uint64_t seed) {
  FunctionalDataset data = simulate_ou(n, grid, 5.0, 3.5, derive_seed(seed, 1));
  data.responses = generate_response(data, model, QuadratureRule::trapezoid(grid),
                                     derive_seed(seed, 2));
  return center(data).data;
}

}  // namespace

TEST_CASE("window rounding", "[detection]") {
  const Grid grid(0.0, 1.0, 101);
  const ResolvedWindow w1 = resolve_window(grid, 0.02);
  CHECK(w1.k_delta == 2);
  CHECK_FALSE(w1.rounded);
  const ResolvedWindow w2 = resolve_window(grid, 0.0213);
  CHECK(w2.k_delta == 2);
  CHECK(w2.rounded);
  const ResolvedWindow w3 = resolve_window(grid, 0.03, /*even=*/true);
  CHECK(w3.k_delta == 4);
  CHECK(resolve_window(grid, 1e-9).k_delta == 1);
  CHECK_THROWS_AS(resolve_window(grid, 0.5), spec_error);
  CHECK_THROWS_AS(resolve_window(grid, -0.1), spec_error);
}

TEST_CASE("second difference algebra", "[detection]") {
  const Grid grid(0.0, 1.0, 201);
  const double delta = 0.05;

  SECTION("affine curves vanish exactly") {
    FunctionalDataset data;
    data.grid = grid;
    data.curves.resize(3, grid.p);
    data.curves.row(0) = (2.0 * grid.points().array() + 1.0).transpose();
    data.curves.row(1) = (-0.5 * grid.points().array() + 3.0).transpose();
    data.curves.row(2).setConstant(4.0);
    const ZDeltaMatrix z = z_delta(data, delta);
    CHECK(z.z.cwiseAbs().maxCoeff() < 1e-13);
  }

  SECTION("quadratic curves give -delta^2 everywhere") {
    FunctionalDataset data;
    data.grid = grid;
    data.curves = grid.points().array().square().transpose();
    const ZDeltaMatrix z = z_delta(data, delta);
    CHECK((z.z.array() + delta * delta).abs().maxCoeff() < 1e-12);
  }

  SECTION("linearity in the data") {
    const auto x = simulate_ou(6, grid, 5.0, 3.5, 1);
    const auto w = simulate_ou(6, grid, 2.0, 1.0, 2);
    FunctionalDataset mix;
    mix.grid = grid;
    mix.curves = 1.7 * x.curves - 0.4 * w.curves;
    const Eigen::MatrixXd lhs = z_delta(mix, delta).z;
    const Eigen::MatrixXd rhs = 1.7 * z_delta(x, delta).z - 0.4 * z_delta(w, delta).z;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("Brownian motion variance is delta/2") {
    const Grid fine(0.0, 1.0, 101);
    const int n = 20000;
    const auto data = brownian_by_increments(n, fine, 7);
    const ZDeltaMatrix z = z_delta(data, 0.02);
    const int col = fine.nearest_index(0.5) - z.first_index;
    const double var = z.z.col(col).squaredNorm() / n;
    CHECK(var == Catch::Approx(0.01).epsilon(0.05));
  }

  SECTION("window errors") {
    FunctionalDataset data;
    data.grid = Grid(0.0, 1.0, 11);
    data.curves = Eigen::MatrixXd::Zero(2, 11);
    CHECK_THROWS_AS(z_delta(data, 0.5), spec_error);
  }
}

TEST_CASE("candidate search", "[detection]") {
  const Grid grid(0.0, 1.0, 201);

  SECTION("null responses fall back to the smallest admissible index") {
    FunctionalDataset data = simulate_ou(50, grid, 5.0, 3.5, 3);
    data.responses = Eigen::VectorXd::Zero(50);
    data.centered = true;  // responses sum to zero; curves centered below
    const CenteredData centered = center(data);
    DetectionConfig config;
    config.delta = 0.05;
    const CandidateList c = detect_candidates(centered.data, config);
    REQUIRE(c.size() >= 1);
    CHECK(c.candidates[0].raw_stat == 0.0);
    CHECK(c.candidates[0].grid_index == c.k_delta);
    const double lambda = 0.1;
    const SelectionResult sel = threshold_select(c, lambda);
    CHECK(sel.s_hat == 0);
  }

  SECTION("strong single impact is found first") {
    ImpactModelSpec model;
    model.taus = {0.5};
    model.betas = {3.0};
    model.noise_sd = 0.5;
    const auto data = centered_ou_with_impacts(800, grid, model, 11);
    DetectionConfig config;
    config.delta = 1.0 / std::sqrt(800.0);
    const CandidateList c = detect_candidates(data, config);
    REQUIRE(c.size() >= 1);
    CHECK(std::abs(c.candidates[0].location - 0.5) <= 0.02);
  }

  SECTION("pairwise separation respects the exclusion radius") {
    ImpactModelSpec model;
    model.taus = {0.25, 0.75};
    model.betas = {2.0, 1.0};
    model.noise_sd = 1.0;
    const auto data = centered_ou_with_impacts(300, grid, model, 13);
    for (Exclusion mode : {Exclusion::SqrtDelta, Exclusion::DeltaLogDelta}) {
      DetectionConfig config;
      config.delta = 0.06;
      config.exclusion = mode;
      const CandidateList c = detect_candidates(data, config);
      for (int a = 0; a < c.size(); ++a)
        for (int b = 0; b < a; ++b)
          CHECK(std::abs(c.candidates[a].location - c.candidates[b].location) >= c.radius);
      // raw statistics weakly decreasing in magnitude
      for (int a = 1; a < c.size(); ++a)
        CHECK(std::abs(c.candidates[a].raw_stat) <=
              std::abs(c.candidates[a - 1].raw_stat) + 1e-15);
    }
  }

  SECTION("scaling the response leaves locations and S_hat unchanged") {
    ImpactModelSpec model;
    model.taus = {0.25, 0.75};
    model.betas = {2.0, 1.0};
    model.noise_sd = 1.0;
    const auto data = centered_ou_with_impacts(400, grid, model, 17);
    DetectionConfig config;
    config.delta = 0.05;
    FunctionalDataset scaled = data;
    scaled.responses = 4.2 * (*data.responses);
    const CandidateList c1 = detect_candidates(data, config);
    const CandidateList c2 = detect_candidates(scaled, config);
    REQUIRE(c1.size() == c2.size());
    for (int i = 0; i < c1.size(); ++i)
      CHECK(c1.candidates[i].location == c2.candidates[i].location);
    const double l1 = default_cutoff(*data.responses, 1.0, c1.delta);
    const double l2 = default_cutoff(*scaled.responses, 1.0, c2.delta);
    CHECK(l2 == Catch::Approx(4.2 * l1).epsilon(1e-12));
    CHECK(threshold_select(c1, l1).s_hat == threshold_select(c2, l2).s_hat);
  }

  SECTION("scaling the curves leaves normalized statistics unchanged") {
    ImpactModelSpec model;
    model.taus = {0.5};
    model.betas = {2.0};
    model.noise_sd = 1.0;
    const auto data = centered_ou_with_impacts(400, grid, model, 19);
    FunctionalDataset scaled = data;
    scaled.curves = 3.0 * data.curves;
    DetectionConfig config;
    config.delta = 0.05;
    const CandidateList c1 = detect_candidates(data, config);
    const CandidateList c2 = detect_candidates(scaled, config);
    REQUIRE(c1.size() == c2.size());
    for (int i = 0; i < c1.size(); ++i) {
      CHECK(c1.candidates[i].location == c2.candidates[i].location);
      CHECK(c1.candidates[i].normalized_stat ==
            Catch::Approx(c2.candidates[i].normalized_stat).margin(1e-12));
    }
  }

  SECTION("responses are required") {
    const auto data = simulate_ou(10, grid, 5.0, 3.5, 1);
    DetectionConfig config;
    config.delta = 0.05;
    CHECK_THROWS_AS(detect_candidates(data, config), data_error);
  }
}

TEST_CASE("cut-off rule", "[detection]") {
  SECTION("closed form at delta = (b-a)/e") {
    Eigen::VectorXd y(100);
    for (int i = 0; i < 100; ++i) y[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const double var = (y.array() - y.mean()).square().sum() / 99.0;
    const double lambda = default_cutoff(y, 1.0, std::exp(-1.0), 2.0);
    CHECK(lambda == Catch::Approx(2.0 * std::sqrt(var / 100.0)).epsilon(1e-12));
  }
  SECTION("requirements") {
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(50, -1.0, 1.0);
    CHECK_THROWS_AS(default_cutoff(y, 1.0, 1.5), spec_error);       // delta >= b-a
    CHECK_THROWS_AS(default_cutoff(y, 1.0, 0.1, 1.0), spec_error);  // A <= sqrt(2)
    CHECK_NOTHROW(default_cutoff(y, 1.0, 0.1, 2.0));
  }
}

TEST_CASE("threshold selection", "[detection]") {
  CandidateList list;
  list.delta = 0.05;
  const double stats[] = {5.0, 3.2, 0.1, 0.05};
  for (int i = 0; i < 4; ++i) {
    Candidate c;
    c.location = 0.1 + 0.2 * i;
    c.normalized_stat = stats[i];
    c.iteration = i + 1;
    list.candidates.push_back(c);
  }
  SECTION("first sub-threshold candidate stops the count") {
    const SelectionResult sel = threshold_select(list, 1.0);
    CHECK(sel.s_hat == 2);
    CHECK_FALSE(sel.cutoff_never_crossed);
    REQUIRE(sel.locations.size() == 2);
    CHECK(sel.locations[0] == Catch::Approx(0.1));
  }
  SECTION("everything below the cut-off") {
    const SelectionResult sel = threshold_select(list, 10.0);
    CHECK(sel.s_hat == 0);
    CHECK(sel.locations.empty());
  }
  SECTION("cut-off never crossed is flagged") {
    const SelectionResult sel = threshold_select(list, 0.01);
    CHECK(sel.s_hat == 4);
    CHECK(sel.cutoff_never_crossed);
  }
}

TEST_CASE("kappa estimation", "[detection]") {
  SECTION("exact log2 identity on a cosine pattern") {
    // X_j cycles 1,0,-1,0: Z_{2h} = 2 X_j and Z_h = X_j exactly
    const Grid grid(0.0, 1.0, 41);
    FunctionalDataset data;
    data.grid = grid;
    data.curves.resize(2, grid.p);
    const double pattern[] = {1.0, 0.0, -1.0, 0.0};
    for (int j = 0; j < grid.p; ++j) {
      data.curves(0, j) = pattern[j % 4];
      data.curves(1, j) = 0.5 * pattern[(j + 1) % 4];
    }
    CHECK(estimate_kappa(data, 2.0 * grid.h()) == Catch::Approx(2.0).margin(1e-12));
  }

  SECTION("Brownian motion has kappa 1") {
    const Grid grid(0.0, 1.0, 2001);
    const auto data = brownian_by_increments(2000, grid, 23);
    const double kappa = estimate_kappa(data, 20.0 * grid.h());
    CHECK(kappa > 0.95);
    CHECK(kappa < 1.05);
  }

  SECTION("scale invariance is exact up to rounding") {
    const Grid grid(0.0, 1.0, 201);
    const auto data = simulate_ou(50, grid, 5.0, 3.5, 29);
    FunctionalDataset scaled = data;
    scaled.curves = 7.0 * data.curves;
    CHECK(estimate_kappa(data, 0.04) ==
          Catch::Approx(estimate_kappa(scaled, 0.04)).margin(1e-12));
  }

  SECTION("degenerate data") {
    const Grid grid(0.0, 1.0, 51);
    FunctionalDataset data;
    data.grid = grid;
    data.curves = Eigen::MatrixXd::Constant(3, grid.p, 2.5);
    CHECK_THROWS_AS(estimate_kappa(data, 0.1), numeric_error);
  }

  SECTION("simulation-design average is near 0.98") {
    const Grid grid(0.0, 1.0, 1001);
    const int reps = 30;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      const auto data = simulate_ou(500, grid, 5.0, 3.5, derive_seed(31, r));
      sum += estimate_kappa(data, 1.0 / std::sqrt(500.0));
    }
    const double mean = sum / reps;
    CHECK(mean > 0.95);
    CHECK(mean < 1.02);
  }
}

TEST_CASE("single-impact location accuracy", "[mc]") {
  // Monte Carlo oracle: with one impact at 0.5 and delta = n^{-1/2}, the
  // first candidate lands within 0.01 of the truth in at least 95% of runs.
  const Grid grid(0.0, 1.0, 1001);
  const int n = 5000;
  const int reps = 200;
  ImpactModelSpec model;
  model.taus = {0.5};
  model.betas = {3.0};
  model.noise_sd = 1.0;
  std::vector<int> hits(reps, 0);
  parallel_for(reps, 2, [&](int r) {
    const auto data = centered_ou_with_impacts(n, grid, model, derive_seed(101, r));
    DetectionConfig config;
    config.delta = 1.0 / std::sqrt(n);
    const CandidateList c = detect_candidates(data, config);
    if (c.size() >= 1 && std::abs(c.candidates[0].location - 0.5) <= 0.01) hits[r] = 1;
  });
  int total = 0;
  for (int h : hits) total += h;
  INFO("hits: " << total << "/" << reps);
  CHECK(total >= static_cast<int>(0.95 * reps));
}

TEST_CASE("squared distance at matched locations shrinks with n", "[mc]") {
  ImpactModelSpec model;
  model.taus = {0.25, 0.75};
  model.betas = {2.0, 1.0};
  model.noise_sd = 1.0;
  const int reps = 100;
  std::vector<double> medians;
  for (int n : {250, 1000, 4000}) {
    // grids refine with n (the location error shrinks below any fixed
    // grid step, which would pin the median at zero)
    const Grid grid(0.0, 1.0, 4 * n + 1);
    std::vector<double> values(reps);
    parallel_for(reps, 2, [&](int r) {
      const auto data = centered_ou_with_impacts(n, grid, model, derive_seed(1000 + n, r));
      DetectionConfig config;
      config.delta = 1.0 / std::sqrt(n);
      const CandidateList c = detect_candidates(data, config);
      std::vector<double> locs;
      for (const Candidate& cand : c.candidates) locs.push_back(cand.location);
      const ImpactMatch match = match_impacts(model.taus, locs);
      if (match.matched_index[0] < 0) {
        values[r] = 1.0;  // unmatched counts as a gross error
        return;
      }
      const int jt = grid.nearest_index(0.25);
      const int jh = grid.nearest_index(locs[match.matched_index[0]]);
      values[r] = (data.curves.col(jt) - data.curves.col(jh)).squaredNorm() / n;
    });
    std::sort(values.begin(), values.end());
    medians.push_back(0.5 * (values[reps / 2 - 1] + values[reps / 2]));
  }
  INFO("medians: " << medians[0] << " " << medians[1] << " " << medians[2]);
  CHECK(medians[0] > medians[1]);
  CHECK(medians[1] > medians[2]);
}

TEST_CASE("five well-separated impacts dominate the profile", "[mc]") {
  const Grid grid(0.0, 1.0, 10001);
  const int n = 5000;
  ImpactModelSpec model;
  model.taus = {0.1, 0.3, 0.5, 0.7, 0.9};
  model.betas = {3.0, 3.0, 3.0, 3.0, 3.0};
  model.noise_sd = 1.0;
  const auto data = centered_ou_with_impacts(n, grid, model, 77);
  DetectionConfig config;
  config.delta = 350.0 / 10001.0;
  const CandidateList c = detect_candidates(data, config);
  REQUIRE(c.size() >= 5);
  std::vector<double> leading;
  for (int i = 0; i < 5; ++i) leading.push_back(c.candidates[i].location);
  const ImpactMatch match = match_impacts(model.taus, leading);
  for (int r = 0; r < 5; ++r) {
    REQUIRE(match.matched_index[r] >= 0);
    CHECK(match.distance[r] <= 0.02);
  }
}
