#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "fdapoi/detection.hpp"
#include "fdapoi/fpca.hpp"
#include "fdapoi/impact_model.hpp"
#include "fdapoi/regression.hpp"
#include "fdapoi/simulate.hpp"

using namespace fdapoi;

namespace {

struct Fixture {
  FunctionalDataset data;  // centered, with centered responses
  EigenSystem eigsys;
  QuadratureRule rule;
};

Fixture make_fixture(int n, int p, const ImpactModelSpec& model, std::uint64_t seed,
                     int k_max = 8) {
  const Grid grid(0.0, 1.0, p);
  Fixture f;
  f.rule = QuadratureRule::trapezoid(grid);
  FunctionalDataset raw = simulate_ou(n, grid, 5.0, 3.5, derive_seed(seed, 1));
  raw.responses = generate_response(raw, model, f.rule, derive_seed(seed, 2));
  f.data = center(raw).data;
  f.eigsys = empirical_kl(f.data, std::min(k_max, std::min(n - 1, p)), f.rule);
  return f;
}

}  // namespace

TEST_CASE("BIC formula", "[regression]") {
  CHECK(bic_score(100.0, 100, 2) == Catch::Approx(2.0 * std::log(100.0)).margin(1e-10));
  CHECK(bic_score(100.0, 100, 2) == Catch::Approx(9.2103).margin(1e-4));
  CHECK(bic_score(250.0, 250, 0) == Catch::Approx(0.0).margin(1e-12));
  for (int s = 0; s < 5; ++s)
    CHECK(bic_score(37.0, 50, s + 1) - bic_score(37.0, 50, s) ==
          Catch::Approx(std::log(50.0)).margin(1e-12));
  CHECK(std::isinf(bic_score(0.0, 100, 1)));
  CHECK(bic_score(0.0, 100, 1) < 0);
  CHECK_THROWS_AS(bic_score(-1.0, 100, 1), spec_error);
}

TEST_CASE("impact-only least squares", "[regression]") {
  ImpactModelSpec model;
  model.taus = {0.25, 0.75};
  model.betas = {2.0, 1.0};

  SECTION("noiseless recovery is exact") {
    const Fixture f = make_fixture(200, 201, model, 3);
    const AugmentedFit fit = fit_impact_only(f.data, {0.25, 0.75});
    CHECK(fit.beta_hat_impacts[0] == Catch::Approx(2.0).margin(1e-8));
    CHECK(fit.beta_hat_impacts[1] == Catch::Approx(1.0).margin(1e-8));
    CHECK(fit.rss < 1e-12);
    CHECK(fit.exact_fit);
  }

  SECTION("empty location set leaves the null fit") {
    model.noise_sd = 1.0;
    const Fixture f = make_fixture(50, 101, model, 4);
    const AugmentedFit fit = fit_impact_only(f.data, {});
    CHECK(fit.beta_hat_impacts.size() == 0);
    CHECK(fit.rss == Catch::Approx(f.data.responses->squaredNorm()));
  }

  SECTION("duplicate locations are a singular design") {
    model.noise_sd = 1.0;
    const Fixture f = make_fixture(50, 101, model, 5);
    CHECK_THROWS_AS(fit_impact_only(f.data, {0.25, 0.25}), numeric_error);
  }
}

TEST_CASE("augmented least squares", "[regression]") {
  ImpactModelSpec model;
  model.taus = {0.25, 0.75};
  model.betas = {2.0, 1.0};
  model.slope = SlopeFunction::polynomial({0.5, 3.0, -5.5, 3.5});
  model.noise_sd = 1.0;

  SECTION("k = 0 coincides with the impact-only fit") {
    const Fixture f = make_fixture(150, 151, model, 7);
    const AugmentedFit a = fit_augmented(f.data, f.eigsys, {0.25, 0.75}, 0);
    const AugmentedFit b = fit_impact_only(f.data, {0.25, 0.75});
    CHECK((a.beta_hat_impacts - b.beta_hat_impacts).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.rss == Catch::Approx(b.rss).epsilon(1e-12));
    CHECK(a.beta_hat_curve.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("full-rank score basis represents span-generated responses exactly") {
    const Grid grid(0.0, 1.0, 50);
    FunctionalDataset raw = simulate_ou(20, grid, 5.0, 3.5, 8);
    const QuadratureRule rule = QuadratureRule::trapezoid(grid);
    Eigen::VectorXd g(grid.p);
    for (int j = 0; j < grid.p; ++j) g[j] = std::cos(3.0 * grid.point(j));
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i)
      y[i] = quadrature_inner(raw.curves.row(i).transpose(), g, rule);
    raw.responses = y;
    const CenteredData centered = center(raw);
    const EigenSystem sys = empirical_kl(centered.data, 19, rule);
    const AugmentedFit fit = fit_augmented(centered.data, sys, {}, sys.k());
    CHECK(fit.rss <= 1e-8 * centered.data.responses->squaredNorm());
  }

  SECTION("slope curve is the alpha-weighted eigenfunction sum") {
    const Fixture f = make_fixture(120, 101, model, 9);
    const AugmentedFit fit = fit_augmented(f.data, f.eigsys, {0.25}, 3);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(101);
    for (int j = 0; j < 3; ++j)
      expected += fit.alpha_hat[j] * f.eigsys.eigenfunctions.row(j).transpose();
    CHECK((fit.beta_hat_curve - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(fit.sigma2_hat == Catch::Approx(fit.rss / (120 - 3 - 1 - 1)).epsilon(1e-12));
  }

  SECTION("residuals are orthogonal to the design") {
    const Fixture f = make_fixture(120, 101, model, 10);
    const AugmentedFit fit = fit_augmented(f.data, f.eigsys, {0.25, 0.75}, 4);
    Eigen::VectorXd fitted = f.eigsys.scores.leftCols(4) * fit.alpha_hat;
    fitted += fit.beta_hat_impacts[0] * f.data.curves.col(25);
    fitted += fit.beta_hat_impacts[1] * f.data.curves.col(75);
    const Eigen::VectorXd resid = *f.data.responses - fitted;
    CHECK(resid.squaredNorm() == Catch::Approx(fit.rss).epsilon(1e-9));
    for (int j = 0; j < 4; ++j) {
      const Eigen::VectorXd col = f.eigsys.scores.col(j);
      CHECK(std::abs(col.dot(resid)) <= 1e-8 * col.norm() * resid.norm() + 1e-12);
    }
    for (int c : {25, 75}) {
      const Eigen::VectorXd col = f.data.curves.col(c);
      CHECK(std::abs(col.dot(resid)) <= 1e-8 * col.norm() * resid.norm() + 1e-12);
    }
  }

  SECTION("nesting never increases the residual sum of squares") {
    const Fixture f = make_fixture(80, 101, model, 11);
    double last = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 5; ++k) {
      const AugmentedFit fit = fit_augmented(f.data, f.eigsys, {0.25}, k);
      CHECK(fit.rss <= last + 1e-10);
      last = fit.rss;
    }
    const double without = fit_augmented(f.data, f.eigsys, {0.25}, 3).rss;
    const double with_extra = fit_augmented(f.data, f.eigsys, {0.25, 0.75}, 3).rss;
    CHECK(with_extra <= without + 1e-10);
  }
}

TEST_CASE("best-subset search", "[regression]") {
  SECTION("reported best never loses to a per-size optimum") {
    ImpactModelSpec model;
    model.taus = {0.25, 0.75};
    model.betas = {2.0, 1.0};
    model.noise_sd = 1.0;
    const Fixture f = make_fixture(150, 101, model, 13);
    const SubsetSearchResult r =
        best_subset_bic(f.data, f.eigsys, {0.2, 0.25, 0.5, 0.75}, 4, 5);
    for (double bic : r.best_bic_by_size)
      if (!std::isnan(bic)) CHECK(r.best.bic <= bic + 1e-12);
    CHECK(r.fits_evaluated > 0);
  }

  SECTION("a lone true candidate is always selected") {
    for (int rep = 0; rep < 20; ++rep) {
      ImpactModelSpec model;
      model.taus = {0.5};
      model.betas = {2.0};
      model.noise_sd = 0.1;
      const Fixture f = make_fixture(1000, 101, model, derive_seed(14, rep), 4);
      const SubsetSearchResult r = best_subset_bic(f.data, f.eigsys, {0.5}, 4, 5);
      REQUIRE(r.best.selected_taus.size() == 1);
      CHECK(r.best.selected_taus[0] == Catch::Approx(0.5));
    }
  }

  SECTION("pool order cannot change the winner") {
    ImpactModelSpec model;
    model.taus = {0.25, 0.75};
    model.betas = {2.0, 1.0};
    model.noise_sd = 1.0;
    const Fixture f = make_fixture(200, 101, model, 15);
    std::vector<double> pool = {0.1, 0.25, 0.4, 0.55, 0.75, 0.9};
    const SubsetSearchResult base = best_subset_bic(f.data, f.eigsys, pool, 4, 5);
    std::mt19937 shuffler(99);
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(pool.begin(), pool.end(), shuffler);
      const SubsetSearchResult r = best_subset_bic(f.data, f.eigsys, pool, 4, 5);
      CHECK(r.best.bic == base.best.bic);
      CHECK(r.best.k == base.best.k);
      CHECK(r.best.selected_taus == base.best.selected_taus);
      CHECK(r.best.rss == base.best.rss);
    }
  }

  SECTION("enumeration budget guard") {
    ImpactModelSpec model;
    model.noise_sd = 1.0;
    const Fixture f = make_fixture(40, 101, model, 16, 6);
    std::vector<double> pool;
    for (int i = 1; i <= 30; ++i) pool.push_back(i / 31.0);
    CHECK_THROWS_AS(best_subset_bic(f.data, f.eigsys, pool, 6, 30), numeric_error);
  }
}

TEST_CASE("pure noise selects the empty model", "[mc]") {
  // oracle for BIC consistency: with responses independent of the curves
  // and a fixed candidate pool, the search should keep every column out
  // of the model in at least 90% of runs
  const int reps = 100;
  const std::vector<double> pool = {0.1, 0.25, 0.4, 0.6, 0.75, 0.9};
  int empty = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const Grid grid(0.0, 1.0, 101);
    FunctionalDataset raw = simulate_ou(500, grid, 5.0, 3.5, derive_seed(900, 2 * rep));
    Eigen::VectorXd y(500);
    NormalSampler normal(derive_seed(900, 2 * rep + 1));
    for (int i = 0; i < 500; ++i) y[i] = normal();
    raw.responses = y;
    const CenteredData centered = center(raw);
    const QuadratureRule rule = QuadratureRule::trapezoid(grid);
    const EigenSystem sys = empirical_kl(centered.data, 6, rule);
    const SubsetSearchResult r = best_subset_bic(centered.data, sys, pool, 6, 6);
    if (r.best.k == 0 && r.best.selected_taus.empty()) ++empty;
  }
  INFO("empty selections: " << empty << "/" << reps);
  CHECK(empty >= 90);
}

TEST_CASE("window selection by BIC", "[regression]") {
  ImpactModelSpec model;
  model.taus = {0.25, 0.75};
  model.betas = {2.0, 1.0};
  model.noise_sd = 1.0;
  const Fixture f = make_fixture(300, 201, model, 21);
  DetectionConfig det;

  SECTION("a one-window grid reduces to the plain pipeline") {
    const DeltaSearchResult sel = select_delta(f.data, f.eigsys, {0.05}, det, 4, 5);
    DetectionConfig single;
    single.delta = 0.05;
    const CandidateList cands = detect_candidates(f.data, single);
    std::vector<double> pool;
    for (const Candidate& c : cands.candidates) pool.push_back(c.location);
    const SubsetSearchResult direct = best_subset_bic(f.data, f.eigsys, pool, 4, 5);
    CHECK(sel.search.best.bic == direct.best.bic);
    CHECK(sel.search.best.selected_taus == direct.best.selected_taus);
    CHECK(sel.delta == Catch::Approx(0.05));
  }

  SECTION("exact ties prefer the smaller window") {
    FunctionalDataset flat = f.data;
    flat.responses = Eigen::VectorXd::Zero(300);
    const DeltaSearchResult sel = select_delta(flat, f.eigsys, {0.10, 0.05}, det, 2, 3);
    CHECK(sel.search.best.exact_fit);
    CHECK(sel.delta == Catch::Approx(0.05));
  }

  SECTION("unusable windows are skipped, not fatal") {
    const DeltaSearchResult sel = select_delta(f.data, f.eigsys, {0.9, 0.05}, det, 4, 5);
    CHECK(sel.deltas_skipped == 1);
    CHECK(sel.delta == Catch::Approx(0.05));
    CHECK_THROWS_AS(select_delta(f.data, f.eigsys, {0.9, 0.95}, det, 4, 5), numeric_error);
  }
}

TEST_CASE("prediction on new curves", "[regression]") {
  const Grid grid(0.0, 1.0, 101);
  const QuadratureRule rule = QuadratureRule::trapezoid(grid);
  ImpactModelSpec model;
  model.taus = {0.25, 0.75};
  model.betas = {2.0, 1.0};
  model.slope = SlopeFunction::polynomial({0.5, 3.0});

  FunctionalDataset raw = simulate_ou(60, grid, 5.0, 3.5, 23);
  raw.responses = generate_response(raw, model, rule, 24);
  const CenteredData centered = center(raw);
  const EigenSystem sys = empirical_kl(centered.data, 57, rule);

  SECTION("noiseless saturated fit reproduces training responses") {
    // 57 scores + 2 impacts span the 59-dimensional centered sample space
    const AugmentedFit fit = fit_augmented(centered.data, sys, {0.25, 0.75}, 57);
    CHECK(fit.exact_fit);
    const Eigen::VectorXd pred =
        predict(fit, sys, raw.curves, centered.curve_means, centered.response_mean);
    CHECK((pred - *raw.responses).cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("the mean curve predicts the mean response") {
    const AugmentedFit fit = fit_augmented(centered.data, sys, {0.25}, 3);
    Eigen::MatrixXd mean_curve = centered.curve_means.transpose();
    const Eigen::VectorXd pred =
        predict(fit, sys, mean_curve, centered.curve_means, centered.response_mean);
    CHECK(pred[0] == Catch::Approx(centered.response_mean).margin(1e-10));
  }

  SECTION("grid mismatch") {
    const AugmentedFit fit = fit_augmented(centered.data, sys, {}, 2);
    Eigen::MatrixXd wrong(1, 50);
    wrong.setZero();
    CHECK_THROWS_AS(predict(fit, sys, wrong, centered.curve_means, 0.0), data_error);
  }
}
