#ifndef FDAPOI_CLI_HPP
#define FDAPOI_CLI_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdapoi/csv.hpp"
#include "fdapoi/detection.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/evaluation.hpp"
#include "fdapoi/fpca.hpp"
#include "fdapoi/impact_model.hpp"
#include "fdapoi/process.hpp"
#include "fdapoi/regression.hpp"
#include "fdapoi/report.hpp"
#include "fdapoi/schema.hpp"
#include "fdapoi/simulate.hpp"

namespace fdapoi {
namespace cli {

inline const char* study_config_schema_text() {
  return R"({
  "type": "object",
  "required": ["replications", "sizes", "process", "model"],
  "properties": {
    "replications": {"type": "integer", "minimum": 1},
    "sizes": {
      "type": "array", "minItems": 1,
      "items": {
        "type": "object", "required": ["p", "n"],
        "properties": {"p": {"type": "integer", "minimum": 3},
                       "n": {"type": "integer", "minimum": 3}},
        "additionalProperties": false
      }
    },
    "domain": {
      "type": "object",
      "properties": {"a": {"type": "number"}, "b": {"type": "number"}},
      "additionalProperties": false
    },
    "process": {
      "type": "object", "required": ["kind"],
      "properties": {
        "kind": {"type": "string", "enum": ["bm", "fbm", "ou"]},
        "hurst": {"type": "number"},
        "theta": {"type": "number"},
        "sigma_u": {"type": "number"}
      },
      "additionalProperties": false
    },
    "model": {
      "type": "object",
      "properties": {
        "taus": {"type": "array", "items": {"type": "number"}},
        "betas": {"type": "array", "items": {"type": "number"}},
        "slope": {
          "type": "object", "required": ["kind"],
          "properties": {
            "kind": {"type": "string", "enum": ["zero", "polynomial", "sampled"]},
            "coefficients": {"type": "array", "items": {"type": "number"}},
            "values": {"type": "array", "items": {"type": "number"}}
          },
          "additionalProperties": false
        },
        "noise_sd": {"type": "number", "minimum": 0}
      },
      "additionalProperties": false
    },
    "delta": {
      "type": "object",
      "properties": {"c": {"type": "number"}, "value": {"type": "number"}},
      "additionalProperties": false
    },
    "exclusion": {"type": "string", "enum": ["sqrt", "dlogd"]},
    "cutoff_A": {"type": "number"},
    "k_max": {"type": "integer", "minimum": 0},
    "max_vars": {"type": "integer", "minimum": 0},
    "seed": {"type": "integer", "minimum": 0},
    "threads": {"type": "integer", "minimum": 1}
  },
  "additionalProperties": false
})";
}

inline std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    token = detail::trim(token);
    if (token.empty()) continue;
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw spec_error(std::string(what) + ": cannot parse number '" + token + "'");
    }
  }
  return out;
}

/// "lo:hi:count" or a comma-separated explicit list.
inline std::vector<double> parse_delta_grid(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    const auto first = text.find(':');
    const auto second = text.find(':', first + 1);
    if (second == std::string::npos)
      throw spec_error("delta grid: expected lo:hi:count, got '" + text + "'");
    const double lo = std::stod(text.substr(0, first));
    const double hi = std::stod(text.substr(first + 1, second - first - 1));
    const int count = std::stoi(text.substr(second + 1));
    return CvConfig::equidistant_deltas(lo, hi, count);
  }
  std::vector<double> grid = parse_double_list(text, "delta grid");
  if (grid.empty()) throw spec_error("delta grid: empty");
  return grid;
}

inline Exclusion parse_exclusion(const std::string& name) {
  if (name == "sqrt") return Exclusion::SqrtDelta;
  if (name == "dlogd") return Exclusion::DeltaLogDelta;
  throw spec_error("exclusion: expected sqrt or dlogd, got '" + name + "'");
}

inline SlopeFunction slope_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return SlopeFunction::zero();
  if (kind == "polynomial")
    return SlopeFunction::polynomial(j.at("coefficients").get<std::vector<double>>());
  if (kind == "sampled") {
    const std::vector<double> v = j.at("values").get<std::vector<double>>();
    Eigen::VectorXd s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s[static_cast<Eigen::Index>(i)] = v[i];
    return SlopeFunction::sampled(s);
  }
  throw spec_error("slope: unknown kind '" + kind + "'");
}

inline ProcessSpec process_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bm") return ProcessSpec::brownian_motion();
  if (kind == "fbm") return ProcessSpec::fractional_brownian_motion(j.at("hurst").get<double>());
  if (kind == "ou")
    return ProcessSpec::ornstein_uhlenbeck(j.at("theta").get<double>(),
                                           j.at("sigma_u").get<double>());
  throw spec_error("process: unknown kind '" + kind + "'");
}

inline StudyConfig study_config_from_json(const json& j) {
  schema::validate_or_throw(j, json::parse(study_config_schema_text()), "study config");
  StudyConfig cfg;
  cfg.replications = j.at("replications").get<int>();
  for (const auto& size : j.at("sizes"))
    cfg.sizes.emplace_back(size.at("p").get<int>(), size.at("n").get<int>());
  if (j.contains("domain")) {
    cfg.domain_a = j["domain"].value("a", 0.0);
    cfg.domain_b = j["domain"].value("b", 1.0);
  }
  cfg.process = process_from_json(j.at("process"));
  const json& model = j.at("model");
  cfg.model.taus = model.value("taus", std::vector<double>{});
  cfg.model.betas = model.value("betas", std::vector<double>{});
  cfg.model.slope = model.contains("slope") ? slope_from_json(model["slope"])
                                            : SlopeFunction::zero();
  cfg.model.noise_sd = model.value("noise_sd", 0.0);
  if (j.contains("delta")) {
    if (j["delta"].contains("value")) cfg.delta = j["delta"]["value"].get<double>();
    if (j["delta"].contains("c")) cfg.delta_c = j["delta"]["c"].get<double>();
  }
  cfg.exclusion = parse_exclusion(j.value("exclusion", "sqrt"));
  cfg.cutoff_A = j.value("cutoff_A", 2.0);
  cfg.k_max = j.value("k_max", 6);
  cfg.max_vars = j.value("max_vars", 6);
  cfg.seed = j.value("seed", 0ULL);
  cfg.threads = j.value("threads", 1);
  return cfg;
}

inline std::string default_sibling(const std::string& out, const std::string& suffix) {
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || out.find('/', dot) != std::string::npos)
    return out + suffix;
  return out.substr(0, dot) + suffix;
}

struct SimulateArgs {
  std::string process = "ou";
  double theta = 5.0;
  double sigma_u = 3.5;
  double hurst = 0.5;
  int n = 0;
  int p = 0;
  double a = 0.0;
  double b = 1.0;
  std::string taus;
  std::string betas;
  std::string slope_poly;
  double noise_sd = -1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

inline int cmd_simulate(const SimulateArgs& args) {
  const Grid grid(args.a, args.b, args.p);
  ProcessSpec spec;
  if (args.process == "ou") {
    spec = ProcessSpec::ornstein_uhlenbeck(args.theta, args.sigma_u);
  } else if (args.process == "bm") {
    spec = ProcessSpec::brownian_motion();
  } else if (args.process == "fbm") {
    spec = ProcessSpec::fractional_brownian_motion(args.hurst);
  } else {
    throw spec_error("simulate: unknown process '" + args.process + "'");
  }

  const std::uint64_t x_seed = derive_seed(args.seed, 1);
  const std::uint64_t y_seed = derive_seed(args.seed, 2);
  FunctionalDataset data;
  if (spec.kind == ProcessSpec::Kind::OrnsteinUhlenbeck) {
    data = simulate_ou(args.n, grid, args.theta, args.sigma_u, x_seed, args.threads);
  } else {
    CovarianceSampler sampler(spec, grid);
    if (sampler.ridge_added() > 0.0)
      std::cerr << "note: covariance factorization used ridge " << sampler.ridge_added()
                << "\n";
    data = sampler.sample(args.n, x_seed, args.threads);
  }

  const bool with_model =
      !args.taus.empty() || !args.betas.empty() || !args.slope_poly.empty() || args.noise_sd >= 0;
  if (with_model) {
    ImpactModelSpec model;
    model.taus = parse_double_list(args.taus, "--taus");
    model.betas = parse_double_list(args.betas, "--betas");
    if (!args.slope_poly.empty())
      model.slope = SlopeFunction::polynomial(parse_double_list(args.slope_poly, "--slope-poly"));
    model.noise_sd = args.noise_sd >= 0 ? args.noise_sd : 0.0;
    const SnappedTaus snapped = snap_taus(grid, model.taus);
    if (snapped.moved)
      std::cerr << "note: impact locations snapped to the grid (max shift "
                << snapped.max_shift << ")\n";
    data.responses = generate_response(data, model, QuadratureRule::trapezoid(grid), y_seed);
  }
  save_curves(data, args.out);
  return 0;
}

struct DetectArgs {
  std::string data;
  double delta = 0.0;
  std::string exclusion = "sqrt";
  double cutoff_A = 2.0;
  int max_candidates = 0;
  std::string out;
  std::string profile_out;
};

inline int cmd_detect(const DetectArgs& args) {
  const LoadedBundle bundle = load_curves(args.data);
  bundle.data.require_responses("detect");
  const CenteredData centered = center(bundle.data);

  DetectionConfig config;
  config.delta = args.delta;
  config.exclusion = parse_exclusion(args.exclusion);
  config.cutoff_A = args.cutoff_A;
  if (args.max_candidates > 0) config.max_candidates = args.max_candidates;

  DetectionReport report;
  report.candidates = detect_candidates(centered.data, config);
  report.cutoff_A = args.cutoff_A;
  report.lambda = default_cutoff(*centered.data.responses,
                                 bundle.data.grid.b - bundle.data.grid.a,
                                 report.candidates.delta, args.cutoff_A);
  report.selection = threshold_select(report.candidates, report.lambda);
  try {
    const ResolvedWindow even = resolve_window(bundle.data.grid, report.candidates.delta, true);
    report.kappa_delta = even.delta;
    report.kappa_hat = estimate_kappa(centered.data, report.candidates.delta);
  } catch (const error& e) {
    std::cerr << "note: kappa estimate unavailable: " << e.what() << "\n";
  }
  write_json_file(to_json(report), args.out);

  const ZProfile profile = z_response_profile(centered.data, report.candidates.delta);
  Eigen::VectorXd t(profile.raw.size());
  for (Eigen::Index c = 0; c < t.size(); ++c) t[c] = profile.location(static_cast<int>(c));
  const std::string profile_path =
      args.profile_out.empty() ? default_sibling(args.out, ".profile.csv") : args.profile_out;
  save_curve_csv(t, profile.raw.cwiseAbs(), "t,abs_corr", profile_path);
  return 0;
}

struct FitArgs {
  std::string data;
  double delta = 0.0;
  std::string delta_grid;
  std::string exclusion = "sqrt";
  double cutoff_A = 2.0;
  int k_max = 6;
  int max_vars = 6;
  std::string out;
  std::string beta_out;
};

inline int cmd_fit(const FitArgs& args) {
  const LoadedBundle bundle = load_curves(args.data);
  bundle.data.require_responses("fit");
  const CenteredData centered = center(bundle.data);
  const QuadratureRule rule = QuadratureRule::trapezoid(bundle.data.grid);
  const int k_cap =
      std::max(1, std::min({args.k_max, bundle.data.n() - 1, bundle.data.grid.p}));
  const EigenSystem eigsys = empirical_kl(centered.data, k_cap, rule);

  DetectionConfig config;
  config.exclusion = parse_exclusion(args.exclusion);
  config.cutoff_A = args.cutoff_A;

  SubsetSearchResult search;
  double delta_used;
  if (!args.delta_grid.empty()) {
    const DeltaSearchResult sel =
        select_delta(centered.data, eigsys, parse_delta_grid(args.delta_grid), config,
                     args.k_max, args.max_vars);
    search = sel.search;
    delta_used = sel.delta;
  } else {
    config.delta = args.delta;
    const CandidateList candidates = detect_candidates(centered.data, config);
    std::vector<double> pool;
    for (const Candidate& c : candidates.candidates) pool.push_back(c.location);
    search = best_subset_bic(centered.data, eigsys, pool, args.k_max, args.max_vars);
    delta_used = candidates.delta;
  }
  write_json_file(to_json(search.best, bundle.data.grid, delta_used), args.out);

  const std::string beta_path =
      args.beta_out.empty() ? default_sibling(args.out, ".beta.csv") : args.beta_out;
  save_curve_csv(bundle.data.grid.points(), search.best.beta_hat_curve, "t,beta_hat", beta_path);
  return 0;
}

struct CvArgs {
  std::string data;
  std::string delta_grid = "0.10:0.49:146";
  std::string exclusion = "sqrt";
  double cutoff_A = 2.0;
  int k_max = 6;
  int max_vars = 6;
  bool nested = false;
  int threads = 1;
  std::string out;
};

inline int cmd_cv(const CvArgs& args) {
  const LoadedBundle bundle = load_curves(args.data);
  bundle.data.require_responses("cv");

  CvConfig config;
  config.delta_grid = parse_delta_grid(args.delta_grid);
  config.exclusion = parse_exclusion(args.exclusion);
  config.cutoff_A = args.cutoff_A;
  config.k_max = args.k_max;
  config.max_vars = args.max_vars;
  config.reselect_per_fold = args.nested;
  config.threads = args.threads;

  json models = json::array();
  double kappa = kMissing;
  for (CvModel model : {CvModel::Augmented, CvModel::ImpactsOnly, CvModel::FlrOnly}) {
    const CvResult r = loocv_mspe(bundle.data, model, config);
    kappa = std::isnan(kappa) ? r.kappa_hat : kappa;
    models.push_back(to_json(r));
  }
  json out;
  out["models"] = models;
  out["kappa_hat"] = json_number(kappa);
  out["nested"] = args.nested;
  write_json_file(out, args.out);
  return 0;
}

struct StudyArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::string table;
};

inline int cmd_study(const StudyArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw data_error("study: cannot open config '" + args.config_path + "'");
  json raw;
  try {
    in >> raw;
  } catch (const json::parse_error& e) {
    throw data_error("study: config parse failure: " + std::string(e.what()));
  }
  StudyConfig config = study_config_from_json(raw);
  if (args.seed) config.seed = *args.seed;
  if (args.threads) config.threads = *args.threads;

  const StudyReport report = run_simulation_study(config);
  write_json_file(to_json(report), args.out);
  const std::string table_path =
      args.table.empty() ? default_sibling(args.out, ".txt") : args.table;
  write_text_file(render_study_table(report), table_path);
  return 0;
}

}  // namespace cli

/// Command-line entry point shared by the tool and the tests. Exit codes:
/// 0 success, 1 usage, 2 data/format, 3 numerical failure.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"functional linear regression with points of impact"};
  app.require_subcommand(1);

  cli::SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "simulate curves and responses");
  simulate->add_option("--process", sim.process, "ou | bm | fbm")->default_str("ou");
  simulate->add_option("--theta", sim.theta, "OU mean reversion");
  simulate->add_option("--sigma-u", sim.sigma_u, "OU diffusion scale");
  simulate->add_option("--hurst", sim.hurst, "fBM Hurst index");
  simulate->add_option("--n", sim.n, "number of curves")->required();
  simulate->add_option("--p", sim.p, "grid points")->required();
  simulate->add_option("--a", sim.a, "domain start");
  simulate->add_option("--b", sim.b, "domain end");
  simulate->add_option("--taus", sim.taus, "impact locations, comma separated");
  simulate->add_option("--betas", sim.betas, "impact coefficients, comma separated");
  simulate->add_option("--slope-poly", sim.slope_poly,
                       "slope polynomial coefficients, ascending powers");
  simulate->add_option("--noise-sd", sim.noise_sd, "response noise standard deviation");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--threads", sim.threads, "worker threads");
  simulate->add_option("--out", sim.out, "output curve CSV")->required();

  cli::DetectArgs det;
  CLI::App* detect = app.add_subcommand("detect", "detect points of impact");
  detect->add_option("--data", det.data, "curve CSV with response column")->required();
  detect->add_option("--delta", det.delta, "window size (default n^{-1/2})");
  detect->add_option("--exclusion", det.exclusion, "sqrt | dlogd");
  detect->add_option("--cutoff-A", det.cutoff_A, "cut-off constant A");
  detect->add_option("--max-candidates", det.max_candidates, "candidate cap");
  detect->add_option("--out", det.out, "detection report JSON")->required();
  detect->add_option("--profile-out", det.profile_out, "profile CSV path");

  cli::FitArgs fit;
  CLI::App* fitc = app.add_subcommand("fit", "fit the augmented model");
  fitc->add_option("--data", fit.data, "curve CSV with response column")->required();
  fitc->add_option("--delta", fit.delta, "window size (default n^{-1/2})");
  fitc->add_option("--delta-grid", fit.delta_grid, "lo:hi:count or comma list");
  fitc->add_option("--exclusion", fit.exclusion, "sqrt | dlogd");
  fitc->add_option("--cutoff-A", fit.cutoff_A, "cut-off constant A");
  fitc->add_option("--k-max", fit.k_max, "maximum FPCA truncation");
  fitc->add_option("--max-vars", fit.max_vars, "maximum selected variables");
  fitc->add_option("--out", fit.out, "fit JSON")->required();
  fitc->add_option("--beta-out", fit.beta_out, "slope curve CSV path");

  cli::CvArgs cv;
  CLI::App* cvc = app.add_subcommand("cv", "leave-one-out cross-validation");
  cvc->add_option("--data", cv.data, "curve CSV with response column")->required();
  cvc->add_option("--delta-grid", cv.delta_grid, "lo:hi:count or comma list");
  cvc->add_option("--exclusion", cv.exclusion, "sqrt | dlogd");
  cvc->add_option("--cutoff-A", cv.cutoff_A, "cut-off constant A");
  cvc->add_option("--k-max", cv.k_max, "maximum FPCA truncation");
  cvc->add_option("--max-vars", cv.max_vars, "maximum selected variables");
  cvc->add_flag("--nested", cv.nested, "reselect the model inside each fold");
  cvc->add_option("--threads", cv.threads, "worker threads");
  cvc->add_option("--out", cv.out, "cross-validation JSON")->required();

  cli::StudyArgs study;
  CLI::App* studyc = app.add_subcommand("study", "run a simulation study");
  studyc->add_option("--config", study.config_path, "study configuration JSON")->required();
  std::uint64_t seed_override = 0;
  CLI::Option* seed_opt = studyc->add_option("--seed", seed_override, "master seed override");
  int threads_override = 0;
  CLI::Option* threads_opt =
      studyc->add_option("--threads", threads_override, "worker threads override");
  studyc->add_option("--out", study.out, "study report JSON")->required();
  studyc->add_option("--table", study.table, "text table path");

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cli::cmd_simulate(sim);
    if (detect->parsed()) return cli::cmd_detect(det);
    if (fitc->parsed()) return cli::cmd_fit(fit);
    if (cvc->parsed()) return cli::cmd_cv(cv);
    if (studyc->parsed()) {
      if (*seed_opt) study.seed = seed_override;
      if (*threads_opt) study.threads = threads_override;
      return cli::cmd_study(study);
    }
    std::cerr << "error: usage: no subcommand\n";
    return 1;
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const spec_error& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("fdapoi");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace fdapoi

#endif  // FDAPOI_CLI_HPP
