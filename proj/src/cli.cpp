#include "gsps/cli.hpp"

#include <CLI11.hpp>
#include <iostream>

#include "gsps/experiment.hpp"
#include "gsps/io.hpp"
#include "gsps/mle.hpp"
#include "gsps/predict.hpp"
#include "gsps/rng.hpp"
#include "gsps/simulate.hpp"

namespace gsps::cli {

namespace {

Box uniform_bounds(int q, double lo, double hi) {
  Box box;
  box.lower = Vector::Constant(q, lo);
  box.upper = Vector::Constant(q, hi);
  box.validate();
  return box;
}

nlohmann::json stage1_diag_json(const std::vector<Stage1Diagnostics>& diags) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& diag : diags) {
    nlohmann::json entry;
    entry["block"] = diag.block;
    entry["block_size"] = diag.block_size;
    entry["alpha"] = diag.alpha;
    entry["a_star"] = diag.a_star;
    entry["b_star"] = diag.b_star;
    entry["iterations"] = diag.iterations;
    entry["converged"] = diag.converged;
    entry["primal_residual"] = diag.primal_residual;
    entry["dual_residual"] = diag.dual_residual;
    entry["objective"] = diag.objective;
    entry["offdiag_zero_fraction"] = diag.offdiag_zero_fraction;
    entry["seconds"] = diag.seconds;
    arr.push_back(std::move(entry));
  }
  return arr;
}

}  // namespace

int run_simulate(const SimulateOptions& options) {
  if (options.out.empty()) throw ValidationError("simulate: --out is required");
  const Family family = family_from_string(options.family);

  Vector theta;
  Matrix gamma;
  if (!options.theta.empty()) {
    theta = Eigen::Map<const Vector>(options.theta.data(),
                                     static_cast<Eigen::Index>(options.theta.size()));
  }
  if (!options.gamma.empty()) {
    if (static_cast<int>(options.gamma.size()) != options.p * options.p)
      throw ValidationError("simulate: --gamma needs p*p row-major values");
    gamma = Matrix(options.p, options.p);
    for (int i = 0; i < options.p; ++i)
      for (int j = 0; j < options.p; ++j)
        gamma(i, j) = options.gamma[static_cast<std::size_t>(i * options.p + j)];
  }
  if (theta.size() == 0 || gamma.size() == 0) {
    const int w = options.gamma_w > 0 ? options.gamma_w : options.p + 3;
    const TrueParams truth = random_true_params(options.d, options.p, w,
                                                derive_seed(options.seed, 0x747275ULL),
                                                options.theta_radius);
    if (theta.size() == 0) theta = truth.theta;
    if (gamma.size() == 0) gamma = truth.gamma;
  }

  SimulationSpec spec;
  spec.locations = random_locations(options.n, options.d, options.domain_width,
                                    derive_seed(options.seed, 0x6c6f63ULL));
  spec.model.correlation.family = family;
  spec.model.correlation.theta = theta;
  spec.model.correlation.bounds =
      uniform_bounds(static_cast<int>(theta.size()),
                     std::min(theta.minCoeff(), 1e-8), std::max(theta.maxCoeff(), 1e2));
  spec.model.gamma = gamma;
  spec.num_realizations = options.num_realizations;
  spec.seed = derive_seed(options.seed, 0x73696dULL);

  const Dataset data = sample_grf(spec);
  write_dataset_csv(options.out, data);

  nlohmann::json sidecar;
  sidecar["seed"] = options.seed;
  sidecar["family"] = to_string(family);
  sidecar["d"] = options.d;
  sidecar["p"] = options.p;
  sidecar["n"] = options.n;
  sidecar["N"] = options.num_realizations;
  sidecar["domain_width"] = options.domain_width;
  sidecar["theta_star"] = vector_to_json(theta);
  sidecar["gamma_star"] = matrix_to_json(gamma);
  write_json_file(options.sidecar.empty() ? options.out + ".json" : options.sidecar, sidecar);
  return 0;
}

int run_fit(const FitOptions& options) {
  if (options.data.empty()) throw ValidationError("fit: --data is required");
  const Dataset data = read_dataset_csv(options.data);
  if (data.n() < 2) throw ValidationError("fit: needs at least 2 locations");

  GspsConfig config;
  config.family = family_from_string(options.family);
  config.theta_bounds = uniform_bounds(options.isotropic ? 1 : data.d(), options.theta_lo,
                                       options.theta_hi);
  config.alpha = options.alpha;
  config.alpha_c = options.alpha_c;
  config.a_star = options.a_star;
  config.b_star = options.b_star;
  config.multistart = options.multistart;
  config.seed = options.seed;

  std::optional<BlockPartition> partition;
  if (options.blocks > 1)
    partition = partition_random(data.n(), options.blocks, derive_seed(options.seed, 0xb10bULL));

  if (options.stage1_only) {
    const auto stage1 = run_stage1(
        data, config, partition ? *partition : partition_random(data.n(), 1, config.seed));
    nlohmann::json out;
    out["stage1"] = nlohmann::json::array();
    for (std::size_t b = 0; b < stage1.size(); ++b) {
      const auto& block = stage1[b];
      nlohmann::json entry;
      entry["block"] = b;
      entry["block_size"] = block.locations.size();
      entry["alpha"] = block.alpha;
      entry["a_star"] = block.a_star;
      entry["b_star"] = block.b_star;
      entry["iterations"] = block.estimate.iterations;
      entry["converged"] = block.estimate.converged;
      entry["primal_residual"] = block.estimate.primal_residual;
      entry["dual_residual"] = block.estimate.dual_residual;
      entry["objective"] = block.estimate.objective;
      Eigen::Index zeros = 0;
      const auto& p_hat = block.estimate.p_hat;
      for (Eigen::Index j = 0; j < p_hat.cols(); ++j)
        for (Eigen::Index i = 0; i < p_hat.rows(); ++i)
          if (i != j && p_hat(i, j) == 0.0) ++zeros;
      entry["offdiag_zeros"] = zeros;
      entry["offdiag_entries"] = p_hat.rows() * (p_hat.rows() - 1);
      entry["primal_trace"] = block.estimate.primal_trace;
      entry["dual_trace"] = block.estimate.dual_trace;
      entry["objective_trace"] = block.estimate.objective_trace;
      out["stage1"].push_back(std::move(entry));
    }
    if (!options.out.empty())
      write_json_file(options.out, out);
    else
      std::cout << out.dump(2) << "\n";
    if (!options.dump_matrix.empty()) write_matrix_text(options.dump_matrix, stage1.front().estimate.p_hat);
    return 0;
  }

  ModelFile model;
  model.family = config.family;
  model.d = data.d();
  model.p = data.p();
  model.theta_bounds = config.theta_bounds;
  model.partition = partition;

  const Method method = method_from_string(options.method);
  if (method == Method::Gsps) {
    const GspsFit fit = gsps_fit(data, config, partition);
    model.method = "gsps";
    model.theta_hat = fit.theta_hat;
    model.gamma_hat = fit.gamma_hat;
    model.diagnostics["stage2_objective"] = fit.stage2_objective;
    model.diagnostics["stage2_converged"] = fit.stage2_converged;
    model.diagnostics["stage1"] = stage1_diag_json(fit.stage1);
    model.diagnostics["stage1_seconds"] = fit.stage1_seconds;
    model.diagnostics["stage2_seconds"] = fit.stage2_seconds;
    if (!options.dump_matrix.empty()) {
      const auto stage1 = run_stage1(
          data, config, partition ? *partition : partition_random(data.n(), 1, config.seed));
      write_matrix_text(options.dump_matrix, stage1.front().estimate.p_hat);
    }
  } else if (method == Method::Independent) {
    const IndependentFit fit = fit_independent(data, config, partition);
    model.method = "independent";
    // joint summary: shared theta slot left as the first response's fit
    model.theta_hat = fit.per_response.front().theta_hat;
    Matrix gamma = Matrix::Zero(data.p(), data.p());
    for (int j = 0; j < data.p(); ++j)
      gamma(j, j) = fit.per_response[static_cast<std::size_t>(j)].gamma_hat(0, 0);
    model.gamma_hat = gamma;
    for (const auto& r : fit.per_response) model.independent.emplace_back(r.theta_hat, r.gamma_hat);
    model.diagnostics["parameter_count"] = fit.parameter_count;
  } else {
    MleConfig mle_config;
    mle_config.family = config.family;
    mle_config.theta_bounds = config.theta_bounds;
    mle_config.starts = options.multistart;
    mle_config.seed = options.seed;
    const MleFit fit = mle_fit(data, mle_config);
    model.method = "mle";
    model.theta_hat = fit.theta_hat;
    model.gamma_hat = fit.gamma_hat;
    model.diagnostics["neg_loglik"] = fit.neg_loglik;
    model.diagnostics["converged"] = fit.converged;
    model.diagnostics["any_start_succeeded"] = fit.any_start_succeeded;
  }

  if (!options.out.empty())
    write_model_json(options.out, model);
  else
    std::cout << "theta_hat = " << model.theta_hat.transpose() << "\n";
  return 0;
}

int run_predict(const PredictOptions& options) {
  if (options.model.empty() || options.train.empty() || options.query.empty() ||
      options.out.empty())
    throw ValidationError("predict: --model, --train, --query and --out are required");
  const ModelFile model = read_model_json(options.model);
  const Dataset train = read_dataset_csv(options.train);
  const auto queries = read_locations_csv(options.query);
  if (train.d() != model.d) throw ValidationError("predict: training dimension mismatch");
  if (train.p() != model.p) throw ValidationError("predict: training response mismatch");

  const BlockPredictionMode mode = options.blend ? BlockPredictionMode::InverseDistanceBlend
                                                 : BlockPredictionMode::NearestBlock;

  std::vector<Vector> means;
  means.reserve(queries.size());
  std::vector<Matrix> covs;

  if (model.method == "independent") {
    if (model.independent.size() != static_cast<std::size_t>(model.p))
      throw ValidationError("predict: independent model missing per-response fits");
    std::vector<Predictor> predictors;
    for (int j = 0; j < model.p; ++j) {
      SeparableModel fitted;
      fitted.correlation.family = model.family;
      fitted.correlation.theta = model.independent[static_cast<std::size_t>(j)].first;
      fitted.correlation.bounds =
          model.theta_bounds.empty()
              ? default_theta_bounds(static_cast<int>(fitted.correlation.theta.size()))
              : model.theta_bounds;
      fitted.gamma = model.independent[static_cast<std::size_t>(j)].second;
      const Dataset column = train.response_column(j);
      if (model.partition)
        predictors.emplace_back(fitted, column, *model.partition, mode);
      else
        predictors.emplace_back(fitted, column);
    }
    for (const auto& query : queries) {
      Vector mean(model.p);
      for (int j = 0; j < model.p; ++j) mean[j] = predictors[static_cast<std::size_t>(j)].predict_mean(query)[0];
      means.push_back(std::move(mean));
      if (options.with_cov) {
        Matrix cov = Matrix::Zero(model.p, model.p);
        for (int j = 0; j < model.p; ++j)
          cov(j, j) = predictors[static_cast<std::size_t>(j)].predict_cov(query)(0, 0);
        covs.push_back(std::move(cov));
      }
    }
  } else {
    SeparableModel fitted;
    fitted.correlation.family = model.family;
    fitted.correlation.theta = model.theta_hat;
    fitted.correlation.bounds =
        model.theta_bounds.empty()
            ? default_theta_bounds(static_cast<int>(model.theta_hat.size()))
            : model.theta_bounds;
    fitted.gamma = model.gamma_hat;
    const Predictor predictor = model.partition ? Predictor(fitted, train, *model.partition, mode)
                                                : Predictor(fitted, train);
    for (const auto& query : queries) {
      means.push_back(predictor.predict_mean(query));
      if (options.with_cov) covs.push_back(predictor.predict_cov(query));
    }
  }

  write_predictions_csv(options.out, queries, means, options.with_cov ? &covs : nullptr);
  return 0;
}

int run_experiment_cmd(const ExperimentOptions& options) {
  ExperimentSpec spec;
  for (int d : options.d_values)
    for (int n : options.n_values)
      for (int p : options.p_values)
        for (int N : options.N_values) spec.cells.push_back(ExperimentCell{d, n, p, N});
  spec.replications = options.replications;
  spec.methods.clear();
  for (const auto& name : options.methods) spec.methods.push_back(method_from_string(name));
  spec.block_size = options.block_size;
  spec.seed = options.seed;
  spec.num_test_points = options.test_points;
  spec.domain_width = options.domain_width;
  spec.gsps.multistart = options.multistart;
  spec.mle_starts = options.multistart;
  // a shared theta box needs one input dimension across cells; mixed-d grids
  // fall back to per-cell default bounds inside the runner
  if (options.d_values.size() == 1)
    spec.gsps.theta_bounds =
        uniform_bounds(options.d_values.front(), options.theta_lo, options.theta_hi);

  const ExperimentReport report = run_experiment(spec);
  const std::string table = report_to_table(report);
  std::cout << table;
  if (!options.out.empty()) {
    write_json_file(options.out + ".json", report_to_json(spec, report));
    write_text_file(options.out + ".csv", report_to_csv(report));
    write_text_file(options.out + ".txt", table);
  }
  return 0;
}

int run_crossval_cmd(const CrossvalOptions& options) {
  if (options.data.empty()) throw ValidationError("crossval: --data is required");
  const Dataset data = read_dataset_csv(options.data);
  std::vector<Method> methods;
  for (const auto& name : options.methods) methods.push_back(method_from_string(name));

  GspsConfig config;
  config.theta_bounds = uniform_bounds(data.d(), options.theta_lo, options.theta_hi);
  config.multistart = options.multistart;

  const auto results = run_crossval(data, options.folds, methods, options.block_size,
                                    options.seed, config, options.multistart);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& result : results) {
    nlohmann::json entry;
    entry["method"] = to_string(result.method);
    entry["mspe_mean"] = result.mspe_mean;
    entry["mspe_stderr"] = result.mspe_stderr;
    entry["fold_scores"] = result.fold_scores;
    j.push_back(std::move(entry));
    std::cout << to_string(result.method) << ": mspe = " << result.mspe_mean
              << " +/- " << result.mspe_stderr << "\n";
  }
  if (!options.out.empty()) write_json_file(options.out, j);
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Two-stage sparse-precision fitting of separable multivariate Gaussian random fields"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  SimulateOptions simulate_options;
  auto* simulate = app.add_subcommand("simulate", "draw realizations of a separable field");
  simulate->add_option("-n,--n", simulate_options.n, "number of locations");
  simulate->add_option("-d,--d", simulate_options.d, "input dimension");
  simulate->add_option("-p,--p", simulate_options.p, "response dimension");
  simulate->add_option("-N,--realizations", simulate_options.num_realizations, "realizations");
  simulate->add_option("--seed", simulate_options.seed, "master seed");
  simulate->add_option("--domain", simulate_options.domain_width, "domain width");
  simulate->add_option("--family", simulate_options.family, "correlation family");
  simulate->add_option("--theta", simulate_options.theta, "explicit theta (comma separated)");
  simulate->add_option("--gamma", simulate_options.gamma, "explicit gamma, row-major");
  simulate->add_option("--theta-radius", simulate_options.theta_radius, "hypersphere radius");
  simulate->add_option("--gamma-w", simulate_options.gamma_w, "rows of the gamma factor (default p+3)");
  simulate->add_option("--out", simulate_options.out, "output CSV path")->required();
  simulate->add_option("--sidecar", simulate_options.sidecar, "sidecar JSON path");

  FitOptions fit_options;
  auto* fit = app.add_subcommand("fit", "fit a separable model");
  fit->add_option("--data", fit_options.data, "training CSV")->required();
  fit->add_option("--method", fit_options.method, "gsps | mle | independent");
  fit->add_option("--blocks", fit_options.blocks, "number of random-selection blocks");
  fit->add_option("--alpha", fit_options.alpha, "stage-1 penalty (negative: automatic)");
  fit->add_option("--alpha-c", fit_options.alpha_c, "constant in alpha = c sqrt(log(np)/N)");
  fit->add_option("--a-star", fit_options.a_star, "spectral lower bound");
  fit->add_option("--b-star", fit_options.b_star, "spectral upper bound");
  fit->add_option("--multistart", fit_options.multistart, "stage-2 restarts");
  fit->add_option("--seed", fit_options.seed, "master seed");
  fit->add_option("--family", fit_options.family, "correlation family");
  fit->add_option("--theta-lo", fit_options.theta_lo, "theta box lower bound");
  fit->add_option("--theta-hi", fit_options.theta_hi, "theta box upper bound");
  fit->add_flag("--isotropic", fit_options.isotropic, "single shared length-scale");
  fit->add_flag("--stage1-only", fit_options.stage1_only, "emit stage-1 diagnostics and stop");
  fit->add_option("--out", fit_options.out, "model JSON output");
  fit->add_option("--dump-matrix", fit_options.dump_matrix, "dense text dump of P-hat");

  PredictOptions predict_options;
  auto* predict = app.add_subcommand("predict", "co-kriging prediction at new locations");
  predict->add_option("--model", predict_options.model, "fitted model JSON")->required();
  predict->add_option("--train", predict_options.train, "training CSV")->required();
  predict->add_option("--query", predict_options.query, "query CSV (x1..xd)")->required();
  predict->add_option("--out", predict_options.out, "predictions CSV")->required();
  predict->add_flag("--with-cov", predict_options.with_cov, "emit predictive covariance");
  predict->add_flag("--blend", predict_options.blend, "inverse-distance blend across blocks");

  ExperimentOptions experiment_options;
  auto* experiment = app.add_subcommand("experiment", "simulate/fit/predict grid");
  experiment->add_option("--d", experiment_options.d_values, "input dimensions");
  experiment->add_option("--n", experiment_options.n_values, "location counts");
  experiment->add_option("--p", experiment_options.p_values, "response dimensions");
  experiment->add_option("--N", experiment_options.N_values, "realization counts");
  experiment->add_option("-L,--replications", experiment_options.replications, "replicates per cell");
  experiment->add_option("--methods", experiment_options.methods, "methods to compare");
  experiment->add_option("--block-size", experiment_options.block_size, "locations per block (0 = unblocked)");
  experiment->add_option("--seed", experiment_options.seed, "master seed");
  experiment->add_option("--test-points", experiment_options.test_points, "held-out locations");
  experiment->add_option("--domain", experiment_options.domain_width, "domain width");
  experiment->add_option("--theta-lo", experiment_options.theta_lo, "theta box lower bound");
  experiment->add_option("--theta-hi", experiment_options.theta_hi, "theta box upper bound");
  experiment->add_option("--multistart", experiment_options.multistart, "stage-2 restarts");
  experiment->add_option("--out", experiment_options.out, "output prefix");

  CrossvalOptions crossval_options;
  auto* crossval = app.add_subcommand("crossval", "location-level K-fold cross validation");
  crossval->add_option("--data", crossval_options.data, "dataset CSV")->required();
  crossval->add_option("--folds", crossval_options.folds, "number of folds");
  crossval->add_option("--methods", crossval_options.methods, "methods to compare");
  crossval->add_option("--block-size", crossval_options.block_size, "locations per block (0 = unblocked)");
  crossval->add_option("--seed", crossval_options.seed, "master seed");
  crossval->add_option("--theta-lo", crossval_options.theta_lo, "theta box lower bound");
  crossval->add_option("--theta-hi", crossval_options.theta_hi, "theta box upper bound");
  crossval->add_option("--multistart", crossval_options.multistart, "stage-2 restarts");
  crossval->add_option("--out", crossval_options.out, "results JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return run_simulate(simulate_options);
    if (fit->parsed()) return run_fit(fit_options);
    if (predict->parsed()) return run_predict(predict_options);
    if (experiment->parsed()) return run_experiment_cmd(experiment_options);
    if (crossval->parsed()) return run_crossval_cmd(crossval_options);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace gsps::cli
