#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gsps/cli.hpp"
#include "gsps/experiment.hpp"
#include "gsps/io.hpp"
#include "gsps/rng.hpp"
#include "gsps/simulate.hpp"
#include "oracles.hpp"

using namespace gsps;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "gsps_harness_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string temp_path(const std::string& name) { return (temp_dir() / name).string(); }

Box bounds_for(int q, double lo = 1e-4, double hi = 10.0) {
  Box box;
  box.lower = Vector::Constant(q, lo);
  box.upper = Vector::Constant(q, hi);
  return box;
}

Dataset simulate_small(int n, int p, int N, std::uint64_t seed, double coupling = 0.0) {
  const auto truth = random_true_params(2, p, p + 3, seed);
  SimulationSpec spec;
  spec.locations = random_locations(n, 2, 10.0, seed + 1);
  spec.model.correlation.theta = truth.theta;
  spec.model.correlation.bounds = bounds_for(2);
  spec.model.gamma = truth.gamma;
  if (coupling > 0.0 && p == 2) {
    spec.model.gamma = Matrix(2, 2);
    spec.model.gamma << 1.0, coupling, coupling, 1.0;
  }
  spec.num_realizations = N;
  spec.seed = seed + 2;
  return sample_grf(spec);
}

}  // namespace

TEST_CASE("dataset CSV round trip is exact") {
  const Dataset data = simulate_small(6, 2, 3, 100);
  const auto path = temp_path("roundtrip.csv");
  write_dataset_csv(path, data);
  const Dataset back = read_dataset_csv(path);
  REQUIRE(back.n() == data.n());
  REQUIRE(back.num_realizations() == data.num_realizations());
  for (int i = 0; i < data.n(); ++i) CHECK(back.locations[i].coords == data.locations[i].coords);
  for (int r = 0; r < data.num_realizations(); ++r)
    CHECK(back.realizations[r] == data.realizations[r]);
}

TEST_CASE("dataset CSV rejects malformed files") {
  const auto path = temp_path("bad.csv");

  write_text_file(path, "rep,x1,y1\n1,0,1\n1,1,2\n2,0,3\n");  // second block short
  CHECK_THROWS_AS((void)read_dataset_csv(path), ValidationError);

  write_text_file(path, "rep,x1,y1\n1,0,1\n1,1,2\n2,0,3\n2,9,4\n");  // locations differ
  CHECK_THROWS_AS((void)read_dataset_csv(path), ValidationError);

  write_text_file(path, "rep,x1\n1,0\n");  // no responses
  CHECK_THROWS_AS((void)read_dataset_csv(path), ValidationError);

  write_text_file(path, "rep,x1,y1\n1,0,oops\n1,1,2\n");
  CHECK_THROWS_AS((void)read_dataset_csv(path), ValidationError);
}

TEST_CASE("model JSON round trip preserves the fit") {
  ModelFile model;
  model.method = "gsps";
  model.d = 2;
  model.p = 2;
  model.theta_hat = Vector::Constant(2, 0.37);
  std::mt19937_64 rng(3);
  model.gamma_hat = oracle::random_spd(2, rng);
  model.theta_bounds = bounds_for(2);
  model.partition = partition_random(8, 2, 5);
  model.diagnostics["stage2_objective"] = 1.25;

  const auto path = temp_path("model.json");
  write_model_json(path, model);
  const ModelFile back = read_model_json(path);
  CHECK(back.method == "gsps");
  CHECK(back.theta_hat == model.theta_hat);
  CHECK(back.gamma_hat == model.gamma_hat);
  CHECK(back.partition.has_value());
  CHECK(back.partition->assignment == model.partition->assignment);
  CHECK(back.diagnostics.at("stage2_objective").get<double>() == 1.25);
}

TEST_CASE("matrix text dump round trips") {
  std::mt19937_64 rng(7);
  const Matrix m = oracle::random_spd(4, rng);
  const auto path = temp_path("matrix.txt");
  write_matrix_text(path, m);
  CHECK(read_matrix_text(path) == m);
}

TEST_CASE("independent fit on a p=1 dataset equals the joint fit") {
  const Dataset data = simulate_small(10, 1, 4, 200);
  GspsConfig config;
  config.theta_bounds = bounds_for(2);
  config.seed = 9;
  const GspsFit joint = gsps_fit(data, config);
  GspsConfig per_column = config;
  per_column.seed = derive_seed(config.seed, 0x696e646570ULL, 0);  // the induced seed
  const IndependentFit independent = fit_independent(data, config);
  REQUIRE(independent.per_response.size() == 1);
  const GspsFit direct = gsps_fit(data, per_column);
  CHECK(independent.per_response[0].theta_hat == direct.theta_hat);
  // same data, same pipeline: only the multistart seed differs from `joint`
  CHECK((independent.per_response[0].theta_hat - joint.theta_hat).norm() < 1e-5);
}

TEST_CASE("independent fit exposes the parameter count bookkeeping") {
  const Dataset data = simulate_small(8, 2, 3, 300);
  GspsConfig config;
  config.theta_bounds = bounds_for(2);
  const IndependentFit fit = fit_independent(data, config);
  CHECK(fit.parameter_count == data.p() * (data.d() + 1));
  CHECK(fit.per_response.size() == 2);
}

TEST_CASE("experiment smoke run: one cell, finite metrics, deterministic repeat") {
  ExperimentSpec spec;
  spec.cells = {ExperimentCell{2, 12, 2, 2}};
  spec.replications = 1;
  spec.methods = {Method::Gsps};
  spec.seed = 11;
  spec.num_test_points = 10;
  spec.gsps.theta_bounds = bounds_for(2);
  spec.gsps.admm.primal_tol = 1e-5;
  spec.gsps.admm.dual_tol = 1e-5;

  const ExperimentReport report = run_experiment(spec);
  REQUIRE(report.rows.size() == 1);
  const auto& row = report.rows.front();
  CHECK(row.replications_done == 1);
  CHECK(row.failures.empty());
  CHECK(std::isfinite(row.theta_err_mean));
  CHECK(std::isfinite(row.gamma_err_mean));
  CHECK(std::isfinite(row.mspe_mean));
  CHECK(row.fit_seconds_mean > 0.0);

  const ExperimentReport again = run_experiment(spec);
  CHECK(again.rows.front().theta_err_mean == row.theta_err_mean);
  CHECK(again.rows.front().gamma_err_mean == row.gamma_err_mean);
  CHECK(again.rows.front().mspe_mean == row.mspe_mean);
}

TEST_CASE("experiment records cell failures and keeps going") {
  ExperimentSpec spec;
  // block size 1 forces singleton blocks, which stage 1 rejects
  spec.cells = {ExperimentCell{2, 6, 1, 1}};
  spec.replications = 2;
  spec.methods = {Method::Gsps};
  spec.seed = 5;
  spec.num_test_points = 4;
  spec.block_size = 1;
  spec.gsps.theta_bounds = bounds_for(2);

  const ExperimentReport report = run_experiment(spec);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows.front().replications_done == 0);
  CHECK(report.rows.front().failures.size() == 2);
  CHECK(report.rows.front().failures.front().find("block") != std::string::npos);
}

TEST_CASE("experiment results do not depend on the worker count") {
  ExperimentSpec spec;
  spec.cells = {ExperimentCell{2, 10, 2, 2}};
  spec.replications = 3;
  spec.methods = {Method::Gsps};
  spec.seed = 77;
  spec.num_test_points = 6;
  spec.gsps.theta_bounds = bounds_for(2);
  spec.gsps.admm.primal_tol = 1e-5;
  spec.gsps.admm.dual_tol = 1e-5;

  setenv("GSPS_THREADS", "1", 1);
  const ExperimentReport serial = run_experiment(spec);
  setenv("GSPS_THREADS", "4", 1);
  const ExperimentReport pooled = run_experiment(spec);
  unsetenv("GSPS_THREADS");
  CHECK(serial.rows.front().theta_err_mean == pooled.rows.front().theta_err_mean);
  CHECK(serial.rows.front().gamma_err_mean == pooled.rows.front().gamma_err_mean);
  CHECK(serial.rows.front().mspe_mean == pooled.rows.front().mspe_mean);
}

TEST_CASE("experiment report renders JSON, table and 6-digit CSV") {
  ExperimentReport report;
  CellResult row;
  row.cell = ExperimentCell{2, 60, 2, 10};
  row.method = Method::Gsps;
  row.replications_done = 3;
  row.theta_err_mean = 0.123456789;
  row.gamma_err_mean = 1.0 / 3.0;
  row.mspe_mean = 2.5;
  row.fit_seconds_mean = 0.011;
  report.rows.push_back(row);

  ExperimentSpec spec;
  spec.cells = {row.cell};
  const auto j = report_to_json(spec, report);
  CHECK(j.at("cells").size() == 1);
  CHECK(j.at("cells").at(0).at("method") == "gsps");

  const std::string table = report_to_table(report);
  CHECK(table.find("theta_err") != std::string::npos);
  CHECK(table.find("gsps") != std::string::npos);

  const std::string csv = report_to_csv(report);
  CHECK(csv.find("0.123457") != std::string::npos);  // 6 significant digits
  CHECK(csv.find("0.333333") != std::string::npos);
}

TEST_CASE("crossval: constant-zero data scores zero MSPE for every method") {
  Dataset data;
  data.locations = random_locations(12, 2, 10.0, 400);
  data.realizations = {Matrix::Zero(12, 2), Matrix::Zero(12, 2)};
  GspsConfig config;
  config.theta_bounds = bounds_for(2);
  const auto results = run_crossval(data, 3, {Method::Gsps, Method::Independent, Method::Mle}, 0,
                                    13, config, 2);
  REQUIRE(results.size() == 3);
  for (const auto& result : results) {
    CHECK(result.mspe_mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(result.fold_scores.size() == 3);
  }
}

TEST_CASE("crossval: leave-one-out runs n folds") {
  const Dataset data = simulate_small(10, 1, 2, 500);
  GspsConfig config;
  config.theta_bounds = bounds_for(2);
  config.admm.primal_tol = 1e-5;
  config.admm.dual_tol = 1e-5;
  const auto results = run_crossval(data, 10, {Method::Gsps}, 0, 17, config);
  REQUIRE(results.size() == 1);
  CHECK(results.front().fold_scores.size() == 10);
  for (double score : results.front().fold_scores) CHECK(std::isfinite(score));
}

TEST_CASE("crossval validates fold counts") {
  const Dataset data = simulate_small(6, 1, 1, 600);
  GspsConfig config;
  config.theta_bounds = bounds_for(2);
  CHECK_THROWS_AS((void)run_crossval(data, 1, {Method::Gsps}, 0, 0, config), ValidationError);
  CHECK_THROWS_AS((void)run_crossval(data, 7, {Method::Gsps}, 0, 0, config), ValidationError);
}

TEST_CASE("cli: simulate -> fit -> predict round trip through files") {
  const auto csv = temp_path("cli_data.csv");
  const auto sidecar = temp_path("cli_data.json");
  cli::SimulateOptions simulate_options;
  simulate_options.n = 14;
  simulate_options.d = 2;
  simulate_options.p = 2;
  simulate_options.num_realizations = 4;
  simulate_options.seed = 21;
  simulate_options.out = csv;
  simulate_options.sidecar = sidecar;
  CHECK(cli::run_simulate(simulate_options) == 0);

  const auto sidecar_json = read_json_file(sidecar);
  CHECK(sidecar_json.at("n") == 14);
  CHECK(sidecar_json.contains("theta_star"));
  CHECK(sidecar_json.contains("gamma_star"));

  const auto model_path = temp_path("cli_model.json");
  cli::FitOptions fit_options;
  fit_options.data = csv;
  fit_options.out = model_path;
  fit_options.seed = 23;
  fit_options.theta_hi = 10.0;
  fit_options.multistart = 4;
  CHECK(cli::run_fit(fit_options) == 0);
  const ModelFile model = read_model_json(model_path);
  CHECK(model.method == "gsps");
  CHECK(model.theta_hat.size() == 2);

  const auto query_path = temp_path("cli_query.csv");
  write_locations_csv(query_path, random_locations(5, 2, 10.0, 29));
  const auto pred_path = temp_path("cli_pred.csv");
  cli::PredictOptions predict_options;
  predict_options.model = model_path;
  predict_options.train = csv;
  predict_options.query = query_path;
  predict_options.out = pred_path;
  predict_options.with_cov = true;
  CHECK(cli::run_predict(predict_options) == 0);

  std::ifstream in(pred_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1,x2,yhat1,yhat2,cov1_1,cov1_2,cov2_1,cov2_2");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("cli: stage1-only emits sparsity statistics and residual traces") {
  const auto csv = temp_path("cli_stage1.csv");
  write_dataset_csv(csv, simulate_small(8, 2, 3, 700));
  cli::FitOptions options;
  options.data = csv;
  options.stage1_only = true;
  options.out = temp_path("cli_stage1.json");
  options.dump_matrix = temp_path("cli_phat.txt");
  CHECK(cli::run_fit(options) == 0);

  const auto j = read_json_file(options.out);
  REQUIRE(j.at("stage1").size() == 1);
  const auto& entry = j.at("stage1").at(0);
  CHECK(entry.contains("offdiag_zeros"));
  CHECK(entry.at("primal_trace").size() > 0);
  const Matrix p_hat = read_matrix_text(options.dump_matrix);
  CHECK(p_hat.rows() == 16);
  CHECK((p_hat - p_hat.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cli: fit with independent and mle methods writes usable models") {
  const auto csv = temp_path("cli_methods.csv");
  write_dataset_csv(csv, simulate_small(10, 2, 5, 800));

  cli::FitOptions independent;
  independent.data = csv;
  independent.method = "independent";
  independent.theta_hi = 10.0;
  independent.multistart = 3;
  independent.out = temp_path("cli_independent.json");
  CHECK(cli::run_fit(independent) == 0);
  const ModelFile ind_model = read_model_json(independent.out);
  CHECK(ind_model.method == "independent");
  CHECK(ind_model.independent.size() == 2);

  cli::FitOptions mle;
  mle.data = csv;
  mle.method = "mle";
  mle.theta_hi = 10.0;
  mle.multistart = 3;
  mle.out = temp_path("cli_mle.json");
  CHECK(cli::run_fit(mle) == 0);
  CHECK(read_model_json(mle.out).method == "mle");

  // predictions work for both model kinds
  const auto query_path = temp_path("cli_methods_query.csv");
  write_locations_csv(query_path, random_locations(3, 2, 10.0, 31));
  for (const auto& model_path : {independent.out, mle.out}) {
    cli::PredictOptions predict_options;
    predict_options.model = model_path;
    predict_options.train = csv;
    predict_options.query = query_path;
    predict_options.out = temp_path("cli_methods_pred.csv");
    CHECK(cli::run_predict(predict_options) == 0);
  }
}

TEST_CASE("cli: isotropic fit carries a single shared length scale") {
  const auto csv = temp_path("cli_iso.csv");
  write_dataset_csv(csv, simulate_small(10, 2, 4, 850));
  cli::FitOptions options;
  options.data = csv;
  options.isotropic = true;
  options.theta_hi = 10.0;
  options.multistart = 3;
  options.out = temp_path("cli_iso.json");
  CHECK(cli::run_fit(options) == 0);
  const ModelFile model = read_model_json(options.out);
  CHECK(model.theta_hat.size() == 1);  // q = 1 restriction

  const auto query_path = temp_path("cli_iso_query.csv");
  write_locations_csv(query_path, random_locations(3, 2, 10.0, 37));
  cli::PredictOptions predict_options;
  predict_options.model = options.out;
  predict_options.train = csv;
  predict_options.query = query_path;
  predict_options.out = temp_path("cli_iso_pred.csv");
  CHECK(cli::run_predict(predict_options) == 0);
}

TEST_CASE("cli: blocked fit records the partition and predict honors it") {
  const auto csv = temp_path("cli_blocked.csv");
  write_dataset_csv(csv, simulate_small(16, 2, 4, 900));
  cli::FitOptions options;
  options.data = csv;
  options.blocks = 2;
  options.theta_hi = 10.0;
  options.multistart = 3;
  options.seed = 33;
  options.out = temp_path("cli_blocked.json");
  CHECK(cli::run_fit(options) == 0);
  const ModelFile model = read_model_json(options.out);
  REQUIRE(model.partition.has_value());
  CHECK(model.partition->num_blocks == 2);

  cli::PredictOptions predict_options;
  predict_options.model = options.out;
  predict_options.train = csv;
  predict_options.query = csv;  // invalid query format: must throw ValidationError
  predict_options.out = temp_path("cli_blocked_pred.csv");
  CHECK_THROWS_AS((void)cli::run_predict(predict_options), ValidationError);

  const auto query_path = temp_path("cli_blocked_query.csv");
  write_locations_csv(query_path, random_locations(4, 2, 10.0, 35));
  predict_options.query = query_path;
  predict_options.blend = true;
  CHECK(cli::run_predict(predict_options) == 0);
}

TEST_CASE("cli binary: exit codes for success, validation error, numerical path") {
  const char* binary = std::getenv("GSPS_CLI");
  REQUIRE(binary != nullptr);
  const std::string base = binary;

  const auto csv = temp_path("cli_bin.csv");
  const std::string simulate_cmd = base + " simulate -n 10 -d 2 -p 2 -N 2 --seed 3 --out " + csv +
                                   " > /dev/null 2>&1";
  CHECK(std::system(simulate_cmd.c_str()) == 0);

  const std::string fit_cmd = base + " fit --data " + csv + " --theta-hi 10 --multistart 3 --out " +
                              temp_path("cli_bin_model.json") + " > /dev/null 2>&1";
  CHECK(std::system(fit_cmd.c_str()) == 0);

  // missing file is a validation error: exit code 1
  const std::string bad_cmd = base + " fit --data /nonexistent.csv > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(bad_cmd.c_str())) == 1);

  // malformed flags exit nonzero
  const std::string parse_cmd = base + " fit > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(parse_cmd.c_str())) != 0);
}

TEST_CASE("cli binary: config file values are overridden by the command line") {
  const char* binary = std::getenv("GSPS_CLI");
  REQUIRE(binary != nullptr);
  const auto csv = temp_path("cli_cfg.csv");
  const auto config_path = temp_path("cli_cfg.ini");
  write_text_file(config_path, "[simulate]\nn=9\nd=2\np=1\nrealizations=2\nseed=5\nout=\"" + csv +
                                   "\"\n");
  const std::string from_file =
      std::string(binary) + " --config " + config_path + " simulate > /dev/null 2>&1";
  CHECK(std::system(from_file.c_str()) == 0);
  CHECK(read_dataset_csv(csv).n() == 9);

  const std::string overridden = std::string(binary) + " --config " + config_path +
                                 " simulate -n 7 > /dev/null 2>&1";
  CHECK(std::system(overridden.c_str()) == 0);
  CHECK(read_dataset_csv(csv).n() == 7);
}
