#include "gsps/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gsps/parallel.hpp"
#include "gsps/rng.hpp"
#include "gsps/simulate.hpp"

namespace gsps {

Method method_from_string(const std::string& name) {
  if (name == "gsps") return Method::Gsps;
  if (name == "mle") return Method::Mle;
  if (name == "independent" || name == "msps") return Method::Independent;
  throw ValidationError("unknown method: " + name);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Gsps:
      return "gsps";
    case Method::Mle:
      return "mle";
    case Method::Independent:
      return "independent";
  }
  throw ValidationError("unknown method enum value");
}

IndependentFit fit_independent(const Dataset& data, const GspsConfig& config,
                               const std::optional<BlockPartition>& partition) {
  data.validate();
  IndependentFit fit;
  fit.per_response.resize(static_cast<std::size_t>(data.p()));
  parallel_for(static_cast<std::size_t>(data.p()), [&](std::size_t j) {
    GspsConfig per_response = config;
    per_response.seed = derive_seed(config.seed, 0x696e646570ULL, j);
    fit.per_response[j] = gsps_fit(data.response_column(static_cast<int>(j)), per_response, partition);
  });
  // d spatial parameters plus one variance per response
  fit.parameter_count = data.p() * (data.d() + 1);
  return fit;
}

IndependentPredictor::IndependentPredictor(const IndependentFit& fit, const Dataset& training,
                                           const std::optional<BlockPartition>& partition,
                                           BlockPredictionMode mode, const Box& theta_bounds) {
  if (fit.per_response.size() != static_cast<std::size_t>(training.p()))
    throw ValidationError("IndependentPredictor: fit/response count mismatch");
  predictors_.reserve(fit.per_response.size());
  for (std::size_t j = 0; j < fit.per_response.size(); ++j) {
    SeparableModel model;
    model.correlation.family = Family::AnisotropicExponential;
    model.correlation.theta = fit.per_response[j].theta_hat;
    model.correlation.bounds =
        theta_bounds.empty() ? default_theta_bounds(fit.per_response[j].theta_hat.size())
                             : theta_bounds;
    model.gamma = fit.per_response[j].gamma_hat;
    const Dataset column = training.response_column(static_cast<int>(j));
    if (partition)
      predictors_.emplace_back(model, column, *partition, mode);
    else
      predictors_.emplace_back(model, column);
  }
}

Vector IndependentPredictor::predict_mean(const Location& x0) const {
  Vector mean(static_cast<Eigen::Index>(predictors_.size()));
  for (std::size_t j = 0; j < predictors_.size(); ++j)
    mean[static_cast<Eigen::Index>(j)] = predictors_[j].predict_mean(x0)[0];
  return mean;
}

double mspe(const IndependentPredictor& predictor, const Dataset& test) {
  test.validate();
  if (test.d() != predictor.d()) throw ValidationError("mspe: test dimension mismatch");
  if (test.p() != predictor.p()) throw ValidationError("mspe: test response dimension mismatch");
  double total = 0.0;
  for (int i = 0; i < test.n(); ++i) {
    const Vector yhat = predictor.predict_mean(test.locations[static_cast<std::size_t>(i)]);
    for (const auto& y : test.realizations) total += (y.row(i).transpose() - yhat).squaredNorm();
  }
  return total / (static_cast<double>(test.n()) * test.p() * test.num_realizations());
}

void ExperimentSpec::validate() const {
  if (cells.empty()) throw ValidationError("ExperimentSpec: no cells");
  for (const auto& cell : cells)
    if (cell.d < 1 || cell.n < 2 || cell.p < 1 || cell.N < 1)
      throw ValidationError("ExperimentSpec: cell parameters must be positive (n >= 2)");
  if (replications < 1) throw ValidationError("ExperimentSpec: replications must be >= 1");
  if (methods.empty()) throw ValidationError("ExperimentSpec: no methods");
  if (num_test_points < 1) throw ValidationError("ExperimentSpec: num_test_points must be >= 1");
  if (domain_width <= 0.0) throw ValidationError("ExperimentSpec: domain_width must be positive");
  if (block_size < 0) throw ValidationError("ExperimentSpec: block_size must be >= 0");
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  double theta_err = 0.0;
  double gamma_err = 0.0;
  double mspe_value = 0.0;
  double fit_seconds = 0.0;
};

Matrix diag_gamma_of(const IndependentFit& fit) {
  const int p = static_cast<int>(fit.per_response.size());
  Matrix gamma = Matrix::Zero(p, p);
  for (int j = 0; j < p; ++j) gamma(j, j) = fit.per_response[static_cast<std::size_t>(j)].gamma_hat(0, 0);
  return gamma;
}

double mean_theta_err(const IndependentFit& fit, const Vector& theta_star) {
  double total = 0.0;
  for (const auto& r : fit.per_response) total += (r.theta_hat - theta_star).norm();
  return total / static_cast<double>(fit.per_response.size());
}

ReplicateOutcome run_replicate(const ExperimentSpec& spec, const ExperimentCell& cell,
                               Method method, int replicate) {
  ReplicateOutcome outcome;
  const std::uint64_t cell_seed =
      derive_seed(spec.seed, static_cast<std::uint64_t>(cell.d) << 32 | static_cast<std::uint64_t>(cell.n),
                  static_cast<std::uint64_t>(cell.p) << 32 | static_cast<std::uint64_t>(cell.N),
                  static_cast<std::uint64_t>(replicate));
  try {
    const int w = spec.gamma_w > 0 ? spec.gamma_w : cell.p + 3;
    const TrueParams truth =
        random_true_params(cell.d, cell.p, w, derive_seed(cell_seed, 1), spec.theta_radius);

    SeparableModel model;
    model.correlation.family = Family::AnisotropicExponential;
    model.correlation.theta = truth.theta;
    model.correlation.bounds = default_theta_bounds(cell.d);
    // truth can fall outside a user-supplied search box; widen just for simulation
    for (int k = 0; k < cell.d; ++k) {
      model.correlation.bounds.lower[k] = std::min(model.correlation.bounds.lower[k], truth.theta[k]);
      model.correlation.bounds.upper[k] = std::max(model.correlation.bounds.upper[k], truth.theta[k]);
    }
    model.gamma = truth.gamma;

    SimulationSpec sim;
    sim.locations =
        random_locations(cell.n + spec.num_test_points, cell.d, spec.domain_width,
                         derive_seed(cell_seed, 2));
    sim.model = model;
    sim.num_realizations = cell.N;
    sim.seed = derive_seed(cell_seed, 3);
    const Dataset joint = sample_grf(sim);

    std::vector<int> train_idx(static_cast<std::size_t>(cell.n));
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::vector<int> test_idx(static_cast<std::size_t>(spec.num_test_points));
    std::iota(test_idx.begin(), test_idx.end(), cell.n);
    const Dataset train = joint.restrict(train_idx);
    const Dataset test = joint.restrict(test_idx);

    std::optional<BlockPartition> partition;
    if (spec.block_size > 0 && spec.block_size < cell.n) {
      const int k = (cell.n + spec.block_size - 1) / spec.block_size;
      partition = partition_random(cell.n, k, derive_seed(cell_seed, 4));
    }

    GspsConfig config = spec.gsps;
    config.seed = derive_seed(cell_seed, 5);
    // the shared box applies where its dimension fits (d or the isotropic 1)
    if (config.theta_bounds.empty() ||
        (config.theta_bounds.dim() != cell.d && config.theta_bounds.dim() != 1))
      config.theta_bounds = default_theta_bounds(cell.d);

    const auto started = std::chrono::steady_clock::now();
    if (method == Method::Gsps) {
      const GspsFit fit = gsps_fit(train, config, partition);
      outcome.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      outcome.theta_err = (fit.theta_hat - truth.theta).norm();
      outcome.gamma_err = (fit.gamma_hat - truth.gamma).norm();
      SeparableModel fitted;
      fitted.correlation.family = config.family;
      fitted.correlation.theta = fit.theta_hat;
      fitted.correlation.bounds = config.theta_bounds;
      fitted.gamma = fit.gamma_hat;
      const Predictor predictor = partition ? Predictor(fitted, train, *partition)
                                            : Predictor(fitted, train);
      outcome.mspe_value = mspe(predictor, test);
    } else if (method == Method::Independent) {
      GspsConfig per_col = config;
      if (per_col.theta_bounds.empty()) per_col.theta_bounds = default_theta_bounds(cell.d);
      const IndependentFit fit = fit_independent(train, per_col, partition);
      outcome.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      outcome.theta_err = mean_theta_err(fit, truth.theta);
      outcome.gamma_err = (diag_gamma_of(fit) - truth.gamma).norm();
      const IndependentPredictor predictor(fit, train, partition,
                                           BlockPredictionMode::NearestBlock,
                                           per_col.theta_bounds);
      outcome.mspe_value = mspe(predictor, test);
    } else {
      MleConfig mle_config;
      mle_config.family = config.family;
      mle_config.theta_bounds = config.theta_bounds;
      mle_config.starts = spec.mle_starts;
      mle_config.seed = derive_seed(cell_seed, 6);
      const MleFit fit = mle_fit(train, mle_config);
      outcome.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      outcome.theta_err = (fit.theta_hat - truth.theta).norm();
      outcome.gamma_err = (fit.gamma_hat - truth.gamma).norm();
      SeparableModel fitted;
      fitted.correlation.family = config.family;
      fitted.correlation.theta = fit.theta_hat;
      fitted.correlation.bounds = mle_config.theta_bounds;
      fitted.gamma = fit.gamma_hat;
      const Predictor predictor(fitted, train);
      outcome.mspe_value = mspe(predictor, test);
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();

  struct Task {
    std::size_t cell;
    std::size_t method;
    int replicate;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < spec.cells.size(); ++c)
    for (std::size_t m = 0; m < spec.methods.size(); ++m)
      for (int r = 0; r < spec.replications; ++r) tasks.push_back(Task{c, m, r});

  std::vector<ReplicateOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t t) {
    outcomes[t] = run_replicate(spec, spec.cells[tasks[t].cell], spec.methods[tasks[t].method],
                                tasks[t].replicate);
  });

  ExperimentReport report;
  for (std::size_t c = 0; c < spec.cells.size(); ++c)
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      CellResult row;
      row.cell = spec.cells[c];
      row.method = spec.methods[m];
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].cell != c || tasks[t].method != m) continue;
        const auto& outcome = outcomes[t];
        if (!outcome.ok) {
          std::ostringstream msg;
          msg << "replicate " << tasks[t].replicate << ": " << outcome.error;
          row.failures.push_back(msg.str());
          continue;
        }
        ++row.replications_done;
        row.theta_err_mean += outcome.theta_err;
        row.gamma_err_mean += outcome.gamma_err;
        row.mspe_mean += outcome.mspe_value;
        row.fit_seconds_mean += outcome.fit_seconds;
      }
      if (row.replications_done > 0) {
        row.theta_err_mean /= row.replications_done;
        row.gamma_err_mean /= row.replications_done;
        row.mspe_mean /= row.replications_done;
        row.fit_seconds_mean /= row.replications_done;
      }
      report.rows.push_back(std::move(row));
    }
  return report;
}

std::vector<CrossvalResult> run_crossval(const Dataset& data, int folds,
                                         const std::vector<Method>& methods, int block_size,
                                         std::uint64_t seed, const GspsConfig& base_config,
                                         int mle_starts) {
  data.validate();
  if (folds < 2) throw ValidationError("run_crossval: folds must be >= 2");
  if (folds > data.n()) throw ValidationError("run_crossval: more folds than locations");
  if (methods.empty()) throw ValidationError("run_crossval: no methods");

  const BlockPartition fold_split = partition_random(data.n(), folds, derive_seed(seed, 0xf01d5ULL));
  const auto fold_sets = fold_split.blocks();

  struct FoldTask {
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    std::optional<BlockPartition> partition;
  };
  std::vector<FoldTask> fold_tasks;
  fold_tasks.reserve(fold_sets.size());
  for (std::size_t f = 0; f < fold_sets.size(); ++f) {
    FoldTask task;
    task.test_idx = fold_sets[f];
    std::vector<char> in_test(static_cast<std::size_t>(data.n()), 0);
    for (int i : task.test_idx) in_test[static_cast<std::size_t>(i)] = 1;
    for (int i = 0; i < data.n(); ++i)
      if (!in_test[static_cast<std::size_t>(i)]) task.train_idx.push_back(i);
    const int train_n = static_cast<int>(task.train_idx.size());
    if (train_n < 2) throw ValidationError("run_crossval: fold too small to train on");
    if (block_size > 0 && block_size < train_n) {
      const int k = (train_n + block_size - 1) / block_size;
      if (train_n / k < 2) throw ValidationError("run_crossval: fold too small for the block size");
      task.partition = partition_random(train_n, k, derive_seed(seed, 0xb10c5ULL, f));
    }
    fold_tasks.push_back(std::move(task));
  }

  std::vector<CrossvalResult> results(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    results[m].method = methods[m];
    results[m].fold_scores.assign(fold_tasks.size(), 0.0);
  }

  struct Task {
    std::size_t method;
    std::size_t fold;
  };
  std::vector<Task> tasks;
  for (std::size_t m = 0; m < methods.size(); ++m)
    for (std::size_t f = 0; f < fold_tasks.size(); ++f) tasks.push_back(Task{m, f});

  parallel_for(tasks.size(), [&](std::size_t t) {
    const auto& fold = fold_tasks[tasks[t].fold];
    const Method method = methods[tasks[t].method];
    const Dataset train = data.restrict(fold.train_idx);
    const Dataset test = data.restrict(fold.test_idx);

    GspsConfig config = base_config;
    config.seed = derive_seed(seed, 0xcfULL, tasks[t].fold);
    if (config.theta_bounds.empty()) config.theta_bounds = default_theta_bounds(train.d());

    double score = 0.0;
    if (method == Method::Gsps) {
      const GspsFit fit = gsps_fit(train, config, fold.partition);
      SeparableModel fitted;
      fitted.correlation.family = config.family;
      fitted.correlation.theta = fit.theta_hat;
      fitted.correlation.bounds = config.theta_bounds;
      fitted.gamma = fit.gamma_hat;
      const Predictor predictor = fold.partition ? Predictor(fitted, train, *fold.partition)
                                                 : Predictor(fitted, train);
      score = mspe(predictor, test);
    } else if (method == Method::Independent) {
      const IndependentFit fit = fit_independent(train, config, fold.partition);
      const IndependentPredictor predictor(fit, train, fold.partition,
                                           BlockPredictionMode::NearestBlock, config.theta_bounds);
      score = mspe(predictor, test);
    } else {
      MleConfig mle_config;
      mle_config.family = config.family;
      mle_config.theta_bounds = config.theta_bounds;
      mle_config.starts = mle_starts;
      mle_config.seed = derive_seed(seed, 0x3eULL, tasks[t].fold);
      const MleFit fit = mle_fit(train, mle_config);
      SeparableModel fitted;
      fitted.correlation.family = config.family;
      fitted.correlation.theta = fit.theta_hat;
      fitted.correlation.bounds = mle_config.theta_bounds;
      fitted.gamma = fit.gamma_hat;
      const Predictor predictor(fitted, train);
      score = mspe(predictor, test);
    }
    results[tasks[t].method].fold_scores[tasks[t].fold] = score;
  });

  for (auto& result : results) {
    const auto& scores = result.fold_scores;
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                        static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var = scores.size() > 1 ? var / static_cast<double>(scores.size() - 1) : 0.0;
    result.mspe_mean = mean;
    result.mspe_stderr = std::sqrt(var / static_cast<double>(scores.size()));
  }
  return results;
}

namespace {

std::string format_sig(double v, int digits = 6) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, v);
  return buffer;
}

}  // namespace

nlohmann::json report_to_json(const ExperimentSpec& spec, const ExperimentReport& report) {
  nlohmann::json j;
  j["seed"] = spec.seed;
  j["replications"] = spec.replications;
  j["num_test_points"] = spec.num_test_points;
  j["domain_width"] = spec.domain_width;
  j["block_size"] = spec.block_size;
  auto& rows = j["cells"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json entry;
    entry["d"] = row.cell.d;
    entry["n"] = row.cell.n;
    entry["p"] = row.cell.p;
    entry["N"] = row.cell.N;
    entry["method"] = to_string(row.method);
    entry["replications_done"] = row.replications_done;
    entry["theta_err_mean"] = row.theta_err_mean;
    entry["gamma_err_mean"] = row.gamma_err_mean;
    entry["mspe_mean"] = row.mspe_mean;
    entry["fit_seconds_mean"] = row.fit_seconds_mean;
    entry["failures"] = row.failures;
    rows.push_back(std::move(entry));
  }
  return j;
}

std::string report_to_table(const ExperimentReport& report) {
  static const char* headers[] = {"d",       "n",         "p",        "N",       "method",
                                  "reps",    "theta_err", "gamma_err", "mspe",   "fit_sec"};
  std::vector<std::vector<std::string>> rows;
  rows.emplace_back(std::begin(headers), std::end(headers));
  for (const auto& row : report.rows)
    rows.push_back({std::to_string(row.cell.d), std::to_string(row.cell.n),
                    std::to_string(row.cell.p), std::to_string(row.cell.N), to_string(row.method),
                    std::to_string(row.replications_done), format_sig(row.theta_err_mean),
                    format_sig(row.gamma_err_mean), format_sig(row.mspe_mean),
                    format_sig(row.fit_seconds_mean)});

  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c] << std::string(widths[c] - row[c].size(), ' ');
      out << (c + 1 < row.size() ? "  " : "");
    }
    out << "\n";
  }
  return out.str();
}

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "d,n,p,N,method,replications_done,theta_err_mean,gamma_err_mean,mspe_mean,fit_seconds_mean\n";
  for (const auto& row : report.rows)
    out << row.cell.d << ',' << row.cell.n << ',' << row.cell.p << ',' << row.cell.N << ','
        << to_string(row.method) << ',' << row.replications_done << ','
        << format_sig(row.theta_err_mean) << ',' << format_sig(row.gamma_err_mean) << ','
        << format_sig(row.mspe_mean) << ',' << format_sig(row.fit_seconds_mean) << "\n";
  return out.str();
}

}  // namespace gsps
