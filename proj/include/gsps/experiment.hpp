#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsps/gsps.hpp"
#include "gsps/mle.hpp"
#include "gsps/predict.hpp"

namespace gsps {

enum class Method { Gsps, Mle, Independent };

Method method_from_string(const std::string& name);
std::string to_string(Method method);

// Full pipeline with p = 1 on each response column; "mSPS" mode. The combined
// model carries p(d+1) fitted scalars against d + p(p+1)/2 for the joint fit.
struct IndependentFit {
  std::vector<GspsFit> per_response;
  int parameter_count = 0;
};

IndependentFit fit_independent(const Dataset& data, const GspsConfig& config,
                               const std::optional<BlockPartition>& partition = std::nullopt);

// One single-response predictor per column, each using its own theta.
class IndependentPredictor {
 public:
  IndependentPredictor(const IndependentFit& fit, const Dataset& training,
                       const std::optional<BlockPartition>& partition = std::nullopt,
                       BlockPredictionMode mode = BlockPredictionMode::NearestBlock,
                       const Box& theta_bounds = {});

  Vector predict_mean(const Location& x0) const;
  int d() const { return predictors_.front().d(); }
  int p() const { return static_cast<int>(predictors_.size()); }

 private:
  std::vector<Predictor> predictors_;
};

double mspe(const IndependentPredictor& predictor, const Dataset& test);

struct ExperimentCell {
  int d = 2;
  int n = 60;
  int p = 2;
  int N = 1;
};

struct ExperimentSpec {
  std::vector<ExperimentCell> cells;
  int replications = 10;
  std::vector<Method> methods = {Method::Gsps};
  int block_size = 0;  // locations per block; 0 means unblocked
  std::uint64_t seed = 0;
  int num_test_points = 200;
  double domain_width = 10.0;
  double theta_radius = 1.0;
  int gamma_w = 0;  // 0 means p + 3
  GspsConfig gsps;  // stage-1/2 knobs shared by gsps and independent fits
  int mle_starts = 10;

  void validate() const;
};

struct CellResult {
  ExperimentCell cell;
  Method method = Method::Gsps;
  int replications_done = 0;
  double theta_err_mean = 0.0;
  double gamma_err_mean = 0.0;
  double mspe_mean = 0.0;
  double fit_seconds_mean = 0.0;
  std::vector<std::string> failures;
};

struct ExperimentReport {
  std::vector<CellResult> rows;
};

// Per cell and replicate: draw (theta*, gamma*), simulate train plus test
// jointly, fit every method, record ||theta_hat - theta*||, the Frobenius
// gamma error, MSPE and fit wall time. Replicates run concurrently with
// per-replicate derived seeds; failures are recorded and skipped.
ExperimentReport run_experiment(const ExperimentSpec& spec);

struct CrossvalResult {
  Method method = Method::Gsps;
  double mspe_mean = 0.0;
  double mspe_stderr = 0.0;
  std::vector<double> fold_scores;
};

// Location-level K-fold cross validation: every realization of a location
// stays in the same fold.
std::vector<CrossvalResult> run_crossval(const Dataset& data, int folds,
                                         const std::vector<Method>& methods, int block_size,
                                         std::uint64_t seed, const GspsConfig& config = {},
                                         int mle_starts = 10);

nlohmann::json report_to_json(const ExperimentSpec& spec, const ExperimentReport& report);
std::string report_to_table(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);  // 6 significant digits

}  // namespace gsps
