#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsps/types.hpp"

namespace gsps::cli {

struct SimulateOptions {
  int n = 60;
  int d = 2;
  int p = 2;
  int num_realizations = 1;
  std::uint64_t seed = 0;
  double domain_width = 10.0;
  std::string family = "anisotropic_exponential";
  std::vector<double> theta;  // empty: drawn from the hypersphere
  std::vector<double> gamma;  // empty: drawn as A^T A; else row-major p x p
  double theta_radius = 1.0;
  int gamma_w = 0;  // 0 means p + 3
  std::string out;
  std::string sidecar;  // default: out + ".json"
};

struct FitOptions {
  std::string data;
  std::string method = "gsps";
  int blocks = 1;
  double alpha = -1.0;
  double alpha_c = 1e-2;
  double a_star = -1.0;
  double b_star = -1.0;
  int multistart = 10;
  std::uint64_t seed = 0;
  std::string family = "anisotropic_exponential";
  double theta_lo = 1e-4;
  double theta_hi = 1e2;
  bool isotropic = false;
  bool stage1_only = false;
  std::string out;
  std::string dump_matrix;  // optional dense dump of the stage-1 precision estimate
};

struct PredictOptions {
  std::string model;
  std::string train;
  std::string query;
  std::string out;
  bool with_cov = false;
  bool blend = false;  // inverse-distance blending across blocks
};

struct ExperimentOptions {
  std::vector<int> d_values = {2};
  std::vector<int> n_values = {60};
  std::vector<int> p_values = {2};
  std::vector<int> N_values = {1, 10, 40};
  int replications = 10;
  std::vector<std::string> methods = {"gsps"};
  int block_size = 0;
  std::uint64_t seed = 0;
  int test_points = 200;
  double domain_width = 10.0;
  double theta_lo = 1e-4;
  double theta_hi = 1e2;
  int multistart = 10;
  std::string out;  // prefix: writes <out>.json, <out>.csv, <out>.txt
};

struct CrossvalOptions {
  std::string data;
  int folds = 10;
  std::vector<std::string> methods = {"gsps"};
  int block_size = 0;
  std::uint64_t seed = 0;
  double theta_lo = 1e-4;
  double theta_hi = 1e2;
  int multistart = 10;
  std::string out;  // optional JSON path
};

int run_simulate(const SimulateOptions& options);
int run_fit(const FitOptions& options);
int run_predict(const PredictOptions& options);
int run_experiment_cmd(const ExperimentOptions& options);
int run_crossval_cmd(const CrossvalOptions& options);

// 0 success, 1 validation error, 2 numerical failure
int dispatch(int argc, const char* const* argv);

}  // namespace gsps::cli
