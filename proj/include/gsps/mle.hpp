#pragma once

#include <cstdint>

#include "gsps/gsps.hpp"
#include "gsps/types.hpp"

namespace gsps {

// Exact matrix-normal negative log-likelihood:
//   (N/2) [ np ln 2pi + p logdet R + n logdet Gamma
//           + (1/N) sum_r tr(Gamma^{-1} Y_r^T R^{-1} Y_r) ],
// evaluated through n x n and p x p factorizations only.
double neg_loglik(const SeparableModel& model, const Dataset& data);

// Optimal Gamma response for a fixed theta: (1/(nN)) sum_r Y_r^T R^{-1} Y_r.
Matrix profiled_gamma(const CorrelationModel& correlation, const Dataset& data);

// neg_loglik with profiled_gamma plugged in; the trace term collapses to np.
double profiled_neg_loglik(const CorrelationModel& correlation, const Dataset& data);

struct MleConfig {
  Family family = Family::AnisotropicExponential;
  Box theta_bounds;  // empty: default_theta_bounds(d)
  int starts = 10;
  std::uint64_t seed = 0;
  OptimOptions optim;
};

struct MleFit {
  Vector theta_hat;
  Matrix gamma_hat;
  double neg_loglik = 0.0;
  bool converged = false;
  bool any_start_succeeded = true;
  std::vector<StartResult> starts;
};

// Profile likelihood over theta via projected quasi-Newton from `starts`
// uniform random initial points; best final value wins.
MleFit mle_fit(const Dataset& data, const MleConfig& config);

}  // namespace gsps
