#pragma once

#include <vector>

#include "gsps/types.hpp"

namespace gsps {

// S = (1/N) sum_r y_r y_r^T over location-major stacked realizations.
Matrix sample_covariance(const Dataset& data);

// Location-major stacking: [row_1(Y), ..., row_n(Y)] as one np-vector.
Vector stack_rows(const Matrix& y);

// W = G (x) ones_p ones_p^T.
Matrix penalty_weights(const WeightMatrix& g, int p);

// min <S,P> - logdet P + alpha <W, |P|>  s.t.  a* I <= P <= b* I
struct Stage1Problem {
  Matrix S;
  Matrix W;
  double alpha = 0.0;
  double a_star = 0.0;
  double b_star = 0.0;

  void validate() const;
};

struct SolverConfig {
  double admm_penalty = 1.0;
  double primal_tol = 1e-6;
  double dual_tol = 1e-6;
  int max_iter = 5000;
  bool adaptive_penalty = true;  // residual balancing, factor 2, ratio threshold 10

  void validate() const;
};

struct PrecisionEstimate {
  Matrix p_hat;  // symmetric, eigenvalues in [a*, b*]
  Matrix c_hat;  // inverse of p_hat
  int iterations = 0;
  bool converged = false;
  bool objective_monotone = true;  // no monitored objective increase beyond 1e-10 slack
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  std::vector<double> primal_trace;
  std::vector<double> dual_trace;
  std::vector<double> objective_trace;  // accepted (non-increasing) objective values
};

// argmin <S,P> - logdet P + (rho/2) ||P - A||_F^2  s.t.  a* I <= P <= b* I,
// solved per eigenvalue of rho A - S.
Matrix prox_logdet_box(const Matrix& a, const Matrix& s, double rho, double a_star, double b_star);

// Entrywise sign(z) max(|z| - tau w, 0); the diagonal is shrunk too.
Matrix soft_threshold_weighted(const Matrix& z, const Matrix& w, double tau);

double stage1_objective(const Matrix& p, const Matrix& s, const Matrix& w, double alpha);

PrecisionEstimate admm_solve(const Stage1Problem& problem, const SolverConfig& config = {});

// alpha = c sqrt(log(np) / N)
double default_alpha(int n, int p, int N, double c = 1e-2);

// Range of alpha for which the stage-1 error bounds hold with probability at
// least 1 - (np)^-M, given max_i gamma_ii: [40 g sqrt(N0/N), 40 g] with
// N0 = ceil(2[(M+2) ln(np) + ln 4]).
struct AlphaWindow {
  double lower = 0.0;
  double upper = 0.0;
  int n0 = 0;
};
AlphaWindow alpha_window(int n, int p, int N, double max_gamma_diag, double M);

// Wide spectral bounds used when the true precision spectrum is unknown, so
// the box constraint stays inactive.
struct SpectralBox {
  double a_star = 0.0;
  double b_star = 0.0;
};
SpectralBox default_spectral_box(const Matrix& s);

}  // namespace gsps
