#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsps/model.hpp"
#include "gsps/optim.hpp"
#include "gsps/stage1.hpp"

namespace gsps {

struct GammaEstimate {
  Matrix gamma_hat;  // p x p, symmetrized average of the diagonal p-blocks
};

// (1/n) sum_i C^{ii}, then (G + G^T)/2.
GammaEstimate estimate_gamma(const Matrix& c_hat, int n, int p);

// Uniform random split of {0..n-1} into K nearly equal blocks. Indices are
// kept ascending within each block so K = 1 reproduces the natural ordering.
struct BlockPartition {
  int num_blocks = 1;
  std::vector<int> assignment;  // location index -> block id
  std::uint64_t seed = 0;

  std::vector<std::vector<int>> blocks() const;
  void validate(int n) const;
};

BlockPartition partition_random(int n, int k, std::uint64_t seed);

struct Stage2Block {
  std::vector<Location> locations;  // n_b
  Matrix c_hat;                     // (n_b p) x (n_b p)
};

struct Stage2Problem {
  Matrix gamma_hat;
  std::vector<Stage2Block> blocks;
  Family family = Family::AnisotropicExponential;
  Box theta_bounds;
  int multistart = 10;
  std::uint64_t seed = 0;
};

// f(theta) = 1/2 sum_b ||R_b(theta) (x) Gamma - C_b||_F^2 with all terms
// reduced block-wise to n_b x n_b arrays; the np x np Kronecker product is
// never formed. Construction precomputes <Gamma, C^{ij}> per pair, so each
// evaluation is O(sum_b n_b^2 q).
class Stage2Objective {
 public:
  Stage2Objective(Family family, const Matrix& gamma_hat, const std::vector<Stage2Block>& blocks,
                  const Box& theta_bounds);

  double value(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
  Matrix hessian(const Vector& theta) const;
  int q() const { return q_; }

 private:
  struct BlockData {
    std::vector<Matrix> sq_diff;  // q matrices of squared coordinate differences
    Matrix gamma_dot_c;           // (i, j) -> <Gamma, C^{ij}>
    double c_norm2 = 0.0;         // sum_ij ||C^{ij}||_F^2
  };

  Matrix correlation_of(const BlockData& block, const Vector& theta) const;
  void check_theta(const Vector& theta) const;

  int q_ = 0;
  double gamma_norm2_ = 0.0;
  Box bounds_;
  std::vector<BlockData> blocks_;
};

double stage2_objective(const Vector& theta, const Stage2Problem& problem);
Vector stage2_gradient(const Vector& theta, const Stage2Problem& problem);
Matrix stage2_hessian(const Vector& theta, const Stage2Problem& problem);

struct StartResult {
  Vector start;
  Vector theta;
  double objective = 0.0;
  bool converged = false;
  bool line_search_failed = false;
};

struct ThetaFit {
  Vector theta_hat;
  double objective = 0.0;
  bool converged = false;
  bool any_start_succeeded = true;
  std::vector<StartResult> starts;
};

// q = 1: golden-section search on the bound interval (bracket width 1e-8).
// q > 1: projected quasi-Newton from `multistart` uniform draws in the bounds
// plus the centroid; best objective wins, ties broken by smaller ||theta||.
ThetaFit fit_theta(const Stage2Problem& problem);

struct Stage1Diagnostics {
  int block = 0;
  int block_size = 0;
  double alpha = 0.0;
  double a_star = 0.0;
  double b_star = 0.0;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  double offdiag_zero_fraction = 0.0;
  double seconds = 0.0;
};

struct GspsConfig {
  Family family = Family::AnisotropicExponential;
  Box theta_bounds;                    // empty: default_theta_bounds(q)
  double alpha = -1.0;                 // negative: default_alpha(n_block, p, N, alpha_c)
  double alpha_c = 1e-2;
  double a_star = -1.0;                // negative: default_spectral_box per block
  double b_star = -1.0;
  SolverConfig admm;
  int multistart = 10;
  std::uint64_t seed = 0;
  bool size_weighted_pooling = false;  // blocks are near-equal size; unweighted by default
};

struct Stage1BlockResult {
  std::vector<int> indices;          // ascending location indices of this block
  std::vector<Location> locations;
  PrecisionEstimate estimate;
  double alpha = 0.0;
  double a_star = 0.0;
  double b_star = 0.0;
  double seconds = 0.0;
};

// Per-block sample covariance, distance weights and ADMM solve. Blocks run
// concurrently; each is deterministic on its own.
std::vector<Stage1BlockResult> run_stage1(const Dataset& data, const GspsConfig& config,
                                          const BlockPartition& partition);

struct GspsFit {
  Vector theta_hat;
  Matrix gamma_hat;
  double stage2_objective = 0.0;
  bool stage2_converged = false;
  std::vector<Stage1Diagnostics> stage1;
  std::vector<StartResult> multistart;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;
};

// Full two-stage pipeline: S, G, ADMM, inverse, Gamma-average, theta fit.
// Without a partition the data is treated as a single block; with one, the
// per-block inverses share a pooled Gamma and stage two minimizes the sum of
// per-block objectives.
GspsFit gsps_fit(const Dataset& data, const GspsConfig& config,
                 const std::optional<BlockPartition>& partition = std::nullopt);

}  // namespace gsps
