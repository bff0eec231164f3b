#include "gsps/gsps.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gsps/parallel.hpp"
#include "gsps/rng.hpp"

namespace gsps {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

GammaEstimate estimate_gamma(const Matrix& c_hat, int n, int p) {
  if (n < 1 || p < 1) throw ValidationError("estimate_gamma: n and p must be >= 1");
  if (c_hat.rows() != static_cast<Eigen::Index>(n) * p || c_hat.rows() != c_hat.cols())
    throw ValidationError("estimate_gamma: c_hat must be (np) x (np)");
  Matrix gamma = Matrix::Zero(p, p);
  for (int i = 0; i < n; ++i) gamma += c_hat.block(i * p, i * p, p, p);
  gamma /= static_cast<double>(n);
  gamma = 0.5 * (gamma + gamma.transpose());
  return GammaEstimate{std::move(gamma)};
}

std::vector<std::vector<int>> BlockPartition::blocks() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_blocks));
  for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
    out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])].push_back(i);
  return out;  // ascending within each block by construction
}

void BlockPartition::validate(int n) const {
  if (num_blocks < 1) throw ValidationError("BlockPartition: needs at least one block");
  if (static_cast<int>(assignment.size()) != n)
    throw ValidationError("BlockPartition: assignment size must equal n");
  std::vector<int> sizes(static_cast<std::size_t>(num_blocks), 0);
  for (int id : assignment) {
    if (id < 0 || id >= num_blocks) throw ValidationError("BlockPartition: block id out of range");
    ++sizes[static_cast<std::size_t>(id)];
  }
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (*lo == 0) throw ValidationError("BlockPartition: empty block");
  if (*hi - *lo > 1) throw ValidationError("BlockPartition: block sizes must differ by at most 1");
}

BlockPartition partition_random(int n, int k, std::uint64_t seed) {
  if (n < 1) throw ValidationError("partition_random: n must be >= 1");
  if (k < 1 || k > n) throw ValidationError("partition_random: need 1 <= K <= n");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x706172746974ULL));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.uniform_int(i + 1))]);

  BlockPartition partition;
  partition.num_blocks = k;
  partition.seed = seed;
  partition.assignment.assign(static_cast<std::size_t>(n), -1);
  // first (n mod K) blocks take the extra element
  const int base = n / k;
  const int extra = n % k;
  int pos = 0;
  for (int b = 0; b < k; ++b) {
    const int size = base + (b < extra ? 1 : 0);
    for (int j = 0; j < size; ++j)
      partition.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = b;
  }
  return partition;
}

Stage2Objective::Stage2Objective(Family family, const Matrix& gamma_hat,
                                 const std::vector<Stage2Block>& blocks, const Box& theta_bounds)
    : bounds_(theta_bounds) {
  if (family != Family::AnisotropicExponential)
    throw ValidationError("Stage2Objective: unknown family");
  if (blocks.empty()) throw ValidationError("Stage2Objective: needs at least one block");
  if (gamma_hat.rows() < 1 || gamma_hat.rows() != gamma_hat.cols())
    throw ValidationError("Stage2Objective: gamma_hat must be square");
  bounds_.validate();
  q_ = bounds_.dim();
  gamma_norm2_ = gamma_hat.squaredNorm();
  const int p = static_cast<int>(gamma_hat.rows());

  blocks_.reserve(blocks.size());
  for (const auto& block : blocks) {
    const int nb = static_cast<int>(block.locations.size());
    if (nb < 1) throw ValidationError("Stage2Objective: empty block");
    const int d = block.locations.front().dim();
    if (q_ != d && q_ != 1)
      throw ValidationError("Stage2Objective: bounds dimension must be d or 1");
    if (block.c_hat.rows() != static_cast<Eigen::Index>(nb) * p ||
        block.c_hat.rows() != block.c_hat.cols())
      throw ValidationError("Stage2Objective: c_hat block shape mismatch");

    BlockData data;
    data.sq_diff.resize(static_cast<std::size_t>(q_));
    for (int k = 0; k < q_; ++k) data.sq_diff[static_cast<std::size_t>(k)].setZero(nb, nb);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) {
        const Vector diff = block.locations[static_cast<std::size_t>(i)].coords -
                            block.locations[static_cast<std::size_t>(j)].coords;
        if (q_ == 1) {
          data.sq_diff[0](i, j) = diff.squaredNorm();
        } else {
          for (int k = 0; k < q_; ++k) data.sq_diff[static_cast<std::size_t>(k)](i, j) = diff[k] * diff[k];
        }
      }

    data.gamma_dot_c.setZero(nb, nb);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        data.gamma_dot_c(i, j) =
            gamma_hat.cwiseProduct(block.c_hat.block(i * p, j * p, p, p)).sum();
    data.c_norm2 = block.c_hat.squaredNorm();
    blocks_.push_back(std::move(data));
  }
}

Matrix Stage2Objective::correlation_of(const BlockData& block, const Vector& theta) const {
  Matrix exponent = theta[0] * block.sq_diff[0];
  for (int k = 1; k < q_; ++k) exponent += theta[k] * block.sq_diff[static_cast<std::size_t>(k)];
  return (-exponent).array().exp();
}

void Stage2Objective::check_theta(const Vector& theta) const {
  if (theta.size() != q_) throw ValidationError("Stage2Objective: theta dimension mismatch");
  if (!bounds_.contains(theta)) throw ValidationError("Stage2Objective: theta outside bounds");
}

double Stage2Objective::value(const Vector& theta) const {
  check_theta(theta);
  double total = 0.0;
  for (const auto& block : blocks_) {
    const Matrix r = correlation_of(block, theta);
    total += 0.5 * (gamma_norm2_ * r.squaredNorm() - 2.0 * r.cwiseProduct(block.gamma_dot_c).sum() +
                    block.c_norm2);
  }
  return total;
}

Vector Stage2Objective::gradient(const Vector& theta) const {
  check_theta(theta);
  Vector grad = Vector::Zero(q_);
  for (const auto& block : blocks_) {
    const Matrix r = correlation_of(block, theta);
    const Matrix residual_weight = gamma_norm2_ * r - block.gamma_dot_c;
    for (int k = 0; k < q_; ++k) {
      const Matrix r_k = -block.sq_diff[static_cast<std::size_t>(k)].cwiseProduct(r);
      grad[k] += r_k.cwiseProduct(residual_weight).sum();
    }
  }
  return grad;
}

Matrix Stage2Objective::hessian(const Vector& theta) const {
  check_theta(theta);
  Matrix hess = Matrix::Zero(q_, q_);
  for (const auto& block : blocks_) {
    const Matrix r = correlation_of(block, theta);
    const Matrix residual_weight = gamma_norm2_ * r - block.gamma_dot_c;
    for (int k = 0; k < q_; ++k) {
      const Matrix r_k = -block.sq_diff[static_cast<std::size_t>(k)].cwiseProduct(r);
      for (int l = k; l < q_; ++l) {
        const Matrix r_l = -block.sq_diff[static_cast<std::size_t>(l)].cwiseProduct(r);
        const Matrix r_kl = block.sq_diff[static_cast<std::size_t>(k)]
                                .cwiseProduct(block.sq_diff[static_cast<std::size_t>(l)])
                                .cwiseProduct(r);
        const double value = gamma_norm2_ * r_k.cwiseProduct(r_l).sum() +
                             r_kl.cwiseProduct(residual_weight).sum();
        hess(k, l) += value;
        if (l != k) hess(l, k) += value;
      }
    }
  }
  return hess;
}

double stage2_objective(const Vector& theta, const Stage2Problem& problem) {
  return Stage2Objective(problem.family, problem.gamma_hat, problem.blocks, problem.theta_bounds)
      .value(theta);
}

Vector stage2_gradient(const Vector& theta, const Stage2Problem& problem) {
  return Stage2Objective(problem.family, problem.gamma_hat, problem.blocks, problem.theta_bounds)
      .gradient(theta);
}

Matrix stage2_hessian(const Vector& theta, const Stage2Problem& problem) {
  return Stage2Objective(problem.family, problem.gamma_hat, problem.blocks, problem.theta_bounds)
      .hessian(theta);
}

ThetaFit fit_theta(const Stage2Problem& problem) {
  Box bounds = problem.theta_bounds;
  if (bounds.empty()) {
    const int d = problem.blocks.empty() || problem.blocks.front().locations.empty()
                      ? 1
                      : problem.blocks.front().locations.front().dim();
    bounds = default_theta_bounds(d);
  }
  bounds.validate();
  const Stage2Objective objective(problem.family, problem.gamma_hat, problem.blocks, bounds);
  const int q = objective.q();

  ThetaFit fit;
  if (q == 1) {
    const auto golden = golden_section(
        [&](double t) { return objective.value(Vector::Constant(1, t)); }, bounds.lower[0],
        bounds.upper[0], 1e-8);
    fit.theta_hat = Vector::Constant(1, golden.x);
    fit.objective = golden.value;
    fit.converged = true;
    StartResult start;
    start.start = bounds.centroid();
    start.theta = fit.theta_hat;
    start.objective = golden.value;
    start.converged = true;
    fit.starts.push_back(std::move(start));
    return fit;
  }

  if (problem.multistart < 0) throw ValidationError("fit_theta: multistart must be >= 0");
  std::vector<Vector> starts;
  starts.reserve(static_cast<std::size_t>(problem.multistart) + 1);
  for (int s = 0; s < problem.multistart; ++s) {
    Rng rng(derive_seed(problem.seed, 0x737461727473ULL, static_cast<std::uint64_t>(s)));
    Vector x(q);
    for (int k = 0; k < q; ++k) x[k] = rng.uniform(bounds.lower[k], bounds.upper[k]);
    starts.push_back(std::move(x));
  }
  starts.push_back(bounds.centroid());

  OptimOptions options;
  options.max_iter = 500;
  options.grad_tol = 1e-8;

  fit.starts.resize(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    const auto run = projected_quasi_newton(
        [&](const Vector& x) { return objective.value(x); },
        [&](const Vector& x) { return objective.gradient(x); }, bounds, starts[s], options);
    StartResult& record = fit.starts[s];
    record.start = starts[s];
    record.theta = run.x;
    record.objective = run.value;
    record.converged = run.converged;
    record.line_search_failed = run.line_search_failed;
  });

  // deterministic reduction in start order: objective, then smaller norm
  int best = -1;
  for (int s = 0; s < static_cast<int>(fit.starts.size()); ++s) {
    const auto& candidate = fit.starts[static_cast<std::size_t>(s)];
    if (!std::isfinite(candidate.objective)) continue;
    if (best < 0) {
      best = s;
      continue;
    }
    const auto& incumbent = fit.starts[static_cast<std::size_t>(best)];
    const double tie = 1e-12 * std::max(1.0, std::abs(incumbent.objective));
    if (candidate.objective < incumbent.objective - tie ||
        (std::abs(candidate.objective - incumbent.objective) <= tie &&
         candidate.theta.norm() < incumbent.theta.norm()))
      best = s;
  }
  fit.any_start_succeeded = best >= 0;
  if (best < 0) {  // every start failed at its initial point; report the centroid
    fit.theta_hat = bounds.centroid();
    fit.objective = std::numeric_limits<double>::infinity();
    fit.converged = false;
    return fit;
  }
  const auto& winner = fit.starts[static_cast<std::size_t>(best)];
  fit.theta_hat = winner.theta;
  fit.objective = winner.objective;
  fit.converged = winner.converged;
  return fit;
}

std::vector<Stage1BlockResult> run_stage1(const Dataset& data, const GspsConfig& config,
                                          const BlockPartition& partition) {
  data.validate();
  partition.validate(data.n());
  const int p = data.p();
  const int N = data.num_realizations();

  const auto blocks = partition.blocks();
  for (const auto& block : blocks)
    if (block.size() < 2)
      throw ValidationError("run_stage1: every block needs at least 2 locations");

  std::vector<Stage1BlockResult> results(blocks.size());
  parallel_for(blocks.size(), [&](std::size_t b) {
    try {
      const auto start_time = std::chrono::steady_clock::now();
      Stage1BlockResult& result = results[b];
      result.indices = blocks[b];
      const Dataset sub = data.restrict(blocks[b]);
      result.locations = sub.locations;

      Stage1Problem problem;
      problem.S = sample_covariance(sub);
      problem.W = penalty_weights(distance_matrix(sub.locations), p);
      problem.alpha =
          config.alpha >= 0.0 ? config.alpha : default_alpha(sub.n(), p, N, config.alpha_c);
      if (config.a_star > 0.0 && config.b_star > 0.0) {
        problem.a_star = config.a_star;
        problem.b_star = config.b_star;
      } else {
        const SpectralBox box = default_spectral_box(problem.S);
        problem.a_star = config.a_star > 0.0 ? config.a_star : box.a_star;
        problem.b_star = config.b_star > 0.0 ? config.b_star : box.b_star;
      }
      result.alpha = problem.alpha;
      result.a_star = problem.a_star;
      result.b_star = problem.b_star;
      result.estimate = admm_solve(problem, config.admm);
      result.seconds = seconds_since(start_time);
    } catch (const NumericalError& e) {
      throw NumericalError("stage 1 block " + std::to_string(b) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("stage 1 block " + std::to_string(b) + ": " + e.what());
    }
  });
  return results;
}

namespace {

double offdiag_zero_fraction(const Matrix& p_hat) {
  const Eigen::Index dim = p_hat.rows();
  if (dim < 2) return 0.0;
  Eigen::Index zeros = 0;
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i)
      if (i != j && p_hat(i, j) == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(dim * (dim - 1));
}

}  // namespace

GspsFit gsps_fit(const Dataset& data, const GspsConfig& config,
                 const std::optional<BlockPartition>& partition) {
  data.validate();
  if (data.n() < 2) throw ValidationError("gsps_fit: needs at least 2 locations");
  const int p = data.p();
  const BlockPartition blocks_spec =
      partition ? *partition : partition_random(data.n(), 1, config.seed);

  const auto stage1_start = std::chrono::steady_clock::now();
  const auto stage1 = run_stage1(data, config, blocks_spec);

  GspsFit fit;
  fit.stage1_seconds = seconds_since(stage1_start);

  // pooled Gamma: average of per-block estimates (optionally size-weighted)
  Matrix gamma = Matrix::Zero(p, p);
  double total_weight = 0.0;
  for (const auto& block : stage1) {
    const int nb = static_cast<int>(block.locations.size());
    const double weight = config.size_weighted_pooling ? static_cast<double>(nb) : 1.0;
    gamma += weight * estimate_gamma(block.estimate.c_hat, nb, p).gamma_hat;
    total_weight += weight;
  }
  fit.gamma_hat = gamma / total_weight;

  fit.stage1.reserve(stage1.size());
  for (int b = 0; b < static_cast<int>(stage1.size()); ++b) {
    const auto& block = stage1[static_cast<std::size_t>(b)];
    Stage1Diagnostics diag;
    diag.block = b;
    diag.block_size = static_cast<int>(block.locations.size());
    diag.alpha = block.alpha;
    diag.a_star = block.a_star;
    diag.b_star = block.b_star;
    diag.iterations = block.estimate.iterations;
    diag.converged = block.estimate.converged;
    diag.primal_residual = block.estimate.primal_residual;
    diag.dual_residual = block.estimate.dual_residual;
    diag.objective = block.estimate.objective;
    diag.offdiag_zero_fraction = offdiag_zero_fraction(block.estimate.p_hat);
    diag.seconds = block.seconds;
    fit.stage1.push_back(std::move(diag));
  }

  const auto stage2_start = std::chrono::steady_clock::now();
  Stage2Problem stage2;
  stage2.gamma_hat = fit.gamma_hat;
  stage2.family = config.family;
  stage2.theta_bounds = config.theta_bounds;
  if (stage2.theta_bounds.empty()) stage2.theta_bounds = default_theta_bounds(data.d());
  stage2.multistart = config.multistart;
  stage2.seed = config.seed;
  stage2.blocks.reserve(stage1.size());
  for (const auto& block : stage1)
    stage2.blocks.push_back(Stage2Block{block.locations, block.estimate.c_hat});

  const ThetaFit theta = fit_theta(stage2);
  fit.stage2_seconds = seconds_since(stage2_start);
  fit.theta_hat = theta.theta_hat;
  fit.stage2_objective = theta.objective;
  fit.stage2_converged = theta.converged && theta.any_start_succeeded;
  fit.multistart = theta.starts;
  return fit;
}

}  // namespace gsps
