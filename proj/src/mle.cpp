#include "gsps/mle.hpp"

#include <cmath>
#include <limits>

#include "gsps/model.hpp"
#include "gsps/parallel.hpp"
#include "gsps/rng.hpp"

namespace gsps {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double logdet_from_llt(const Eigen::LLT<Matrix>& llt) {
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < llt.matrixLLT().rows(); ++i)
    logdet += std::log(llt.matrixLLT()(i, i));
  return 2.0 * logdet;
}

}  // namespace

double neg_loglik(const SeparableModel& model, const Dataset& data) {
  model.correlation.validate();
  data.validate();
  model.correlation.check_dim(data.d());
  const int n = data.n();
  const int p = data.p();
  const int N = data.num_realizations();
  if (model.gamma.rows() != p) throw ValidationError("neg_loglik: gamma shape mismatch");

  const Matrix r = correlation_matrix(model.correlation, data.locations);
  Eigen::LLT<Matrix> llt_r(r);
  if (llt_r.info() != Eigen::Success) throw NumericalError("neg_loglik: R(theta) is singular");
  Eigen::LLT<Matrix> llt_g(model.gamma);
  if (llt_g.info() != Eigen::Success) throw NumericalError("neg_loglik: gamma is singular");

  double trace_sum = 0.0;
  for (const auto& y : data.realizations) {
    const Matrix r_inv_y = llt_r.solve(y);
    trace_sum += llt_g.solve(y.transpose() * r_inv_y).trace();
  }
  return 0.5 * N *
         (n * p * kLog2Pi + p * logdet_from_llt(llt_r) + n * logdet_from_llt(llt_g) +
          trace_sum / N);
}

Matrix profiled_gamma(const CorrelationModel& correlation, const Dataset& data) {
  correlation.validate();
  data.validate();
  correlation.check_dim(data.d());
  const Matrix r = correlation_matrix(correlation, data.locations);
  Eigen::LLT<Matrix> llt_r(r);
  if (llt_r.info() != Eigen::Success) throw NumericalError("profiled_gamma: R(theta) is singular");
  Matrix gamma = Matrix::Zero(data.p(), data.p());
  for (const auto& y : data.realizations) gamma += y.transpose() * llt_r.solve(y);
  gamma /= static_cast<double>(data.n()) * data.num_realizations();
  return 0.5 * (gamma + gamma.transpose());
}

double profiled_neg_loglik(const CorrelationModel& correlation, const Dataset& data) {
  correlation.validate();
  data.validate();
  correlation.check_dim(data.d());
  const int n = data.n();
  const int p = data.p();
  const int N = data.num_realizations();

  const Matrix r = correlation_matrix(correlation, data.locations);
  Eigen::LLT<Matrix> llt_r(r);
  if (llt_r.info() != Eigen::Success)
    return std::numeric_limits<double>::infinity();
  Matrix gamma = Matrix::Zero(p, p);
  for (const auto& y : data.realizations) gamma += y.transpose() * llt_r.solve(y);
  gamma /= static_cast<double>(n) * N;
  Eigen::LLT<Matrix> llt_g(0.5 * (gamma + gamma.transpose()));
  if (llt_g.info() != Eigen::Success)
    return std::numeric_limits<double>::infinity();

  return 0.5 * N *
         (n * p * kLog2Pi + p * logdet_from_llt(llt_r) + n * logdet_from_llt(llt_g) + n * p);
}

namespace {

// d/dtheta_k of the profiled objective: (N/2)[p tr(R^{-1} R'_k)
//   + n tr(Gamma(theta)^{-1} dGamma_k)], dGamma_k = -(1/(nN)) sum_r A_r^T R'_k A_r
// with A_r = R^{-1} Y_r.
Vector profiled_gradient(const CorrelationModel& correlation, const Dataset& data) {
  const int n = data.n();
  const int p = data.p();
  const int N = data.num_realizations();
  const int q = correlation.q();

  const Matrix r = correlation_matrix(correlation, data.locations);
  Eigen::LLT<Matrix> llt_r(r);
  if (llt_r.info() != Eigen::Success)
    return Vector::Constant(q, std::numeric_limits<double>::quiet_NaN());

  std::vector<Matrix> solved;
  solved.reserve(data.realizations.size());
  Matrix gamma = Matrix::Zero(p, p);
  for (const auto& y : data.realizations) {
    solved.push_back(llt_r.solve(y));
    gamma += y.transpose() * solved.back();
  }
  gamma /= static_cast<double>(n) * N;
  Eigen::LLT<Matrix> llt_g(0.5 * (gamma + gamma.transpose()));
  if (llt_g.info() != Eigen::Success)
    return Vector::Constant(q, std::numeric_limits<double>::quiet_NaN());

  const Matrix r_inv = llt_r.solve(Matrix::Identity(n, n));
  Vector grad(q);
  for (int k = 0; k < q; ++k) {
    const Matrix r_k = correlation_grad(correlation, data.locations, k);
    Matrix dgamma = Matrix::Zero(p, p);
    for (const auto& a : solved) dgamma -= a.transpose() * r_k * a;
    dgamma /= static_cast<double>(n) * N;
    grad[k] = 0.5 * N * (p * r_inv.cwiseProduct(r_k).sum() + n * llt_g.solve(dgamma).trace());
  }
  return grad;
}

}  // namespace

MleFit mle_fit(const Dataset& data, const MleConfig& config) {
  data.validate();
  if (config.starts < 1) throw ValidationError("mle_fit: starts must be >= 1");
  Box bounds = config.theta_bounds;
  if (bounds.empty()) bounds = default_theta_bounds(data.d());
  bounds.validate();
  const int q = bounds.dim();

  auto model_at = [&](const Vector& theta) {
    CorrelationModel correlation;
    correlation.family = config.family;
    correlation.theta = theta;
    correlation.bounds = bounds;
    return correlation;
  };
  auto objective = [&](const Vector& theta) { return profiled_neg_loglik(model_at(theta), data); };
  auto gradient = [&](const Vector& theta) { return profiled_gradient(model_at(theta), data); };

  std::vector<Vector> starts;
  starts.reserve(static_cast<std::size_t>(config.starts));
  for (int s = 0; s < config.starts; ++s) {
    Rng rng(derive_seed(config.seed, 0x6d6c65ULL, static_cast<std::uint64_t>(s)));
    Vector x(q);
    for (int k = 0; k < q; ++k) x[k] = rng.uniform(bounds.lower[k], bounds.upper[k]);
    starts.push_back(std::move(x));
  }

  MleFit fit;
  fit.starts.resize(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    const auto run = projected_quasi_newton(objective, gradient, bounds, starts[s], config.optim);
    StartResult& record = fit.starts[s];
    record.start = starts[s];
    record.theta = run.x;
    record.objective = run.value;
    record.converged = run.converged;
    record.line_search_failed = run.line_search_failed;
  });

  int best = -1;
  for (int s = 0; s < static_cast<int>(fit.starts.size()); ++s) {
    const auto& candidate = fit.starts[static_cast<std::size_t>(s)];
    if (!std::isfinite(candidate.objective)) continue;
    if (best < 0 || candidate.objective <
                        fit.starts[static_cast<std::size_t>(best)].objective)
      best = s;
  }
  fit.any_start_succeeded = best >= 0;
  if (best < 0) {
    fit.theta_hat = bounds.centroid();
    fit.gamma_hat = profiled_gamma(model_at(fit.theta_hat), data);
    fit.neg_loglik = std::numeric_limits<double>::infinity();
    fit.converged = false;
    return fit;
  }
  const auto& winner = fit.starts[static_cast<std::size_t>(best)];
  fit.theta_hat = winner.theta;
  fit.gamma_hat = profiled_gamma(model_at(fit.theta_hat), data);
  fit.neg_loglik = winner.objective;
  fit.converged = winner.converged;
  return fit;
}

}  // namespace gsps
