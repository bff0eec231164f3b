#include "gsps/stage1.hpp"

#include <algorithm>
#include <cmath>

namespace gsps {

Vector stack_rows(const Matrix& y) {
  Vector out(y.rows() * y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) out.segment(i * y.cols(), y.cols()) = y.row(i);
  return out;
}

Matrix sample_covariance(const Dataset& data) {
  data.validate();
  const Eigen::Index np = static_cast<Eigen::Index>(data.n()) * data.p();
  Matrix s = Matrix::Zero(np, np);
  for (const auto& y : data.realizations) {
    const Vector v = stack_rows(y);
    s.selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  s = Matrix(s.selfadjointView<Eigen::Lower>());
  return s / static_cast<double>(data.num_realizations());
}

Matrix penalty_weights(const WeightMatrix& g, int p) {
  if (p < 1) throw ValidationError("penalty_weights: p must be >= 1");
  const Eigen::Index n = g.g.rows();
  Matrix w(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) w.block(i * p, j * p, p, p).setConstant(g.g(i, j));
  return w;
}

void Stage1Problem::validate() const {
  if (S.rows() < 1 || S.rows() != S.cols()) throw ValidationError("Stage1Problem: S must be square");
  require_finite(S, "Stage1Problem S");
  if (!is_symmetric(S, 1e-10)) throw ValidationError("Stage1Problem: S must be symmetric");
  if (W.rows() != S.rows() || W.cols() != S.cols())
    throw ValidationError("Stage1Problem: W shape must match S");
  require_finite(W, "Stage1Problem W");
  if (!is_symmetric(W, 1e-10)) throw ValidationError("Stage1Problem: W must be symmetric");
  if (W.minCoeff() < 0.0) throw ValidationError("Stage1Problem: W must be entrywise nonnegative");
  if (alpha < 0.0) throw ValidationError("Stage1Problem: alpha must be >= 0");
  if (!(a_star > 0.0) || !(b_star >= a_star) || !std::isfinite(b_star))
    throw ValidationError("Stage1Problem: need 0 < a* <= b* < inf");
}

void SolverConfig::validate() const {
  if (admm_penalty <= 0.0) throw ValidationError("SolverConfig: admm_penalty must be positive");
  if (primal_tol <= 0.0 || dual_tol <= 0.0)
    throw ValidationError("SolverConfig: tolerances must be positive");
  if (max_iter < 1) throw ValidationError("SolverConfig: max_iter must be >= 1");
}

Matrix prox_logdet_box(const Matrix& a, const Matrix& s, double rho, double a_star,
                       double b_star) {
  if (rho <= 0.0) throw ValidationError("prox_logdet_box: rho must be positive");
  const Matrix m = rho * a - s;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success)
    throw NumericalError("prox_logdet_box: eigendecomposition failed");
  Vector lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double root = (lambda[i] + std::sqrt(lambda[i] * lambda[i] + 4.0 * rho)) / (2.0 * rho);
    lambda[i] = std::clamp(root, a_star, b_star);
  }
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix soft_threshold_weighted(const Matrix& z, const Matrix& w, double tau) {
  if (tau < 0.0) throw ValidationError("soft_threshold_weighted: tau must be >= 0");
  if (w.rows() != z.rows() || w.cols() != z.cols())
    throw ValidationError("soft_threshold_weighted: shape mismatch");
  if (tau == 0.0) return z;
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double mag = std::abs(z(i, j)) - tau * w(i, j);
      out(i, j) = mag > 0.0 ? (z(i, j) > 0.0 ? mag : -mag) : 0.0;
    }
  return out;
}

double stage1_objective(const Matrix& p, const Matrix& s, const Matrix& w, double alpha) {
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;
  return s.cwiseProduct(p).sum() - logdet + alpha * w.cwiseProduct(p.cwiseAbs()).sum();
}

namespace {

// logdet from the eigenvalues the prox step already produced.
double objective_from_eigs(const Matrix& p, const Vector& lambda, const Matrix& s, const Matrix& w,
                           double alpha) {
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) logdet += std::log(lambda[i]);
  return s.cwiseProduct(p).sum() - logdet + alpha * w.cwiseProduct(p.cwiseAbs()).sum();
}

}  // namespace

PrecisionEstimate admm_solve(const Stage1Problem& problem, const SolverConfig& config) {
  problem.validate();
  config.validate();

  const Eigen::Index dim = problem.S.rows();
  double rho = config.admm_penalty;

  // warm start at the diagonal stationary point 1/(S_ii + alpha W_ii)
  Matrix z = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double denom = problem.S(i, i) + problem.alpha * problem.W(i, i);
    z(i, i) = std::clamp(denom > 0.0 ? 1.0 / denom : 1.0, problem.a_star, problem.b_star);
  }
  Matrix u = Matrix::Zero(dim, dim);
  Matrix p;

  PrecisionEstimate result;
  result.objective_trace.reserve(64);
  double best_objective = std::numeric_limits<double>::infinity();
  double primal_res = 0.0;
  double dual_res = 0.0;
  double primal_tol = config.primal_tol;
  double dual_tol = config.dual_tol;
  int tighten_budget = 3;
  int iter = 0;

  for (iter = 1; iter <= config.max_iter; ++iter) {
    // P-step: smooth term plus spectral box
    const Matrix m = rho * (z - u) - problem.S;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success)
      throw NumericalError("admm_solve: eigendecomposition failed");
    Vector lambda = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double root = (lambda[i] + std::sqrt(lambda[i] * lambda[i] + 4.0 * rho)) / (2.0 * rho);
      lambda[i] = std::clamp(root, problem.a_star, problem.b_star);
    }
    p = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    p = 0.5 * (p + p.transpose());
    if (!p.allFinite()) throw NumericalError("admm_solve: non-finite iterate");

    // Z-step: weighted l1 prox
    const Matrix z_prev = std::move(z);
    z = soft_threshold_weighted(p + u, problem.W, problem.alpha / rho);

    // scaled dual update
    u += p - z;

    primal_res = (p - z).norm();
    dual_res = rho * (z - z_prev).norm();
    result.primal_trace.push_back(primal_res);
    result.dual_trace.push_back(dual_res);

    const double objective = objective_from_eigs(p, lambda, problem.S, problem.W, problem.alpha);
    if (!std::isfinite(objective)) throw NumericalError("admm_solve: non-finite objective");
    if (objective <= best_objective + 1e-10 * (1.0 + std::abs(best_objective))) {
      best_objective = std::min(best_objective, objective);
      result.objective_trace.push_back(objective);
    } else {
      result.objective_monotone = false;
    }

    const double primal_eps = primal_tol * (1.0 + std::max(p.norm(), z.norm()));
    const double dual_eps = dual_tol * (1.0 + rho * u.norm());
    if (primal_res <= primal_eps && dual_res <= dual_eps) {
      // Z carries the reported estimate; if its spectrum has fallen well
      // below a*, clipping would hand the inverse a spurious 1/a* mode, so
      // keep iterating at a tighter tolerance instead of returning garbage.
      Eigen::SelfAdjointEigenSolver<Matrix> spectrum(0.5 * (z + z.transpose()),
                                                     Eigen::EigenvaluesOnly);
      if (spectrum.eigenvalues().minCoeff() >= 0.5 * problem.a_star || tighten_budget == 0) {
        result.converged = true;
        break;
      }
      --tighten_budget;
      primal_tol *= 0.1;
      dual_tol *= 0.1;
    }

    // residual balancing on the tolerance-normalized residuals
    if (config.adaptive_penalty) {
      const double primal_rel = primal_res / primal_eps;
      const double dual_rel = dual_res / dual_eps;
      if (primal_rel > 10.0 * dual_rel) {
        rho *= 2.0;
        u *= 0.5;
      } else if (dual_rel > 10.0 * primal_rel) {
        rho *= 0.5;
        u *= 2.0;
      }
    }
  }
  result.iterations = std::min(iter, config.max_iter);
  result.primal_residual = primal_res;
  result.dual_residual = dual_res;

  // Report the l1-prox iterate: exactly sparse, symmetrized, spectrum forced
  // into the box. Reconstruction only happens when the box is active so that
  // hard zeros survive in the common wide-box case.
  Matrix p_hat = 0.5 * (z + z.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p_hat);
  if (eig.info() != Eigen::Success) throw NumericalError("admm_solve: final eigendecomposition failed");
  Vector lambda = eig.eigenvalues();
  const bool clip_needed =
      lambda.minCoeff() < problem.a_star || lambda.maxCoeff() > problem.b_star;
  if (clip_needed) {
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
      lambda[i] = std::clamp(lambda[i], problem.a_star, problem.b_star);
    p_hat = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    p_hat = 0.5 * (p_hat + p_hat.transpose());
  }
  Matrix c_hat =
      eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  c_hat = 0.5 * (c_hat + c_hat.transpose());

  result.p_hat = std::move(p_hat);
  result.c_hat = std::move(c_hat);
  result.objective = stage1_objective(result.p_hat, problem.S, problem.W, problem.alpha);
  return result;
}

double default_alpha(int n, int p, int N, double c) {
  if (n < 1 || p < 1 || N < 1) throw ValidationError("default_alpha: n, p, N must be >= 1");
  if (c < 0.0) throw ValidationError("default_alpha: c must be >= 0");
  // np = 1 gives alpha = 0: the penalty vanishes (log 1 = 0)
  return c * std::sqrt(std::log(static_cast<double>(n) * p) / static_cast<double>(N));
}

AlphaWindow alpha_window(int n, int p, int N, double max_gamma_diag, double M) {
  if (n < 1 || p < 1 || N < 1) throw ValidationError("alpha_window: n, p, N must be >= 1");
  if (max_gamma_diag <= 0.0) throw ValidationError("alpha_window: max_gamma_diag must be positive");
  if (M <= 0.0) throw ValidationError("alpha_window: M must be positive");
  const double np = static_cast<double>(n) * p;
  AlphaWindow window;
  window.n0 = static_cast<int>(std::ceil(2.0 * ((M + 2.0) * std::log(np) + std::log(4.0))));
  window.upper = 40.0 * max_gamma_diag;
  window.lower = window.upper * std::sqrt(static_cast<double>(window.n0) / static_cast<double>(N));
  return window;
}

SpectralBox default_spectral_box(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NumericalError("default_spectral_box: eigendecomposition failed");
  const Vector lambda = eig.eigenvalues();
  const double spectral_norm = std::max(std::abs(lambda.minCoeff()), std::abs(lambda.maxCoeff()));

  SpectralBox box;
  box.a_star = spectral_norm > 0.0 ? 1e-6 / spectral_norm : 1e-6;

  // smallest eigenvalue that is positive beyond round-off
  double lambda_min_pos = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > 1e-12 * std::max(1.0, spectral_norm)) {
      lambda_min_pos = lambda[i];
      break;
    }
  box.b_star = 1e6 * std::max(1.0, lambda_min_pos > 0.0 ? 1.0 / lambda_min_pos : 1.0);
  return box;
}

}  // namespace gsps
