#include "gsps/optim.hpp"

#include <cmath>
#include <limits>

namespace gsps {

namespace {

double projected_grad_norm(const Box& box, const Vector& x, const Vector& g) {
  return (x - box.clamp(x - g)).cwiseAbs().maxCoeff();
}

}  // namespace

OptimResult projected_quasi_newton(const std::function<double(const Vector&)>& f,
                                   const std::function<Vector(const Vector&)>& grad,
                                   const Box& box, const Vector& x0,
                                   const OptimOptions& options) {
  box.validate();
  const Eigen::Index q = x0.size();
  if (q != box.lower.size()) throw ValidationError("projected_quasi_newton: dimension mismatch");

  OptimResult result;
  Vector x = box.clamp(x0);
  double fx = f(x);
  if (!std::isfinite(fx)) {
    result.x = x;
    result.value = fx;
    result.line_search_failed = true;
    return result;
  }
  Vector g = grad(x);
  Matrix h = Matrix::Identity(q, q);  // inverse Hessian approximation
  bool h_is_identity = true;

  int iter = 0;
  for (iter = 0; iter < options.max_iter; ++iter) {
    if (projected_grad_norm(box, x, g) <= options.grad_tol) {
      result.converged = true;
      break;
    }

    Vector direction = -(h * g);
    if (direction.dot(g) >= 0.0) {  // not a descent direction, reset
      h.setIdentity();
      h_is_identity = true;
      direction = -g;
    }

    // backtracking along the projected arc
    double step = 1.0;
    Vector x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = box.clamp(x + step * direction);
      const Vector dx = x_new - x;
      if (dx.cwiseAbs().maxCoeff() == 0.0) break;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + options.armijo * g.dot(dx)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!h_is_identity) {  // retry once from a fresh steepest-descent model
        h.setIdentity();
        h_is_identity = true;
        continue;
      }
      result.line_search_failed = true;
      break;
    }

    const Vector g_new = grad(x_new);
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (h_is_identity) h *= sy / y.squaredNorm();  // initial curvature scale
      const Matrix eye = Matrix::Identity(q, q);
      const Matrix v = eye - (s * y.transpose()) / sy;
      h = v * h * v.transpose() + (s * s.transpose()) / sy;
      h_is_identity = false;
    }
    x = std::move(x_new);
    fx = f_new;
    g = g_new;
  }

  result.x = std::move(x);
  result.value = fx;
  result.iterations = iter;
  return result;
}

GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                            double width_tol, int max_iter) {
  if (!(lo <= hi)) throw ValidationError("golden_section: requires lo <= hi");
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  GoldenResult result;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  int iter = 0;
  while (b - a > width_tol && iter < max_iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
    ++iter;
  }
  result.x = f1 <= f2 ? x1 : x2;
  result.value = std::min(f1, f2);
  result.iterations = iter;
  return result;
}

}  // namespace gsps
