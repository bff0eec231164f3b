#pragma once

#include <functional>

#include "gsps/types.hpp"

namespace gsps {

struct OptimOptions {
  int max_iter = 500;
  double grad_tol = 1e-8;   // on the projected gradient, infinity norm
  int max_line_search = 60;
  double armijo = 1e-4;
};

struct OptimResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

// BFGS with box projection and Armijo backtracking. Objective evaluations may
// return +inf to mark infeasible points; the line search backs away from them.
OptimResult projected_quasi_newton(const std::function<double(const Vector&)>& f,
                                   const std::function<Vector(const Vector&)>& grad,
                                   const Box& box, const Vector& x0,
                                   const OptimOptions& options = {});

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

// Golden-section search on [lo, hi], shrinking the bracket to width_tol.
GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                            double width_tol = 1e-8, int max_iter = 200);

}  // namespace gsps
