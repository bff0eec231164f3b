#pragma once

#include <cstdint>

#include "gsps/types.hpp"

namespace gsps {

struct SimulationSpec {
  std::vector<Location> locations;
  SeparableModel model;
  int num_realizations = 1;
  std::uint64_t seed = 0;
};

// Draw N i.i.d. realizations of the zero-mean separable field: each
// realization is Y = L_R Z L_G^T with Z an n x p standard-normal matrix and
// L_R L_R^T = R(theta), L_G L_G^T = gamma, so the location-major stacked
// vector has covariance R (x) gamma. Deterministic given the seed, and each
// realization uses its own derived stream. Near-singular R and rank-deficient
// gamma are handled by the clamped eigendecomposition square root.
Dataset sample_grf(const SimulationSpec& spec);

struct TrueParams {
  Vector theta;  // uniform on the positive-orthant hypersphere surface, ||theta|| = radius
  Matrix gamma;  // A^T A with A (w x p), entries iid standard normal
};

TrueParams random_true_params(int d, int p, int w, std::uint64_t seed, double radius = 1.0);

std::vector<Location> random_locations(int n, int d, double width, std::uint64_t seed);

// Q sqrt(max(lambda, 0)) with eigenvalues below -tol rejected; tolerates
// rank-deficient inputs that strict Cholesky would not.
Matrix symmetric_sqrt(const Matrix& m, double tol = 1e-10);

}  // namespace gsps
