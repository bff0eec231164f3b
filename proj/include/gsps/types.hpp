#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gsps/errors.hpp"

namespace gsps {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A point in R^d. All types in this header are immutable after construction
// by convention; operations on them are pure functions.
struct Location {
  Vector coords;

  int dim() const { return static_cast<int>(coords.size()); }
  void validate() const;
};

bool same_location(const Location& a, const Location& b);
double squared_distance(const Location& a, const Location& b);

// N realizations of a p-variate response over a fixed set of n locations.
// Row i of each realization matrix is the response vector at location i.
struct Dataset {
  std::vector<Location> locations;
  std::vector<Matrix> realizations;

  int n() const { return static_cast<int>(locations.size()); }
  int d() const { return locations.empty() ? 0 : locations.front().dim(); }
  int p() const { return realizations.empty() ? 0 : static_cast<int>(realizations.front().cols()); }
  int num_realizations() const { return static_cast<int>(realizations.size()); }

  void validate() const;

  // (1/N) sum_r Y_r, an n x p matrix.
  Matrix mean_response() const;

  // Keep only the listed locations (all realizations restricted to those rows).
  Dataset restrict(const std::vector<int>& indices) const;

  // Single-response view of column j, p = 1.
  Dataset response_column(int j) const;
};

enum class Family { AnisotropicExponential };

Family family_from_string(const std::string& name);
std::string to_string(Family family);

// Closed per-coordinate interval box.
struct Box {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool empty() const { return lower.size() == 0; }
  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;
  Vector centroid() const { return 0.5 * (lower + upper); }
  void validate() const;
};

// [1e-4, 1e2] per coordinate.
Box default_theta_bounds(int q);

// Parametric spatial correlation family. The anisotropic exponential kernel
//   rho(x, x'; theta) = exp(-(x - x')^T diag(theta) (x - x'))
// has q = d parameters; the isotropic restriction shares one parameter
// across all coordinates (q = 1).
struct CorrelationModel {
  Family family = Family::AnisotropicExponential;
  Vector theta;
  Box bounds;

  int q() const { return static_cast<int>(theta.size()); }
  void validate() const;
  void check_dim(int d) const;  // q == d or q == 1
};

// Separable cross-covariance: c(x, x') = rho(x, x') * gamma.
struct SeparableModel {
  CorrelationModel correlation;
  Matrix gamma;  // p x p symmetric positive definite

  int p() const { return static_cast<int>(gamma.rows()); }
  void validate() const;
};

// Pairwise-distance weight matrix; strictly positive entries, including the
// diagonal (nearest-neighbor distance).
struct WeightMatrix {
  Matrix g;
};

bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);
void require_finite(const Matrix& m, const std::string& what);

}  // namespace gsps
