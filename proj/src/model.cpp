#include "gsps/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gsps {

namespace {

void check_locations(const std::vector<Location>& locations) {
  if (locations.size() < 2)
    throw ValidationError("distance_matrix: needs at least 2 locations");
  const int d = locations.front().dim();
  for (const auto& loc : locations) {
    loc.validate();
    if (loc.dim() != d) throw ValidationError("locations must share one dimension");
  }
}

// Weighted squared displacement sum_k theta_k (a_k - b_k)^2; isotropic models
// (q = 1) share theta across coordinates.
double weighted_sq_dist(const Vector& theta, const Location& a, const Location& b) {
  const Vector diff = a.coords - b.coords;
  if (theta.size() == 1) return theta[0] * diff.squaredNorm();
  return diff.cwiseAbs2().dot(theta);
}

// Squared displacement along the coordinates theta_k controls.
double component_sq(const CorrelationModel& model, const Location& a, const Location& b, int k) {
  const Vector diff = a.coords - b.coords;
  if (model.q() == 1) return diff.squaredNorm();
  return diff[k] * diff[k];
}

void check_index(const CorrelationModel& model, int k, const char* what) {
  if (k < 0 || k >= model.q()) {
    std::ostringstream msg;
    msg << what << ": parameter index " << k << " out of range [0, " << model.q() << ")";
    throw ValidationError(msg.str());
  }
}

}  // namespace

WeightMatrix distance_matrix(const std::vector<Location>& locations) {
  check_locations(locations);
  const int n = static_cast<int>(locations.size());
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist = std::sqrt(squared_distance(locations[i], locations[j]));
      if (dist <= 0.0) {
        std::ostringstream msg;
        msg << "distance_matrix: duplicate locations at indices " << i << " and " << j;
        throw ValidationError(msg.str());
      }
      g(i, j) = dist;
      nearest = std::min(nearest, dist);
    }
    g(i, i) = nearest;
  }
  // symmetrize exactly; the two norm evaluations can differ in the last ulp
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g(j, i) = g(i, j);
  return WeightMatrix{std::move(g)};
}

double correlation(const CorrelationModel& model, const Location& a, const Location& b) {
  model.validate();
  switch (model.family) {
    case Family::AnisotropicExponential:
      return std::exp(-weighted_sq_dist(model.theta, a, b));
  }
  throw ValidationError("correlation: unknown family");
}

Matrix correlation_matrix(const CorrelationModel& model, const std::vector<Location>& locations) {
  model.validate();
  model.check_dim(locations.empty() ? 0 : locations.front().dim());
  const int n = static_cast<int>(locations.size());
  Matrix r = Matrix::Ones(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = std::exp(-weighted_sq_dist(model.theta, locations[i], locations[j]));
      r(i, j) = v;
      r(j, i) = v;
    }
  return r;
}

Matrix correlation_grad(const CorrelationModel& model, const std::vector<Location>& locations,
                        int k) {
  check_index(model, k, "correlation_grad");
  const Matrix r = correlation_matrix(model, locations);
  const int n = static_cast<int>(locations.size());
  Matrix out = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = -component_sq(model, locations[i], locations[j], k) * r(i, j);
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

Matrix correlation_hess(const CorrelationModel& model, const std::vector<Location>& locations,
                        int k, int l) {
  check_index(model, k, "correlation_hess");
  check_index(model, l, "correlation_hess");
  const Matrix r = correlation_matrix(model, locations);
  const int n = static_cast<int>(locations.size());
  Matrix out = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = component_sq(model, locations[i], locations[j], k) *
                       component_sq(model, locations[i], locations[j], l) * r(i, j);
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

Matrix kronecker_cov(const Matrix& r, const Matrix& gamma) {
  if (r.rows() != r.cols()) throw ValidationError("kronecker_cov: R must be square");
  if (gamma.rows() != gamma.cols()) throw ValidationError("kronecker_cov: gamma must be square");
  const Eigen::Index n = r.rows();
  const Eigen::Index p = gamma.rows();
  Matrix out(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out.block(i * p, j * p, p, p) = r(i, j) * gamma;
  return out;
}

}  // namespace gsps
