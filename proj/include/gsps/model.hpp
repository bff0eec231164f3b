#pragma once

#include "gsps/types.hpp"

namespace gsps {

// G_ij = ||x_i - x_j|| for i != j; G_ii = min over j != i of ||x_i - x_j||.
// Requires n >= 2 and pairwise-distinct locations so every entry is positive.
WeightMatrix distance_matrix(const std::vector<Location>& locations);

double correlation(const CorrelationModel& model, const Location& a, const Location& b);

// R(theta), symmetric with unit diagonal and entries in (0, 1].
Matrix correlation_matrix(const CorrelationModel& model, const std::vector<Location>& locations);

// Entrywise derivative of R with respect to theta_k (0-based k).
Matrix correlation_grad(const CorrelationModel& model, const std::vector<Location>& locations, int k);

// Entrywise second derivative of R with respect to (theta_k, theta_l).
Matrix correlation_hess(const CorrelationModel& model, const std::vector<Location>& locations,
                        int k, int l);

// Dense np x np covariance with block (i, j) equal to R(i, j) * gamma.
Matrix kronecker_cov(const Matrix& r, const Matrix& gamma);

}  // namespace gsps
