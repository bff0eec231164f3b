#include "gsps/types.hpp"

#include <cmath>
#include <sstream>

namespace gsps {

void Location::validate() const {
  if (coords.size() < 1) throw ValidationError("Location: dimension must be >= 1");
  if (!coords.allFinite()) throw ValidationError("Location: coordinates must be finite");
}

bool same_location(const Location& a, const Location& b) {
  return a.coords.size() == b.coords.size() && a.coords == b.coords;
}

double squared_distance(const Location& a, const Location& b) {
  return (a.coords - b.coords).squaredNorm();
}

void Dataset::validate() const {
  if (locations.empty()) throw ValidationError("Dataset: needs at least one location");
  const int dd = locations.front().dim();
  for (const auto& loc : locations) {
    loc.validate();
    if (loc.dim() != dd) throw ValidationError("Dataset: locations must share one dimension");
  }
  for (std::size_t i = 0; i < locations.size(); ++i)
    for (std::size_t j = i + 1; j < locations.size(); ++j)
      if (same_location(locations[i], locations[j])) {
        std::ostringstream msg;
        msg << "Dataset: duplicate locations at indices " << i << " and " << j;
        throw ValidationError(msg.str());
      }
  if (realizations.empty()) throw ValidationError("Dataset: needs at least one realization");
  const auto rows = realizations.front().rows();
  const auto cols = realizations.front().cols();
  if (rows != static_cast<Eigen::Index>(locations.size()))
    throw ValidationError("Dataset: realization rows must match location count");
  if (cols < 1) throw ValidationError("Dataset: response dimension must be >= 1");
  for (const auto& y : realizations) {
    if (y.rows() != rows || y.cols() != cols)
      throw ValidationError("Dataset: all realizations must have identical shape");
    require_finite(y, "Dataset realization");
  }
}

Matrix Dataset::mean_response() const {
  Matrix ybar = Matrix::Zero(realizations.front().rows(), realizations.front().cols());
  for (const auto& y : realizations) ybar += y;
  return ybar / static_cast<double>(realizations.size());
}

Dataset Dataset::restrict(const std::vector<int>& indices) const {
  Dataset out;
  out.locations.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= n()) throw ValidationError("Dataset::restrict: index out of range");
    out.locations.push_back(locations[static_cast<std::size_t>(i)]);
  }
  out.realizations.reserve(realizations.size());
  for (const auto& y : realizations) {
    Matrix sub(static_cast<Eigen::Index>(indices.size()), y.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = y.row(indices[r]);
    out.realizations.push_back(std::move(sub));
  }
  return out;
}

Dataset Dataset::response_column(int j) const {
  if (j < 0 || j >= p()) throw ValidationError("Dataset::response_column: index out of range");
  Dataset out;
  out.locations = locations;
  out.realizations.reserve(realizations.size());
  for (const auto& y : realizations) out.realizations.push_back(y.col(j));
  return out;
}

Family family_from_string(const std::string& name) {
  if (name == "anisotropic_exponential" || name == "exponential" || name == "anisoexp")
    return Family::AnisotropicExponential;
  throw ValidationError("unknown correlation family: " + name);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::AnisotropicExponential:
      return "anisotropic_exponential";
  }
  throw ValidationError("unknown correlation family enum value");
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

Vector Box::clamp(const Vector& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

void Box::validate() const {
  if (lower.size() != upper.size()) throw ValidationError("Box: bound dimensions differ");
  if (lower.size() == 0) throw ValidationError("Box: empty bounds");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw ValidationError("Box: bounds must be finite");
    if (lower[i] > upper[i]) throw ValidationError("Box: lower bound exceeds upper bound");
  }
}

Box default_theta_bounds(int q) {
  Box box;
  box.lower = Vector::Constant(q, 1e-4);
  box.upper = Vector::Constant(q, 1e2);
  return box;
}

void CorrelationModel::validate() const {
  if (theta.size() < 1) throw ValidationError("CorrelationModel: theta must be nonempty");
  bounds.validate();
  if (bounds.dim() != q()) throw ValidationError("CorrelationModel: bounds dimension mismatch");
  for (Eigen::Index i = 0; i < bounds.lower.size(); ++i)
    if (bounds.lower[i] <= 0.0)
      throw ValidationError("CorrelationModel: bounds must lie in the positive orthant");
  if (!bounds.contains(theta)) throw ValidationError("CorrelationModel: theta outside bounds");
}

void CorrelationModel::check_dim(int d) const {
  if (q() != d && q() != 1) {
    std::ostringstream msg;
    msg << "CorrelationModel: expected " << d << " (anisotropic) or 1 (isotropic) parameters, got "
        << q();
    throw ValidationError(msg.str());
  }
}

void SeparableModel::validate() const {
  correlation.validate();
  if (gamma.rows() < 1 || gamma.rows() != gamma.cols())
    throw ValidationError("SeparableModel: gamma must be square and nonempty");
  require_finite(gamma, "SeparableModel gamma");
  if (!is_symmetric(gamma)) throw ValidationError("SeparableModel: gamma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gamma, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw ValidationError("SeparableModel: gamma must be positive definite");
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * std::max(1.0, scale);
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw ValidationError(what + ": non-finite values");
}

}  // namespace gsps
