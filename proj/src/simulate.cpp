#include "gsps/simulate.hpp"

#include <cmath>

#include "gsps/model.hpp"
#include "gsps/parallel.hpp"
#include "gsps/rng.hpp"

namespace gsps {

Matrix symmetric_sqrt(const Matrix& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric_sqrt: eigendecomposition failed");
  Vector lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -tol) throw NumericalError("symmetric_sqrt: matrix is not positive semidefinite");
    if (lambda[i] < 0.0) lambda[i] = 0.0;
  }
  return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

Dataset sample_grf(const SimulationSpec& spec) {
  spec.model.correlation.validate();
  if (spec.num_realizations < 1) throw ValidationError("sample_grf: num_realizations must be >= 1");
  if (spec.locations.empty()) throw ValidationError("sample_grf: needs at least one location");
  for (const auto& loc : spec.locations) loc.validate();

  const int n = static_cast<int>(spec.locations.size());
  const int p = spec.model.p();

  // Dense location sets make the exponential R numerically rank-deficient;
  // the eigendecomposition square root clamps the trailing eigenvalues at 0
  // and only rejects genuinely indefinite matrices.
  const Matrix r = correlation_matrix(spec.model.correlation, spec.locations);
  Matrix root_r;
  try {
    root_r = symmetric_sqrt(r);
  } catch (const NumericalError&) {
    throw NumericalError("sample_grf: R(theta) is not positive semidefinite at tolerance");
  }
  const Matrix root_gamma = symmetric_sqrt(spec.model.gamma);  // PSD gamma accepted

  Dataset out;
  out.locations = spec.locations;
  out.realizations.resize(static_cast<std::size_t>(spec.num_realizations));
  // per-realization streams: the result does not depend on scheduling
  parallel_for(static_cast<std::size_t>(spec.num_realizations), [&](std::size_t rep) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(rep)));
    Matrix z(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
    out.realizations[rep] = root_r * z * root_gamma.transpose();
  });
  return out;
}

TrueParams random_true_params(int d, int p, int w, std::uint64_t seed, double radius) {
  if (d < 1 || p < 1) throw ValidationError("random_true_params: d and p must be >= 1");
  if (w <= p) throw ValidationError("random_true_params: w must exceed p");
  if (radius <= 0.0) throw ValidationError("random_true_params: radius must be positive");

  Rng rng(derive_seed(seed, 0x7472756575706172ULL));
  // Folding a spherical Gaussian into the positive orthant leaves the
  // direction uniform on the orthant's portion of the sphere.
  Vector theta(d);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < d; ++i) theta[i] = std::abs(rng.normal());
    norm2 = theta.squaredNorm();
  } while (norm2 == 0.0);
  theta *= radius / std::sqrt(norm2);

  Matrix a(w, p);
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
  Matrix gamma = a.transpose() * a;
  gamma = 0.5 * (gamma + gamma.transpose());
  return TrueParams{std::move(theta), std::move(gamma)};
}

std::vector<Location> random_locations(int n, int d, double width, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ValidationError("random_locations: n and d must be >= 1");
  if (width <= 0.0) throw ValidationError("random_locations: width must be positive");
  Rng rng(derive_seed(seed, 0x6c6f636174696f6eULL));
  std::vector<Location> out(static_cast<std::size_t>(n));
  for (auto& loc : out) {
    loc.coords = Vector(d);
    for (int k = 0; k < d; ++k) loc.coords[k] = rng.uniform(0.0, width);
  }
  return out;
}

}  // namespace gsps
