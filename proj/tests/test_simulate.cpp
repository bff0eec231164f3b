#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gsps/model.hpp"
#include "gsps/simulate.hpp"
#include "gsps/stage1.hpp"
#include "oracles.hpp"

using namespace gsps;

namespace {

SeparableModel make_model(const Vector& theta, const Matrix& gamma) {
  SeparableModel model;
  model.correlation.theta = theta;
  model.correlation.bounds = default_theta_bounds(static_cast<int>(theta.size()));
  model.gamma = gamma;
  return model;
}

}  // namespace

TEST_CASE("rank-one gamma with equal entries gives identical response columns") {
  Matrix gamma(2, 2);
  gamma << 1, 1, 1, 1;
  SimulationSpec spec;
  spec.locations = random_locations(6, 2, 10.0, 3);
  spec.model = make_model(Vector::Constant(2, 0.5), gamma);
  spec.num_realizations = 4;
  spec.seed = 42;
  const Dataset data = sample_grf(spec);
  for (const auto& y : data.realizations)
    CHECK((y.col(0) - y.col(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empirical covariance approaches R kron gamma") {
  const int n = 5, p = 2, N = 100000;
  SimulationSpec spec;
  spec.locations = random_locations(n, 2, 10.0, 8);
  Matrix gamma(2, 2);
  gamma << 2.0, 0.8, 0.8, 1.5;
  spec.model = make_model(Vector::Constant(2, 0.3), gamma);
  spec.num_realizations = N;
  spec.seed = 7;
  const Dataset data = sample_grf(spec);

  const Matrix r = correlation_matrix(spec.model.correlation, spec.locations);
  const Matrix target = kronecker_cov(r, gamma);
  Matrix empirical = Matrix::Zero(n * p, n * p);
  for (const auto& y : data.realizations) {
    const Vector v = stack_rows(y);
    empirical += v * v.transpose();
  }
  empirical /= N;
  CHECK((empirical - target).norm() / target.norm() < 0.05);
}

TEST_CASE("same seed gives a bit-identical dataset") {
  SimulationSpec spec;
  spec.locations = random_locations(7, 3, 10.0, 5);
  std::mt19937_64 rng(12);
  spec.model = make_model(Vector::Constant(3, 0.4), oracle::random_spd(2, rng));
  spec.num_realizations = 5;
  spec.seed = 2024;
  const Dataset a = sample_grf(spec);
  const Dataset b = sample_grf(spec);
  for (int r = 0; r < 5; ++r) CHECK(a.realizations[r] == b.realizations[r]);
}

TEST_CASE("marginal covariance at a single location is gamma") {
  Matrix gamma(2, 2);
  gamma << 1.5, -0.4, -0.4, 0.9;
  SimulationSpec spec;
  spec.locations = {Location{Vector::Zero(2)}};
  spec.model = make_model(Vector::Constant(2, 1.0), gamma);
  spec.num_realizations = 200000;
  spec.seed = 3;
  const Dataset data = sample_grf(spec);
  Matrix empirical = Matrix::Zero(2, 2);
  for (const auto& y : data.realizations) empirical += y.row(0).transpose() * y.row(0);
  empirical /= spec.num_realizations;
  CHECK((empirical - gamma).norm() / gamma.norm() < 0.02);
}

TEST_CASE("cross-location covariance matches R_ij gamma within Monte Carlo error") {
  const int n = 3, p = 2, N = 200000;
  SimulationSpec spec;
  spec.locations = random_locations(n, 2, 2.0, 14);
  Matrix gamma(2, 2);
  gamma << 1.0, 0.6, 0.6, 2.0;
  spec.model = make_model(Vector::Constant(2, 0.35), gamma);
  spec.num_realizations = N;
  spec.seed = 99;
  const Dataset data = sample_grf(spec);
  const Matrix r = correlation_matrix(spec.model.correlation, spec.locations);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Matrix cross = Matrix::Zero(p, p);
      for (const auto& y : data.realizations) cross += y.row(i).transpose() * y.row(j);
      cross /= N;
      const Matrix target = r(i, j) * gamma;
      // three standard errors on the largest entry, loosened for covariance scale
      const double standard_error = 3.0 * gamma.cwiseAbs().maxCoeff() / std::sqrt(double(N));
      CHECK((cross - target).cwiseAbs().maxCoeff() < 10.0 * standard_error);
    }
}

TEST_CASE("near-singular R and rank-deficient gamma are tolerated, indefinite gamma is not") {
  // two nearly coincident locations: R is numerically rank deficient and the
  // clamped square root yields (almost) identical values at the pair
  SimulationSpec spec;
  spec.locations = {Location{Vector::Zero(1)}, Location{Vector::Constant(1, 1e-9)},
                    Location{Vector::Constant(1, 4.0)}};
  spec.model = make_model(Vector::Constant(1, 1.0), Matrix::Identity(2, 2));
  spec.num_realizations = 3;
  const Dataset data = sample_grf(spec);
  for (const auto& y : data.realizations)
    CHECK((y.row(0) - y.row(1)).cwiseAbs().maxCoeff() < 1e-6);

  SimulationSpec ok;
  ok.locations = random_locations(4, 1, 10.0, 4);
  Matrix rank1(2, 2);
  rank1 << 1, 1, 1, 1;
  ok.model = make_model(Vector::Constant(1, 1.0), rank1);
  ok.num_realizations = 2;
  CHECK_NOTHROW((void)sample_grf(ok));

  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  ok.model.gamma = indefinite;
  CHECK_THROWS_AS((void)sample_grf(ok), NumericalError);
}

TEST_CASE("random_true_params: d=1 theta is the radius exactly") {
  for (std::uint64_t seed : {0ULL, 5ULL, 99ULL}) {
    const auto truth = random_true_params(1, 2, 5, seed);
    CHECK(truth.theta[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(random_true_params(1, 2, 5, 3, 2.5).theta[0] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("random_true_params: unit norm in d=10 and positive components") {
  const auto truth = random_true_params(10, 2, 5, 77);
  CHECK(std::abs(truth.theta.norm() - 1.0) < 1e-12);
  CHECK(truth.theta.minCoeff() > 0.0);
}

TEST_CASE("random_true_params: gamma positive definite across seeds") {
  const int p = 3, w = p + 3;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto truth = random_true_params(2, p, w, seed);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(truth.gamma, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("random_true_params rejects w <= p") {
  CHECK_THROWS_AS((void)random_true_params(2, 3, 3, 0), ValidationError);
}

TEST_CASE("symmetric_sqrt reproduces the matrix and clamps tiny negatives") {
  std::mt19937_64 rng(55);
  const Matrix s = oracle::random_spd(5, rng);
  const Matrix root = symmetric_sqrt(s);
  CHECK((root * root.transpose() - s).cwiseAbs().maxCoeff() < 1e-10);

  Matrix near_psd = Matrix::Identity(2, 2);
  near_psd(1, 1) = -5e-11;  // inside the clamp window
  CHECK_NOTHROW((void)symmetric_sqrt(near_psd));
  Matrix negative = Matrix::Identity(2, 2);
  negative(1, 1) = -1e-6;
  CHECK_THROWS_AS((void)symmetric_sqrt(negative), NumericalError);
}
