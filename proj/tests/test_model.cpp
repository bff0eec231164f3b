#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gsps/model.hpp"
#include "oracles.hpp"

using namespace gsps;

namespace {

Location loc(std::initializer_list<double> coords) {
  Location out;
  out.coords = Vector(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (double c : coords) out.coords[i++] = c;
  return out;
}

CorrelationModel model_with(std::initializer_list<double> theta) {
  CorrelationModel model;
  model.theta = Vector(static_cast<Eigen::Index>(theta.size()));
  Eigen::Index i = 0;
  for (double t : theta) model.theta[i++] = t;
  model.bounds = default_theta_bounds(model.q());
  return model;
}

std::vector<Location> random_locs(int n, int d, unsigned seed, double width = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, width);
  std::vector<Location> out(static_cast<std::size_t>(n));
  for (auto& l : out) {
    l.coords = Vector(d);
    for (int k = 0; k < d; ++k) l.coords[k] = uniform(rng);
  }
  return out;
}

}  // namespace

TEST_CASE("distance matrix on a 3-4-5 triangle pair") {
  const auto g = distance_matrix({loc({0, 0}), loc({3, 4})});
  CHECK(g.g(0, 1) == doctest::Approx(5.0));
  CHECK(g.g(1, 0) == doctest::Approx(5.0));
  CHECK(g.g(0, 0) == doctest::Approx(5.0));  // only neighbor
  CHECK(g.g(1, 1) == doctest::Approx(5.0));
}

TEST_CASE("distance matrix on collinear points") {
  const auto g = distance_matrix({loc({0, 0}), loc({1, 0}), loc({3, 0})});
  Matrix expected(3, 3);
  expected << 1, 1, 3, 1, 1, 2, 3, 2, 2;
  CHECK((g.g - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("distance matrix: symmetric and positive on random points") {
  const auto locations = random_locs(10, 2, 7);
  const auto g = distance_matrix(locations);
  CHECK(g.g.rows() == 10);
  CHECK((g.g - g.g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.g.minCoeff() > 0.0);
  // brute-force pairwise norms
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (i != j)
        CHECK(g.g(i, j) ==
              doctest::Approx((locations[i].coords - locations[j].coords).norm()).epsilon(1e-12));
}

TEST_CASE("distance matrix rejects degenerate inputs") {
  CHECK_THROWS_AS((void)distance_matrix({loc({0, 0})}), ValidationError);
  CHECK_THROWS_AS((void)distance_matrix({loc({1, 2}), loc({1, 2})}), ValidationError);
}

TEST_CASE("distance matrix is invariant under rigid motions") {
  const auto locations = random_locs(8, 2, 11);
  const double angle = 0.7;
  Matrix rotation(2, 2);
  rotation << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Vector shift(2);
  shift << -3.5, 2.25;
  std::vector<Location> moved;
  for (const auto& l : locations) moved.push_back(Location{rotation * l.coords + shift});
  const auto g0 = distance_matrix(locations);
  const auto g1 = distance_matrix(moved);
  CHECK((g0.g - g1.g).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("correlation values match direct evaluation") {
  CHECK(correlation(model_with({1, 1}), loc({0, 0}), loc({1, 0})) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(correlation(model_with({1, 1}), loc({2, 3}), loc({2, 3})) == doctest::Approx(1.0));
  CHECK(correlation(model_with({0.5, 2}), loc({0, 0}), loc({1, 1})) ==
        doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
}

TEST_CASE("correlation matrix has unit diagonal and (0,1] entries") {
  const auto locations = random_locs(12, 3, 21);
  const auto model = model_with({0.3, 1.0, 2.0});
  const Matrix r = correlation_matrix(model, locations);
  CHECK((r.diagonal().array() == 1.0).all());
  CHECK(r.minCoeff() > 0.0);
  CHECK(r.maxCoeff() <= 1.0);
  CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("correlation matrix rejects theta outside the bounds") {
  auto model = model_with({1.0, 1.0});
  model.theta[0] = 1e3;  // above the default upper bound
  CHECK_THROWS_AS((void)correlation_matrix(model, random_locs(4, 2, 3)), ValidationError);
}

TEST_CASE("permuting locations permutes the correlation matrix") {
  const auto locations = random_locs(6, 2, 5);
  const auto model = model_with({0.7, 0.2});
  const Matrix r = correlation_matrix(model, locations);
  std::vector<Location> permuted = {locations[3], locations[0], locations[5],
                                    locations[1], locations[4], locations[2]};
  const int perm[] = {3, 0, 5, 1, 4, 2};
  const Matrix rp = correlation_matrix(model, permuted);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(rp(i, j) == r(perm[i], perm[j]));
}

TEST_CASE("correlation gradient: 1-d closed form and zero diagonal") {
  const std::vector<Location> locations = {loc({0.0}), loc({1.0})};
  const auto model = model_with({1.0});
  const Matrix g = correlation_grad(model, locations, 0);
  CHECK(g(0, 1) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-12));
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 1) == 0.0);
}

TEST_CASE("correlation hessian: 1-d closed form and decoupled coordinate") {
  const std::vector<Location> locations = {loc({0.0}), loc({1.0})};
  CHECK(correlation_hess(model_with({1.0}), locations, 0, 0)(0, 1) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  // second coordinate never differs: cross derivative vanishes
  const std::vector<Location> flat = {loc({0.0, 5.0}), loc({1.0, 5.0})};
  const Matrix h = correlation_hess(model_with({1.0, 2.0}), flat, 0, 1);
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("correlation derivatives match finite differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uniform(0.2, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const auto locations = random_locs(6, d, static_cast<unsigned>(1000 + trial), 2.0);
    Vector theta(d);
    for (int k = 0; k < d; ++k) theta[k] = uniform(rng);
    CorrelationModel model;
    model.theta = theta;
    model.bounds = default_theta_bounds(d);

    for (int k = 0; k < d; ++k) {
      const Matrix analytic = correlation_grad(model, locations, k);
      CorrelationModel hi = model, lo = model;
      hi.theta[k] += 1e-5;
      lo.theta[k] -= 1e-5;
      const Matrix fd = (correlation_matrix(hi, locations) - correlation_matrix(lo, locations)) /
                        (2e-5);
      CHECK((analytic - fd).cwiseAbs().maxCoeff() <
            1e-6 * std::max(1.0, analytic.cwiseAbs().maxCoeff()));
      for (int l = 0; l < d; ++l) {
        const Matrix hess = correlation_hess(model, locations, k, l);
        CorrelationModel hi2 = model, lo2 = model;
        hi2.theta[l] += 1e-5;
        lo2.theta[l] -= 1e-5;
        const Matrix fd2 =
            (correlation_grad(hi2, locations, k) - correlation_grad(lo2, locations, k)) / (2e-5);
        CHECK((hess - fd2).cwiseAbs().maxCoeff() <
              1e-5 * std::max(1.0, hess.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("correlation derivative index bounds") {
  const auto locations = random_locs(3, 2, 17);
  const auto model = model_with({1.0, 1.0});
  CHECK_THROWS_AS((void)correlation_grad(model, locations, 2), ValidationError);
  CHECK_THROWS_AS((void)correlation_grad(model, locations, -1), ValidationError);
  CHECK_THROWS_AS((void)correlation_hess(model, locations, 0, 2), ValidationError);
}

TEST_CASE("isotropic restriction shares one length scale") {
  const auto locations = random_locs(5, 3, 23);
  const auto iso = model_with({0.4});
  const auto aniso = model_with({0.4, 0.4, 0.4});
  CHECK((correlation_matrix(iso, locations) - correlation_matrix(aniso, locations))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  // isotropic gradient collapses the per-coordinate parts
  const Matrix g_iso = correlation_grad(iso, locations, 0);
  Matrix g_sum = correlation_grad(aniso, locations, 0) + correlation_grad(aniso, locations, 1) +
                 correlation_grad(aniso, locations, 2);
  CHECK((g_iso - g_sum).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kronecker_cov with identity R is block diagonal") {
  Matrix gamma(2, 2);
  gamma << 2, 1, 1, 2;
  const Matrix c = kronecker_cov(Matrix::Identity(2, 2), gamma);
  CHECK(c.rows() == 4);
  CHECK((c.block(0, 0, 2, 2) - gamma).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c.block(2, 2, 2, 2) - gamma).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kronecker_cov with scalar gamma is R itself") {
  Matrix r(2, 2);
  r << 1, 0.5, 0.5, 1;
  const Matrix c = kronecker_cov(r, Matrix::Identity(1, 1));
  CHECK((c - r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kronecker_cov eigenvalues are products of factor eigenvalues") {
  std::mt19937_64 rng(31);
  const Matrix r = oracle::random_spd(3, rng);
  const Matrix gamma = oracle::random_spd(2, rng);
  const Matrix c = kronecker_cov(r, gamma);

  Eigen::SelfAdjointEigenSolver<Matrix> er(r), eg(gamma), ec(c);
  std::vector<double> products;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) products.push_back(er.eigenvalues()[i] * eg.eigenvalues()[j]);
  std::sort(products.begin(), products.end());
  for (int i = 0; i < 6; ++i)
    CHECK(ec.eigenvalues()[i] == doctest::Approx(products[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("kronecker_cov matches the dense Kronecker oracle up to np = 60") {
  std::mt19937_64 rng(47);
  for (const auto [n, p] : {std::pair{4, 3}, std::pair{10, 2}, std::pair{20, 3}, std::pair{12, 5}}) {
    const Matrix r = oracle::random_spd(n, rng);
    const Matrix gamma = oracle::random_spd(p, rng);
    CHECK((kronecker_cov(r, gamma) - oracle::dense_kronecker(r, gamma)).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("kronecker_cov rejects non-square inputs") {
  CHECK_THROWS_AS((void)kronecker_cov(Matrix::Ones(2, 3), Matrix::Identity(2, 2)), ValidationError);
}

TEST_CASE("dataset validation catches shape and duplication problems") {
  Dataset data;
  data.locations = {loc({0, 0}), loc({1, 1})};
  data.realizations = {Matrix::Zero(2, 2)};
  CHECK_NOTHROW(data.validate());

  Dataset dup = data;
  dup.locations[1] = dup.locations[0];
  CHECK_THROWS_AS(dup.validate(), ValidationError);

  Dataset ragged = data;
  ragged.realizations.push_back(Matrix::Zero(2, 3));
  CHECK_THROWS_AS(ragged.validate(), ValidationError);

  Dataset nonfinite = data;
  nonfinite.realizations[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nonfinite.validate(), ValidationError);
}
