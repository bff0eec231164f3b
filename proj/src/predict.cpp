#include "gsps/predict.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "gsps/model.hpp"

namespace gsps {

void Predictor::build_block(const Dataset& training, const std::vector<int>& indices) {
  Block block;
  block.locations.reserve(indices.size());
  for (int i : indices) block.locations.push_back(training.locations[static_cast<std::size_t>(i)]);

  const Matrix ybar_full = training.mean_response();
  block.ybar.resize(static_cast<Eigen::Index>(indices.size()), ybar_full.cols());
  for (std::size_t r = 0; r < indices.size(); ++r)
    block.ybar.row(static_cast<Eigen::Index>(r)) = ybar_full.row(indices[r]);

  Matrix r = correlation_matrix(model_.correlation, block.locations);
  block.llt.compute(r);
  if (block.llt.info() != Eigen::Success) {
    // dense location sets can push R to numerical singularity
    r.diagonal().array() += 1e-10;
    block.llt.compute(r);
    jitter_applied_ = true;
    std::cerr << "gsps: warning: correlation matrix required 1e-10 jitter to factorize\n";
    if (block.llt.info() != Eigen::Success)
      throw NumericalError("Predictor: R(theta) is singular at the training locations");
  }
  blocks_.push_back(std::move(block));
}

Predictor::Predictor(const SeparableModel& model, const Dataset& training) : model_(model) {
  model_.correlation.validate();
  training.validate();
  model_.correlation.check_dim(training.d());
  if (model_.gamma.rows() != training.p() || model_.gamma.rows() != model_.gamma.cols())
    throw ValidationError("Predictor: gamma shape must match the response dimension");
  d_ = training.d();
  std::vector<int> all(static_cast<std::size_t>(training.n()));
  for (int i = 0; i < training.n(); ++i) all[static_cast<std::size_t>(i)] = i;
  build_block(training, all);
}

Predictor::Predictor(const SeparableModel& model, const Dataset& training,
                     const BlockPartition& partition, BlockPredictionMode mode)
    : model_(model), mode_(mode) {
  model_.correlation.validate();
  training.validate();
  model_.correlation.check_dim(training.d());
  if (model_.gamma.rows() != training.p() || model_.gamma.rows() != model_.gamma.cols())
    throw ValidationError("Predictor: gamma shape must match the response dimension");
  partition.validate(training.n());
  d_ = training.d();
  for (const auto& indices : partition.blocks()) build_block(training, indices);
}

void Predictor::check_query(const Location& x0) const {
  x0.validate();
  if (x0.dim() != d_) throw ValidationError("Predictor: query dimension mismatch");
}

Vector Predictor::correlations_to(const Block& block, const Location& x0) const {
  Vector r(static_cast<Eigen::Index>(block.locations.size()));
  for (std::size_t i = 0; i < block.locations.size(); ++i)
    r[static_cast<Eigen::Index>(i)] = correlation(model_.correlation, x0, block.locations[i]);
  return r;
}

std::pair<const Predictor::Block*, double> Predictor::nearest_block(const Location& x0) const {
  const Block* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& block : blocks_) {
    for (const auto& loc : block.locations) {
      const double dist = squared_distance(x0, loc);
      if (dist < best_dist) {
        best_dist = dist;
        best = &block;
      }
    }
  }
  return {best, best_dist};
}

Vector Predictor::predict_mean(const Location& x0) const {
  check_query(x0);
  auto mean_of = [&](const Block& block) -> Vector {
    const Vector r = correlations_to(block, x0);
    return block.ybar.transpose() * block.llt.solve(r);
  };
  if (blocks_.size() == 1 || mode_ == BlockPredictionMode::NearestBlock)
    return mean_of(blocks_.size() == 1 ? blocks_.front() : *nearest_block(x0).first);

  // inverse-distance blend; an exact location match takes its block outright
  double weight_sum = 0.0;
  Vector mean = Vector::Zero(p());
  for (const auto& block : blocks_) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (const auto& loc : block.locations) min_dist = std::min(min_dist, squared_distance(x0, loc));
    if (min_dist == 0.0) return mean_of(block);
    const double weight = 1.0 / std::sqrt(min_dist);
    mean += weight * mean_of(block);
    weight_sum += weight;
  }
  return mean / weight_sum;
}

Matrix Predictor::predict_cov(const Location& x0) const {
  check_query(x0);
  auto scalar_of = [&](const Block& block) {
    const Vector r = correlations_to(block, x0);
    return std::max(0.0, 1.0 - r.dot(block.llt.solve(r)));
  };
  if (blocks_.size() == 1 || mode_ == BlockPredictionMode::NearestBlock)
    return scalar_of(blocks_.size() == 1 ? blocks_.front() : *nearest_block(x0).first) *
           model_.gamma;

  double weight_sum = 0.0;
  double blended = 0.0;
  for (const auto& block : blocks_) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (const auto& loc : block.locations) min_dist = std::min(min_dist, squared_distance(x0, loc));
    if (min_dist == 0.0) return scalar_of(block) * model_.gamma;
    const double weight = 1.0 / std::sqrt(min_dist);
    blended += weight * scalar_of(block);
    weight_sum += weight;
  }
  return (blended / weight_sum) * model_.gamma;
}

double mspe(const Predictor& predictor, const Dataset& test) {
  test.validate();
  if (test.d() != predictor.d()) throw ValidationError("mspe: test dimension mismatch");
  if (test.p() != predictor.p()) throw ValidationError("mspe: test response dimension mismatch");

  double total = 0.0;
  for (int i = 0; i < test.n(); ++i) {
    const Vector yhat = predictor.predict_mean(test.locations[static_cast<std::size_t>(i)]);
    for (const auto& y : test.realizations) total += (y.row(i).transpose() - yhat).squaredNorm();
  }
  return total / (static_cast<double>(test.n()) * test.p() * test.num_realizations());
}

}  // namespace gsps
