#pragma once

#include <optional>
#include <vector>

#include "gsps/gsps.hpp"
#include "gsps/types.hpp"

namespace gsps {

enum class BlockPredictionMode { NearestBlock, InverseDistanceBlend };

// Co-kriging predictor. The mean at x0 is ybar^T (R^{-1} r(x0)): the
// between-response factor cancels out of the point-prediction weights, so the
// mean depends on gamma only through the fitted theta. R is factorized once
// per block and reused across queries; queries are O(n_b^2).
class Predictor {
 public:
  // Single-block predictor over the full training set.
  Predictor(const SeparableModel& model, const Dataset& training);

  // One sub-predictor per partition block. NearestBlock answers from the
  // block owning the training location closest to the query;
  // InverseDistanceBlend mixes all blocks with weights 1/distance.
  Predictor(const SeparableModel& model, const Dataset& training, const BlockPartition& partition,
            BlockPredictionMode mode = BlockPredictionMode::NearestBlock);

  Vector predict_mean(const Location& x0) const;

  // (1 - r^T R^{-1} r) * gamma with the scalar clamped at 0.
  Matrix predict_cov(const Location& x0) const;

  int d() const { return d_; }
  int p() const { return static_cast<int>(model_.gamma.rows()); }
  bool jitter_applied() const { return jitter_applied_; }
  const SeparableModel& model() const { return model_; }

 private:
  struct Block {
    std::vector<Location> locations;
    Matrix ybar;             // n_b x p
    Eigen::LLT<Matrix> llt;  // factor of R(theta) over the block
  };

  void build_block(const Dataset& training, const std::vector<int>& indices);
  Vector correlations_to(const Block& block, const Location& x0) const;
  std::pair<const Block*, double> nearest_block(const Location& x0) const;
  void check_query(const Location& x0) const;

  SeparableModel model_;
  std::vector<Block> blocks_;
  BlockPredictionMode mode_ = BlockPredictionMode::NearestBlock;
  int d_ = 0;
  bool jitter_applied_ = false;
};

// Mean over realizations, test locations and responses of the squared error
// between predict_mean and the held-out truth.
double mspe(const Predictor& predictor, const Dataset& test);

}  // namespace gsps
