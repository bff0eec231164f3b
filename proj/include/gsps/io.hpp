#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsps/gsps.hpp"
#include "gsps/types.hpp"

namespace gsps {

// Dataset CSV: header `rep,x1..xd,y1..yp`, one row per (realization,
// location), realizations grouped and numbered 1..N, identical location
// sequence in every group.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

// Query CSV: header `x1..xd`.
void write_locations_csv(const std::string& path, const std::vector<Location>& locations);
std::vector<Location> read_locations_csv(const std::string& path);

// Predictions CSV: `x1..xd,yhat1..yhatp` plus cov_i_j columns on request.
void write_predictions_csv(const std::string& path, const std::vector<Location>& queries,
                           const std::vector<Vector>& means,
                           const std::vector<Matrix>* covariances = nullptr);

// Dense text matrix dump, one row per line, whitespace separated.
void write_matrix_text(const std::string& path, const Matrix& m);
Matrix read_matrix_text(const std::string& path);

nlohmann::json matrix_to_json(const Matrix& m);  // row-major values + shape
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

// Fitted model interchange file.
struct ModelFile {
  std::string method;  // gsps | mle | independent
  Family family = Family::AnisotropicExponential;
  int d = 0;
  int p = 0;
  Vector theta_hat;
  Matrix gamma_hat;
  Box theta_bounds;
  std::optional<BlockPartition> partition;
  // per-response (theta, gamma) pairs for independent fits
  std::vector<std::pair<Vector, Matrix>> independent;
  nlohmann::json diagnostics;
};

void write_model_json(const std::string& path, const ModelFile& model);
ModelFile read_model_json(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace gsps
