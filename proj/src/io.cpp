#include "gsps/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gsps {

namespace {

std::string format_full(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& token, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used]))) ++used;
    if (used != token.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(context + ": cannot parse number '" + token + "'");
  }
}

long parse_long(const std::string& token, const std::string& context) {
  try {
    std::size_t used = 0;
    const long v = std::stol(token, &used);
    if (used != token.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(context + ": cannot parse integer '" + token + "'");
  }
}

std::vector<std::string> read_nonempty_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << contents;
  if (!out) throw ValidationError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  data.validate();
  std::ostringstream out;
  out << "rep";
  for (int k = 1; k <= data.d(); ++k) out << ",x" << k;
  for (int j = 1; j <= data.p(); ++j) out << ",y" << j;
  out << "\n";
  for (int r = 0; r < data.num_realizations(); ++r) {
    const Matrix& y = data.realizations[static_cast<std::size_t>(r)];
    for (int i = 0; i < data.n(); ++i) {
      out << (r + 1);
      const auto& coords = data.locations[static_cast<std::size_t>(i)].coords;
      for (Eigen::Index k = 0; k < coords.size(); ++k) out << ',' << format_full(coords[k]);
      for (Eigen::Index j = 0; j < y.cols(); ++j) out << ',' << format_full(y(i, j));
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

Dataset read_dataset_csv(const std::string& path) {
  const auto lines = read_nonempty_lines(path);
  if (lines.size() < 2) throw ValidationError(path + ": dataset CSV needs a header and rows");

  const auto header = split_csv_line(lines.front());
  if (header.empty() || header.front() != "rep")
    throw ValidationError(path + ": first column must be 'rep'");
  int d = 0;
  std::size_t col = 1;
  while (col < header.size() && header[col] == "x" + std::to_string(d + 1)) {
    ++d;
    ++col;
  }
  int p = 0;
  while (col < header.size() && header[col] == "y" + std::to_string(p + 1)) {
    ++p;
    ++col;
  }
  if (d < 1 || p < 1 || col != header.size())
    throw ValidationError(path + ": header must be rep,x1..xd,y1..yp");

  struct Row {
    long rep;
    Vector coords;
    Vector response;
  };
  std::vector<Row> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_csv_line(lines[li]);
    if (static_cast<int>(fields.size()) != 1 + d + p)
      throw ValidationError(path + ": wrong field count on line " + std::to_string(li + 1));
    Row row;
    row.rep = parse_long(fields[0], path);
    row.coords = Vector(d);
    for (int k = 0; k < d; ++k) row.coords[k] = parse_double(fields[static_cast<std::size_t>(1 + k)], path);
    row.response = Vector(p);
    for (int j = 0; j < p; ++j)
      row.response[j] = parse_double(fields[static_cast<std::size_t>(1 + d + j)], path);
    rows.push_back(std::move(row));
  }

  // realization blocks: rep values 1..N, each a contiguous group
  std::size_t n = 0;
  while (n < rows.size() && rows[n].rep == 1) ++n;
  if (n == 0) throw ValidationError(path + ": realizations must be numbered from 1");
  if (rows.size() % n != 0)
    throw ValidationError(path + ": every realization must list the same locations");
  const std::size_t num_reps = rows.size() / n;

  Dataset data;
  data.locations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) data.locations.push_back(Location{rows[i].coords});
  data.realizations.assign(num_reps, Matrix(static_cast<Eigen::Index>(n), p));
  for (std::size_t r = 0; r < num_reps; ++r)
    for (std::size_t i = 0; i < n; ++i) {
      const Row& row = rows[r * n + i];
      if (row.rep != static_cast<long>(r + 1))
        throw ValidationError(path + ": realization blocks must be grouped and numbered 1..N");
      if (row.coords != data.locations[i].coords)
        throw ValidationError(path + ": locations differ between realization blocks");
      data.realizations[r].row(static_cast<Eigen::Index>(i)) = row.response;
    }
  data.validate();
  return data;
}

void write_locations_csv(const std::string& path, const std::vector<Location>& locations) {
  if (locations.empty()) throw ValidationError("write_locations_csv: no locations");
  const int d = locations.front().dim();
  std::ostringstream out;
  for (int k = 1; k <= d; ++k) out << (k > 1 ? "," : "") << 'x' << k;
  out << "\n";
  for (const auto& loc : locations) {
    if (loc.dim() != d) throw ValidationError("write_locations_csv: mixed dimensions");
    for (Eigen::Index k = 0; k < loc.coords.size(); ++k)
      out << (k > 0 ? "," : "") << format_full(loc.coords[k]);
    out << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<Location> read_locations_csv(const std::string& path) {
  const auto lines = read_nonempty_lines(path);
  if (lines.size() < 2) throw ValidationError(path + ": query CSV needs a header and rows");
  const auto header = split_csv_line(lines.front());
  int d = 0;
  while (d < static_cast<int>(header.size()) &&
         header[static_cast<std::size_t>(d)] == "x" + std::to_string(d + 1))
    ++d;
  if (d < 1 || d != static_cast<int>(header.size()))
    throw ValidationError(path + ": header must be x1..xd");
  std::vector<Location> out;
  out.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_csv_line(lines[li]);
    if (static_cast<int>(fields.size()) != d)
      throw ValidationError(path + ": wrong field count on line " + std::to_string(li + 1));
    Location loc;
    loc.coords = Vector(d);
    for (int k = 0; k < d; ++k) loc.coords[k] = parse_double(fields[static_cast<std::size_t>(k)], path);
    loc.validate();
    out.push_back(std::move(loc));
  }
  return out;
}

void write_predictions_csv(const std::string& path, const std::vector<Location>& queries,
                           const std::vector<Vector>& means,
                           const std::vector<Matrix>* covariances) {
  if (queries.size() != means.size())
    throw ValidationError("write_predictions_csv: query/mean count mismatch");
  if (covariances && covariances->size() != queries.size())
    throw ValidationError("write_predictions_csv: query/cov count mismatch");
  if (queries.empty()) throw ValidationError("write_predictions_csv: nothing to write");
  const int d = queries.front().dim();
  const int p = static_cast<int>(means.front().size());

  std::ostringstream out;
  for (int k = 1; k <= d; ++k) out << (k > 1 ? "," : "") << 'x' << k;
  for (int j = 1; j <= p; ++j) out << ",yhat" << j;
  if (covariances)
    for (int i = 1; i <= p; ++i)
      for (int j = 1; j <= p; ++j) out << ",cov" << i << '_' << j;
  out << "\n";
  for (std::size_t row = 0; row < queries.size(); ++row) {
    const auto& coords = queries[row].coords;
    for (Eigen::Index k = 0; k < coords.size(); ++k)
      out << (k > 0 ? "," : "") << format_full(coords[k]);
    for (Eigen::Index j = 0; j < means[row].size(); ++j) out << ',' << format_full(means[row][j]);
    if (covariances) {
      const Matrix& cov = (*covariances)[row];
      for (Eigen::Index i = 0; i < cov.rows(); ++i)
        for (Eigen::Index j = 0; j < cov.cols(); ++j) out << ',' << format_full(cov(i, j));
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_matrix_text(const std::string& path, const Matrix& m) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j > 0 ? " " : "") << format_full(m(i, j));
    out << "\n";
  }
  write_text_file(path, out.str());
}

Matrix read_matrix_text(const std::string& path) {
  const auto lines = read_nonempty_lines(path);
  if (lines.empty()) throw ValidationError(path + ": empty matrix file");
  std::vector<std::vector<double>> rows;
  for (const auto& line : lines) {
    std::istringstream stream(line);
    std::vector<double> row;
    std::string token;
    while (stream >> token) row.push_back(parse_double(token, path));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path + ": ragged matrix rows");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto& values = j["values"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(i, c));
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("values"))
    throw ValidationError("matrix JSON needs rows, cols, values");
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw ValidationError("matrix JSON value count mismatch");
  Matrix m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = values.at(idx++).get<double>();
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

void write_model_json(const std::string& path, const ModelFile& model) {
  nlohmann::json j;
  j["method"] = model.method;
  j["family"] = to_string(model.family);
  j["d"] = model.d;
  j["p"] = model.p;
  j["theta_hat"] = vector_to_json(model.theta_hat);
  j["gamma_hat"] = matrix_to_json(model.gamma_hat);
  if (!model.theta_bounds.empty()) {
    j["theta_bounds"]["lower"] = vector_to_json(model.theta_bounds.lower);
    j["theta_bounds"]["upper"] = vector_to_json(model.theta_bounds.upper);
  }
  if (model.partition) {
    j["partition"]["num_blocks"] = model.partition->num_blocks;
    j["partition"]["assignment"] = model.partition->assignment;
    j["partition"]["seed"] = model.partition->seed;
  }
  if (!model.independent.empty()) {
    auto& arr = j["independent"] = nlohmann::json::array();
    for (const auto& [theta, gamma] : model.independent) {
      nlohmann::json entry;
      entry["theta_hat"] = vector_to_json(theta);
      entry["gamma_hat"] = matrix_to_json(gamma);
      arr.push_back(std::move(entry));
    }
  }
  if (!model.diagnostics.is_null()) j["diagnostics"] = model.diagnostics;
  write_json_file(path, j);
}

ModelFile read_model_json(const std::string& path) {
  const auto j = read_json_file(path);
  ModelFile model;
  try {
    model.method = j.at("method").get<std::string>();
    model.family = family_from_string(j.at("family").get<std::string>());
    model.d = j.at("d").get<int>();
    model.p = j.at("p").get<int>();
    model.theta_hat = vector_from_json(j.at("theta_hat"));
    model.gamma_hat = matrix_from_json(j.at("gamma_hat"));
    if (j.contains("theta_bounds")) {
      model.theta_bounds.lower = vector_from_json(j.at("theta_bounds").at("lower"));
      model.theta_bounds.upper = vector_from_json(j.at("theta_bounds").at("upper"));
    }
    if (j.contains("partition")) {
      BlockPartition partition;
      partition.num_blocks = j.at("partition").at("num_blocks").get<int>();
      partition.assignment = j.at("partition").at("assignment").get<std::vector<int>>();
      partition.seed = j.at("partition").at("seed").get<std::uint64_t>();
      model.partition = std::move(partition);
    }
    if (j.contains("independent"))
      for (const auto& entry : j.at("independent"))
        model.independent.emplace_back(vector_from_json(entry.at("theta_hat")),
                                       matrix_from_json(entry.at("gamma_hat")));
    if (j.contains("diagnostics")) model.diagnostics = j.at("diagnostics");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed model file: " + e.what());
  }
  return model;
}

}  // namespace gsps
