#include <sweep/io.hpp>

#include <fstream>
#include <sstream>

namespace sweep::io {

FormatError::FormatError(std::string path, const std::string& message)
    : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw FormatError(path, "expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(path + "/" + std::to_string(i), "expected a number");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw FormatError(path, "expected a nonempty array of rows");
  const auto rows = static_cast<Index>(j.size());
  Matrix m;
  for (Index i = 0; i < rows; ++i) {
    const std::string row_path = path + "/" + std::to_string(i);
    const Vector row = vector_from_json(j[static_cast<std::size_t>(i)], row_path);
    if (i == 0) m.resize(rows, row.size());
    if (row.size() != m.cols()) throw FormatError(row_path, "ragged row");
    m.row(i) = row.transpose();
  }
  return m;
}

json kernel_to_json(const KernelMatrix& k) {
  return {{"m", k.size()}, {"entries", matrix_to_json(k.entries())}};
}

KernelMatrix kernel_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw FormatError(path, "expected an object");
  if (!j.contains("m") || !j["m"].is_number_integer()) throw FormatError(path + "/m", "expected an integer");
  if (!j.contains("entries")) throw FormatError(path + "/entries", "missing");
  Matrix e = matrix_from_json(j["entries"], path + "/entries");
  const auto m = j["m"].get<Index>();
  if (e.rows() != m || e.cols() != m) throw FormatError(path + "/entries", "shape does not match m");
  try {
    return KernelMatrix(std::move(e));
  } catch (const InvalidKernel& err) {
    throw FormatError(path + "/entries", err.what());
  }
}

json measure_to_json(const Measure& mu) {
  return {{"m", mu.size()}, {"weights", vector_to_json(mu.weights())}};
}

Measure measure_from_json(const json& j, Index m, const std::string& path) {
  const json* weights = &j;
  if (j.is_object()) {
    if (!j.contains("weights")) throw FormatError(path + "/weights", "missing");
    weights = &j["weights"];
  }
  Vector w = vector_from_json(*weights, path + "/weights");
  if (w.size() != m) {
    throw FormatError(path + "/weights", "expected " + std::to_string(m) + " weights, got " +
                                             std::to_string(w.size()));
  }
  return Measure(std::move(w));
}

json support_to_json(const SupportSet& a) {
  return {{"indices", a.indices()}, {"label", a.label()}};
}

SupportSet support_from_json(const json& j, Index m, const std::string& path) {
  const json* idx = &j;
  std::string label;
  if (j.is_object()) {
    if (!j.contains("indices")) throw FormatError(path + "/indices", "missing");
    idx = &j["indices"];
    label = j.value("label", "");
  }
  if (!idx->is_array()) throw FormatError(path, "expected an array of node indices");
  std::vector<Index> out;
  for (const auto& v : *idx) {
    if (!v.is_number_integer()) throw FormatError(path, "node indices must be integers");
    out.push_back(v.get<Index>());
  }
  try {
    return SupportSet(std::move(out), m, std::move(label));
  } catch (const std::invalid_argument& err) {
    throw FormatError(path, err.what());
  }
}

Matrix load_matrix_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError(file.string(), "cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(file.string() + ":" + std::to_string(rows.size() + 1),
                          "not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(file.string() + ":" + std::to_string(rows.size() + 1), "ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(file.string(), "empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_points_csv(const std::filesystem::path& file, const Matrix& points) {
  std::ofstream out(file);
  if (!out) throw FormatError(file.string(), "cannot open for writing");
  out.precision(17);
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << points(i, j);
    out << '\n';
  }
}

json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError(file.string(), "cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw FormatError(file.string(), err.what());
  }
}

void write_json_file(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw FormatError(file.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
}

}  // namespace sweep::io
