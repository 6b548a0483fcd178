#pragma once

// JSON and CSV serialization for kernels, measures and support sets.
//
//   kernel:  {"m": int, "entries": [[...], ...]}
//   measure: {"m": int, "weights": [...]}
//   support: {"indices": [...], "label": "..."}
//
// Kernel matrices also load from header-free, row-major CSV.

#include <sweep/core.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>

namespace sweep::io {

using json = nlohmann::json;

/// Malformed input. `path` is a JSON-pointer-like location of the offending item.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& path);
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const std::string& path);

json kernel_to_json(const KernelMatrix& k);
KernelMatrix kernel_from_json(const json& j, const std::string& path = "/kernel");
json measure_to_json(const Measure& mu);
Measure measure_from_json(const json& j, Index m, const std::string& path = "/omega");
json support_to_json(const SupportSet& a);
SupportSet support_from_json(const json& j, Index m, const std::string& path = "/A");

Matrix load_matrix_csv(const std::filesystem::path& file);
void write_points_csv(const std::filesystem::path& file, const Matrix& points);

json read_json_file(const std::filesystem::path& file);
/// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& file, const json& j);

}  // namespace sweep::io
