#pragma once

#include <string>

#include "elastorec/core.hpp"
#include "json.hpp" // vendored nlohmann single header

namespace elastorec {

// Error taxonomy for the CLI exit codes (3 = data, 4 = numerical).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset container: a directory holding manifest.json plus raw row-major
// little-endian binaries ("complex64-le" float32 pairs, "float32-le").
class Container {
 public:
  static Container create(const std::string& dir);
  static Container open(const std::string& dir); // validates the registry

  void put_complex(const std::string& name, const std::vector<long>& shape,
                   const cd* data);
  void put_float(const std::string& name, const std::vector<long>& shape,
                 const double* data);
  CVec get_complex(const std::string& name,
                   std::vector<long>* shape = nullptr) const;
  std::vector<double> get_float(const std::string& name,
                                std::vector<long>* shape = nullptr) const;
  bool has(const std::string& name) const;
  std::vector<long> shape(const std::string& name) const;
  std::string dtype(const std::string& name) const;

  // forwards one array (metadata + file) into another container
  void copy_array(const std::string& name, Container& dst) const;

  void save() const; // writes manifest.json (sorted keys, no timestamps)

  const std::string& dir() const { return dir_; }
  nlohmann::json& manifest() { return manifest_; }
  const nlohmann::json& manifest() const { return manifest_; }

 private:
  std::string dir_;
  nlohmann::json manifest_;
};

// FNV-1a hash of a canonical JSON dump, as fixed-width hex.
std::string json_hash(const nlohmann::json& j);

} // namespace elastorec
