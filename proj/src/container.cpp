#include "elastorec/container.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace elastorec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

size_t dtype_size(const std::string& d) {
  if (d == "complex64-le") return 8;
  if (d == "float32-le") return 4;
  throw DataError("unknown dtype '" + d + "'");
}

size_t numel(const std::vector<long>& shape) {
  size_t n = 1;
  for (long s : shape) {
    if (s <= 0) throw DataError("non-positive array dimension");
    n *= (size_t)s;
  }
  return n;
}

void write_raw(const std::string& path, const void* data, size_t bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write(static_cast<const char*>(data), (std::streamsize)bytes);
  if (!f) throw DataError("short write to " + path);
}

std::vector<float> read_raw(const std::string& path, size_t count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::vector<float> buf(count);
  f.read(reinterpret_cast<char*>(buf.data()),
         (std::streamsize)(count * sizeof(float)));
  if ((size_t)f.gcount() != count * sizeof(float))
    throw DataError("short read from " + path);
  return buf;
}

} // namespace

Container Container::create(const std::string& dir) {
  fs::create_directories(dir);
  Container c;
  c.dir_ = dir;
  c.manifest_["schema_version"] = kSchemaVersion;
  c.manifest_["arrays"] = json::object();
  return c;
}

Container Container::open(const std::string& dir) {
  Container c;
  c.dir_ = dir;
  std::ifstream f(dir + "/manifest.json");
  if (!f) throw DataError("no manifest.json in " + dir);
  try {
    f >> c.manifest_;
  } catch (const json::exception& e) {
    throw DataError("bad manifest in " + dir + ": " + e.what());
  }
  if (!c.manifest_.contains("schema_version") ||
      c.manifest_["schema_version"] != kSchemaVersion)
    throw DataError("schema_version mismatch in " + dir);
  if (!c.manifest_.contains("arrays") || !c.manifest_["arrays"].is_object())
    throw DataError("manifest without array registry in " + dir);
  for (auto& [name, meta] : c.manifest_["arrays"].items()) {
    std::vector<long> shape = meta.at("shape").get<std::vector<long>>();
    std::string path = dir + "/" + meta.at("file").get<std::string>();
    std::error_code ec;
    auto sz = fs::file_size(path, ec);
    if (ec) throw DataError("registered array file missing: " + path);
    size_t want = numel(shape) * dtype_size(meta.at("dtype"));
    if (sz != want)
      throw DataError("byte length mismatch for array '" + name + "'");
  }
  return c;
}

void Container::put_complex(const std::string& name,
                            const std::vector<long>& shape, const cd* data) {
  size_t n = numel(shape);
  std::vector<float> buf(2 * n);
  for (size_t i = 0; i < n; ++i) {
    buf[2 * i] = (float)data[i].real();
    buf[2 * i + 1] = (float)data[i].imag();
  }
  std::string file = name + ".bin";
  write_raw(dir_ + "/" + file, buf.data(), buf.size() * sizeof(float));
  manifest_["arrays"][name] = {
      {"shape", shape}, {"dtype", "complex64-le"}, {"file", file}};
}

void Container::put_float(const std::string& name,
                          const std::vector<long>& shape, const double* data) {
  size_t n = numel(shape);
  std::vector<float> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = (float)data[i];
  std::string file = name + ".bin";
  write_raw(dir_ + "/" + file, buf.data(), buf.size() * sizeof(float));
  manifest_["arrays"][name] = {
      {"shape", shape}, {"dtype", "float32-le"}, {"file", file}};
}

bool Container::has(const std::string& name) const {
  return manifest_["arrays"].contains(name);
}

std::vector<long> Container::shape(const std::string& name) const {
  if (!has(name)) throw DataError("missing array '" + name + "' in " + dir_);
  return manifest_["arrays"][name].at("shape").get<std::vector<long>>();
}

std::string Container::dtype(const std::string& name) const {
  if (!has(name)) throw DataError("missing array '" + name + "' in " + dir_);
  return manifest_["arrays"][name].at("dtype").get<std::string>();
}

CVec Container::get_complex(const std::string& name,
                            std::vector<long>* shp) const {
  if (dtype(name) != "complex64-le")
    throw DataError("array '" + name + "' is not complex64-le");
  auto sh = shape(name);
  if (shp) *shp = sh;
  size_t n = numel(sh);
  auto file = manifest_["arrays"][name].at("file").get<std::string>();
  auto buf = read_raw(dir_ + "/" + file, 2 * n);
  CVec out(n);
  for (size_t i = 0; i < n; ++i) out[i] = cd(buf[2 * i], buf[2 * i + 1]);
  return out;
}

std::vector<double> Container::get_float(const std::string& name,
                                         std::vector<long>* shp) const {
  if (dtype(name) != "float32-le")
    throw DataError("array '" + name + "' is not float32-le");
  auto sh = shape(name);
  if (shp) *shp = sh;
  size_t n = numel(sh);
  auto file = manifest_["arrays"][name].at("file").get<std::string>();
  auto buf = read_raw(dir_ + "/" + file, n);
  return std::vector<double>(buf.begin(), buf.end());
}

void Container::copy_array(const std::string& name, Container& dst) const {
  if (!has(name)) throw DataError("missing array '" + name + "' in " + dir_);
  const auto& meta = manifest_["arrays"][name];
  auto file = meta.at("file").get<std::string>();
  fs::copy_file(dir_ + "/" + file, dst.dir_ + "/" + file,
                fs::copy_options::overwrite_existing);
  dst.manifest_["arrays"][name] = meta;
}

void Container::save() const {
  std::string tmp = dir_ + "/manifest.json.tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw DataError("cannot write manifest in " + dir_);
    f << manifest_.dump(2) << "\n";
  }
  fs::rename(tmp, dir_ + "/manifest.json");
}

std::string json_hash(const nlohmann::json& j) {
  std::string s = j.dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

} // namespace elastorec
