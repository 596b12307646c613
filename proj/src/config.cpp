#include "elastorec/config.hpp"

#include <fstream>
#include <set>

namespace elastorec {

using nlohmann::json;

namespace {

// Typed accessor over one config object: every key read is recorded, values
// (or defaults) are echoed into the normalized copy, leftovers are rejected.
class Section {
 public:
  Section(const json& j, std::string path, json& norm)
      : j_(j), path_(std::move(path)), norm_(norm) {
    if (!j_.is_object())
      throw DataError("config: section " + path_ + " must be an object");
  }

  template <typename T>
  T get(const std::string& key, T def) {
    seen_.insert(key);
    T val = def;
    if (j_.contains(key)) {
      try {
        val = j_.at(key).get<T>();
      } catch (const json::exception&) {
        throw DataError("config: bad value for " + path_ + "." + key);
      }
    }
    norm_[key] = val;
    return val;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& sub(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return j_.contains(key) ? j_.at(key) : empty;
  }

  void finish() {
    for (auto& [key, v] : j_.items())
      if (!seen_.count(key))
        throw DataError("config: unknown key " + path_ + "." + key);
  }

 private:
  const json& j_;
  std::string path_;
  json& norm_;
  std::set<std::string> seen_;
};

} // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.raw = json::object();
  Section root(j, "$", c.raw);

  {
    c.raw["phantom"] = json::object();
    Section s(root.sub("phantom"), "phantom", c.raw["phantom"]);
    c.phantom.grid_size = s.get("grid", 64);
    c.phantom.fov_m = s.get("fov_m", 0.128);
    c.phantom.background_stiffness_pa = s.get("background_pa", 2000.0);
    c.phantom.density_kg_m3 = s.get("density", 1000.0);
    c.phantom.magnitude_contrast = s.get("magnitude_contrast", 0.8);
    c.phantom.static_phase_amplitude_rad = s.get("static_phase_rad", 1.0);
    c.phantom.noise_sigma = s.get("noise_sigma", 0.0);
    c.phantom.coils = s.get("coils", 8);
    if (s.has("inclusions")) {
      const json& arr = s.sub("inclusions");
      if (!arr.is_array()) throw DataError("config: phantom.inclusions must be an array");
      c.raw["phantom"]["inclusions"] = json::array();
      for (size_t i = 0; i < arr.size(); ++i) {
        json norm = json::object();
        Section inc(arr[i], "phantom.inclusions[" + std::to_string(i) + "]",
                    norm);
        Inclusion v;
        v.cx = inc.get("cx", 0.0);
        v.cy = inc.get("cy", 0.0);
        v.radius = inc.get("radius", 0.0);
        v.stiffness_pa = inc.get("stiffness_pa", 0.0);
        v.loss_pa = inc.get("loss_pa", 0.0);
        inc.finish();
        c.phantom.inclusions.push_back(v);
        c.raw["phantom"]["inclusions"].push_back(norm);
      }
    } else {
      c.raw["phantom"]["inclusions"] = json::array();
    }
    s.finish();
  }
  {
    c.raw["vibration"] = json::object();
    Section s(root.sub("vibration"), "vibration", c.raw["vibration"]);
    c.vibration.frequency_hz = s.get("frequency_hz", 60.0);
    c.vibration.n_offsets = s.get("offsets", 4);
    c.vibration.n_directions = s.get("directions", 3);
    // scales the default wave sources; 20 um reproduces them exactly
    double amp = s.get("amplitude_m", 20e-6);
    double sc = amp / 20e-6;
    c.vibration.wave_sources = {
        {1.0, 0.0, cd(20e-6 * sc, 0.0)},
        {0.0, 1.0, cd(0.0, 20e-6 * sc)},
        {std::cos(0.7), std::sin(0.7), cd(14e-6 * sc, 14e-6 * sc)}};
    c.vibration.wave_sources.resize(c.vibration.n_directions);
    s.finish();
  }
  {
    c.raw["meg"] = json::object();
    Section s(root.sub("meg"), "meg", c.raw["meg"]);
    c.meg.encoding_rad_per_m = s.get("encoding_rad_per_m", 1.25e5);
    s.finish();
  }
  {
    c.raw["trajectory"] = json::object();
    Section s(root.sub("trajectory"), "trajectory", c.raw["trajectory"]);
    c.traj_arms = s.get("arms", 5);
    c.traj_samples_per_arm = s.get("samples_per_arm", 1024);
    s.finish();
  }
  {
    c.raw["undersample"] = json::object();
    Section s(root.sub("undersample"), "undersample", c.raw["undersample"]);
    c.arms_per_rep = s.get("arms_per_rep", 1);
    s.finish();
  }
  {
    c.raw["sense"] = json::object();
    Section s(root.sub("sense"), "sense", c.raw["sense"]);
    c.sense.max_iter = s.get("max_iter", 50);
    c.sense.tol = s.get("tol", 1e-6);
    s.finish();
  }
  {
    c.raw["subspace"] = json::object();
    Section s(root.sub("subspace"), "subspace", c.raw["subspace"]);
    c.subspace.L = s.get("L", 12);
    c.subspace.lambda_tik = s.get("lambda_tik", -1.0);
    c.subspace.max_iter = s.get("max_iter", 50);
    c.subspace.center_radius = s.get("center_radius", -1.0);
    c.subspace.energy_weighted = s.get("energy_weighted", true);
    s.finish();
  }
  {
    c.raw["deep"] = json::object();
    Section s(root.sub("deep"), "deep", c.raw["deep"]);
    c.decoder.grid_n = c.phantom.grid_size;
    c.decoder.K = s.get("K", 3);
    c.decoder.L = s.get("L", 8);
    c.decoder.mlp_hidden = s.get("mlp_hidden", std::vector<int>{64, 64});
    c.decoder.c0 = s.get("c0", 16);
    c.decoder.min_channels = s.get("min_channels", 8);
    c.decoder.noise_sigma_feat = s.get("noise_sigma_feat", 0.05);
    c.decoder.activation = s.get<std::string>("activation", "tanh");
    c.train.iters = s.get("iters", 500);
    c.train.lr = s.get("lr", 1e-3);
    c.train.beta1 = s.get("beta1", 0.9);
    c.train.beta2 = s.get("beta2", 0.999);
    c.train.adam_eps = s.get("adam_eps", 1e-12);
    c.train.lambda_mag = s.get("lambda_mag", 1e-3);
    c.train.lambda_wave = s.get("lambda_wave", 1e-3);
    c.train.lambda_lat = s.get("lambda_lat", 1e-6);
    c.train.pair_budget = s.get("pair_budget", 0);
    c.train.isotropic_tv = s.get("isotropic_tv", false);
    c.train.nested_levels = s.get("nested_levels", true);
    s.finish();
  }
  {
    c.raw["wave"] = json::object();
    Section s(root.sub("wave"), "wave", c.raw["wave"]);
    c.wave.bulk_removal = s.get("bulk_removal", true);
    c.wave.unwrap = s.get("unwrap", true);
    c.wave.butterworth_cutoff = s.get("butterworth_cutoff", 100.0);
    c.wave.butterworth_order = s.get("butterworth_order", 4);
    c.wave.cutoff_in_rad_per_m = s.get("cutoff_in_rad_per_m", false);
    c.wave.gaussian_sigma = s.get("gaussian_sigma", 0.0);
    s.finish();
  }
  {
    c.raw["invert"] = json::object();
    Section s(root.sub("invert"), "invert", c.raw["invert"]);
    c.invert.median_filter = s.get("median_filter", true);
    c.invert.erode_voxels = s.get("erode_voxels", 3);
    s.finish();
  }
  root.finish();

  c.train.D = c.vibration.n_directions;
  c.train.P = c.vibration.n_offsets;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

} // namespace elastorec
