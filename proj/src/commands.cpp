#include "elastorec/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "elastorec/config.hpp"
#include "elastorec/fftutil.hpp"
#include "elastorec/linrec.hpp"
#include "elastorec/metrics.hpp"
#include "elastorec/png_io.hpp"
#include "elastorec/train.hpp"
#include "elastorec/wavestiff.hpp"

namespace elastorec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "elastorec 0.1.0";

// Removes whatever a failed stage managed to write into out_dir.
class OutputGuard {
 public:
  explicit OutputGuard(const std::string& dir) : dir_(dir) {
    existed_ = fs::exists(dir);
    if (existed_)
      for (const auto& e : fs::directory_iterator(dir))
        before_.insert(e.path().filename().string());
  }
  ~OutputGuard() {
    if (armed_) return;
    std::error_code ec;
    if (!existed_) {
      fs::remove_all(dir_, ec);
      return;
    }
    for (const auto& e : fs::directory_iterator(dir_, ec))
      if (!before_.count(e.path().filename().string()))
        fs::remove_all(e.path(), ec);
  }
  void commit() { armed_ = true; }

 private:
  std::string dir_;
  bool existed_ = false, armed_ = false;
  std::set<std::string> before_;
};

std::vector<double> to_real(const std::vector<uint8_t>& v) {
  return std::vector<double>(v.begin(), v.end());
}

ExperimentConfig config_from(const Container& c) {
  if (!c.manifest().contains("config"))
    throw DataError("container " + c.dir() + " carries no config");
  return parse_config(c.manifest()["config"]);
}

Grid grid_from(const Container& c) {
  const json& g = c.manifest().at("grid");
  return Grid{g.at("n").get<int>(), g.at("fov_m").get<double>()};
}

// trajectory and selection are reproduced from manifest parameters so every
// stage works with exact double-precision coordinates
Trajectory traj_from(const Container& c, const Grid& grid) {
  const json& m = c.manifest().at("meta");
  return make_spiral(m.at("traj_arms").get<int>(),
                     m.at("traj_samples_per_arm").get<int>(), grid.fov,
                     grid.n);
}

KSpaceSet kspace_from(const Container& c, const Grid& grid) {
  KSpaceSet ks;
  ks.traj = traj_from(c, grid);
  std::vector<long> shape;
  ks.data = c.get_complex("kspace", &shape);
  if (shape.size() != 3) throw DataError("kspace must be [T,C,m]");
  ks.T = (int)shape[0];
  ks.C = (int)shape[1];
  const json& us = c.manifest().at("undersampling");
  ks.sel = us.at("sel").get<std::vector<std::vector<int>>>();
  if ((int)ks.sel.size() != ks.T)
    throw DataError("undersampling map does not match repetition count");
  ks.arms_kept = (int)ks.sel[0].size();
  if ((long)ks.samples_per_rep() != shape[2])
    throw DataError("kspace sample count does not match selection map");
  return ks;
}

CoilSet coils_from(const Container& c) {
  CoilSet coils;
  std::vector<long> shape;
  coils.data = c.get_complex("coil_maps", &shape);
  if (shape.size() != 3 || shape[1] != shape[2])
    throw DataError("coil_maps must be [C,n,n]");
  coils.C = (int)shape[0];
  coils.n = (int)shape[1];
  return coils;
}

void forward_arrays(const Container& src, Container& dst) {
  // everything downstream stages or eval may need
  for (const char* name :
       {"truth_images", "magnitude", "stiffness", "loss_map", "region",
        "static_phase", "recon", "displacement"})
    if (src.has(name)) src.copy_array(name, dst);
  for (const char* key : {"grid", "meta", "config", "undersampling",
                          "provenance", "recon_stats"})
    if (src.manifest().contains(key))
      dst.manifest()[key] = src.manifest()[key];
}

// Chebyshev-ball erosion of the mask {region == id}.
std::vector<uint8_t> eroded_region_mask(const std::vector<double>& region,
                                        int n, int id, int radius) {
  std::vector<uint8_t> out((size_t)n * n, 0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if ((int)std::lround(region[(size_t)y * n + x]) != id) continue;
      bool keep = y >= radius && x >= radius && y < n - radius &&
                  x < n - radius;
      for (int dy = -radius; keep && dy <= radius; ++dy)
        for (int dx = -radius; keep && dx <= radius; ++dx)
          if ((int)std::lround(region[(size_t)(y + dy) * n + x + dx]) != id)
            keep = false;
      if (keep) out[(size_t)y * n + x] = 1;
    }
  return out;
}

json region_medians(const std::vector<double>& mu,
                    const std::vector<double>& region, int n,
                    const std::vector<uint8_t>& valid, int erode) {
  int nregions = 0;
  for (double r : region) nregions = std::max(nregions, (int)std::lround(r));
  json out = json::array();
  for (int id = 0; id <= nregions; ++id) {
    auto mask = eroded_region_mask(region, n, id, erode);
    size_t kept = 0;
    for (size_t p = 0; p < mask.size(); ++p) {
      mask[p] = mask[p] && valid[p];
      kept += mask[p];
    }
    json entry;
    entry["region"] = id;
    entry["voxels"] = kept;
    entry["median_stiffness_pa"] =
        kept ? json(median_stiffness(mu, mask)) : json(nullptr);
    out.push_back(entry);
  }
  return out;
}

void gaussian_smooth(CVec& field, int n, double dx, double sigma_vox) {
  if (sigma_vox <= 0.0) return;
  const double sm = sigma_vox * dx;
  CVec spec(field.size());
  fftu::fft2(n, field.data(), spec.data(), -1);
  for (int qy = 0; qy < n; ++qy) {
    int fy = qy <= n / 2 ? qy : qy - n;
    for (int qx = 0; qx < n; ++qx) {
      int fx = qx <= n / 2 ? qx : qx - n;
      double k = std::hypot(fx, fy) / (n * dx);
      spec[(size_t)qy * n + qx] *=
          std::exp(-2.0 * M_PI * M_PI * sm * sm * k * k);
    }
  }
  fftu::fft2(n, spec.data(), field.data(), +1);
  for (cd& v : field) v *= 1.0 / field.size();
}

} // namespace

void cmd_phantom(const std::string& config_path, const std::string& out_dir,
                 uint64_t seed) {
  ExperimentConfig cfg = load_config(config_path);
  OutputGuard guard(out_dir);
  Container out = Container::create(out_dir);

  PhantomTruth truth = make_phantom(cfg.phantom);
  synth_wavefield(truth, cfg.vibration);
  encode_repetitions(truth, cfg.vibration, cfg.meg);
  Trajectory traj = make_spiral(cfg.traj_arms, cfg.traj_samples_per_arm,
                                cfg.phantom.fov_m, cfg.phantom.grid_size);
  KSpaceSet full = simulate_kspace(truth.images, truth.coil_maps, traj,
                                   cfg.phantom.noise_sigma, seed);
  KSpaceSet ks = undersample(full, cfg.arms_per_rep);

  const int n = truth.grid.n;
  const long ln = n;
  out.put_float("stiffness", {ln, ln}, truth.stiffness.data());
  out.put_float("loss_map", {ln, ln}, truth.loss_map.data());
  out.put_float("magnitude", {ln, ln}, truth.magnitude.data());
  out.put_float("static_phase", {ln, ln}, truth.static_phase.data());
  auto region = to_real(truth.region);
  out.put_float("region", {ln, ln}, region.data());
  out.put_complex("coil_maps", {truth.coil_maps.C, ln, ln},
                  truth.coil_maps.data.data());
  CVec disp;
  for (const CVec& u : truth.displacement)
    disp.insert(disp.end(), u.begin(), u.end());
  out.put_complex("displacement", {(long)truth.displacement.size(), ln, ln},
                  disp.data());
  out.put_complex("truth_images", {truth.images.T, ln, ln},
                  truth.images.data.data());
  out.put_complex("kspace", {ks.T, ks.C, ks.samples_per_rep()},
                  ks.data.data());
  out.put_float("traj_kx", {traj.arm_count, traj.samples_per_arm},
                traj.kx.data());
  out.put_float("traj_ky", {traj.arm_count, traj.samples_per_arm},
                traj.ky.data());
  out.put_float("traj_dcf", {traj.arm_count, traj.samples_per_arm},
                traj.dcf.data());

  json& man = out.manifest();
  man["grid"] = {{"n", n},
                 {"fov_m", truth.grid.fov},
                 {"voxel_m", truth.grid.dx()}};
  man["config"] = cfg.raw;
  man["provenance"] = {{"seed", seed},
                       {"config_hash", json_hash(cfg.raw)},
                       {"tool_version", kToolVersion}};
  man["undersampling"] = {{"arms_per_rep", cfg.arms_per_rep},
                          {"sel", ks.sel}};
  man["meta"] = {{"frequency_hz", cfg.vibration.frequency_hz},
                 {"offsets", cfg.vibration.n_offsets},
                 {"directions", cfg.vibration.n_directions},
                 {"gamma_enc", cfg.meg.encoding_rad_per_m},
                 {"density", cfg.phantom.density_kg_m3},
                 {"noise_sigma", cfg.phantom.noise_sigma},
                 {"traj_arms", cfg.traj_arms},
                 {"traj_samples_per_arm", cfg.traj_samples_per_arm},
                 {"nyquist_warning", traj.nyquist_warning},
                 {"region_stiffness", truth.region_stiffness},
                 {"region_wavenumber", truth.region_wavenumber}};
  out.save();
  guard.commit();
}

void cmd_recon(const std::string& method, const std::string& data_dir,
               const std::string& out_dir, uint64_t seed) {
  if (method != "sense" && method != "subspace" && method != "deep")
    throw UsageError("unknown recon method '" + method +
                     "' (expected sense|subspace|deep)");
  Container in = Container::open(data_dir);
  ExperimentConfig cfg = config_from(in);
  Grid grid = grid_from(in);
  KSpaceSet ks = kspace_from(in, grid);
  CoilSet coils = coils_from(in);

  OutputGuard guard(out_dir);
  Container out = Container::create(out_dir);

  json stats;
  stats["method"] = method;
  ImageSeries series;
  if (method == "sense") {
    std::vector<CGReport> reports;
    series = cg_sense(ks, coils, grid, cfg.sense, &reports);
    json reps = json::array();
    for (const auto& r : reports)
      reps.push_back({{"iterations", r.iterations},
                      {"final_residual",
                       r.residuals.empty() ? 0.0 : r.residuals.back()},
                      {"diverged", r.diverged}});
    stats["cg"] = reps;
  } else if (method == "subspace") {
    LatentMatrix V =
        temporal_basis(ks, grid, cfg.subspace.L, cfg.subspace.center_radius,
                       cfg.subspace.energy_weighted);
    CGReport report;
    auto [U, s] = subspace_recon(ks, coils, grid, V, cfg.subspace.lambda_tik,
                                 cfg.subspace.max_iter, &report);
    series = std::move(s);
    stats["L"] = cfg.subspace.L;
    stats["iterations"] = report.iterations;
    stats["diverged"] = report.diverged;
    out.put_complex("spatial_coeffs", {(long)U.N, (long)U.L}, U.U.data());
  } else {
    LatentMatrix v0 = temporal_basis(ks, grid, cfg.decoder.L, -1.0, true);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = seed;
    TrainResult res = train(ks, coils, grid, cfg.decoder, tcfg, v0);
    if (res.aborted)
      throw NumericalError("training hit a non-finite loss at iteration " +
                           std::to_string(res.iterations));
    series = std::move(res.series);
    stats["iterations"] = res.iterations;
    stats["lambda_mag_eff"] = res.lambda_mag_eff;
    stats["lambda_wave_eff"] = res.lambda_wave_eff;
    stats["lambda_lat_eff"] = res.lambda_lat_eff;
    stats["loss_first"] = res.trace.total.front();
    stats["loss_last"] = res.trace.total.back();
    std::vector<double> trace;
    std::ofstream csv(out_dir + "/losstrace.csv");
    csv << "iteration,dc,magn,wave,latent,total\n";
    for (size_t i = 0; i < res.trace.total.size(); ++i) {
      csv << i << ',' << res.trace.dc[i] << ',' << res.trace.mag[i] << ','
          << res.trace.wave[i] << ',' << res.trace.lat[i] << ','
          << res.trace.total[i] << '\n';
      trace.insert(trace.end(),
                   {res.trace.dc[i], res.trace.mag[i], res.trace.wave[i],
                    res.trace.lat[i], res.trace.total[i]});
    }
    out.put_float("loss_trace", {(long)res.trace.total.size(), 5},
                  trace.data());
  }

  for (const cd& z : series.data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericalError("non-finite values in the reconstruction");

  forward_arrays(in, out);
  out.put_complex("recon", {series.T, series.n, series.n},
                  series.data.data());
  out.manifest()["recon_stats"] = stats;
  out.manifest()["provenance"]["recon_seed"] = seed;
  out.save();
  guard.commit();
}

void cmd_wave(const std::string& recon_dir, const std::string& out_dir) {
  Container in = Container::open(recon_dir);
  ExperimentConfig cfg = config_from(in);
  Grid grid = grid_from(in);
  const json& meta = in.manifest().at("meta");
  const int D = meta.at("directions").get<int>();
  const int P = meta.at("offsets").get<int>();
  const double gamma = meta.at("gamma_enc").get<double>();

  std::vector<long> shape;
  ImageSeries series;
  series.data = in.get_complex("recon", &shape);
  if (shape.size() != 3) throw DataError("recon must be [T,n,n]");
  series.T = (int)shape[0];
  series.n = (int)shape[1];
  if (series.T != D * 2 * P)
    throw DataError("repetition count does not match directions/offsets");

  OutputGuard guard(out_dir);
  Container out = Container::create(out_dir);

  const int n = series.n;
  const size_t npix = (size_t)n * n;
  // work on the doubled phase: half-angle differencing wraps modulo pi, so
  // bulk removal + unwrapping run on 2*phi and the result is halved
  std::vector<std::vector<double>> phi((size_t)D * P);
  for (int d = 0; d < D; ++d)
    for (int p = 0; p < P; ++p) {
      const cd* pos = series.rep(rep_encode(d, +1, p, P));
      const cd* neg = series.rep(rep_encode(d, -1, p, P));
      std::vector<double> psi(npix);
      for (size_t q = 0; q < npix; ++q)
        psi[q] = std::arg(pos[q] * std::conj(neg[q]));
      if (cfg.wave.bulk_removal) psi = remove_bulk(psi, n);
      if (cfg.wave.unwrap) psi = unwrap_laplacian(psi, n);
      for (double& v : psi) v *= 0.5;
      phi[(size_t)d * P + p] = std::move(psi);
    }

  HarmonicField field =
      harmonic_extract(phi, n, D, P, gamma, grid.dx());
  for (CVec& u : field.u) {
    butterworth_lowpass(u, n, grid.dx(), cfg.wave.butterworth_cutoff,
                        cfg.wave.butterworth_order,
                        cfg.wave.cutoff_in_rad_per_m);
    gaussian_smooth(u, n, grid.dx(), cfg.wave.gaussian_sigma);
  }

  CVec flat;
  for (const CVec& u : field.u) flat.insert(flat.end(), u.begin(), u.end());
  forward_arrays(in, out);
  out.put_complex("wavefield", {(long)D, (long)n, (long)n}, flat.data());
  out.save();
  guard.commit();
}

void cmd_invert(const std::string& wave_dir, const std::string& out_dir) {
  Container in = Container::open(wave_dir);
  ExperimentConfig cfg = config_from(in);
  Grid grid = grid_from(in);
  const json& meta = in.manifest().at("meta");
  const double omega = 2.0 * M_PI * meta.at("frequency_hz").get<double>();
  const double density = meta.at("density").get<double>();

  std::vector<long> shape;
  CVec flat = in.get_complex("wavefield", &shape);
  if (shape.size() != 3) throw DataError("wavefield must be [D,n,n]");
  const int D = (int)shape[0], n = (int)shape[1];
  HarmonicField field;
  field.n = n;
  field.dx = grid.dx();
  field.u.resize(D);
  for (int d = 0; d < D; ++d)
    field.u[d] = CVec(flat.begin() + (size_t)d * n * n,
                      flat.begin() + (size_t)(d + 1) * n * n);

  OutputGuard guard(out_dir);
  Container out = Container::create(out_dir);

  ModulusMap g;
  try {
    g = invert_aide(field, omega, density);
  } catch (const std::runtime_error& e) {
    throw NumericalError(e.what());
  }
  std::vector<double> mu = stiffness(g);
  if (cfg.invert.median_filter) mu = median_filter(mu, n, 3);

  forward_arrays(in, out);
  out.put_complex("Gstar", {(long)n, (long)n}, g.Gstar.data());
  out.put_float("mu", {(long)n, (long)n}, mu.data());
  auto valid = to_real(g.valid);
  out.put_float("valid", {(long)n, (long)n}, valid.data());

  json stats;
  double frac = 0.0;
  for (double v : valid) frac += v;
  stats["valid_fraction"] = frac / valid.size();
  if (out.has("region")) {
    auto region = out.get_float("region");
    stats["medians"] =
        region_medians(mu, region, n, g.valid, cfg.invert.erode_voxels);
  }
  out.manifest()["invert_stats"] = stats;
  out.save();
  guard.commit();
}

void cmd_eval(const std::string& truth_dir, const std::string& stiff_dir,
              const std::string& report_path) {
  Container truth = Container::open(truth_dir);
  Container rec = Container::open(stiff_dir);

  std::vector<long> shape;
  ImageSeries ref;
  ref.data = truth.get_complex("truth_images", &shape);
  ref.T = (int)shape[0];
  ref.n = (int)shape[1];
  ImageSeries hat;
  hat.data = rec.get_complex(rec.has("recon") ? "recon" : "truth_images",
                             &shape);
  hat.T = (int)shape[0];
  hat.n = (int)shape[1];
  SeriesError err = series_nrmse(hat, ref);

  json report;
  report["schema_version"] = 1;
  report["nrmse"] = {{"aggregate", err.aggregate},
                     {"per_repetition", err.per_rep}};

  const int n = ref.n;
  auto region = truth.get_float("region");
  auto truth_mu = truth.manifest().at("meta").at("region_stiffness")
                      .get<std::vector<double>>();
  std::vector<double> mu = rec.has("mu") ? rec.get_float("mu")
                                         : rec.get_float("stiffness");
  std::vector<uint8_t> valid((size_t)n * n, 1);
  if (rec.has("valid")) {
    auto v = rec.get_float("valid");
    for (size_t p = 0; p < v.size(); ++p) valid[p] = v[p] > 0.5;
  }
  int erode = 3;
  if (rec.manifest().contains("config"))
    erode = config_from(rec).invert.erode_voxels;
  json med = region_medians(mu, region, n, valid, erode);
  for (auto& entry : med) {
    int id = entry.at("region").get<int>();
    entry["truth_pa"] = id < (int)truth_mu.size() ? json(truth_mu[id])
                                                  : json(nullptr);
    if (id < (int)truth_mu.size() &&
        !entry.at("median_stiffness_pa").is_null())
      entry["delta_pa"] =
          entry.at("median_stiffness_pa").get<double>() - truth_mu[id];
  }
  report["stiffness"] = med;

  if (rec.manifest().contains("recon_stats"))
    report["recon_stats"] = rec.manifest()["recon_stats"];
  if (rec.manifest().contains("provenance"))
    report["provenance"] = rec.manifest()["provenance"];

  std::ofstream f(report_path, std::ios::trunc);
  if (!f) throw DataError("cannot write report " + report_path);
  f << report.dump(2) << "\n";
}

void cmd_plot(const std::string& array_path, const std::string& png_path,
              const std::string& window) {
  auto slash = array_path.find_last_of('/');
  if (slash == std::string::npos)
    throw UsageError("array path must be <container dir>/<array name>");
  Container c = Container::open(array_path.substr(0, slash));
  std::string name = array_path.substr(slash + 1);
  auto shape = c.shape(name);
  if (shape.size() != 2 && shape.size() != 3)
    throw DataError("cmd_plot supports 2D arrays or slice 0 of 3D arrays");
  const int h = (int)shape[shape.size() - 2], w = (int)shape.back();
  const size_t npix = (size_t)h * w;

  std::vector<double> img;
  if (c.dtype(name) == "complex64-le") {
    CVec z = c.get_complex(name);
    img.resize(npix);
    for (size_t p = 0; p < npix; ++p) img[p] = std::abs(z[p]); // slice 0
  } else {
    auto v = c.get_float(name);
    img.assign(v.begin(), v.begin() + npix);
  }

  double lo = 0.0, hi = 0.0;
  if (!window.empty()) {
    auto colon = window.find(':');
    if (colon == std::string::npos)
      throw UsageError("window must be lo:hi");
    try {
      lo = std::stod(window.substr(0, colon));
      hi = std::stod(window.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("window must be lo:hi with numeric bounds");
    }
    if (hi <= lo) throw UsageError("window requires hi > lo");
  }
  write_png_gray(png_path, img, w, h, lo, hi);
}

} // namespace elastorec
