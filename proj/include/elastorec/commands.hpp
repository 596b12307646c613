#pragma once

#include <string>

#include "elastorec/container.hpp"

namespace elastorec {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pipeline stages. Each writes a dataset container into out_dir and copies
// the arrays later stages need, so any directory in the chain is
// self-describing. Partial outputs are removed when a stage throws.
void cmd_phantom(const std::string& config_path, const std::string& out_dir,
                 uint64_t seed);
void cmd_recon(const std::string& method, const std::string& data_dir,
               const std::string& out_dir, uint64_t seed);
void cmd_wave(const std::string& recon_dir, const std::string& out_dir);
void cmd_invert(const std::string& wave_dir, const std::string& out_dir);
void cmd_eval(const std::string& truth_dir, const std::string& stiff_dir,
              const std::string& report_path);
// array_path = <container dir>/<array name>; 3D arrays plot slice 0;
// window = "" (auto 1st-99th percentile) or "lo:hi".
void cmd_plot(const std::string& array_path, const std::string& png_path,
              const std::string& window);

} // namespace elastorec
