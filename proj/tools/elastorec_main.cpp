#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "elastorec/commands.hpp"

using namespace elastorec;

int main(int argc, char** argv) {
  CLI::App app{"elastorec: synthetic MRE reconstruction pipeline"};
  app.require_subcommand(1);

  // serial implementation; the env var is validated and acts as an upper
  // bound that the current code never exceeds
  if (const char* tn = std::getenv("ELASTOREC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(tn, &end, 10);
    if (!end || *end || v < 1) {
      std::cerr << "ELASTOREC_THREADS must be a positive integer\n";
      return 2;
    }
  }

  std::string config, in_dir, out_dir, method = "sense", array_path, png_path,
                                       window, report_path, truth_dir;
  uint64_t seed = 1;

  auto* phantom = app.add_subcommand("phantom", "simulate a phantom dataset");
  phantom->add_option("--config", config, "experiment config JSON")
      ->required();
  phantom->add_option("--out", out_dir, "output container")->required();
  phantom->add_option("--seed", seed, "noise seed");

  auto* recon = app.add_subcommand("recon", "reconstruct an image series");
  recon->add_option("--method", method, "sense|subspace|deep")->required();
  recon->add_option("--in", in_dir, "phantom container")->required();
  recon->add_option("--out", out_dir, "output container")->required();
  recon->add_option("--seed", seed, "training seed");

  auto* wave = app.add_subcommand("wave", "extract harmonic displacement");
  wave->add_option("--in", in_dir, "recon container")->required();
  wave->add_option("--out", out_dir, "output container")->required();

  auto* invert = app.add_subcommand("invert", "invert to shear stiffness");
  invert->add_option("--in", in_dir, "wave container")->required();
  invert->add_option("--out", out_dir, "output container")->required();

  auto* eval = app.add_subcommand("eval", "write the evaluation report");
  eval->add_option("--truth", truth_dir, "phantom container")->required();
  eval->add_option("--in", in_dir, "recon/invert container")->required();
  eval->add_option("--out", report_path, "report JSON path")->required();

  auto* plot = app.add_subcommand("plot", "export an array as grayscale PNG");
  plot->add_option("--in", array_path, "<container dir>/<array name>")
      ->required();
  plot->add_option("--png", png_path, "output PNG path")->required();
  plot->add_option("--window", window, "lo:hi (default: 1st-99th percentile)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (phantom->parsed()) cmd_phantom(config, out_dir, seed);
    if (recon->parsed()) cmd_recon(method, in_dir, out_dir, seed);
    if (wave->parsed()) cmd_wave(in_dir, out_dir);
    if (invert->parsed()) cmd_invert(in_dir, out_dir);
    if (eval->parsed()) cmd_eval(truth_dir, in_dir, report_path);
    if (plot->parsed()) cmd_plot(array_path, png_path, window);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
