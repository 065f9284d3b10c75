#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdcs/types.hpp"

namespace vdcs {

/// Calibrated constant C in sample_complexity; see tools/calibrate_rip.
inline constexpr double kCalibratedRipConstant = 1.0;

/// Experiment description read from a flat `key = value` file. Lines starting
/// with '#' are comments. Unknown keys are rejected.
struct ExperimentConfig {
  std::string prior = "sparse";  // sparse | union | generative
  Index n = 0;
  int dimension = 1;             // 1 or 2 (sparse prior on square images)
  Index k = 1;
  std::string sparsity_basis = "haar";  // haar | identity
  int haar_levels = 1;
  std::string measurement = "dft";      // dft | identity | haar
  std::string signal = "gaussian_sparse";  // piecewise | gaussian_sparse | image
  std::string image;
  std::string subspace_file;
  std::size_t subspace_count = 0;
  Index subspace_dim = 0;
  std::string generative_file;
  std::vector<Index> generative_widths;
  std::uint64_t prior_seed = 1;

  std::string scheme = "optimized";  // optimized | uniform | custom
  std::string custom_p_file;
  std::string coherence = "auto";    // auto | exact | upper_bound | empirical | file
  std::string coherence_file;
  Index coherence_sparsity = 0;      // 0 means 2k
  std::size_t coherence_latents = 256;

  std::vector<Index> m_grid;
  std::vector<double> sigma_grid;
  int trials = 1;
  std::uint64_t master_seed = 1;
  Field field = Field::complex;

  std::string solver = "auto";  // auto | oracle | two_stage | exhaustive | generative
  int solver_max_iters = 300;
  double solver_tolerance = 1e-10;
  int solver_restarts = 10;
  int solver_iterations = 2000;
  double solver_step = 1e-2;
  double solver_decay = 0.5;
  int solver_patience = 50;

  double bound_delta = 0.05;
  double rip_constant = kCalibratedRipConstant;
  double rip_delta = 0.1;
  bool timing = false;
  std::string output;
  double fit_min = 0.0;  // 0 selects the automatic window
  double fit_max = 0.0;
};

/// Throws ConfigError on unknown keys, malformed values, or inconsistent settings.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Every resolved key, one `key = value` line each, in a fixed order.
std::string config_to_text(const ExperimentConfig& config);

/// "a,b,c" or "log:lo:hi:count" (rounded, deduplicated, increasing).
std::vector<Index> parse_m_grid(const std::string& text);

}  // namespace vdcs
