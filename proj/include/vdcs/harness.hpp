#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vdcs/coherence.hpp"
#include "vdcs/config.hpp"
#include "vdcs/priors.hpp"
#include "vdcs/recovery.hpp"
#include "vdcs/sampling.hpp"
#include "vdcs/transforms.hpp"

namespace vdcs {

/// Everything a sweep shares across trials, built once from the config.
struct Experiment {
  ExperimentConfig config;
  /// Effective measurement basis on prior coordinates.
  UnitaryOperator F;
  Prior prior;
  /// Explicit prior for the oracle solver (union priors, small sparse priors).
  std::optional<SubspaceUnion> explicit_prior;
  /// Explicit difference set T = Q - Q when it is small enough to enumerate.
  std::optional<SubspaceUnion> difference_set;
  CoherenceVector alpha;
  SubspaceCountBounds counts;
  /// Fixed truth for signal = image (prior coordinates).
  std::optional<Vec> fixed_signal;
};

Experiment build_experiment(const ExperimentConfig& config);

SamplingPlan make_plan(const Experiment& experiment, const std::string& scheme);

/// Truth signal for a trial, unit norm, lying in the prior.
Vec draw_signal(const Experiment& experiment, std::uint64_t seed);

struct ExperimentRecord {
  std::string scheme;
  Index m = 0;
  double sigma = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double rre = 0.0;
  double objective = 0.0;
  double noise_factor = 0.0;
  double theorem_bound = 0.0;
  double corollary_bound = 0.0;
  double wall_time_ms = 0.0;
};

/// One recovery. Seeds: the signal depends on (master_seed, trial) only; the
/// draw, the noise and the solver on (master_seed, m index, trial). The scheme
/// never enters a seed, so schemes share random numbers.
ExperimentRecord run_trial(const Experiment& experiment, const SamplingPlan& plan, std::size_t m_index,
                           double sigma, int trial);

/// All (m, sigma, trial) cells for one scheme, in grid order.
std::vector<ExperimentRecord> run_denoise_sweep(const Experiment& experiment, const std::string& scheme,
                                                int threads = 1);
std::vector<ExperimentRecord> run_denoise_sweep(const ExperimentConfig& config, int threads = 1);

/// Optimized then uniform records on identical seeds.
std::vector<ExperimentRecord> compare_schemes(const Experiment& experiment, int threads = 1);

inline constexpr const char* kRecordHeader =
    "scheme,m,sigma,trial,seed,rre,objective,noise_factor,theorem_bound,corollary_bound,wall_time_ms";

std::string records_to_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> records_from_csv(const std::string& text);

struct CellSummary {
  std::string scheme;
  Index m = 0;
  double sigma = 0.0;
  int trials = 0;
  double geo_mean_rre = 0.0;
  double geo_std_error = 1.0;
  /// Entries clamped from 0 to 1e-15 before taking logs.
  int clamped = 0;
  /// Trials whose rre was not finite (solver failure); excluded from the statistics.
  int failed = 0;
  double geo_mean_corollary = 0.0;
};

struct GeometricStats {
  double geo_mean = 0.0;
  double geo_std_error = 1.0;
  int clamped = 0;
};

/// exp(mean log x) and exp(std(log x) / sqrt(count)); zeros clamped to 1e-15.
GeometricStats geometric_stats(const std::vector<double>& values);

/// Per (scheme, m, sigma) cell, in order of first appearance.
std::vector<CellSummary> aggregate_geometric(const std::vector<ExperimentRecord>& records);
std::string summary_to_csv(const std::vector<CellSummary>& cells);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
  double window_min = 0.0;
  double window_max = 0.0;
};

/// OLS of log y on log x over points with x in [lo, hi].
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points, double lo, double hi);

/// Smallest m whose value drops below half the value at the smallest m;
/// the last m when none does.
double transition_m(const std::vector<std::pair<double, double>>& curve);

/// The (m, geo_mean_rre) curve of one scheme and sigma.
std::vector<std::pair<double, double>> curve_of(const std::vector<CellSummary>& cells,
                                                const std::string& scheme, double sigma);

/// Slope over [fit_min, fit_max], defaulting to [4 m_transition, m_max].
SlopeFit fit_curve(const std::vector<std::pair<double, double>>& curve, double fit_min = 0.0,
                   double fit_max = 0.0);

/// Writes `<out>` (records), `<out>.summary.csv`, `<out>.slopes.csv` and
/// `<out>.manifest.txt`.
void write_sweep_outputs(const std::string& out, const ExperimentConfig& config,
                         const std::vector<ExperimentRecord>& records, const std::string& command);

}  // namespace vdcs
