#include "vdcs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "vdcs/csv.hpp"
#include "vdcs/image.hpp"
#include "vdcs/rng.hpp"

namespace vdcs {

namespace {

Index square_side(Index n) {
  const Index side = Index(std::llround(std::sqrt(double(n))));
  if (side * side != n) throw ConfigError("dimension = 2 needs n to be a perfect square");
  return side;
}

UnitaryOperator basis_operator(const std::string& kind, Index n, int dimension, int levels) {
  try {
    if (kind == "identity") return make_identity_operator(n);
    if (kind == "dft") return dimension == 2 ? make_dft2d_operator(square_side(n)) : make_dft_operator(n);
    return dimension == 2 ? make_haar2d_operator(square_side(n), levels) : make_haar_operator(n, levels);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("cannot build ") + kind + " operator: " + e.what());
  }
}

CoherenceVector coherence_from_file(const std::string& path, Index n) {
  CoherenceVector alpha = coherence_from_csv(csv::read_file(path));
  if (alpha.alpha.size() != n) throw ConfigError("coherence file '" + path + "' has the wrong length");
  return alpha;
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  const std::string& mode = config.coherence;
  if (config.prior == "sparse") {
    ExperimentConfig c = config;
    std::optional<Image> image;
    if (c.signal == "image") {
      image = load_image_pgm(c.image);
      c.n = image->pixels.size();
      c.dimension = 2;
    }
    if (c.k > c.n) throw ConfigError("k exceeds n");
    if (c.signal == "piecewise" && c.sparsity_basis != "haar")
      throw ConfigError("signal = piecewise needs sparsity_basis = haar");
    const UnitaryOperator W = basis_operator(c.sparsity_basis, c.n, c.dimension, c.haar_levels);
    const UnitaryOperator Phi = basis_operator(c.measurement, c.n, c.dimension, c.haar_levels);
    Experiment e{c, compose_measurement_basis(Phi, W), SparsePrior(c.n, c.k), {}, {}, {}, {}, {}};
    if (log_binomial(c.n, c.k) <= std::log(2e5)) e.explicit_prior = sparse_support_union(c.n, c.k);
    const Index s = c.coherence_sparsity > 0 ? std::min(c.coherence_sparsity, c.n) : std::min(2 * c.k, c.n);
    if (mode == "file") {
      e.alpha = coherence_from_file(c.coherence_file, c.n);
    } else if (mode == "exact" || (mode == "auto" && c.n <= 20)) {
      if (c.n > 20) throw ConfigError("exact sparse coherence is limited to n <= 20");
      e.alpha = sparse_coherence_vector(e.F, s, true);
    } else if (mode == "upper_bound" || mode == "auto") {
      e.alpha = sparse_coherence_vector(e.F, s, false);
    } else {
      throw ConfigError("coherence = empirical is only available for generative priors");
    }
    e.counts = subspace_count_bounds(e.prior);
    if (image) {
      Vec coeffs = sparsify_in_basis(image->pixels, W, c.k).coefficients;
      if (coeffs.norm() == 0.0) throw ConfigError("image has no nonzero coefficients");
      e.fixed_signal = coeffs / coeffs.norm();
    }
    return e;
  }

  if (config.prior == "union") {
    SubspaceUnion Q = config.subspace_file.empty()
                          ? random_subspace_union(config.n, config.subspace_count, config.subspace_dim,
                                                  config.prior_seed)
                          : load_subspace_union(config.subspace_file);
    ExperimentConfig c = config;
    c.n = Q.ambient_dim();
    const UnitaryOperator F = basis_operator(c.measurement, c.n, 1, c.haar_levels);
    Experiment e{c, F, Q, Q, {}, {}, {}, {}};
    e.difference_set = difference_union(Q).subspaces;
    if (mode == "file") e.alpha = coherence_from_file(c.coherence_file, c.n);
    else if (mode == "auto" || mode == "exact") e.alpha = coherence_vector(F, *e.difference_set);
    else throw ConfigError("union priors use exact coherence (or a file)");
    e.counts = subspace_count_bounds(e.prior);
    return e;
  }

  GenerativeNetwork G = config.generative_file.empty()
                            ? GenerativeNetwork::random(config.generative_widths, config.prior_seed)
                            : load_network(config.generative_file);
  ExperimentConfig c = config;
  c.n = G.output_dim();
  const UnitaryOperator F = basis_operator(c.measurement, c.n, 1, c.haar_levels);
  Experiment e{c, F, G, {}, {}, {}, {}, {}};
  if (mode == "file") {
    e.alpha = coherence_from_file(c.coherence_file, c.n);
  } else if (mode == "auto" || mode == "empirical") {
    e.alpha = empirical_generative_coherence(G, F, c.coherence_latents,
                                             derive_seed(c.prior_seed, {stream::coherence}));
  } else if (mode == "exact") {
    e.difference_set = difference_union(G).subspaces;
    e.alpha = coherence_vector(F, *e.difference_set);
  } else {
    throw ConfigError("generative priors use empirical or exact coherence");
  }
  e.counts = subspace_count_bounds(e.prior);
  return e;
}

SamplingPlan make_plan(const Experiment& experiment, const std::string& scheme) {
  SamplingPlan plan;
  if (scheme == "optimized") {
    plan = optimized_probabilities(experiment.alpha.alpha);
  } else if (scheme == "uniform") {
    plan = make_uniform_plan(experiment.F.dim());
    plan.alpha = experiment.alpha.alpha;
  } else if (scheme == "custom") {
    const SamplingPlan loaded = plan_from_csv(csv::read_file(experiment.config.custom_p_file));
    if (loaded.dim() != experiment.F.dim()) throw ConfigError("custom_p_file has the wrong length");
    try {
      plan = make_custom_plan(loaded.p);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("custom_p_file: ") + e.what());
    }
    plan.alpha = experiment.alpha.alpha;
  } else {
    throw ConfigError("unknown scheme '" + scheme + "'");
  }
  return plan;
}

namespace {

std::vector<Index> random_support(Rng& rng, Index n, Index k) {
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  for (Index i = 0; i < k; ++i) std::swap(idx[i], idx[i + Index(rng.below(std::uint64_t(n - i)))]);
  idx.resize(k);
  return idx;
}

// Piecewise-constant signal: four jumps in 1D, three overlapping rectangles in 2D.
Vec piecewise_signal(Rng& rng, Index n, int dimension) {
  Vec x = Vec::Zero(n);
  if (dimension == 1) {
    std::vector<Index> cuts = random_support(rng, n - 1, std::min<Index>(4, n - 1));
    for (Index& c : cuts) c += 1;
    std::sort(cuts.begin(), cuts.end());
    double level = rng.normal();
    std::size_t next = 0;
    for (Index i = 0; i < n; ++i) {
      if (next < cuts.size() && i == cuts[next]) {
        level = rng.normal();
        ++next;
      }
      x(i) = level;
    }
    return x;
  }
  const Index side = square_side(n);
  for (int r = 0; r < 3; ++r) {
    Index r0 = Index(rng.below(side)), r1 = Index(rng.below(side));
    Index c0 = Index(rng.below(side)), c1 = Index(rng.below(side));
    if (r0 > r1) std::swap(r0, r1);
    if (c0 > c1) std::swap(c0, c1);
    const double h = rng.normal();
    for (Index i = r0; i <= r1; ++i)
      for (Index j = c0; j <= c1; ++j) x(i * side + j) += h;
  }
  return x;
}

}  // namespace

Vec draw_signal(const Experiment& experiment, std::uint64_t seed) {
  if (experiment.fixed_signal) return *experiment.fixed_signal;
  Rng rng(seed);
  const ExperimentConfig& c = experiment.config;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec x;
    if (const auto* sparse = std::get_if<SparsePrior>(&experiment.prior)) {
      if (c.signal == "piecewise") {
        const Vec raw = piecewise_signal(rng, sparse->n, c.dimension);
        const UnitaryOperator W = basis_operator("haar", sparse->n, c.dimension, c.haar_levels);
        x = project(experiment.prior, Vec(W.forward(raw).real()));
      } else {
        x = Vec::Zero(sparse->n);
        for (Index i : random_support(rng, sparse->n, sparse->k)) x(i) = rng.normal();
      }
    } else if (const auto* Q = std::get_if<SubspaceUnion>(&experiment.prior)) {
      const Subspace& s = (*Q)[std::size_t(rng.below(Q->count()))];
      x = s.basis() * rng.normal_vector(s.dim());
    } else {
      const auto& G = std::get<GenerativeNetwork>(experiment.prior);
      x = G.forward(rng.normal_vector(G.latent_dim()));
    }
    const double norm = x.norm();
    if (norm > 0.0) return x / norm;
  }
  throw std::runtime_error("draw_signal: could not draw a nonzero signal");
}

ExperimentRecord run_trial(const Experiment& experiment, const SamplingPlan& plan, std::size_t m_index,
                           double sigma, int trial) {
  const ExperimentConfig& c = experiment.config;
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t trial_seed = derive_seed(c.master_seed, {std::uint64_t(m_index), std::uint64_t(trial)});
  ExperimentRecord rec;
  rec.scheme = plan.scheme;
  rec.m = c.m_grid.at(m_index);
  rec.sigma = sigma;
  rec.trial = trial;
  rec.seed = trial_seed;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const Vec x0 = draw_signal(experiment, derive_seed(c.master_seed, {stream::signal, std::uint64_t(trial)}));
  const DrawnSample sample = draw_sample(plan, rec.m, derive_seed(trial_seed, {stream::sample}));
  const MeasurementSet meas = simulate_measurements(experiment.F, plan, sample, x0, sigma, c.field,
                                                    derive_seed(trial_seed, {stream::noise}));

  std::string solver = c.solver;
  if (solver == "auto") {
    if (std::holds_alternative<SparsePrior>(experiment.prior)) solver = "two_stage";
    else if (std::holds_alternative<SubspaceUnion>(experiment.prior)) solver = "oracle";
    else solver = "generative";
  }
  try {
    RecoveryResult result;
    if (solver == "oracle") {
      if (!experiment.explicit_prior) throw ConfigError("solver = oracle needs an enumerable prior");
      result = recover_oracle(plan, sample, experiment.F, meas.b, *experiment.explicit_prior);
    } else if (solver == "two_stage" || solver == "exhaustive") {
      const auto* sparse = std::get_if<SparsePrior>(&experiment.prior);
      if (!sparse) throw ConfigError("solver = " + solver + " needs a sparse prior");
      result = solver == "exhaustive"
                   ? recover_sparse_exhaustive(plan, sample, experiment.F, meas.b, sparse->k)
                   : recover_sparse_two_stage(plan, sample, experiment.F, meas.b, sparse->k,
                                              {c.solver_max_iters, c.solver_tolerance});
    } else {
      const auto* G = std::get_if<GenerativeNetwork>(&experiment.prior);
      if (!G) throw ConfigError("solver = generative needs a generative prior");
      LatentDescentOptions options;
      options.restarts = c.solver_restarts;
      options.iterations = c.solver_iterations;
      options.step = c.solver_step;
      options.decay = c.solver_decay;
      options.plateau_patience = c.solver_patience;
      options.seed = derive_seed(trial_seed, {stream::solver});
      result = recover_generative(plan, sample, experiment.F, meas.b, *G, options);
    }
    rec.rre = relative_recovery_error(x0, result.x_hat);
    rec.objective = result.objective;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    rec.rre = nan;
    rec.objective = nan;
  }

  const Vec& alpha = experiment.alpha.alpha;
  const double log_M = experiment.counts.log_M_exact.value_or(experiment.counts.log_M_bound);
  try {
    rec.noise_factor = noise_factor(plan, sample, alpha);
    rec.theorem_bound = theorem_error_bound(plan, sample, alpha, sigma, experiment.counts.ell,
                                            std::max(0.0, log_M), c.bound_delta);
  } catch (const std::exception&) {
    rec.noise_factor = nan;
    rec.theorem_bound = nan;
  }
  try {
    rec.corollary_bound = deterministic_corollary_bound(sample, alpha, sigma);
  } catch (const std::exception&) {
    rec.corollary_bound = nan;
  }
  if (c.timing)
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

namespace {

template <typename Task>
void parallel_for(std::size_t count, int threads, Task&& task) {
  const int workers = std::max(1, std::min<int>(threads, int(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<ExperimentRecord> run_denoise_sweep(const Experiment& experiment, const std::string& scheme,
                                                int threads) {
  const ExperimentConfig& c = experiment.config;
  const SamplingPlan plan = make_plan(experiment, scheme);
  struct Item {
    std::size_t m_index;
    double sigma;
    int trial;
  };
  std::vector<Item> items;
  for (std::size_t mi = 0; mi < c.m_grid.size(); ++mi)
    for (double sigma : c.sigma_grid)
      for (int t = 0; t < c.trials; ++t) items.push_back({mi, sigma, t});
  std::vector<ExperimentRecord> records(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    records[i] = run_trial(experiment, plan, items[i].m_index, items[i].sigma, items[i].trial);
  });
  return records;
}

std::vector<ExperimentRecord> run_denoise_sweep(const ExperimentConfig& config, int threads) {
  const Experiment experiment = build_experiment(config);
  return run_denoise_sweep(experiment, config.scheme, threads);
}

std::vector<ExperimentRecord> compare_schemes(const Experiment& experiment, int threads) {
  auto records = run_denoise_sweep(experiment, "optimized", threads);
  auto uniform = run_denoise_sweep(experiment, "uniform", threads);
  records.insert(records.end(), uniform.begin(), uniform.end());
  return records;
}

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::string out = std::string(kRecordHeader) + "\n";
  for (const auto& r : records) {
    out += r.scheme + "," + std::to_string(r.m) + "," + csv::format_double(r.sigma) + "," +
           std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + csv::format_double(r.rre) + "," +
           csv::format_double(r.objective) + "," + csv::format_double(r.noise_factor) + "," +
           csv::format_double(r.theorem_bound) + "," + csv::format_double(r.corollary_bound) + "," +
           csv::format_double(r.wall_time_ms) + "\n";
  }
  return out;
}

std::vector<ExperimentRecord> records_from_csv(const std::string& text) {
  std::vector<ExperimentRecord> out;
  for (const auto& row : csv::parse_table(text, kRecordHeader)) {
    ExperimentRecord r;
    r.scheme = row[0];
    r.m = Index(csv::parse_int(row[1]));
    r.sigma = csv::parse_double(row[2]);
    r.trial = int(csv::parse_int(row[3]));
    r.seed = std::stoull(row[4]);
    r.rre = csv::parse_double(row[5]);
    r.objective = csv::parse_double(row[6]);
    r.noise_factor = csv::parse_double(row[7]);
    r.theorem_bound = csv::parse_double(row[8]);
    r.corollary_bound = csv::parse_double(row[9]);
    r.wall_time_ms = csv::parse_double(row[10]);
    out.push_back(std::move(r));
  }
  return out;
}

GeometricStats geometric_stats(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("geometric_stats: empty group");
  GeometricStats out;
  std::vector<double> logs;
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("geometric_stats: negative or non-finite value");
    if (v < 1e-15) ++out.clamped;
    logs.push_back(std::log(std::max(v, 1e-15)));
  }
  const double count = double(logs.size());
  const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / count;
  double var = 0.0;
  for (double l : logs) var += (l - mean) * (l - mean);
  var /= count;
  out.geo_mean = std::exp(mean);
  out.geo_std_error = std::exp(std::sqrt(var) / std::sqrt(count));
  return out;
}

std::vector<CellSummary> aggregate_geometric(const std::vector<ExperimentRecord>& records) {
  std::vector<CellSummary> cells;
  std::vector<std::vector<double>> rre, corollary;
  std::map<std::tuple<std::string, Index, double>, std::size_t> index;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.scheme, r.m, r.sigma);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, cells.size()).first;
      CellSummary cell;
      cell.scheme = r.scheme;
      cell.m = r.m;
      cell.sigma = r.sigma;
      cells.push_back(cell);
      rre.emplace_back();
      corollary.emplace_back();
    }
    CellSummary& cell = cells[it->second];
    ++cell.trials;
    if (std::isfinite(r.rre)) rre[it->second].push_back(r.rre);
    else ++cell.failed;
    if (std::isfinite(r.corollary_bound) && r.corollary_bound >= 0.0)
      corollary[it->second].push_back(r.corollary_bound);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (rre[i].empty()) {
      cells[i].geo_mean_rre = nan;
      cells[i].geo_std_error = nan;
    } else {
      const GeometricStats s = geometric_stats(rre[i]);
      cells[i].geo_mean_rre = s.geo_mean;
      cells[i].geo_std_error = s.geo_std_error;
      cells[i].clamped = s.clamped;
    }
    cells[i].geo_mean_corollary = corollary[i].empty() ? nan : geometric_stats(corollary[i]).geo_mean;
  }
  return cells;
}

std::string summary_to_csv(const std::vector<CellSummary>& cells) {
  std::string out = "scheme,m,sigma,trials,geo_mean_rre,geo_std_error,clamped,failed,geo_mean_corollary\n";
  for (const auto& c : cells)
    out += c.scheme + "," + std::to_string(c.m) + "," + csv::format_double(c.sigma) + "," +
           std::to_string(c.trials) + "," + csv::format_double(c.geo_mean_rre) + "," +
           csv::format_double(c.geo_std_error) + "," + std::to_string(c.clamped) + "," +
           std::to_string(c.failed) + "," + csv::format_double(c.geo_mean_corollary) + "\n";
  return out;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points, double lo, double hi) {
  std::vector<double> xs, ys;
  for (const auto& [x, y] : points)
    if (x >= lo && x <= hi && x > 0.0 && y > 0.0 && std::isfinite(y)) {
      xs.push_back(std::log(x));
      ys.push_back(std::log(y));
    }
  if (xs.size() < 2) throw std::invalid_argument("fit_loglog_slope: fewer than 2 points in the window");
  const double count = double(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: all points share one m");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = int(xs.size());
  fit.window_min = lo;
  fit.window_max = hi;
  return fit;
}

double transition_m(const std::vector<std::pair<double, double>>& curve) {
  if (curve.empty()) throw std::invalid_argument("transition_m: empty curve");
  const double base = curve.front().second;
  for (const auto& [m, value] : curve)
    if (value < 0.5 * base) return m;
  return curve.back().first;
}

std::vector<std::pair<double, double>> curve_of(const std::vector<CellSummary>& cells,
                                                const std::string& scheme, double sigma) {
  std::vector<std::pair<double, double>> curve;
  for (const auto& c : cells)
    if (c.scheme == scheme && c.sigma == sigma) curve.emplace_back(double(c.m), c.geo_mean_rre);
  std::sort(curve.begin(), curve.end());
  return curve;
}

SlopeFit fit_curve(const std::vector<std::pair<double, double>>& curve, double fit_min, double fit_max) {
  if (curve.empty()) throw std::invalid_argument("fit_curve: empty curve");
  const double lo = fit_min > 0.0 ? fit_min : 4.0 * transition_m(curve);
  const double hi = fit_max > 0.0 ? fit_max : curve.back().first;
  return fit_loglog_slope(curve, lo, hi);
}

void write_sweep_outputs(const std::string& out, const ExperimentConfig& config,
                         const std::vector<ExperimentRecord>& records, const std::string& command) {
  csv::write_file(out, records_to_csv(records));
  const auto cells = aggregate_geometric(records);
  csv::write_file(out + ".summary.csv", summary_to_csv(cells));

  std::string slopes = "scheme,sigma,slope,intercept,points,window_min,window_max\n";
  std::vector<std::string> schemes;
  for (const auto& c : cells)
    if (std::find(schemes.begin(), schemes.end(), c.scheme) == schemes.end()) schemes.push_back(c.scheme);
  for (const auto& scheme : schemes)
    for (double sigma : config.sigma_grid) {
      SlopeFit fit;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      try {
        fit = fit_curve(curve_of(cells, scheme, sigma), config.fit_min, config.fit_max);
      } catch (const std::invalid_argument&) {
        fit.slope = fit.intercept = fit.window_min = fit.window_max = nan;
      }
      slopes += scheme + "," + csv::format_double(sigma) + "," + csv::format_double(fit.slope) + "," +
                csv::format_double(fit.intercept) + "," + std::to_string(fit.points) + "," +
                csv::format_double(fit.window_min) + "," + csv::format_double(fit.window_max) + "\n";
    }
  csv::write_file(out + ".slopes.csv", slopes);

  std::string manifest = "command = " + command + "\n" + "records = " + std::to_string(records.size()) + "\n";
  manifest += config_to_text(config);
  csv::write_file(out + ".manifest.txt", manifest);
}

}  // namespace vdcs
