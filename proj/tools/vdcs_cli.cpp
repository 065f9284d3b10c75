// vdcs: command-line front end for the variable-density sampling lab.
//
//   vdcs coherence       --config exp.cfg [--out alpha.csv]
//   vdcs plan            --config exp.cfg [--out plan.csv]
//   vdcs rip-check       --config exp.cfg [--out rip.csv]
//   vdcs recover         --config exp.cfg [--out trial.csv]
//   vdcs denoise-sweep   --config exp.cfg [--out sweep.csv] [--threads N]
//   vdcs compare-schemes --config exp.cfg [--out paired.csv] [--threads N]
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 1 anything else.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>

#include "vdcs/csv.hpp"
#include "vdcs/harness.hpp"
#include "vdcs/rng.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else vdcs::csv::write_file(out, text);
}

void write_manifest(const std::string& out, const std::string& command, const vdcs::ExperimentConfig& c) {
  if (out.empty() || out == "-") return;
  vdcs::csv::write_file(out + ".manifest.txt", "command = " + command + "\n" + vdcs::config_to_text(c));
}

vdcs::ExperimentConfig resolve(const Options& opt) {
  vdcs::ExperimentConfig c = vdcs::load_config(opt.config);
  if (opt.seed) c.master_seed = *opt.seed;
  if (!opt.out.empty()) c.output = opt.out;
  return c;
}

int run(const std::string& command, const Options& opt) {
  using namespace vdcs;
  const ExperimentConfig c = resolve(opt);
  const std::string& out = c.output;
  const Experiment e = build_experiment(c);

  if (command == "coherence") {
    emit(out, coherence_to_csv(e.alpha));
  } else if (command == "plan") {
    emit(out, plan_to_csv(make_plan(e, c.scheme)));
  } else if (command == "rip-check") {
    const SubspaceUnion* T = e.difference_set ? &*e.difference_set : nullptr;
    if (!T) throw ConfigError("rip-check needs an enumerable difference set (union prior or coherence = exact)");
    const SamplingPlan plan = make_plan(e, c.scheme);
    const double mu = complexity_mu(e.alpha.alpha, plan.p);
    const Index m_required = sample_complexity(mu, T->max_dim(), std::log(double(T->count())), c.rip_delta,
                                               c.rip_constant);
    std::string text = "m,trial,max_deviation,holds\n";
    for (std::size_t mi = 0; mi < c.m_grid.size(); ++mi)
      for (int t = 0; t < c.trials; ++t) {
        const std::uint64_t seed =
            derive_seed(derive_seed(c.master_seed, {std::uint64_t(mi), std::uint64_t(t)}), {stream::sample});
        const RipReport r = rip_check(plan, draw_sample(plan, c.m_grid[mi], seed), e.F, *T);
        text += std::to_string(c.m_grid[mi]) + "," + std::to_string(t) + "," +
                csv::format_double(r.max_deviation) + "," + (r.holds ? "1" : "0") + "\n";
      }
    emit(out, text);
    std::cerr << "mu = " << csv::format_double(mu) << ", sample_complexity = " << m_required << "\n";
  } else if (command == "recover") {
    const SamplingPlan plan = make_plan(e, c.scheme);
    emit(out, records_to_csv({run_trial(e, plan, 0, c.sigma_grid.front(), 0)}));
  } else if (command == "denoise-sweep" || command == "compare-schemes") {
    const auto records = command == "denoise-sweep" ? run_denoise_sweep(e, c.scheme, opt.threads)
                                                    : compare_schemes(e, opt.threads);
    if (out.empty() || out == "-") std::cout << records_to_csv(records);
    else write_sweep_outputs(out, c, records, command);
    return 0;
  }
  write_manifest(out, command, c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-density compressed sensing lab"};
  app.require_subcommand(1);
  Options opt;
  std::string command;
  const std::pair<const char*, const char*> commands[] = {
      {"coherence", "local coherence vector as CSV"},
      {"plan", "sampling probabilities and preconditioner as CSV"},
      {"rip-check", "restricted isometry deviation per (m, trial) draw"},
      {"recover", "a single recovery trial"},
      {"denoise-sweep", "all (m, sigma, trial) cells for the configured scheme"},
      {"compare-schemes", "optimized and uniform sweeps on shared seeds"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "experiment config file")->required();
    sub->add_option("--seed", opt.seed, "override master_seed");
    sub->add_option("--out", opt.out, "output path ('-' for stdout)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([&command, name] { command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(command, opt);
  } catch (const vdcs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vdcs::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
