#include "vdcs/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "vdcs/csv.hpp"

namespace vdcs {

namespace {

long long to_int(const std::string& key, const std::string& value) {
  try {
    return csv::parse_int(value);
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return csv::parse_double(value);
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string one_of(const std::string& key, const std::string& value,
                   std::initializer_list<const char*> choices) {
  for (const char* c : choices)
    if (value == c) return value;
  std::string list;
  for (const char* c : choices) list += (list.empty() ? "" : "|") + std::string(c);
  throw ConfigError("config key '" + key + "': '" + value + "' is not one of " + list);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_floating_point_v<T>) out += csv::format_double(v);
    else out += std::to_string(v);
  }
  return out;
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define VDCS_STRING_KEY(name, field)                                              \
  Key{name, [](ExperimentConfig& c, const std::string& v) { c.field = v; },      \
      [](const ExperimentConfig& c) { return c.field; }}
#define VDCS_INT_KEY(name, field, type)                                                      \
  Key{name, [](ExperimentConfig& c, const std::string& v) { c.field = type(to_int(name, v)); }, \
      [](const ExperimentConfig& c) { return std::to_string(c.field); }}
#define VDCS_DOUBLE_KEY(name, field)                                                     \
  Key{name, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(name, v); }, \
      [](const ExperimentConfig& c) { return csv::format_double(c.field); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"prior",
          [](ExperimentConfig& c, const std::string& v) {
            c.prior = one_of("prior", v, {"sparse", "union", "generative"});
          },
          [](const ExperimentConfig& c) { return c.prior; }},
      VDCS_INT_KEY("n", n, Index),
      VDCS_INT_KEY("dimension", dimension, int),
      VDCS_INT_KEY("k", k, Index),
      Key{"sparsity_basis",
          [](ExperimentConfig& c, const std::string& v) {
            c.sparsity_basis = one_of("sparsity_basis", v, {"haar", "identity"});
          },
          [](const ExperimentConfig& c) { return c.sparsity_basis; }},
      VDCS_INT_KEY("haar_levels", haar_levels, int),
      Key{"measurement",
          [](ExperimentConfig& c, const std::string& v) {
            c.measurement = one_of("measurement", v, {"dft", "identity", "haar"});
          },
          [](const ExperimentConfig& c) { return c.measurement; }},
      Key{"signal",
          [](ExperimentConfig& c, const std::string& v) {
            c.signal = one_of("signal", v, {"piecewise", "gaussian_sparse", "image"});
          },
          [](const ExperimentConfig& c) { return c.signal; }},
      VDCS_STRING_KEY("image", image),
      VDCS_STRING_KEY("subspace_file", subspace_file),
      VDCS_INT_KEY("subspace_count", subspace_count, std::size_t),
      VDCS_INT_KEY("subspace_dim", subspace_dim, Index),
      VDCS_STRING_KEY("generative_file", generative_file),
      Key{"generative_widths",
          [](ExperimentConfig& c, const std::string& v) {
            c.generative_widths.clear();
            if (csv::trim(v).empty()) return;
            for (const auto& part : csv::split(v, ','))
              c.generative_widths.push_back(Index(to_int("generative_widths", csv::trim(part))));
          },
          [](const ExperimentConfig& c) { return join(c.generative_widths); }},
      VDCS_INT_KEY("prior_seed", prior_seed, std::uint64_t),
      Key{"scheme",
          [](ExperimentConfig& c, const std::string& v) {
            c.scheme = one_of("scheme", v, {"optimized", "uniform", "custom"});
          },
          [](const ExperimentConfig& c) { return c.scheme; }},
      VDCS_STRING_KEY("custom_p_file", custom_p_file),
      Key{"coherence",
          [](ExperimentConfig& c, const std::string& v) {
            c.coherence = one_of("coherence", v, {"auto", "exact", "upper_bound", "empirical", "file"});
          },
          [](const ExperimentConfig& c) { return c.coherence; }},
      VDCS_STRING_KEY("coherence_file", coherence_file),
      VDCS_INT_KEY("coherence_sparsity", coherence_sparsity, Index),
      VDCS_INT_KEY("coherence_latents", coherence_latents, std::size_t),
      Key{"m_grid", [](ExperimentConfig& c, const std::string& v) { c.m_grid = parse_m_grid(v); },
          [](const ExperimentConfig& c) { return join(c.m_grid); }},
      Key{"sigma_grid",
          [](ExperimentConfig& c, const std::string& v) {
            c.sigma_grid.clear();
            for (const auto& part : csv::split(v, ','))
              c.sigma_grid.push_back(to_double("sigma_grid", csv::trim(part)));
          },
          [](const ExperimentConfig& c) { return join(c.sigma_grid); }},
      VDCS_INT_KEY("trials", trials, int),
      VDCS_INT_KEY("master_seed", master_seed, std::uint64_t),
      Key{"field",
          [](ExperimentConfig& c, const std::string& v) {
            try {
              c.field = parse_field(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(std::string("config key 'field': ") + e.what());
            }
          },
          [](const ExperimentConfig& c) { return to_string(c.field); }},
      Key{"solver",
          [](ExperimentConfig& c, const std::string& v) {
            c.solver = one_of("solver", v, {"auto", "oracle", "two_stage", "exhaustive", "generative"});
          },
          [](const ExperimentConfig& c) { return c.solver; }},
      VDCS_INT_KEY("solver.max_iters", solver_max_iters, int),
      VDCS_DOUBLE_KEY("solver.tolerance", solver_tolerance),
      VDCS_INT_KEY("solver.restarts", solver_restarts, int),
      VDCS_INT_KEY("solver.iterations", solver_iterations, int),
      VDCS_DOUBLE_KEY("solver.step", solver_step),
      VDCS_DOUBLE_KEY("solver.decay", solver_decay),
      VDCS_INT_KEY("solver.patience", solver_patience, int),
      VDCS_DOUBLE_KEY("bound_delta", bound_delta),
      VDCS_DOUBLE_KEY("rip_constant", rip_constant),
      VDCS_DOUBLE_KEY("rip_delta", rip_delta),
      Key{"timing", [](ExperimentConfig& c, const std::string& v) { c.timing = to_bool("timing", v); },
          [](const ExperimentConfig& c) { return std::string(c.timing ? "true" : "false"); }},
      VDCS_STRING_KEY("output", output),
      VDCS_DOUBLE_KEY("fit_min", fit_min),
      VDCS_DOUBLE_KEY("fit_max", fit_max),
  };
  return table;
}

#undef VDCS_STRING_KEY
#undef VDCS_INT_KEY
#undef VDCS_DOUBLE_KEY

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (c.prior == "generative") {
    if (c.generative_file.empty() && c.generative_widths.size() < 2)
      fail("generative prior needs generative_file or generative_widths");
  } else if (c.prior == "union") {
    if (c.subspace_file.empty() && (c.subspace_count < 1 || c.subspace_dim < 1 || c.n < 1))
      fail("union prior needs subspace_file or n, subspace_count and subspace_dim");
  } else {
    if (c.dimension != 1 && c.dimension != 2) fail("dimension must be 1 or 2");
    if (c.signal != "image" && c.n < 2) fail("sparse prior needs n >= 2");
    if (c.k < 1) fail("k must be >= 1");
    if (c.signal == "image" && c.image.empty()) fail("signal = image needs an image path");
    if (c.haar_levels < 1) fail("haar_levels must be >= 1");
  }
  if (c.scheme == "custom" && c.custom_p_file.empty()) fail("scheme = custom needs custom_p_file");
  if (c.coherence == "file" && c.coherence_file.empty()) fail("coherence = file needs coherence_file");
  if (c.m_grid.empty()) fail("m_grid must be non-empty");
  if (c.sigma_grid.empty()) fail("sigma_grid must be non-empty");
  for (double s : c.sigma_grid)
    if (!(s >= 0.0)) fail("sigma_grid entries must be >= 0");
  if (c.trials < 1) fail("trials must be >= 1");
  if (!(c.bound_delta > 0.0 && c.bound_delta < 1.0)) fail("bound_delta must lie in (0, 1)");
  if (!(c.rip_delta > 0.0 && c.rip_delta < 1.0)) fail("rip_delta must lie in (0, 1)");
  if (!(c.rip_constant > 0.0)) fail("rip_constant must be positive");
  if (c.solver_max_iters < 1 || c.solver_iterations < 1 || c.solver_restarts < 0)
    fail("solver iteration counts must be positive");
  if (c.coherence_latents < 2) fail("coherence_latents must be >= 2");
}

}  // namespace

std::vector<Index> parse_m_grid(const std::string& text) {
  std::vector<Index> grid;
  const std::string t = csv::trim(text);
  if (t.rfind("log:", 0) == 0) {
    const auto parts = csv::split(t.substr(4), ':');
    if (parts.size() != 3) throw ConfigError("m_grid: expected log:lo:hi:count");
    const double lo = to_double("m_grid", parts[0]);
    const double hi = to_double("m_grid", parts[1]);
    const long long count = to_int("m_grid", parts[2]);
    if (!(lo >= 1.0) || !(hi >= lo) || count < 1) throw ConfigError("m_grid: need 1 <= lo <= hi, count >= 1");
    for (long long i = 0; i < count; ++i) {
      const double f = count == 1 ? 0.0 : double(i) / double(count - 1);
      grid.push_back(Index(std::llround(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))))));
    }
  } else {
    for (const auto& part : csv::split(t, ',')) grid.push_back(Index(to_int("m_grid", csv::trim(part))));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() < 1) throw ConfigError("m_grid entries must be >= 1");
  return grid;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = csv::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = csv::trim(stripped.substr(0, eq));
    const std::string value = csv::trim(stripped.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end())
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    it->set(config, value);
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(csv::read_file(path)); }

std::string config_to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace vdcs
