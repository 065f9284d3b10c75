#include "vdcs/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vdcs/csv.hpp"
#include "vdcs/rng.hpp"

namespace vdcs {

namespace {

Vec preconditioner_from(const Vec& p) {
  const double n = double(p.size());
  Vec d = Vec::Zero(p.size());
  for (Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) d(i) = 1.0 / std::sqrt(n * p(i));
  return d;
}

void check_sample(const SamplingPlan& plan, const DrawnSample& sample) {
  if (sample.n != plan.dim()) throw std::invalid_argument("sample was drawn for a different dimension");
}

}  // namespace

SamplingPlan make_uniform_plan(Index n) {
  if (n < 1) throw std::invalid_argument("make_uniform_plan: n must be positive");
  SamplingPlan plan;
  plan.p = Vec::Constant(n, 1.0 / double(n));
  plan.d = Vec::Ones(n);
  plan.scheme = "uniform";
  return plan;
}

SamplingPlan make_custom_plan(const Vec& p) {
  if (p.size() < 1) throw std::invalid_argument("make_custom_plan: empty probability vector");
  for (Index i = 0; i < p.size(); ++i)
    if (!(p(i) >= 0.0) || !std::isfinite(p(i)))
      throw std::invalid_argument("make_custom_plan: probabilities must be finite and nonnegative");
  const double total = p.sum();
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("make_custom_plan: probabilities sum to " + csv::format_double(total));
  SamplingPlan plan;
  plan.p = p / total;
  plan.d = preconditioner_from(plan.p);
  plan.scheme = "custom";
  return plan;
}

SamplingPlan optimized_probabilities(const Vec& alpha) {
  if (alpha.size() < 1) throw std::invalid_argument("optimized_probabilities: empty alpha");
  for (Index i = 0; i < alpha.size(); ++i)
    if (!(alpha(i) >= 0.0) || !std::isfinite(alpha(i)))
      throw std::invalid_argument("optimized_probabilities: alpha must be finite and nonnegative");
  const double norm = alpha.norm();
  if (norm == 0.0) throw std::invalid_argument("optimized_probabilities: alpha is identically zero");
  SamplingPlan plan;
  plan.p = alpha.array().square() / (norm * norm);
  plan.d = Vec::Zero(alpha.size());
  const double root_n = std::sqrt(double(alpha.size()));
  for (Index i = 0; i < alpha.size(); ++i)
    if (alpha(i) > 0.0) plan.d(i) = norm / (root_n * alpha(i));
  plan.alpha = alpha;
  plan.scheme = "optimized";
  return plan;
}

double complexity_mu(const Vec& alpha, const Vec& p) {
  if (alpha.size() != p.size()) throw std::invalid_argument("complexity_mu: size mismatch");
  double mu = 0.0;
  for (Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) == 0.0) continue;
    if (!(p(j) > 0.0))
      throw std::domain_error("complexity_mu: row " + std::to_string(j) +
                              " has alpha > 0 but p = 0 (infinite complexity)");
    mu = std::max(mu, alpha(j) / std::sqrt(p(j)));
  }
  return mu;
}

std::vector<Index> DrawnSample::sorted_omega() const {
  std::vector<Index> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = omega[order[i]];
  return out;
}

namespace {

std::vector<Index> sort_by_preconditioner(const SamplingPlan& plan, const std::vector<Index>& omega) {
  std::vector<Index> order(omega.size());
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return plan.d(omega[a]) > plan.d(omega[b]); });
  return order;
}

}  // namespace

DrawnSample draw_sample(const SamplingPlan& plan, Index m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("draw_sample: m must be positive");
  const Index n = plan.dim();
  std::vector<double> cdf(n);
  std::partial_sum(plan.p.data(), plan.p.data() + n, cdf.begin());
  const double total = cdf.back();
  if (!(total > 0.0)) throw std::invalid_argument("draw_sample: plan has no mass");

  Rng rng(seed);
  DrawnSample sample;
  sample.n = n;
  sample.m = m;
  sample.scale = std::sqrt(double(n) / double(m));
  sample.omega.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double u = rng.uniform() * total;
    Index j = Index(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    j = std::min(j, n - 1);
    while (j > 0 && plan.p(j) == 0.0) --j;  // rounding at the top of the table
    sample.omega[i] = j;
  }
  sample.order = sort_by_preconditioner(plan, sample.omega);
  return sample;
}

Vec preconditioner_diagonal(const SamplingPlan& plan, const DrawnSample& sample) {
  check_sample(plan, sample);
  Vec out(sample.m);
  for (Index i = 0; i < sample.m; ++i) out(i) = plan.d(sample.omega[sample.order[i]]);
  return out;
}

double preconditioner_mass(const SamplingPlan& plan, const DrawnSample& sample) {
  return sample.scale * sample.scale * preconditioner_diagonal(plan, sample).squaredNorm();
}

UnitTruncation unit_truncation(const Vec& v) {
  for (Index i = 0; i < v.size(); ++i)
    if (!(v(i) >= 0.0)) throw std::invalid_argument("unit_truncation: entries must be nonnegative");
  UnitTruncation out;
  out.value = Vec::Zero(v.size());
  double cumulative = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double next = cumulative + v(i) * v(i);
    if (next >= 1.0) {
      out.value(i) = std::sqrt(std::max(0.0, 1.0 - cumulative));
      out.last = i;
      return out;
    }
    out.value(i) = v(i);
    cumulative = next;
  }
  // Unit norm up to rounding (e.g. the rows of an orthonormal basis): the
  // last entry is where the norm reaches 1.
  if (v.size() > 0 && cumulative >= 1.0 - 1e-12) {
    out.last = v.size() - 1;
    const double before = cumulative - v(out.last) * v(out.last);
    out.value(out.last) = std::sqrt(std::max(0.0, 1.0 - before));
    return out;
  }
  throw std::domain_error("unit_truncation: input norm " + csv::format_double(std::sqrt(cumulative)) +
                          " is below 1");
}

namespace {

// S D alpha in sorted row order.
Vec scaled_alpha(const SamplingPlan& plan, const DrawnSample& sample, const Vec& alpha) {
  if (alpha.size() != plan.dim()) throw std::invalid_argument("alpha has the wrong dimension");
  const auto rows = sample.sorted_omega();
  Vec v(sample.m);
  for (Index i = 0; i < sample.m; ++i) v(i) = sample.scale * plan.d(rows[i]) * alpha(rows[i]);
  return v;
}

}  // namespace

double noise_factor(const SamplingPlan& plan, const DrawnSample& sample, const Vec& alpha) {
  check_sample(plan, sample);
  const Vec dt = preconditioner_diagonal(plan, sample);
  const UnitTruncation t = unit_truncation(scaled_alpha(plan, sample, alpha));
  return dt.cwiseProduct(t.value).norm();
}

NoiseFactorBounds noise_factor_bounds(const SamplingPlan& plan, const DrawnSample& sample,
                                      const Vec& alpha, double t) {
  check_sample(plan, sample);
  if (!(t > 0.0)) throw std::invalid_argument("noise_factor_bounds: t must be positive");
  NoiseFactorBounds out;
  const Vec dt = preconditioner_diagonal(plan, sample);
  out.max_Sd = dt.maxCoeff();
  out.max_d = plan.d.maxCoeff();

  const Vec v = scaled_alpha(plan, sample, alpha);
  const UnitTruncation trunc = unit_truncation(v);
  // (S D^2 alpha)_i = d_{omega_i} (S D alpha)_i
  out.truncated_SD2alpha_norm = dt.head(trunc.last + 1).cwiseProduct(v.head(trunc.last + 1)).norm();

  double min_alpha = HUGE_VAL;
  for (Index j = 0; j < alpha.size(); ++j)
    if (alpha(j) > 0.0) min_alpha = std::min(min_alpha, alpha(j));
  const double cap = 1.0 / (std::sqrt(double(alpha.size())) * min_alpha);
  out.optimized_closed_bound = alpha.norm() * std::min(1.0 / std::sqrt(t), cap);
  return out;
}

Index sample_complexity(double mu, Index ell, double log_M, double delta, double C) {
  if (!(mu > 0.0) || ell < 1 || !(log_M >= 0.0) || !(delta > 0.0) || !(C > 0.0))
    throw std::invalid_argument("sample_complexity: inputs must be positive");
  const double m = std::ceil(C * mu * mu * (std::log(double(ell)) + log_M + std::log(1.0 / delta)));
  return std::max<Index>(1, Index(m));
}

CVec apply_measurement(const UnitaryOperator& F, const SamplingPlan& plan, const DrawnSample& sample,
                       const Vec& x, bool preconditioned) {
  check_sample(plan, sample);
  if (F.dim() != plan.dim() || x.size() != F.dim())
    throw std::invalid_argument("apply_measurement: dimension mismatch");
  const CVec y = F.forward(x);
  const auto rows = sample.sorted_omega();
  CVec out(sample.m);
  for (Index i = 0; i < sample.m; ++i) {
    out(i) = sample.scale * y(rows[i]);
    if (preconditioned) out(i) *= plan.d(rows[i]);
  }
  return out;
}

std::string plan_to_csv(const SamplingPlan& plan) {
  std::string out = "index,p,d\n";
  for (Index i = 0; i < plan.dim(); ++i)
    out += std::to_string(i) + "," + csv::format_double(plan.p(i)) + "," +
           csv::format_double(plan.d(i)) + "\n";
  return out;
}

SamplingPlan plan_from_csv(const std::string& text) {
  const auto rows = csv::parse_table(text, "index,p,d");
  if (rows.empty()) throw IoError("sampling plan CSV has no rows");
  SamplingPlan plan;
  plan.p.resize(Index(rows.size()));
  plan.d.resize(Index(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (csv::parse_int(rows[r][0]) != static_cast<long long>(r))
      throw IoError("sampling plan CSV indices must be 0, 1, 2, ...");
    plan.p(Index(r)) = csv::parse_double(rows[r][1]);
    plan.d(Index(r)) = csv::parse_double(rows[r][2]);
  }
  plan.scheme = "custom";
  return plan;
}

std::string sample_to_csv(const DrawnSample& sample) {
  std::string out = "position,omega\n";
  for (Index i = 0; i < sample.m; ++i)
    out += std::to_string(i) + "," + std::to_string(sample.omega[i]) + "\n";
  return out;
}

DrawnSample sample_from_csv(const std::string& text, const SamplingPlan& plan) {
  const auto rows = csv::parse_table(text, "position,omega");
  if (rows.empty()) throw IoError("sample CSV has no rows");
  DrawnSample sample;
  sample.n = plan.dim();
  sample.m = Index(rows.size());
  sample.scale = std::sqrt(double(sample.n) / double(sample.m));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const long long j = csv::parse_int(rows[r][1]);
    if (j < 0 || j >= sample.n) throw IoError("sample CSV row index out of range");
    sample.omega.push_back(Index(j));
  }
  sample.order = sort_by_preconditioner(plan, sample.omega);
  return sample;
}

}  // namespace vdcs
