#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdcs/transforms.hpp"

namespace vdcs {

/// Row probabilities p and preconditioner d with d_i = (n p_i)^(-1/2).
/// Rows with p_i = 0 are never drawn; their d_i is stored as 0.
struct SamplingPlan {
  Vec p;
  Vec d;
  std::optional<Vec> alpha;
  std::string scheme;

  Index dim() const { return p.size(); }
};

SamplingPlan make_uniform_plan(Index n);
/// Arbitrary probabilities; must be nonnegative and sum to 1 within 1e-9.
SamplingPlan make_custom_plan(const Vec& p);
/// p'_i = alpha_i^2 / |alpha|^2. Rows with alpha_i = 0 are excluded.
SamplingPlan optimized_probabilities(const Vec& alpha);

/// max_j alpha_j / sqrt(p_j) over rows with alpha_j > 0.
double complexity_mu(const Vec& alpha, const Vec& p);

/// m indices drawn with replacement. `omega` is in draw order; `order` lists
/// draw positions so that d[omega[order[0]]] >= d[omega[order[1]]] >= ...
struct DrawnSample {
  std::vector<Index> omega;
  std::vector<Index> order;
  Index n = 0;
  Index m = 0;
  double scale = 1.0;

  /// Row indices in preconditioner order.
  std::vector<Index> sorted_omega() const;
};

DrawnSample draw_sample(const SamplingPlan& plan, Index m, std::uint64_t seed);

/// Diagonal of the preconditioner D~ in sorted row order: d_{omega_i}.
Vec preconditioner_diagonal(const SamplingPlan& plan, const DrawnSample& sample);
/// |S d|^2 = (n/m) sum_i d_{omega_i}^2, whose mean over draws is n.
double preconditioner_mass(const SamplingPlan& plan, const DrawnSample& sample);

struct UnitTruncation {
  Vec value;
  /// 0-based index of the last kept entry.
  Index last = 0;
};

/// Keeps leading entries until the cumulative norm reaches 1; the entry at
/// which it does is shrunk so that the output has unit norm.
UnitTruncation unit_truncation(const Vec& v);

/// |D~ T(S D alpha)|_2 with rows sorted so that d_{omega_i} is non-increasing.
double noise_factor(const SamplingPlan& plan, const DrawnSample& sample, const Vec& alpha);

struct NoiseFactorBounds {
  double max_Sd = 0.0;
  double max_d = 0.0;
  double truncated_SD2alpha_norm = 0.0;
  double optimized_closed_bound = 0.0;
};

NoiseFactorBounds noise_factor_bounds(const SamplingPlan& plan, const DrawnSample& sample,
                                      const Vec& alpha, double t);

/// max(1, ceil(C mu^2 (log ell + log M + log(1/delta)))).
Index sample_complexity(double mu, Index ell, double log_M, double delta, double C);

/// Entry i is sqrt(n/m) (F x)_{omega_i}, times d_{omega_i} when preconditioned,
/// in sorted row order.
CVec apply_measurement(const UnitaryOperator& F, const SamplingPlan& plan, const DrawnSample& sample,
                       const Vec& x, bool preconditioned);

/// `index,p,d`
std::string plan_to_csv(const SamplingPlan& plan);
SamplingPlan plan_from_csv(const std::string& text);
/// `position,omega` in draw order.
std::string sample_to_csv(const DrawnSample& sample);
/// Rebuilds the sorted order from the plan's preconditioner.
DrawnSample sample_from_csv(const std::string& text, const SamplingPlan& plan);

}  // namespace vdcs
