#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdcs/priors.hpp"
#include "vdcs/sampling.hpp"
#include "vdcs/transforms.hpp"

namespace vdcs {

/// b = S F x0 + sigma g / sqrt(m), rows in preconditioner order.
struct MeasurementSet {
  CVec b;
  double sigma = 0.0;
  Field field = Field::complex;
  std::uint64_t seed = 0;
};

/// Real and imaginary noise parts are independent standard normals for the
/// complex field; the real field draws real noise only.
MeasurementSet simulate_measurements(const UnitaryOperator& F, const SamplingPlan& plan,
                                     const DrawnSample& sample, const Vec& x0, double sigma,
                                     Field field, std::uint64_t seed);

/// The preconditioned map A = D~ S F = S D F and the weighted data D~ b.
class PreconditionedSystem {
 public:
  PreconditionedSystem(const UnitaryOperator& F, const SamplingPlan& plan, const DrawnSample& sample);

  Index rows() const { return Index(rows_.size()); }
  Index cols() const { return F_.dim(); }
  const UnitaryOperator& op() const { return F_; }

  CVec apply(const Vec& x) const;
  /// Re(A^* r), the gradient direction for real signals.
  Vec adjoint_real(const CVec& r) const;
  /// A applied to each column of `basis`, stacked as [Re; Im] (2m x cols),
  /// or just the real part (m x cols) for real operators.
  Mat stacked_columns(const Mat& basis) const;
  /// D~ b stacked the same way as stacked_columns.
  Vec stacked_data(const CVec& b) const;
  CVec weight_data(const CVec& b) const;

 private:
  UnitaryOperator F_;
  std::vector<Index> rows_;
  Vec weights_;    // sqrt(n/m) d_{omega_i}
  Vec precond_;    // d_{omega_i}
};

/// |D~ (S F x - b)|^2.
double objective(const SamplingPlan& plan, const DrawnSample& sample, const UnitaryOperator& F,
                 const Vec& x, const CVec& b);

struct RecoveryResult {
  Vec x_hat;
  double objective = 0.0;
  /// 0 when the solver certifies optimality over the enumerated candidates.
  double epsilon = 0.0;
  bool epsilon_certified = true;
  std::string solver;
  int iterations = 0;
  bool rank_deficient = false;
  /// Two-stage solver: stage one hit max_iters without settling.
  bool not_converged = false;
  std::vector<Index> support;
};

/// Exact minimizer over an explicit union: least squares per subspace via a
/// complete orthogonal decomposition, minimal objective wins.
RecoveryResult recover_oracle(const SamplingPlan& plan, const DrawnSample& sample,
                              const UnitaryOperator& F, const CVec& b, const SubspaceUnion& Q);

/// Oracle over all k-subsets of coordinates (small n only).
RecoveryResult recover_sparse_exhaustive(const SamplingPlan& plan, const DrawnSample& sample,
                                         const UnitaryOperator& F, const CVec& b, Index k);

struct SparseSolverConfig {
  int max_iters = 300;
  double tolerance = 1e-10;
  /// Outside indices considered per support-swap pass (at least 2k).
  Index swap_candidates = 64;
  /// Greedy restarts, each forcing one of the strongest initial correlations.
  Index greedy_branches = 8;
  int swap_passes = 10;
};

/// Stage one: hard thresholding pursuit on the preconditioned system (gradient
/// step with the normalized step size, keep k largest, refit on the support)
/// until the support repeats, restarted from greedy supports when that helps,
/// then polished by single-index swaps. Stage two: least squares on the final
/// support.
RecoveryResult recover_sparse_two_stage(const SamplingPlan& plan, const DrawnSample& sample,
                                        const UnitaryOperator& F, const CVec& b, Index k,
                                        const SparseSolverConfig& config = {});

/// Multi-restart latent descent on |D~ S F G(z) - D~ b|^2.
RecoveryResult recover_generative(const SamplingPlan& plan, const DrawnSample& sample,
                                  const UnitaryOperator& F, const CVec& b, const GenerativeNetwork& G,
                                  const LatentDescentOptions& options);

struct RipReport {
  double max_deviation = 0.0;
  bool holds = false;
  std::vector<double> per_subspace;
};

/// Deviation max(s_max - 1, 1 - s_min) of S D F B for each subspace basis B.
RipReport rip_check(const SamplingPlan& plan, const DrawnSample& sample, const UnitaryOperator& F,
                    const SubspaceUnion& T);

enum class BoundForm {
  /// Noise factor from the draw, t = sqrt(log(2/delta)).
  signal_recovery,
  /// Noise factor from the draw, sqrt(2 log M) and sqrt(log(4/delta)).
  variable_density,
  /// Closed-form noise factor for optimized sampling.
  optimized_closed_form,
};

std::string to_string(BoundForm form);

struct ModelMismatch {
  double x_perp_norm = 0.0;
  double SDF_x_perp_norm = 0.0;
};

ModelMismatch model_mismatch(const UnitaryOperator& F, const SamplingPlan& plan,
                             const DrawnSample& sample, const Vec& x_perp);

/// 9 sigma/sqrt(m) NF (sqrt(ell) + sqrt(log M) + t) + |x_perp| + 6 |SDF x_perp| + 1.5 sqrt(eps).
double theorem_error_bound(const SamplingPlan& plan, const DrawnSample& sample, const Vec& alpha,
                           double sigma, Index ell, double log_M, double delta,
                           BoundForm form = BoundForm::signal_recovery, double epsilon = 0.0,
                           const ModelMismatch& mismatch = {});

/// sigma/sqrt(m) |alpha| sum_i 1 / (sqrt(n) alpha_{omega_i}).
double deterministic_corollary_bound(const DrawnSample& sample, const Vec& alpha, double sigma);

double relative_recovery_error(const Vec& x0, const Vec& x_hat);

/// 16-byte header ("VDSX", u32 version, u64 n) then n little-endian float64.
void save_signal(const Vec& x, const std::string& path);
Vec load_signal(const std::string& path);

}  // namespace vdcs
