#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vdcs/types.hpp"

namespace vdcs {

/// A subspace of R^n given by an n x dim matrix with orthonormal columns.
class Subspace {
 public:
  /// Throws std::invalid_argument when basis^T basis deviates from I by more than 1e-10.
  explicit Subspace(Mat basis);

  /// Orthonormal basis for the column span of `spanning`, via SVD with
  /// relative rank tolerance. Throws when the span is trivial.
  static Subspace span_of(const Mat& spanning, double rank_tol = 1e-10);

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  const Mat& basis() const { return basis_; }

  Vec project(const Vec& x) const { return basis_ * (basis_.transpose() * x); }
  /// Distance from x to the subspace is at most tol * max(1, |x|).
  bool contains(const Vec& x, double tol = 1e-8) const;
  bool same_span(const Subspace& other, double tol = 1e-9) const;

 private:
  Mat basis_;
};

/// Finite union of subspaces (the set T of the measurement model).
class SubspaceUnion {
 public:
  SubspaceUnion() = default;
  explicit SubspaceUnion(std::vector<Subspace> subspaces);

  std::size_t count() const { return subspaces_.size(); }
  Index max_dim() const;
  Index ambient_dim() const;
  bool empty() const { return subspaces_.empty(); }
  const std::vector<Subspace>& subspaces() const { return subspaces_; }
  const Subspace& operator[](std::size_t i) const { return subspaces_[i]; }
  bool contains(const Vec& x, double tol = 1e-8) const;

 private:
  std::vector<Subspace> subspaces_;
};

/// The set of k-sparse vectors in R^n.
struct SparsePrior {
  SparsePrior(Index n, Index k);
  Index n;
  Index k;
};

/// Bias-free ReLU network G(z) = W_d relu(... W_2 relu(W_1 z)).
class GenerativeNetwork {
 public:
  /// weights[i] has shape widths[i+1] x widths[i].
  explicit GenerativeNetwork(std::vector<Mat> weights);

  /// Gaussian weights with variance 1/fan_in.
  static GenerativeNetwork random(const std::vector<Index>& widths, std::uint64_t seed);

  Index latent_dim() const { return weights_.front().cols(); }
  Index output_dim() const { return weights_.back().rows(); }
  std::size_t depth() const { return weights_.size(); }
  std::vector<Index> widths() const;
  const std::vector<Mat>& weights() const { return weights_; }

  /// Hidden-layer pre-activations recorded by a forward pass.
  struct Trace {
    std::vector<Vec> pre_activations;
  };

  Vec forward(const Vec& z, Trace* trace = nullptr) const;
  /// Gradient with respect to z of <grad_output, G(z)> at the traced point.
  Vec pullback(const Trace& trace, const Vec& grad_output) const;

  /// Concatenated on/off state of every hidden unit at z.
  std::vector<std::uint8_t> activation_pattern(const Vec& z) const;
  /// The linear map G restricted to the region with the given pattern (n x k).
  Mat linear_piece(const std::vector<std::uint8_t>& pattern) const;

 private:
  std::vector<Mat> weights_;
};

using Prior = std::variant<SparsePrior, SubspaceUnion, GenerativeNetwork>;

Vec generative_forward(const GenerativeNetwork& network, const Vec& z);

struct EnumerationBudget {
  std::size_t max_subspaces = 200000;
  /// Random latent directions used to discover activation patterns.
  std::size_t latent_samples = 20000;
  std::uint64_t seed = 1;
};

/// difference_union could not enumerate within budget. `implicit_available`
/// tells callers that closed forms (e.g. sparse coherence) can stand in.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, bool implicit_available)
      : std::runtime_error(what), implicit_available_(implicit_available) {}
  bool implicit_available() const { return implicit_available_; }

 private:
  bool implicit_available_;
};

/// A union of subspaces containing Q - Q, plus the count before deduplication.
struct DifferenceCover {
  SubspaceUnion subspaces;
  std::size_t undeduplicated_count = 0;
  /// Linear pieces discovered for generative priors (N); 0 otherwise.
  std::size_t pieces = 0;
};

DifferenceCover difference_union(const Prior& prior, const EnumerationBudget& budget = {});

struct SubspaceCountBounds {
  double log_M_bound = 0.0;
  Index ell = 0;
  /// Exact log M of the difference set when it is known in closed form.
  std::optional<double> log_M_exact;
};

/// Counts for T = Q - Q: the published closed-form bound on log M and the
/// subspace dimension ell.
SubspaceCountBounds subspace_count_bounds(const Prior& prior);

/// log C(n, k) via lgamma.
double log_binomial(Index n, Index k);

/// Coordinate subspaces span{e_i : i in S} for every |S| = k, in lexicographic order.
SubspaceUnion sparse_support_union(Index n, Index k);
/// M random subspaces of dimension dim in R^n (Gaussian spanning sets).
SubspaceUnion random_subspace_union(Index n, std::size_t count, Index dim, std::uint64_t seed);

/// Tie-break among equidistant projections: the candidate whose first
/// differing entry is larger in magnitude (then larger in value) wins.
bool lexicographically_preferred(const Vec& a, const Vec& b);

struct LatentDescentOptions {
  int restarts = 10;
  int iterations = 500;
  double step = 1e-2;
  double decay = 0.5;
  /// Iterations without relative improvement before the step is decayed.
  int plateau_patience = 50;
  /// Stop a restart once the step has decayed below step * min_step_ratio.
  double min_step_ratio = 1e-3;
  double absolute_tolerance = 1e-24;
  std::uint64_t seed = 1;
  /// Extra starting points tried before the random restarts.
  std::vector<Vec> initial_latents;
};

struct LatentDescentResult {
  Vec z;
  double objective = 0.0;
  int iterations = 0;
  int best_restart = 0;
};

/// Objective in signal space: returns f(x) and writes grad_x f into `grad`.
using SignalObjective = std::function<double(const Vec& x, Vec& grad)>;

/// Multi-restart Adam on z -> f(G(z)) with exact reverse-mode gradients and
/// geometric step decay on plateaus.
LatentDescentResult latent_descent(const GenerativeNetwork& network, const SignalObjective& objective,
                                   const LatentDescentOptions& options);

/// Nearest point of the prior. Exact for sparse and subspace-union priors;
/// for generative priors an approximation via latent descent.
Vec project(const Prior& prior, const Vec& x, const LatentDescentOptions& options = {});

/// Flat binary format: "VDSG", u32 version, u32 depth, (depth+1) u32 widths,
/// then each layer's weights row-major as little-endian float64.
void save_network(const GenerativeNetwork& network, const std::string& path);
GenerativeNetwork load_network(const std::string& path);

/// Text format: "VDSU <n> <M>", then per subspace a line "<dim>" followed by
/// n lines of dim whitespace-separated basis entries.
void save_subspace_union(const SubspaceUnion& subspaces, const std::string& path);
SubspaceUnion load_subspace_union(const std::string& path);

}  // namespace vdcs
