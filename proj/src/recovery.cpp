#include "vdcs/recovery.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "vdcs/rng.hpp"

namespace vdcs {

MeasurementSet simulate_measurements(const UnitaryOperator& F, const SamplingPlan& plan,
                                     const DrawnSample& sample, const Vec& x0, double sigma,
                                     Field field, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("simulate_measurements: sigma must be >= 0");
  MeasurementSet out;
  out.b = apply_measurement(F, plan, sample, x0, false);
  out.sigma = sigma;
  out.field = field;
  out.seed = seed;
  Rng rng(seed);
  const double scale = sigma / std::sqrt(double(sample.m));
  for (Index i = 0; i < sample.m; ++i) {
    const double re = rng.normal();
    const double im = field == Field::complex ? rng.normal() : 0.0;
    out.b(i) += scale * Complex(re, im);
  }
  return out;
}

PreconditionedSystem::PreconditionedSystem(const UnitaryOperator& F, const SamplingPlan& plan,
                                           const DrawnSample& sample)
    : F_(F), rows_(sample.sorted_omega()) {
  if (F.dim() != plan.dim() || sample.n != plan.dim())
    throw std::invalid_argument("PreconditionedSystem: dimension mismatch");
  precond_ = preconditioner_diagonal(plan, sample);
  weights_ = sample.scale * precond_;
}

CVec PreconditionedSystem::apply(const Vec& x) const {
  const CVec y = F_.forward(x);
  CVec out(rows());
  for (Index i = 0; i < rows(); ++i) out(i) = weights_(i) * y(rows_[i]);
  return out;
}

Vec PreconditionedSystem::adjoint_real(const CVec& r) const {
  CVec z = CVec::Zero(cols());
  for (Index i = 0; i < rows(); ++i) z(rows_[i]) += weights_(i) * r(i);
  return F_.adjoint(z).real();
}

Mat PreconditionedSystem::stacked_columns(const Mat& basis) const {
  const CMat FB = F_.forward_columns(basis);
  Mat out(2 * rows(), basis.cols());
  for (Index i = 0; i < rows(); ++i)
    for (Index c = 0; c < basis.cols(); ++c) {
      const Complex v = weights_(i) * FB(rows_[i], c);
      out(i, c) = v.real();
      out(rows() + i, c) = v.imag();
    }
  return out;
}

CVec PreconditionedSystem::weight_data(const CVec& b) const {
  if (b.size() != rows()) throw std::invalid_argument("measurement vector has the wrong length");
  return precond_.cast<Complex>().cwiseProduct(b);
}

Vec PreconditionedSystem::stacked_data(const CVec& b) const {
  const CVec w = weight_data(b);
  Vec out(2 * rows());
  out.head(rows()) = w.real();
  out.tail(rows()) = w.imag();
  return out;
}

double objective(const SamplingPlan& plan, const DrawnSample& sample, const UnitaryOperator& F,
                 const Vec& x, const CVec& b) {
  const PreconditionedSystem A(F, plan, sample);
  return (A.apply(x) - A.weight_data(b)).squaredNorm();
}

namespace {

struct LeastSquares {
  Vec coeffs;
  bool rank_deficient = false;
};

LeastSquares solve_least_squares(const Mat& A, const Vec& rhs) {
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  cod.setThreshold(1e-10);
  LeastSquares out;
  out.coeffs = cod.solve(rhs);
  out.rank_deficient = cod.rank() < A.cols();
  return out;
}

bool better_candidate(double obj, const Vec& x, double best_obj, const Vec& best_x) {
  if (best_x.size() == 0) return true;
  const double tol = 1e-12 * std::max(1.0, best_obj);
  if (obj < best_obj - tol) return true;
  if (obj <= best_obj + tol && best_x.size() == x.size()) return lexicographically_preferred(x, best_x);
  return false;
}

// Top k entries of |v|, ties broken by the lower index; returned sorted.
std::vector<Index> top_k(const Vec& v, Index k) {
  std::vector<Index> idx(v.size());
  std::iota(idx.begin(), idx.end(), Index(0));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return std::abs(v(a)) > std::abs(v(b)); });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat pick_columns(const Mat& columns, const std::vector<Index>& support) {
  Mat out(columns.rows(), Index(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) out.col(Index(c)) = columns.col(support[c]);
  return out;
}

}  // namespace

RecoveryResult recover_oracle(const SamplingPlan& plan, const DrawnSample& sample,
                              const UnitaryOperator& F, const CVec& b, const SubspaceUnion& Q) {
  if (Q.empty()) throw std::invalid_argument("recover_oracle: empty prior");
  const PreconditionedSystem A(F, plan, sample);
  const Vec rhs = A.stacked_data(b);
  RecoveryResult best;
  best.objective = HUGE_VAL;
  best.solver = "oracle";
  for (const auto& s : Q.subspaces()) {
    const LeastSquares ls = solve_least_squares(A.stacked_columns(s.basis()), rhs);
    const Vec x = s.basis() * ls.coeffs;
    const double obj = (A.apply(x) - A.weight_data(b)).squaredNorm();
    if (better_candidate(obj, x, best.objective, best.x_hat)) {
      best.objective = obj;
      best.x_hat = x;
      best.rank_deficient = ls.rank_deficient;
    }
    ++best.iterations;
  }
  return best;
}

RecoveryResult recover_sparse_exhaustive(const SamplingPlan& plan, const DrawnSample& sample,
                                         const UnitaryOperator& F, const CVec& b, Index k) {
  const Index n = F.dim();
  SparsePrior check(n, k);
  if (log_binomial(n, k) > std::log(2e6)) throw std::invalid_argument("exhaustive search too large");
  const PreconditionedSystem A(F, plan, sample);
  const Mat columns = A.stacked_columns(Mat::Identity(n, n));
  const Vec rhs = A.stacked_data(b);
  RecoveryResult best;
  best.objective = HUGE_VAL;
  best.solver = "exhaustive";
  std::vector<Index> support(k);
  std::iota(support.begin(), support.end(), Index(0));
  while (true) {
    const LeastSquares ls = solve_least_squares(pick_columns(columns, support), rhs);
    Vec x = Vec::Zero(n);
    for (Index c = 0; c < k; ++c) x(support[c]) = ls.coeffs(c);
    const double obj = (columns * x - rhs).squaredNorm();
    if (better_candidate(obj, x, best.objective, best.x_hat)) {
      best.objective = obj;
      best.x_hat = x;
      best.support = support;
      best.rank_deficient = ls.rank_deficient;
    }
    ++best.iterations;
    Index i = k - 1;
    while (i >= 0 && support[i] == n - k + i) --i;
    if (i < 0) break;
    ++support[i];
    for (Index j = i + 1; j < k; ++j) support[j] = support[j - 1] + 1;
  }
  return best;
}

RecoveryResult recover_sparse_two_stage(const SamplingPlan& plan, const DrawnSample& sample,
                                        const UnitaryOperator& F, const CVec& b, Index k,
                                        const SparseSolverConfig& config) {
  const Index n = F.dim();
  SparsePrior check(n, k);
  const PreconditionedSystem A(F, plan, sample);
  const CVec data = A.weight_data(b);
  const Vec rhs = A.stacked_data(b);
  const double data_norm2 = data.squaredNorm();

  auto refit = [&](const std::vector<Index>& support, bool* rank_deficient) {
    const Index s = Index(support.size());
    Mat basis = Mat::Zero(n, s);
    for (Index c = 0; c < s; ++c) basis(support[c], c) = 1.0;
    const LeastSquares ls = solve_least_squares(A.stacked_columns(basis), rhs);
    if (rank_deficient) *rank_deficient = ls.rank_deficient;
    return Vec(basis * ls.coeffs);
  };
  auto residual = [&](const Vec& x) { return (A.apply(x) - data).squaredNorm(); };

  // Column norms |A e_i|, read off |F e_i| restricted to the sampled rows.
  Vec column_norm = Vec::Zero(n);
  for (Index i = 0; i < n; ++i) column_norm(i) = A.apply(Vec::Unit(n, i)).norm();

  struct Run {
    std::vector<Index> support;
    double objective = HUGE_VAL;
    int iterations = 0;
    bool settled = false;
  };

  // Hard thresholding pursuit from a starting support (empty: top k of A^* b).
  auto pursue = [&](std::vector<Index> support) {
    Run run;
    Vec x = support.empty() ? Vec::Zero(n) : refit(support, nullptr);
    for (; run.iterations < config.max_iters; ++run.iterations) {
      const Vec g = A.adjoint_real(data - A.apply(x));
      // Normalized step: exact line search along g restricted to the working support.
      const std::vector<Index> working = support.empty() ? top_k(g, k) : support;
      Vec g_w = Vec::Zero(n);
      for (Index i : working) g_w(i) = g(i);
      const double denom = A.apply(g_w).squaredNorm();
      const double step = denom > 0.0 ? g_w.squaredNorm() / denom : 1.0;
      const std::vector<Index> next = top_k(x + step * g, k);
      x = refit(next, nullptr);
      const double obj = residual(x);
      if (obj < run.objective) {
        run.objective = obj;
        run.support = next;
      }
      if (next == support || obj <= config.tolerance * data_norm2) {
        run.settled = true;
        break;
      }
      support = next;
    }
    ++run.iterations;
    return run;
  };

  // Greedy start: orthogonal matching pursuit on normalized correlations,
  // optionally with a forced first index.
  auto greedy = [&](Index first) {
    std::vector<Index> support;
    Vec x = Vec::Zero(n);
    if (first >= 0) {
      support.push_back(first);
      x = refit(support, nullptr);
    }
    while (Index(support.size()) < k) {
      const Vec g = A.adjoint_real(data - A.apply(x));
      Index pick = -1;
      double best_score = -1.0;
      for (Index i = 0; i < n; ++i) {
        if (column_norm(i) == 0.0 || std::find(support.begin(), support.end(), i) != support.end()) continue;
        const double score = std::abs(g(i)) / column_norm(i);
        if (score > best_score) {
          best_score = score;
          pick = i;
        }
      }
      if (pick < 0) break;
      support.push_back(pick);
      std::sort(support.begin(), support.end());
      x = refit(support, nullptr);
    }
    for (Index i = 0; Index(support.size()) < k; ++i)
      if (std::find(support.begin(), support.end(), i) == support.end()) support.push_back(i);
    std::sort(support.begin(), support.end());
    return support;
  };

  Run best = pursue({});
  int iterations = best.iterations;
  auto consider = [&](const std::vector<Index>& start) {
    const Run other = pursue(start);
    iterations += other.iterations;
    if (other.objective < best.objective) best = other;
  };
  auto done = [&] { return best.objective <= config.tolerance * data_norm2; };
  if (!done()) consider(greedy(-1));
  if (!done() && config.greedy_branches > 0) {
    const Vec g = A.adjoint_real(data);
    Vec score = Vec::Zero(n);
    for (Index i = 0; i < n; ++i)
      if (column_norm(i) > 0.0) score(i) = std::abs(g(i)) / column_norm(i);
    for (Index first : top_k(score, std::min<Index>(n, config.greedy_branches))) {
      if (done()) break;
      consider(greedy(first));
    }
  }

  // Single swaps: drop one support index, add the best of the strongest
  // outside candidates. Candidates are scored by projecting out the other
  // k - 1 columns, then the winning swap is confirmed by a full refit.
  const Index n_candidates = std::min<Index>(n - k, std::max<Index>(2 * k, config.swap_candidates));
  for (int pass = 0; pass < config.swap_passes && n_candidates > 0 &&
                     best.objective > config.tolerance * data_norm2;
       ++pass) {
    const Vec g = A.adjoint_real(data - A.apply(refit(best.support, nullptr)));
    Vec score = Vec::Constant(n, -1.0);
    for (Index i = 0; i < n; ++i)
      if (column_norm(i) > 0.0 && !std::binary_search(best.support.begin(), best.support.end(), i))
        score(i) = std::abs(g(i)) / column_norm(i);
    std::vector<Index> candidates = top_k(score, n_candidates);
    candidates.erase(std::remove_if(candidates.begin(), candidates.end(), [&](Index c) { return score(c) < 0.0; }),
                     candidates.end());
    Mat cand_basis = Mat::Zero(n, Index(candidates.size()));
    for (std::size_t c = 0; c < candidates.size(); ++c) cand_basis(candidates[c], Index(c)) = 1.0;
    const Mat C = A.stacked_columns(cand_basis);

    double best_swap = best.objective * (1.0 - 1e-9);
    std::vector<Index> swap_support;
    for (std::size_t drop = 0; drop < best.support.size(); ++drop) {
      Mat keep = Mat::Zero(n, k - 1);
      for (std::size_t c = 0, col = 0; c < best.support.size(); ++c)
        if (c != drop) keep(best.support[c], Index(col++)) = 1.0;
      Vec r = rhs;
      Mat P = C;
      if (k > 1) {
        const Eigen::HouseholderQR<Mat> qr(A.stacked_columns(keep));
        const Mat Q = qr.householderQ() * Mat::Identity(rhs.size(), k - 1);
        r -= Q * (Q.transpose() * r);
        P -= Q * (Q.transpose() * P);
      }
      const double base = r.squaredNorm();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double norm2 = P.col(Index(c)).squaredNorm();
        if (norm2 <= 1e-20 * C.col(Index(c)).squaredNorm()) continue;
        const double proj = P.col(Index(c)).dot(r);
        const double obj = base - proj * proj / norm2;
        if (obj < best_swap) {
          best_swap = obj;
          swap_support = best.support;
          swap_support[drop] = candidates[c];
        }
      }
    }
    if (swap_support.empty()) break;
    std::sort(swap_support.begin(), swap_support.end());
    const double confirmed = residual(refit(swap_support, nullptr));
    if (!(confirmed < best.objective)) break;
    best.support = swap_support;
    best.objective = confirmed;
  }

  // Stage two: least squares on the identified support.
  RecoveryResult out;
  out.solver = "two_stage";
  out.support = best.support;
  out.x_hat = refit(best.support, &out.rank_deficient);
  out.objective = residual(out.x_hat);
  out.iterations = iterations;
  out.not_converged = !best.settled;
  out.epsilon_certified = false;
  return out;
}

RecoveryResult recover_generative(const SamplingPlan& plan, const DrawnSample& sample,
                                  const UnitaryOperator& F, const CVec& b, const GenerativeNetwork& G,
                                  const LatentDescentOptions& options) {
  if (G.output_dim() != F.dim()) throw std::invalid_argument("recover_generative: dimension mismatch");
  const PreconditionedSystem A(F, plan, sample);
  const CVec data = A.weight_data(b);
  const auto result = latent_descent(
      G,
      [&](const Vec& x, Vec& grad) {
        const CVec r = A.apply(x) - data;
        grad = 2.0 * A.adjoint_real(r);
        return r.squaredNorm();
      },
      options);
  RecoveryResult out;
  out.solver = "generative";
  out.x_hat = G.forward(result.z);
  out.objective = result.objective;
  out.iterations = result.iterations;
  out.epsilon_certified = false;
  return out;
}

RipReport rip_check(const SamplingPlan& plan, const DrawnSample& sample, const UnitaryOperator& F,
                    const SubspaceUnion& T) {
  if (T.empty()) throw std::invalid_argument("rip_check: empty union");
  const PreconditionedSystem A(F, plan, sample);
  RipReport out;
  for (const auto& s : T.subspaces()) {
    Eigen::JacobiSVD<Mat> svd(A.stacked_columns(s.basis()));
    const Vec& sv = svd.singularValues();
    const double s_max = sv(0);
    const double s_min = sv.size() == s.dim() ? sv(sv.size() - 1) : 0.0;
    const double dev = std::max(s_max - 1.0, 1.0 - s_min);
    out.per_subspace.push_back(dev);
    out.max_deviation = std::max(out.max_deviation, dev);
  }
  out.holds = out.max_deviation <= 1.0 / 3.0;
  return out;
}

std::string to_string(BoundForm form) {
  switch (form) {
    case BoundForm::signal_recovery: return "signal_recovery";
    case BoundForm::variable_density: return "variable_density";
    case BoundForm::optimized_closed_form: return "optimized_closed_form";
  }
  return "signal_recovery";
}

ModelMismatch model_mismatch(const UnitaryOperator& F, const SamplingPlan& plan,
                             const DrawnSample& sample, const Vec& x_perp) {
  ModelMismatch out;
  out.x_perp_norm = x_perp.norm();
  out.SDF_x_perp_norm = apply_measurement(F, plan, sample, x_perp, true).norm();
  return out;
}

double theorem_error_bound(const SamplingPlan& plan, const DrawnSample& sample, const Vec& alpha,
                           double sigma, Index ell, double log_M, double delta, BoundForm form,
                           double epsilon, const ModelMismatch& mismatch) {
  if (!(delta > 0.0) || ell < 1 || !(log_M >= 0.0) || !(sigma >= 0.0) || !(epsilon >= 0.0))
    throw std::invalid_argument("theorem_error_bound: invalid parameters");
  const double root_m = std::sqrt(double(sample.m));
  double noise_term = 0.0;
  switch (form) {
    case BoundForm::signal_recovery: {
      const double t = std::sqrt(std::log(2.0 / delta));
      noise_term = 9.0 * sigma / root_m * noise_factor(plan, sample, alpha) *
                   (std::sqrt(double(ell)) + std::sqrt(log_M) + t);
      break;
    }
    case BoundForm::variable_density:
      noise_term = 9.0 * sigma / root_m * noise_factor(plan, sample, alpha) *
                   (std::sqrt(double(ell)) + std::sqrt(2.0 * log_M) + std::sqrt(std::log(4.0 / delta)));
      break;
    case BoundForm::optimized_closed_form: {
      double min_alpha = HUGE_VAL;
      for (Index j = 0; j < alpha.size(); ++j)
        if (alpha(j) > 0.0) min_alpha = std::min(min_alpha, alpha(j));
      const double factor = alpha.norm() * std::min(std::sqrt(5.0 / (4.0 * delta)),
                                                    1.0 / (std::sqrt(double(alpha.size())) * min_alpha));
      noise_term = 9.0 * sigma / root_m * factor *
                   (std::sqrt(double(ell)) + std::sqrt(log_M) + std::sqrt(std::log(20.0 / delta)));
      break;
    }
  }
  return noise_term + mismatch.x_perp_norm + 6.0 * mismatch.SDF_x_perp_norm + 1.5 * std::sqrt(epsilon);
}

double deterministic_corollary_bound(const DrawnSample& sample, const Vec& alpha, double sigma) {
  if (alpha.size() != sample.n) throw std::invalid_argument("corollary bound: dimension mismatch");
  const double root_n = std::sqrt(double(sample.n));
  double sum = 0.0;
  for (Index j : sample.omega) {
    if (!(alpha(j) > 0.0)) throw std::domain_error("corollary bound: sampled row has zero coherence");
    sum += 1.0 / (root_n * alpha(j));
  }
  return sigma / std::sqrt(double(sample.m)) * alpha.norm() * sum;
}

double relative_recovery_error(const Vec& x0, const Vec& x_hat) {
  if (x0.size() != x_hat.size()) throw std::invalid_argument("relative_recovery_error: size mismatch");
  const double norm = x0.norm();
  if (norm == 0.0) throw std::domain_error("relative_recovery_error: zero truth signal");
  return (x0 - x_hat).norm() / norm;
}

namespace {

constexpr char kSignalMagic[4] = {'V', 'D', 'S', 'X'};
constexpr std::uint32_t kSignalVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw IoError("truncated signal file '" + path + "'");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_signal(const Vec& x, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kSignalMagic, 4);
  put_le<std::uint32_t>(out, kSignalVersion);
  put_le<std::uint64_t>(out, std::uint64_t(x.size()));
  for (Index i = 0; i < x.size(); ++i) put_le<double>(out, x(i));
  if (!out) throw IoError("write failed for '" + path + "'");
}

Vec load_signal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kSignalMagic, 4) != 0)
    throw IoError("'" + path + "' is not a VDSX signal file");
  if (get_le<std::uint32_t>(in, path) != kSignalVersion) throw IoError("unsupported signal file version");
  const auto n = get_le<std::uint64_t>(in, path);
  if (n > (std::uint64_t(1) << 32)) throw IoError("implausible signal length in '" + path + "'");
  Vec x(static_cast<Index>(n));
  for (Index i = 0; i < x.size(); ++i) x(i) = get_le<double>(in, path);
  return x;
}

}  // namespace vdcs
