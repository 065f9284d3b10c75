#include "vdcs/priors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "vdcs/csv.hpp"
#include "vdcs/rng.hpp"

namespace vdcs {

// ---------------------------------------------------------------- Subspace

Subspace::Subspace(Mat basis) : basis_(std::move(basis)) {
  if (basis_.rows() < 1 || basis_.cols() < 1)
    throw std::invalid_argument("Subspace: basis must be non-empty");
  if (basis_.cols() > basis_.rows())
    throw std::invalid_argument("Subspace: more basis vectors than ambient dimension");
  const Mat gram = basis_.transpose() * basis_;
  const double defect = (gram - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  if (defect > 1e-10)
    throw std::invalid_argument("Subspace: basis columns are not orthonormal");
}

Subspace Subspace::span_of(const Mat& spanning, double rank_tol) {
  if (spanning.rows() < 1 || spanning.cols() < 1)
    throw std::invalid_argument("span_of: empty spanning set");
  Eigen::JacobiSVD<Mat> svd(spanning, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) throw std::invalid_argument("span_of: trivial span");
  Index rank = 0;
  while (rank < s.size() && s(rank) > rank_tol * s(0)) ++rank;
  return Subspace(svd.matrixU().leftCols(rank));
}

bool Subspace::contains(const Vec& x, double tol) const {
  return (x - project(x)).norm() <= tol * std::max(1.0, x.norm());
}

bool Subspace::same_span(const Subspace& other, double tol) const {
  if (other.dim() != dim() || other.ambient_dim() != ambient_dim()) return false;
  const Mat residual = other.basis() - basis_ * (basis_.transpose() * other.basis());
  return residual.norm() <= tol;
}

SubspaceUnion::SubspaceUnion(std::vector<Subspace> subspaces) : subspaces_(std::move(subspaces)) {
  if (subspaces_.empty()) throw std::invalid_argument("SubspaceUnion: no subspaces");
  const Index n = subspaces_.front().ambient_dim();
  for (const auto& s : subspaces_)
    if (s.ambient_dim() != n) throw std::invalid_argument("SubspaceUnion: ambient dimension mismatch");
}

Index SubspaceUnion::max_dim() const {
  Index d = 0;
  for (const auto& s : subspaces_) d = std::max(d, s.dim());
  return d;
}

Index SubspaceUnion::ambient_dim() const {
  return subspaces_.empty() ? 0 : subspaces_.front().ambient_dim();
}

bool SubspaceUnion::contains(const Vec& x, double tol) const {
  return std::any_of(subspaces_.begin(), subspaces_.end(),
                     [&](const Subspace& s) { return s.contains(x, tol); });
}

SparsePrior::SparsePrior(Index n_, Index k_) : n(n_), k(k_) {
  if (n < 1 || k < 1 || k > n)
    throw std::invalid_argument("SparsePrior: need 1 <= k <= n (n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ")");
}

// ------------------------------------------------------- GenerativeNetwork

GenerativeNetwork::GenerativeNetwork(std::vector<Mat> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("GenerativeNetwork: no layers");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i].rows() < 1 || weights_[i].cols() < 1)
      throw std::invalid_argument("GenerativeNetwork: empty layer");
    if (i > 0 && weights_[i].cols() != weights_[i - 1].rows())
      throw std::invalid_argument("GenerativeNetwork: layer " + std::to_string(i) +
                                  " shape does not chain");
  }
}

GenerativeNetwork GenerativeNetwork::random(const std::vector<Index>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("GenerativeNetwork::random: need >= 2 widths");
  Rng rng(seed);
  std::vector<Mat> weights;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] < 1 || widths[i + 1] < 1)
      throw std::invalid_argument("GenerativeNetwork::random: widths must be positive");
    weights.push_back(rng.normal_matrix(widths[i + 1], widths[i]) / std::sqrt(double(widths[i])));
  }
  return GenerativeNetwork(std::move(weights));
}

std::vector<Index> GenerativeNetwork::widths() const {
  std::vector<Index> w{latent_dim()};
  for (const auto& W : weights_) w.push_back(W.rows());
  return w;
}

Vec GenerativeNetwork::forward(const Vec& z, Trace* trace) const {
  if (z.size() != latent_dim()) throw std::invalid_argument("forward: latent size mismatch");
  if (trace) trace->pre_activations.clear();
  Vec a = z;
  for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
    Vec h = weights_[i] * a;
    a = h.cwiseMax(0.0);
    if (trace) trace->pre_activations.push_back(std::move(h));
  }
  return weights_.back() * a;
}

Vec GenerativeNetwork::pullback(const Trace& trace, const Vec& grad_output) const {
  Vec g = weights_.back().transpose() * grad_output;
  for (std::size_t i = weights_.size() - 1; i-- > 0;) {
    const Vec& h = trace.pre_activations[i];
    for (Index r = 0; r < g.size(); ++r)
      if (!(h(r) > 0.0)) g(r) = 0.0;
    g = weights_[i].transpose() * g;
  }
  return g;
}

std::vector<std::uint8_t> GenerativeNetwork::activation_pattern(const Vec& z) const {
  Trace trace;
  forward(z, &trace);
  std::vector<std::uint8_t> pattern;
  for (const auto& h : trace.pre_activations)
    for (Index r = 0; r < h.size(); ++r) pattern.push_back(h(r) > 0.0 ? 1 : 0);
  return pattern;
}

Mat GenerativeNetwork::linear_piece(const std::vector<std::uint8_t>& pattern) const {
  Mat A = weights_.front();
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
    for (Index r = 0; r < A.rows(); ++r)
      if (!pattern.at(offset + r)) A.row(r).setZero();
    offset += A.rows();
    A = weights_[i + 1] * A;
  }
  if (offset != pattern.size()) throw std::invalid_argument("linear_piece: pattern length mismatch");
  return A;
}

Vec generative_forward(const GenerativeNetwork& network, const Vec& z) { return network.forward(z); }

// -------------------------------------------------------- difference sets

double log_binomial(Index n, Index k) {
  if (k < 0 || k > n) return -HUGE_VAL;
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

namespace {

template <typename Visit>
void for_each_combination(Index n, Index k, Visit&& visit) {
  std::vector<Index> idx(k);
  std::iota(idx.begin(), idx.end(), Index(0));
  while (true) {
    visit(idx);
    Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Subspace coordinate_subspace(Index n, const std::vector<Index>& support) {
  Mat basis = Mat::Zero(n, Index(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) basis(support[c], Index(c)) = 1.0;
  return Subspace(std::move(basis));
}

void push_unique(std::vector<Subspace>& out, Subspace candidate) {
  for (const auto& s : out)
    if (s.same_span(candidate)) return;
  out.push_back(std::move(candidate));
}

Mat hstack(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

DifferenceCover sparse_difference(const SparsePrior& prior, const EnumerationBudget& budget) {
  const Index s = std::min(2 * prior.k, prior.n);
  const double log_count = log_binomial(prior.n, s);
  if (log_count > std::log(double(budget.max_subspaces)) + 1e-9)
    throw BudgetExceeded("sparse difference set has C(" + std::to_string(prior.n) + "," +
                             std::to_string(s) + ") supports; use the closed-form coherence",
                         true);
  DifferenceCover cover;
  std::vector<Subspace> subspaces;
  for_each_combination(prior.n, s, [&](const std::vector<Index>& support) {
    subspaces.push_back(coordinate_subspace(prior.n, support));
  });
  cover.undeduplicated_count = subspaces.size();
  cover.subspaces = SubspaceUnion(std::move(subspaces));
  return cover;
}

DifferenceCover union_difference(const SubspaceUnion& prior, const EnumerationBudget& budget) {
  const std::size_t m = prior.count();
  if (m * (m + 1) / 2 > budget.max_subspaces)
    throw BudgetExceeded("subspace union difference exceeds budget", false);
  std::vector<Subspace> out;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      push_unique(out, Subspace::span_of(hstack(prior[i].basis(), prior[j].basis())));
  DifferenceCover cover;
  cover.undeduplicated_count = m * (m + 1) / 2;
  cover.subspaces = SubspaceUnion(std::move(out));
  return cover;
}

DifferenceCover generative_difference(const GenerativeNetwork& network,
                                      const EnumerationBudget& budget) {
  // Regions of a bias-free ReLU net are cones, so sampling directions suffices.
  Rng rng(budget.seed);
  std::map<std::vector<std::uint8_t>, Mat> pieces;
  for (std::size_t s = 0; s < budget.latent_samples; ++s) {
    const Vec z = rng.unit_vector(network.latent_dim());
    auto pattern = network.activation_pattern(z);
    if (pieces.count(pattern)) continue;
    Mat piece = network.linear_piece(pattern);
    if (piece.norm() == 0.0) continue;  // the region maps to {0}
    pieces.emplace(std::move(pattern), std::move(piece));
  }
  const std::size_t n_pieces = pieces.size();
  if (n_pieces == 0) throw BudgetExceeded("generative network range is {0}", false);
  if (n_pieces * (n_pieces + 1) / 2 > budget.max_subspaces)
    throw BudgetExceeded("generative difference set exceeds budget (" + std::to_string(n_pieces) +
                             " linear pieces)",
                         false);
  std::vector<const Mat*> list;
  for (const auto& [pattern, piece] : pieces) list.push_back(&piece);
  std::vector<Subspace> out;
  for (std::size_t i = 0; i < list.size(); ++i)
    for (std::size_t j = i; j < list.size(); ++j)
      push_unique(out, Subspace::span_of(hstack(*list[i], *list[j])));
  DifferenceCover cover;
  cover.undeduplicated_count = n_pieces * n_pieces;
  cover.pieces = n_pieces;
  cover.subspaces = SubspaceUnion(std::move(out));
  return cover;
}

}  // namespace

DifferenceCover difference_union(const Prior& prior, const EnumerationBudget& budget) {
  return std::visit(
      [&](const auto& p) -> DifferenceCover {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SparsePrior>) return sparse_difference(p, budget);
        else if constexpr (std::is_same_v<T, SubspaceUnion>) return union_difference(p, budget);
        else return generative_difference(p, budget);
      },
      prior);
}

SubspaceCountBounds subspace_count_bounds(const Prior& prior) {
  SubspaceCountBounds out;
  if (const auto* sparse = std::get_if<SparsePrior>(&prior)) {
    const Index s = std::min(2 * sparse->k, sparse->n);
    out.ell = s;
    out.log_M_bound = double(s) * std::log(double(sparse->n) / double(s));
    out.log_M_exact = log_binomial(sparse->n, s);
  } else if (const auto* net = std::get_if<GenerativeNetwork>(&prior)) {
    const auto widths = net->widths();
    const double k = double(net->latent_dim());
    double log_n = 0.0;
    // Hidden widths k_1 .. k_{d-1}.
    for (std::size_t i = 1; i + 1 < widths.size(); ++i)
      log_n += k * std::log(2.0 * std::numbers::e * double(widths[i]) / k);
    out.log_M_bound = 2.0 * log_n;  // M = N^2
    out.ell = std::min<Index>(2 * net->latent_dim(), net->output_dim());
  } else {
    const auto& u = std::get<SubspaceUnion>(prior);
    const double m = double(u.count());
    out.log_M_bound = std::log(m * (m + 1.0) / 2.0);
    out.log_M_exact = out.log_M_bound;
    out.ell = std::min(2 * u.max_dim(), u.ambient_dim());
  }
  return out;
}

SubspaceUnion sparse_support_union(Index n, Index k) {
  SparsePrior check(n, k);
  std::vector<Subspace> out;
  for_each_combination(n, k, [&](const std::vector<Index>& support) {
    out.push_back(coordinate_subspace(n, support));
  });
  return SubspaceUnion(std::move(out));
}

SubspaceUnion random_subspace_union(Index n, std::size_t count, Index dim, std::uint64_t seed) {
  if (dim < 1 || dim > n || count < 1)
    throw std::invalid_argument("random_subspace_union: invalid shape");
  Rng rng(seed);
  std::vector<Subspace> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(Subspace::span_of(rng.normal_matrix(n, dim)));
  return SubspaceUnion(std::move(out));
}

// -------------------------------------------------------------- projection

bool lexicographically_preferred(const Vec& a, const Vec& b) {
  for (Index i = 0; i < a.size(); ++i) {
    const double ma = std::abs(a(i));
    const double mb = std::abs(b(i));
    if (ma != mb) return ma > mb;
    if (a(i) != b(i)) return a(i) > b(i);
  }
  return false;
}

LatentDescentResult latent_descent(const GenerativeNetwork& network, const SignalObjective& objective,
                                   const LatentDescentOptions& options) {
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-12;
  const Index k = network.latent_dim();
  Rng rng(options.seed);

  LatentDescentResult best;
  best.objective = HUGE_VAL;
  const int total = int(options.initial_latents.size()) + options.restarts;
  for (int restart = 0; restart < total; ++restart) {
    Vec z = restart < int(options.initial_latents.size()) ? options.initial_latents[restart]
                                                          : rng.normal_vector(k);
    if (z.size() != k) throw std::invalid_argument("latent_descent: initial latent has wrong size");
    Vec m1 = Vec::Zero(k), m2 = Vec::Zero(k), grad_x;
    double step = options.step;
    double restart_best = HUGE_VAL;
    Vec restart_best_z = z;
    int since_improvement = 0;
    GenerativeNetwork::Trace trace;
    int it = 0;
    for (; it < options.iterations; ++it) {
      const Vec x = network.forward(z, &trace);
      const double f = objective(x, grad_x);
      if (f < restart_best * (1.0 - 1e-9)) {
        since_improvement = 0;
      } else if (++since_improvement >= options.plateau_patience) {
        step *= options.decay;
        since_improvement = 0;
        z = restart_best_z;  // resume from the best point with the smaller step
        m1.setZero();
        m2.setZero();
        if (step < options.step * options.min_step_ratio) break;
        continue;
      }
      if (f < restart_best) {
        restart_best = f;
        restart_best_z = z;
      }
      if (f <= options.absolute_tolerance) break;
      const Vec g = network.pullback(trace, grad_x);
      m1 = beta1 * m1 + (1.0 - beta1) * g;
      m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(beta1, it + 1);
      const double c2 = 1.0 - std::pow(beta2, it + 1);
      z -= step * ((m1 / c1).array() / ((m2 / c2).array().sqrt() + adam_eps)).matrix();
    }
    best.iterations += it;
    if (restart_best < best.objective) {
      best.objective = restart_best;
      best.z = restart_best_z;
      best.best_restart = restart;
    }
  }
  return best;
}

namespace {

Vec project_sparse(const SparsePrior& prior, const Vec& x) {
  if (x.size() != prior.n) throw std::invalid_argument("project: dimension mismatch");
  std::vector<Index> order(x.size());
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(x(a)) > std::abs(x(b)); });
  Vec out = Vec::Zero(x.size());
  for (Index i = 0; i < prior.k; ++i) out(order[i]) = x(order[i]);
  return out;
}

Vec project_union(const SubspaceUnion& prior, const Vec& x) {
  if (x.size() != prior.ambient_dim()) throw std::invalid_argument("project: dimension mismatch");
  Vec best;
  double best_residual = HUGE_VAL;
  const double tie_tol = 1e-12 * std::max(1.0, x.squaredNorm());
  for (const auto& s : prior.subspaces()) {
    Vec candidate = s.project(x);
    const double residual = (x - candidate).squaredNorm();
    if (residual < best_residual - tie_tol) {
      best_residual = residual;
      best = std::move(candidate);
    } else if (residual <= best_residual + tie_tol && lexicographically_preferred(candidate, best)) {
      best_residual = std::min(best_residual, residual);
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace

Vec project(const Prior& prior, const Vec& x, const LatentDescentOptions& options) {
  if (const auto* sparse = std::get_if<SparsePrior>(&prior)) return project_sparse(*sparse, x);
  if (const auto* u = std::get_if<SubspaceUnion>(&prior)) return project_union(*u, x);
  const auto& net = std::get<GenerativeNetwork>(prior);
  if (x.size() != net.output_dim()) throw std::invalid_argument("project: dimension mismatch");
  const auto result = latent_descent(
      net,
      [&](const Vec& g, Vec& grad) {
        grad = 2.0 * (g - x);
        return (g - x).squaredNorm();
      },
      options);
  return net.forward(result.z);
}

// ------------------------------------------------------------------- files

namespace {

constexpr char kNetworkMagic[4] = {'V', 'D', 'S', 'G'};
constexpr std::uint32_t kNetworkVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw IoError("truncated network file '" + path + "'");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_network(const GenerativeNetwork& network, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kNetworkMagic, 4);
  write_le<std::uint32_t>(out, kNetworkVersion);
  write_le<std::uint32_t>(out, std::uint32_t(network.depth()));
  for (Index w : network.widths()) write_le<std::uint32_t>(out, std::uint32_t(w));
  for (const auto& W : network.weights())
    for (Index r = 0; r < W.rows(); ++r)
      for (Index c = 0; c < W.cols(); ++c) write_le<double>(out, W(r, c));
  if (!out) throw IoError("write failed for '" + path + "'");
}

GenerativeNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kNetworkMagic, 4) != 0)
    throw IoError("'" + path + "' is not a VDSG network file");
  const auto version = read_le<std::uint32_t>(in, path);
  if (version != kNetworkVersion)
    throw IoError("unsupported network file version " + std::to_string(version));
  const auto depth = read_le<std::uint32_t>(in, path);
  if (depth < 1 || depth > 1024) throw IoError("implausible network depth in '" + path + "'");
  std::vector<Index> widths;
  for (std::uint32_t i = 0; i <= depth; ++i) widths.push_back(read_le<std::uint32_t>(in, path));
  std::vector<Mat> weights;
  for (std::uint32_t i = 0; i < depth; ++i) {
    Mat W(widths[i + 1], widths[i]);
    for (Index r = 0; r < W.rows(); ++r)
      for (Index c = 0; c < W.cols(); ++c) W(r, c) = read_le<double>(in, path);
    weights.push_back(std::move(W));
  }
  try {
    return GenerativeNetwork(std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid network in '") + path + "': " + e.what());
  }
}

void save_subspace_union(const SubspaceUnion& subspaces, const std::string& path) {
  std::ostringstream out;
  out << "VDSU " << subspaces.ambient_dim() << ' ' << subspaces.count() << '\n';
  for (const auto& s : subspaces.subspaces()) {
    out << s.dim() << '\n';
    for (Index r = 0; r < s.ambient_dim(); ++r) {
      for (Index c = 0; c < s.dim(); ++c) out << (c ? " " : "") << csv::format_double(s.basis()(r, c));
      out << '\n';
    }
  }
  csv::write_file(path, out.str());
}

SubspaceUnion load_subspace_union(const std::string& path) {
  std::istringstream in(csv::read_file(path));
  std::string magic;
  Index n = 0;
  std::size_t count = 0;
  if (!(in >> magic >> n >> count) || magic != "VDSU" || n < 1 || count < 1)
    throw IoError("'" + path + "' is not a VDSU subspace file");
  std::vector<Subspace> subspaces;
  for (std::size_t i = 0; i < count; ++i) {
    Index dim = 0;
    if (!(in >> dim) || dim < 1 || dim > n) throw IoError("bad subspace header in '" + path + "'");
    Mat basis(n, dim);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < dim; ++c) {
        std::string token;
        if (!(in >> token)) throw IoError("truncated subspace file '" + path + "'");
        basis(r, c) = csv::parse_double(token);
      }
    try {
      subspaces.emplace_back(std::move(basis));
    } catch (const std::invalid_argument& e) {
      throw IoError("subspace " + std::to_string(i) + " in '" + path + "': " + e.what());
    }
  }
  return SubspaceUnion(std::move(subspaces));
}

}  // namespace vdcs
