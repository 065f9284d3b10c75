#include "vdcs/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vdcs/csv.hpp"
#include "vdcs/rng.hpp"

namespace vdcs {

std::string to_string(CoherenceMethod method) {
  switch (method) {
    case CoherenceMethod::exact: return "exact";
    case CoherenceMethod::upper_bound: return "upper_bound";
    case CoherenceMethod::empirical: return "empirical";
  }
  return "exact";
}

CoherenceMethod parse_coherence_method(const std::string& text) {
  if (text == "exact") return CoherenceMethod::exact;
  if (text == "upper_bound") return CoherenceMethod::upper_bound;
  if (text == "empirical") return CoherenceMethod::empirical;
  throw std::invalid_argument("unknown coherence method '" + text + "'");
}

namespace {

// Largest singular value of the 2 x k matrix with rows a and b.
double two_row_sigma_max(double aa, double bb, double ab) {
  const double half_trace = 0.5 * (aa + bb);
  const double gap = std::sqrt(0.25 * (aa - bb) * (aa - bb) + ab * ab);
  return std::sqrt(std::max(0.0, half_trace + gap));
}

double row_sigma_max(const CMat& rows, Index j) {
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (Index c = 0; c < rows.cols(); ++c) {
    const double re = rows(j, c).real(), im = rows(j, c).imag();
    aa += re * re;
    bb += im * im;
    ab += re * im;
  }
  return two_row_sigma_max(aa, bb, ab);
}

}  // namespace

double subspace_row_coherence(const CVec& f, const Mat& basis) {
  if (f.size() != basis.rows())
    throw std::invalid_argument("subspace_row_coherence: dimension mismatch");
  const Vec a = basis.transpose() * f.real();
  const Vec b = basis.transpose() * f.imag();
  return two_row_sigma_max(a.squaredNorm(), b.squaredNorm(), a.dot(b));
}

CoherenceVector coherence_vector(const UnitaryOperator& F, const SubspaceUnion& T) {
  if (T.empty()) throw std::invalid_argument("coherence_vector: empty subspace union");
  if (T.ambient_dim() != F.dim()) throw std::invalid_argument("coherence_vector: dimension mismatch");
  CoherenceVector out;
  out.alpha = Vec::Zero(F.dim());
  for (const auto& s : T.subspaces()) {
    // Row j of F*B holds f_j^* applied to each basis column.
    const CMat FB = F.forward_columns(s.basis());
    for (Index j = 0; j < F.dim(); ++j) out.alpha(j) = std::max(out.alpha(j), row_sigma_max(FB, j));
  }
  out.method = CoherenceMethod::exact;
  out.descriptor = "exact; " + F.describe() + "; union of " + std::to_string(T.count()) +
                   " subspaces, max dim " + std::to_string(T.max_dim());
  return out;
}

double sparse_coherence_upper(const CVec& f, Index s) {
  if (s < 1 || s > f.size()) throw std::invalid_argument("sparse_coherence_upper: need 1 <= s <= n");
  std::vector<double> mags(f.size());
  for (Index i = 0; i < f.size(); ++i) mags[i] = std::norm(f(i));
  std::partial_sort(mags.begin(), mags.begin() + s, mags.end(), std::greater<>());
  return std::sqrt(std::accumulate(mags.begin(), mags.begin() + s, 0.0));
}

double sparse_coherence_exact(const CVec& f, Index s) {
  const Index n = f.size();
  if (s < 1 || s > n) throw std::invalid_argument("sparse_coherence_exact: need 1 <= s <= n");
  if (n > 20) throw std::invalid_argument("sparse_coherence_exact: enumeration limited to n <= 20");
  std::vector<Index> idx(s);
  std::iota(idx.begin(), idx.end(), Index(0));
  double best = 0.0;
  while (true) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (Index i : idx) {
      aa += f(i).real() * f(i).real();
      bb += f(i).imag() * f(i).imag();
      ab += f(i).real() * f(i).imag();
    }
    best = std::max(best, two_row_sigma_max(aa, bb, ab));
    Index i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Index j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

CoherenceVector sparse_coherence_vector(const UnitaryOperator& F, Index s, bool exact) {
  CoherenceVector out;
  out.alpha.resize(F.dim());
  for (Index j = 0; j < F.dim(); ++j) {
    const CVec f = F.row_vector(j);
    out.alpha(j) = exact ? sparse_coherence_exact(f, s) : sparse_coherence_upper(f, s);
  }
  out.method = exact ? CoherenceMethod::exact : CoherenceMethod::upper_bound;
  out.descriptor = to_string(out.method) + "; " + F.describe() + "; " + std::to_string(s) + "-sparse";
  return out;
}

CoherenceVector empirical_generative_coherence(const GenerativeNetwork& G, const UnitaryOperator& F,
                                               std::size_t num_latents, std::uint64_t seed) {
  if (num_latents < 2) throw std::invalid_argument("empirical coherence needs at least 2 latents");
  if (G.output_dim() != F.dim()) throw std::invalid_argument("empirical coherence: dimension mismatch");
  Rng rng(seed);
  const Index n = F.dim();
  std::vector<Vec> signals;
  std::vector<CVec> spectra;
  for (std::size_t a = 0; a < num_latents; ++a) {
    signals.push_back(G.forward(rng.normal_vector(G.latent_dim())));
    spectra.push_back(F.forward(signals.back()));
  }
  CoherenceVector out;
  out.alpha = Vec::Zero(n);
  for (std::size_t a = 0; a < num_latents; ++a)
    for (std::size_t b = a + 1; b < num_latents; ++b) {
      const double dist = (signals[a] - signals[b]).norm();
      if (dist == 0.0) continue;
      for (Index j = 0; j < n; ++j)
        out.alpha(j) = std::max(out.alpha(j), std::abs(spectra[a](j) - spectra[b](j)) / dist);
    }
  out.method = CoherenceMethod::empirical;
  out.descriptor = "empirical; " + F.describe() + "; " + std::to_string(num_latents) + " latents";
  return out;
}

std::string coherence_to_csv(const CoherenceVector& alpha) {
  std::string out = "index,alpha,method\n";
  const std::string method = to_string(alpha.method);
  for (Index j = 0; j < alpha.alpha.size(); ++j)
    out += std::to_string(j) + "," + csv::format_double(alpha.alpha(j)) + "," + method + "\n";
  return out;
}

CoherenceVector coherence_from_csv(const std::string& text) {
  const auto rows = csv::parse_table(text, "index,alpha,method");
  if (rows.empty()) throw IoError("coherence CSV has no rows");
  CoherenceVector out;
  out.alpha.resize(Index(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (csv::parse_int(rows[r][0]) != static_cast<long long>(r))
      throw IoError("coherence CSV indices must be 0, 1, 2, ...");
    out.alpha(Index(r)) = csv::parse_double(rows[r][1]);
    if (!(out.alpha(Index(r)) >= 0.0) || !std::isfinite(out.alpha(Index(r))))
      throw IoError("coherence CSV has a negative or non-finite alpha");
    out.method = parse_coherence_method(rows[r][2]);
  }
  out.descriptor = "loaded from CSV";
  return out;
}

}  // namespace vdcs
