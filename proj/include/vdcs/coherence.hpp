#pragma once

#include <cstdint>
#include <string>

#include "vdcs/priors.hpp"
#include "vdcs/transforms.hpp"

namespace vdcs {

enum class CoherenceMethod { exact, upper_bound, empirical };

std::string to_string(CoherenceMethod method);
CoherenceMethod parse_coherence_method(const std::string& text);

/// Local coherences alpha_j of the rows of F with respect to a prior.
struct CoherenceVector {
  Vec alpha;
  CoherenceMethod method = CoherenceMethod::exact;
  std::string descriptor;
};

/// sup over real unit x in span(basis) of |f^* x|.
/// For complex f this is the top singular value of the 2 x dim matrix
/// [basis^T Re f ; basis^T Im f].
double subspace_row_coherence(const CVec& f, const Mat& basis);

/// alpha_j = max over subspaces of subspace_row_coherence(f_j, .).
CoherenceVector coherence_vector(const UnitaryOperator& F, const SubspaceUnion& T);

/// sqrt of the sum of the s largest |f_i|^2.
double sparse_coherence_upper(const CVec& f, Index s);
/// Exact real-restricted s-sparse coherence by support enumeration (n <= 20).
double sparse_coherence_exact(const CVec& f, Index s);

/// Coherences of every row of F for s-sparse vectors; the upper-bound
/// estimator unless `exact` is set.
CoherenceVector sparse_coherence_vector(const UnitaryOperator& F, Index s, bool exact = false);

/// alpha_j = max over pairs of latents of |(F x_a - F x_b)_j| / |x_a - x_b|,
/// with x = G(z) and z standard normal.
CoherenceVector empirical_generative_coherence(const GenerativeNetwork& G, const UnitaryOperator& F,
                                               std::size_t num_latents, std::uint64_t seed);

/// CSV with header `index,alpha,method`.
std::string coherence_to_csv(const CoherenceVector& alpha);
CoherenceVector coherence_from_csv(const std::string& text);

}  // namespace vdcs
