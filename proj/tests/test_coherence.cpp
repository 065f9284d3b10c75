#include <doctest.h>

#include "oracles.hpp"
#include "vdcs/coherence.hpp"
#include "vdcs/rng.hpp"

using namespace vdcs;

namespace {

// Exact real-restricted s-sparse coherence of a row: for each support, the
// top singular value of [Re f_S ; Im f_S], computed by a dense SVD.
double exhaustive_sparse(const CVec& f, Index s) {
  double best = 0.0;
  for (const auto& support : oracle::subsets(f.size(), s)) {
    Mat M(2, s);
    for (Index c = 0; c < s; ++c) {
      M(0, c) = f(support[std::size_t(c)]).real();
      M(1, c) = f(support[std::size_t(c)]).imag();
    }
    best = std::max(best, Eigen::JacobiSVD<Mat>(M).singularValues()(0));
  }
  return best;
}

// G(z) = A relu(z) - A relu(-z) = A z: a ReLU net whose range is span(A).
GenerativeNetwork linear_network(const Mat& A) {
  const Index k = A.cols();
  Mat W1(2 * k, k);
  W1 << Mat::Identity(k, k), -Mat::Identity(k, k);
  Mat W2(A.rows(), 2 * k);
  W2 << A, -A;
  return GenerativeNetwork({W1, W2});
}

}  // namespace

TEST_CASE("row coherence examples") {
  const CVec e1 = Vec::Unit(4, 0).cast<Complex>();
  CHECK(subspace_row_coherence(e1, Mat::Identity(4, 1)) == doctest::Approx(1.0));
  CHECK(subspace_row_coherence(e1, Mat(Vec::Unit(4, 1))) == 0.0);

  // Complex f = (1, i)/sqrt2 over the real plane: |f^* x| = 1/sqrt2 for every unit x.
  CVec f(2);
  f << 1.0 / std::sqrt(2.0), Complex(0, 1.0 / std::sqrt(2.0));
  CHECK(subspace_row_coherence(f, Mat::Identity(2, 2)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // The looser projection norm would give 1 here.
  CHECK(subspace_row_coherence(f, Mat::Identity(2, 2)) < f.norm() - 0.2);
}

TEST_CASE("row coherence against random search") {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 5; ++t) {
    const CVec f = oracle::random_complex(gen, 8).normalized();
    const Mat B = oracle::random_orthonormal(gen, 8, 3);
    const double exact = subspace_row_coherence(f, B);
    const double search = oracle::coherence_search(gen, f, B, 100000);
    CHECK(search <= exact + 1e-12);
    CHECK(search >= exact - 1e-3);
  }
  for (Index dim = 1; dim <= 3; ++dim) {
    const Vec f = oracle::random_vector(gen, 6);
    const Mat B = oracle::random_orthonormal(gen, 6, dim);
    CHECK(subspace_row_coherence(f.cast<Complex>(), B) == doctest::Approx((B.transpose() * f).norm()));
  }
}

TEST_CASE("coherence vectors of small unions") {
  SUBCASE("identity rows and 1-sparse lines") {
    const CoherenceVector a = coherence_vector(make_identity_operator(4), sparse_support_union(4, 1));
    CHECK(a.method == CoherenceMethod::exact);
    CHECK((a.alpha - Vec::Ones(4)).norm() < 1e-15);
  }
  SUBCASE("a single line under the DFT") {
    const SubspaceUnion line({Subspace(Mat::Identity(4, 1))});
    const CoherenceVector a = coherence_vector(make_dft_operator(4), line);
    CHECK((a.alpha - Vec::Constant(4, 0.5)).norm() < 1e-15);
  }
  SUBCASE("DFT with all supports matches exhaustive enumeration") {
    for (Index n : {4, 8})
      for (Index s = 1; s <= 3; ++s) {
        const UnitaryOperator F = make_dft_operator(n);
        const CoherenceVector a = coherence_vector(F, sparse_support_union(n, s));
        const CoherenceVector b = sparse_coherence_vector(F, s, true);
        for (Index j = 0; j < n; ++j) {
          const double want = exhaustive_sparse(F.row_vector(j), s);
          CHECK(a.alpha(j) == doctest::Approx(want).epsilon(1e-10));
          CHECK(b.alpha(j) == doctest::Approx(want).epsilon(1e-10));
          CHECK(a.alpha(j) <= std::sqrt(double(s) / n) + 1e-12);
        }
      }
  }
}

TEST_CASE("sparse upper bound") {
  CHECK(sparse_coherence_upper(Vec::Unit(4, 0).cast<Complex>(), 2) == 1.0);
  const UnitaryOperator F = make_dft_operator(16);
  for (Index j : {0, 5, 15})
    for (Index s : {1, 3, 16}) CHECK(sparse_coherence_upper(F.row_vector(j), s) == doctest::Approx(std::sqrt(s / 16.0)));

  std::mt19937_64 gen(12);
  for (int t = 0; t < 50; ++t) {
    const CVec f = oracle::random_complex(gen, 6);
    const double exact = exhaustive_sparse(f, 2);
    CHECK(sparse_coherence_upper(f, 2) >= exact - 1e-12);
    CHECK(sparse_coherence_exact(f, 2) == doctest::Approx(exact).epsilon(1e-10));
  }
  const CoherenceVector v = sparse_coherence_vector(F, 4);
  CHECK(v.method == CoherenceMethod::upper_bound);
  CHECK((v.alpha - Vec::Constant(16, 0.5)).norm() < 1e-12);
  CHECK_THROWS_AS(sparse_coherence_upper(F.row_vector(0), 0), std::invalid_argument);
  CHECK_THROWS(sparse_coherence_exact(CVec::Ones(32), 2));
}

TEST_CASE("coherence invariants") {
  std::mt19937_64 gen(5);
  const UnitaryOperator F = compose_measurement_basis(make_dft_operator(16), make_haar_operator(16, 2));
  const SubspaceUnion small = random_subspace_union(16, 3, 2, 1);
  std::vector<Subspace> more = small.subspaces();
  more.push_back(Subspace::span_of(oracle::random_vector(gen, 16)));
  const Vec a = coherence_vector(F, small).alpha;
  const Vec b = coherence_vector(F, SubspaceUnion(more)).alpha;
  CHECK((b - a).minCoeff() >= 0.0);
  CHECK(a.norm() >= 1.0 - 1e-12);
  CHECK(b.norm() >= 1.0 - 1e-12);

  // Rescaled spanning sets give the same spans, hence the same alpha.
  std::vector<Subspace> rescaled;
  for (const auto& s : small.subspaces()) rescaled.push_back(Subspace::span_of(3.5 * s.basis()));
  CHECK((coherence_vector(F, SubspaceUnion(rescaled)).alpha - a).norm() < 1e-12);

  for (Index s = 1; s <= 4; ++s) {
    const Vec exact = sparse_coherence_vector(F, s, true).alpha;
    const Vec upper = sparse_coherence_vector(F, s).alpha;
    CHECK(exact.norm() >= 1.0 - 1e-12);
    CHECK((upper - exact).minCoeff() >= -1e-12);
  }
}

TEST_CASE("empirical generative coherence") {
  SUBCASE("two latents give a single normalized difference") {
    const GenerativeNetwork G = GenerativeNetwork::random({2, 4, 8}, 3);
    const UnitaryOperator F = make_dft_operator(8);
    Rng rng(77);
    const Vec x1 = G.forward(rng.normal_vector(2));
    const Vec x2 = G.forward(rng.normal_vector(2));
    const Vec want = (oracle::dft_matrix(8) * (x1 - x2).cast<Complex>()).cwiseAbs() / (x1 - x2).norm();
    const CoherenceVector a = empirical_generative_coherence(G, F, 2, 77);
    CHECK(a.method == CoherenceMethod::empirical);
    CHECK((a.alpha - want).norm() < 1e-12);
    CHECK_THROWS_AS(empirical_generative_coherence(G, F, 1, 77), std::invalid_argument);
  }
  SUBCASE("linear network approaches the subspace coherence from below") {
    std::mt19937_64 gen(3);
    const Mat A = oracle::random_orthonormal(gen, 16, 2);
    const GenerativeNetwork G = linear_network(A);
    const UnitaryOperator F = make_dft_operator(16);
    const Vec exact = coherence_vector(F, SubspaceUnion({Subspace(A)})).alpha;
    const Vec coarse = empirical_generative_coherence(G, F, 8, 1).alpha;
    const Vec fine = empirical_generative_coherence(G, F, 400, 1).alpha;
    CHECK((exact - coarse).minCoeff() >= -1e-12);
    CHECK((exact - fine).minCoeff() >= -1e-12);
    CHECK((exact - fine).maxCoeff() < 1e-3);
    CHECK((exact - fine).norm() <= (exact - coarse).norm());
  }
  SUBCASE("bounded by the exact coherence of the difference cover") {
    const GenerativeNetwork G = GenerativeNetwork::random({2, 3, 8}, 5);
    const UnitaryOperator F = make_dft_operator(8);
    const Vec exact = coherence_vector(F, difference_union(G).subspaces).alpha;
    const Vec emp = empirical_generative_coherence(G, F, 300, 2).alpha;
    CHECK((exact - emp).minCoeff() >= -1e-10);
  }
}

TEST_CASE("coherence csv") {
  CoherenceVector a;
  a.alpha = (Vec(3) << 0.1, 1.0 / 3.0, 2e-17).finished();
  a.method = CoherenceMethod::upper_bound;
  const std::string text = coherence_to_csv(a);
  CHECK(text.rfind("index,alpha,method\n0,", 0) == 0);
  const CoherenceVector b = coherence_from_csv(text);
  CHECK(b.alpha == a.alpha);
  CHECK(b.method == CoherenceMethod::upper_bound);
  CHECK_THROWS(coherence_from_csv("index,alpha,method\n1,0.5,exact\n"));
  CHECK_THROWS(coherence_from_csv("i,a,m\n0,0.5,exact\n"));
  CHECK(parse_coherence_method(to_string(CoherenceMethod::empirical)) == CoherenceMethod::empirical);
}
