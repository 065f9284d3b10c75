#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "vdcs/priors.hpp"

using namespace vdcs;

namespace {

Vec relu(const Vec& v) { return v.cwiseMax(0.0); }

// Straight-line evaluation, written without the library's trace machinery.
Vec forward_oracle(const std::vector<Mat>& W, const Vec& z) {
  Vec h = z;
  for (std::size_t i = 0; i < W.size(); ++i) {
    Vec next(W[i].rows());
    for (Index r = 0; r < W[i].rows(); ++r) {
      double acc = 0.0;
      for (Index c = 0; c < W[i].cols(); ++c) acc += W[i](r, c) * h(c);
      next(r) = acc;
    }
    h = i + 1 < W.size() ? relu(next) : next;
  }
  return h;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("vdcs_test_" + name)).string();
}

}  // namespace

TEST_CASE("subspace validation") {
  CHECK_NOTHROW(Subspace{Mat::Identity(3, 2)});
  Mat bad = Mat::Identity(3, 2);
  bad(0, 0) = 1.0 + 1e-8;
  CHECK_THROWS_AS(Subspace{bad}, std::invalid_argument);
  CHECK_THROWS_AS(Subspace::span_of(Mat::Zero(3, 2)), std::invalid_argument);

  Mat spanning(3, 3);
  spanning << 1, 2, 3, 0, 0, 0, 1, 2, 3;  // rank one
  const Subspace s = Subspace::span_of(spanning);
  CHECK(s.dim() == 1);
  CHECK(s.contains(Vec::Unit(3, 0) + Vec::Unit(3, 2)));
  CHECK_FALSE(s.contains(Vec::Unit(3, 1)));
}

TEST_CASE("subspace union shape") {
  const SubspaceUnion u({Subspace(Mat::Identity(4, 1)), Subspace(Mat::Identity(4, 3))});
  CHECK(u.count() == 2);
  CHECK(u.max_dim() == 3);
  CHECK(u.ambient_dim() == 4);
  CHECK_THROWS_AS(SubspaceUnion({Subspace(Mat::Identity(4, 1)), Subspace(Mat::Identity(3, 1))}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SparsePrior(4, 0), std::invalid_argument);
  CHECK_THROWS_AS(SparsePrior(4, 5), std::invalid_argument);
}

TEST_CASE("difference union of a sparse prior") {
  const DifferenceCover cover = difference_union(SparsePrior(4, 1));
  CHECK(cover.subspaces.count() == 6);
  CHECK(cover.subspaces.max_dim() == 2);
  // Each support of size two appears once.
  for (const auto& support : oracle::subsets(4, 2)) {
    Vec v = Vec::Zero(4);
    v(support[0]) = 1.0;
    v(support[1]) = -2.0;
    int hits = 0;
    for (const auto& s : cover.subspaces.subspaces()) hits += s.contains(v) ? 1 : 0;
    CHECK(hits == 1);
  }
  CHECK(difference_union(SparsePrior(4, 2)).subspaces.count() == 1);

  EnumerationBudget small;
  small.max_subspaces = 100;
  try {
    difference_union(SparsePrior(64, 2), small);
    FAIL("expected BudgetExceeded");
  } catch (const BudgetExceeded& e) {
    CHECK(e.implicit_available());
  }
}

TEST_CASE("difference union of a subspace union") {
  std::mt19937_64 gen(4);
  const SubspaceUnion q = random_subspace_union(10, 4, 2, 9);
  const DifferenceCover cover = difference_union(q);
  CHECK(cover.undeduplicated_count == 10);
  CHECK(cover.subspaces.count() == 10);  // generic position, nothing merges
  for (const auto& s : q.subspaces()) CHECK(cover.subspaces.contains(s.basis().col(0)));

  for (int t = 0; t < 200; ++t) {
    const Subspace& a = q[gen() % 4];
    const Subspace& b = q[gen() % 4];
    const Vec x = a.basis() * oracle::random_vector(gen, 2);
    const Vec y = b.basis() * oracle::random_vector(gen, 2);
    CHECK(cover.subspaces.contains(x - y, 1e-8));
  }

  // Duplicate spans are merged.
  const SubspaceUnion twice({Subspace(Mat::Identity(3, 1)), Subspace(-Mat::Identity(3, 1))});
  const DifferenceCover merged = difference_union(twice);
  CHECK(merged.undeduplicated_count == 3);
  CHECK(merged.subspaces.count() == 1);
}

TEST_CASE("difference union of a generative network covers a latent grid") {
  const GenerativeNetwork G = GenerativeNetwork::random({2, 3, 4}, 17);
  const DifferenceCover cover = difference_union(G);
  CHECK(cover.pieces >= 1);
  CHECK(cover.undeduplicated_count == cover.pieces * cover.pieces);
  CHECK(cover.subspaces.max_dim() <= 4);

  std::vector<Vec> grid;
  for (int a = 0; a < 50; ++a)
    for (int b = 0; b < 50; ++b) {
      Vec z(2);
      z << -2.0 + 4.0 * a / 49.0, -2.0 + 4.0 * b / 49.0;
      grid.push_back(forward_oracle(G.weights(), z));
    }
  std::mt19937_64 gen(2);
  int misses = 0;
  for (int t = 0; t < 3000; ++t) {
    const Vec& x = grid[gen() % grid.size()];
    const Vec& y = grid[gen() % grid.size()];
    if (!cover.subspaces.contains(x - y, 1e-8)) ++misses;
  }
  CHECK(misses == 0);
}

TEST_CASE("count bounds") {
  SUBCASE("sparse") {
    const auto b = subspace_count_bounds(SparsePrior(64, 2));
    CHECK(b.ell == 4);
    CHECK(b.log_M_bound == doctest::Approx(4.0 * std::log(16.0)).epsilon(1e-12));
    const auto full = subspace_count_bounds(SparsePrior(4, 2));
    REQUIRE(full.log_M_exact.has_value());
    CHECK(std::abs(*full.log_M_exact) < 1e-12);
    CHECK(full.log_M_bound >= 0.0);
  }
  SUBCASE("generative") {
    const auto b = subspace_count_bounds(GenerativeNetwork::random({2, 4, 8}, 1));
    CHECK(b.ell == 4);
    CHECK(b.log_M_bound == doctest::Approx(2.0 * 2.0 * std::log(2.0 * std::numbers::e * 4.0 / 2.0)));
  }
  SUBCASE("exact sparse counts stay under the entropy form of the bound") {
    // log C(n, s) <= s log(e n / s); the e-free form can fall below for tiny n.
    for (Index n = 2; n <= 12; ++n)
      for (Index k = 1; 2 * k <= n; ++k) {
        const auto b = subspace_count_bounds(SparsePrior(n, k));
        const double s = double(b.ell);
        const double exact = std::log(double(oracle::subsets(n, b.ell).size()));
        CHECK(*b.log_M_exact == doctest::Approx(exact).epsilon(1e-10));
        CHECK(b.log_M_bound + s >= exact - 1e-12);
      }
  }
  SUBCASE("generative bound dominates discovered pieces") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GenerativeNetwork G = GenerativeNetwork::random({2, 3, 4}, seed);
      const auto cover = difference_union(G);
      CHECK(std::log(double(cover.undeduplicated_count)) <= subspace_count_bounds(G).log_M_bound);
    }
  }
}

TEST_CASE("sparse projection") {
  const Vec x = (Vec(4) << 3, 1, 0, 0).finished();
  CHECK(project(SparsePrior(4, 1), x) == (Vec(4) << 3, 0, 0, 0).finished());
  const Vec tie = (Vec(3) << 1, -1, 0.5).finished();
  CHECK(project(SparsePrior(3, 1), tie) == (Vec(3) << 1, 0, 0).finished());

  std::mt19937_64 gen(6);
  for (int t = 0; t < 100; ++t) {
    const Index n = 2 + Index(gen() % 11);
    const Index k = 1 + Index(gen() % std::uint64_t(n));
    const Vec v = oracle::random_vector(gen, n);
    double best = HUGE_VAL;
    for (const auto& support : oracle::subsets(n, k)) {
      double residual = 0.0;
      std::vector<bool> in(std::size_t(n), false);
      for (Index i : support) in[std::size_t(i)] = true;
      for (Index i = 0; i < n; ++i)
        if (!in[std::size_t(i)]) residual += v(i) * v(i);
      best = std::min(best, residual);
    }
    const Vec p = project(SparsePrior(n, k), v);
    CHECK((p.array() != 0.0).count() == k);
    CHECK(std::abs((v - p).squaredNorm() - best) < 1e-12);
  }
}

TEST_CASE("subspace union projection") {
  Mat b(3, 1);
  b << 1, 1, 0;
  const SubspaceUnion single({Subspace(b / std::sqrt(2.0))});
  const Vec p = project(single, (Vec(3) << 1, 0, 0).finished());
  CHECK((p - (Vec(3) << 0.5, 0.5, 0).finished()).norm() < 1e-15);

  const SubspaceUnion axes({Subspace(Mat::Identity(2, 2).col(0)), Subspace(Mat::Identity(2, 2).col(1))});
  CHECK(project(axes, Vec::Ones(2)) == (Vec(2) << 1, 0).finished());
  const SubspaceUnion swapped({axes[1], axes[0]});
  CHECK(project(swapped, Vec::Ones(2)) == (Vec(2) << 1, 0).finished());

  std::mt19937_64 gen(12);
  const SubspaceUnion q = random_subspace_union(8, 6, 3, 5);
  for (int t = 0; t < 100; ++t) {
    const Vec x = oracle::random_vector(gen, 8);
    const double r = (x - project(q, x)).norm();
    for (const auto& s : q.subspaces()) CHECK(r <= (x - s.project(x)).norm() + 1e-12);
  }
}

TEST_CASE("lexicographic preference") {
  CHECK(lexicographically_preferred((Vec(2) << 1, 0).finished(), (Vec(2) << 0, 1).finished()));
  CHECK_FALSE(lexicographically_preferred((Vec(2) << 0, 1).finished(), (Vec(2) << 1, 0).finished()));
  CHECK(lexicographically_preferred((Vec(2) << 1, 0).finished(), (Vec(2) << -1, 0).finished()));
  CHECK_FALSE(lexicographically_preferred(Vec::Ones(2), Vec::Ones(2)));
}

TEST_CASE("generative forward") {
  const GenerativeNetwork G = GenerativeNetwork::random({3, 5, 7, 9}, 3);
  CHECK(G.widths() == std::vector<Index>{3, 5, 7, 9});
  CHECK(generative_forward(G, Vec::Zero(3)).isZero(0.0));

  // Nonnegative identity-like layers leave ReLU inactive.
  const GenerativeNetwork lin({Mat::Identity(3, 2), Mat::Identity(4, 3)});
  const Vec z = (Vec(2) << 0.5, 2.0).finished();
  CHECK(generative_forward(lin, z) == (Vec(4) << 0.5, 2.0, 0, 0).finished());

  std::mt19937_64 gen(1);
  for (int t = 0; t < 50; ++t) {
    const Vec zz = oracle::random_vector(gen, 3);
    const Vec y = forward_oracle(G.weights(), zz);
    CHECK((generative_forward(G, zz) - y).norm() <= 1e-12 * std::max(1.0, y.norm()));
    CHECK((G.linear_piece(G.activation_pattern(zz)) * zz - y).norm() <= 1e-12 * std::max(1.0, y.norm()));
  }
  CHECK_THROWS_AS(GenerativeNetwork({Mat::Identity(3, 2), Mat::Identity(4, 4)}), std::invalid_argument);
}

TEST_CASE("pullback matches finite differences") {
  const GenerativeNetwork G = GenerativeNetwork::random({3, 6, 8}, 8);
  std::mt19937_64 gen(9);
  for (int t = 0; t < 20; ++t) {
    const Vec z = oracle::random_vector(gen, 3);
    const Vec w = oracle::random_vector(gen, 8);
    GenerativeNetwork::Trace trace;
    G.forward(z, &trace);
    const Vec grad = G.pullback(trace, w);
    const double h = 1e-6;
    for (Index i = 0; i < 3; ++i) {
      const Vec e = Vec::Unit(3, i) * h;
      const double fd = (w.dot(G.forward(z + e)) - w.dot(G.forward(z - e))) / (2 * h);
      CHECK(std::abs(fd - grad(i)) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("latent descent finds points in the range") {
  const GenerativeNetwork G = GenerativeNetwork::random({2, 8, 16}, 4);
  std::mt19937_64 gen(10);
  LatentDescentOptions options;
  options.iterations = 2000;
  for (int t = 0; t < 5; ++t) {
    const Vec target = G.forward(oracle::random_vector(gen, 2));
    const Vec p = project(G, target, options);
    CHECK((p - target).norm() < 1e-4 * target.norm());
  }
}

TEST_CASE("network and union files round trip") {
  const GenerativeNetwork G = GenerativeNetwork::random({2, 3, 5}, 6);
  const std::string net_path = temp_path("net.vdsg");
  save_network(G, net_path);
  const GenerativeNetwork H = load_network(net_path);
  REQUIRE(H.depth() == G.depth());
  for (std::size_t i = 0; i < G.depth(); ++i) CHECK(H.weights()[i] == G.weights()[i]);

  std::ifstream raw(net_path, std::ios::binary);
  char magic[4];
  raw.read(magic, 4);
  CHECK(std::string(magic, 4) == "VDSG");
  std::filesystem::remove(net_path);

  const SubspaceUnion q = random_subspace_union(6, 3, 2, 2);
  const std::string u_path = temp_path("union.txt");
  save_subspace_union(q, u_path);
  const SubspaceUnion r = load_subspace_union(u_path);
  REQUIRE(r.count() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK((r[i].basis() - q[i].basis()).norm() < 1e-14);
  std::filesystem::remove(u_path);

  CHECK_THROWS_AS(load_network(temp_path("missing.vdsg")), IoError);
  std::ofstream(temp_path("garbage")) << "not a network";
  CHECK_THROWS_AS(load_network(temp_path("garbage")), IoError);
  CHECK_THROWS_AS(load_subspace_union(temp_path("garbage")), IoError);
  std::filesystem::remove(temp_path("garbage"));
}
