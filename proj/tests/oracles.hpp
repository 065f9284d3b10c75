// Dense reference matrices and brute-force helpers, written directly from the
// textbook definitions and independent of the fast code paths.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "vdcs/types.hpp"

namespace oracle {

using vdcs::CMat;
using vdcs::Complex;
using vdcs::CVec;
using vdcs::Index;
using vdcs::Mat;
using vdcs::Vec;

inline CMat dft_matrix(Index n) {
  CMat F(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      F(j, k) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * std::numbers::pi * double(j * k) / double(n));
  return F;
}

/// Rows are the Haar basis functions: the 2^-L/2 box functions of the
/// approximation, then details from the coarsest level L down to level 1.
inline Mat haar_matrix(Index n, int levels) {
  Mat H = Mat::Zero(n, n);
  Index row = 0;
  const Index top = Index(1) << levels;
  for (Index j = 0; j < n / top; ++j, ++row)
    for (Index i = j * top; i < (j + 1) * top; ++i) H(row, i) = std::pow(2.0, -0.5 * levels);
  for (int l = levels; l >= 1; --l) {
    const Index width = Index(1) << l;
    const double h = std::pow(2.0, -0.5 * l);
    for (Index j = 0; j < n / width; ++j, ++row)
      for (Index i = 0; i < width; ++i) H(row, j * width + i) = i < width / 2 ? h : -h;
  }
  return H;
}

/// 2D pyramid Haar on a row-major side x side image: at each level the
/// top-left block B becomes H B H^T with the one-level Haar matrix H.
inline Vec haar2d_apply(const Vec& x, Index side, int levels) {
  Mat img(side, side);
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) img(r, c) = x(r * side + c);
  Index len = side;
  for (int l = 0; l < levels; ++l, len /= 2) {
    const Mat H = haar_matrix(len, 1);
    img.topLeftCorner(len, len) = (H * img.topLeftCorner(len, len) * H.transpose()).eval();
  }
  Vec out(side * side);
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) out(r * side + c) = img(r, c);
  return out;
}

inline CMat dft2d_matrix(Index side) {
  const CMat F = dft_matrix(side);
  CMat out(side * side, side * side);
  for (Index a = 0; a < side; ++a)
    for (Index b = 0; b < side; ++b)
      for (Index c = 0; c < side; ++c)
        for (Index d = 0; d < side; ++d) out(a * side + b, c * side + d) = F(a, c) * F(b, d);
  return out;
}

inline Vec random_vector(std::mt19937_64& gen, Index n) {
  std::normal_distribution<double> normal;
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(gen);
  return v;
}

inline CVec random_complex(std::mt19937_64& gen, Index n) {
  return random_vector(gen, n).cast<Complex>() + Complex(0, 1) * random_vector(gen, n).cast<Complex>();
}

inline Vec random_unit(std::mt19937_64& gen, Index n) {
  Vec v = random_vector(gen, n);
  return v / v.norm();
}

inline Mat random_orthonormal(std::mt19937_64& gen, Index n, Index dim) {
  Mat A(n, dim);
  for (Index c = 0; c < dim; ++c) A.col(c) = random_vector(gen, n);
  return Eigen::HouseholderQR<Mat>(A).householderQ() * Mat::Identity(n, dim);
}

/// Lower bound on sup_{unit x in span(B)} |f^* x| by random search.
inline double coherence_search(std::mt19937_64& gen, const CVec& f, const Mat& B, int samples) {
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec x = B * random_unit(gen, B.cols());
    best = std::max(best, std::abs(f.dot(x.cast<Complex>())));
  }
  return best;
}

/// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<Index>> subsets(Index n, Index k) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> s(k);
  for (Index i = 0; i < k; ++i) s[i] = i;
  while (true) {
    out.push_back(s);
    Index i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) return out;
    ++s[i];
    for (Index j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

}  // namespace oracle
