#pragma once

#include <memory>
#include <string>

#include "vdcs/types.hpp"

namespace vdcs {

enum class TransformKind { identity, dft1d, dft2d, haar1d, haar2d, dense, composed, block_diagonal };

std::string to_string(TransformKind kind);

namespace detail {
class OperatorImpl;
}

/// An n x n unitary transform F with fast forward/adjoint application.
///
/// Operators are immutable after construction and cheap to copy (shared
/// implementation). forward() and adjoint() allocate their own scratch, so one
/// operator may be used from several threads at once.
///
/// Row convention: row_vector(j) returns f_j with (F x)_j = f_j^* x, i.e.
/// f_j = F^* e_j.
class UnitaryOperator {
 public:
  explicit UnitaryOperator(std::shared_ptr<const detail::OperatorImpl> impl);

  Index dim() const;
  Field field() const;
  TransformKind kind() const;
  std::string describe() const;

  CVec forward(const CVec& x) const;
  CVec adjoint(const CVec& y) const;
  CVec forward(const Vec& x) const { return forward(CVec(x.cast<Complex>())); }
  /// Real part of the adjoint; the natural adjoint for real signal spaces.
  Vec adjoint_real(const CVec& y) const { return adjoint(y).real(); }

  /// Conjugated j-th row of F (0-based): (forward(x))_j = row_vector(j).dot(x).
  CVec row_vector(Index j) const;

  /// Dense n x n matrix; intended for small n (tests, diagnostics).
  CMat to_dense() const;

  /// F applied to every column of a real matrix.
  CMat forward_columns(const Mat& columns) const;

  const detail::OperatorImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const detail::OperatorImpl> impl_;
};

UnitaryOperator make_identity_operator(Index n);
/// Unitary DFT, F_{jk} = exp(-2 pi i jk / n) / sqrt(n). n must be a power of two >= 2.
UnitaryOperator make_dft_operator(Index n);
/// Separable 2D unitary DFT on a side x side image flattened row-major.
UnitaryOperator make_dft2d_operator(Index side);
/// Orthonormal Haar analysis operator with `levels` decomposition steps.
/// Output layout: [approximation | detail level `levels` | ... | detail level 1].
UnitaryOperator make_haar_operator(Index n, int levels);
/// Pyramid (Mallat) 2D Haar analysis on a side x side image flattened row-major.
UnitaryOperator make_haar2d_operator(Index side, int levels);
/// Explicit unitary matrix; rejected when max |U^*U - I| > 1e-8.
UnitaryOperator make_dense_operator(const CMat& matrix);
UnitaryOperator make_dense_operator(const Mat& matrix);
/// Effective measurement basis Phi * W^*: forward applies the sparsity adjoint,
/// then the measurement forward, so priors live on coefficient vectors.
UnitaryOperator compose_measurement_basis(const UnitaryOperator& measurement,
                                          const UnitaryOperator& sparsity);
/// Block-diagonal operator applying `block` independently to `channels`
/// contiguous chunks (channel-wise concatenation).
UnitaryOperator make_block_diagonal(const UnitaryOperator& block, Index channels);

/// Free-function form of UnitaryOperator::row_vector.
inline CVec row_vector(const UnitaryOperator& op, Index j) { return op.row_vector(j); }

bool is_power_of_two(Index n);

namespace detail {

class OperatorImpl {
 public:
  virtual ~OperatorImpl() = default;
  virtual Index dim() const = 0;
  virtual Field field() const = 0;
  virtual TransformKind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual CVec forward(const CVec& x) const = 0;
  virtual CVec adjoint(const CVec& y) const = 0;
};
}  // namespace detail

}  // namespace vdcs
