#include "vdcs/transforms.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace vdcs {

std::string to_string(Field field) { return field == Field::real ? "real" : "complex"; }

Field parse_field(const std::string& text) {
  if (text == "real") return Field::real;
  if (text == "complex") return Field::complex;
  throw std::invalid_argument("unknown field '" + text + "'");
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::dft1d: return "dft1d";
    case TransformKind::dft2d: return "dft2d";
    case TransformKind::haar1d: return "haar1d";
    case TransformKind::haar2d: return "haar2d";
    case TransformKind::dense: return "dense";
    case TransformKind::composed: return "composed";
    case TransformKind::block_diagonal: return "block_diagonal";
  }
  return "unknown";
}

bool is_power_of_two(Index n) { return n >= 1 && (n & (n - 1)) == 0; }

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Radix-2 Cooley-Tukey with a precomputed twiddle table and bit-reversal map.
class Fft {
 public:
  explicit Fft(Index n) : n_(n), twiddle_(n / 2), reversed_(n) {
    for (Index k = 0; k < n / 2; ++k)
      twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * double(k) / double(n));
    int bits = 0;
    while ((Index(1) << bits) < n) ++bits;
    for (Index i = 0; i < n; ++i) {
      Index r = 0;
      for (int b = 0; b < bits; ++b)
        if (i & (Index(1) << b)) r |= Index(1) << (bits - 1 - b);
      reversed_[i] = r;
    }
  }

  // Unnormalized; inverse uses conjugate twiddles.
  void run(Complex* data, bool inverse) const {
    for (Index i = 0; i < n_; ++i)
      if (i < reversed_[i]) std::swap(data[i], data[reversed_[i]]);
    for (Index len = 2; len <= n_; len <<= 1) {
      const Index half = len / 2;
      const Index step = n_ / len;
      for (Index start = 0; start < n_; start += len) {
        for (Index k = 0; k < half; ++k) {
          Complex w = twiddle_[k * step];
          if (inverse) w = std::conj(w);
          const Complex u = data[start + k];
          const Complex v = data[start + k + half] * w;
          data[start + k] = u + v;
          data[start + k + half] = u - v;
        }
      }
    }
  }

  Index size() const { return n_; }

 private:
  Index n_;
  std::vector<Complex> twiddle_;
  std::vector<Index> reversed_;
};

class IdentityImpl final : public detail::OperatorImpl {
 public:
  explicit IdentityImpl(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  Field field() const override { return Field::real; }
  TransformKind kind() const override { return TransformKind::identity; }
  std::string describe() const override { return "identity(" + std::to_string(n_) + ")"; }
  CVec forward(const CVec& x) const override { return x; }
  CVec adjoint(const CVec& y) const override { return y; }

 private:
  Index n_;
};

class Dft1dImpl final : public detail::OperatorImpl {
 public:
  explicit Dft1dImpl(Index n) : fft_(n), scale_(1.0 / std::sqrt(double(n))) {}
  Index dim() const override { return fft_.size(); }
  Field field() const override { return Field::complex; }
  TransformKind kind() const override { return TransformKind::dft1d; }
  std::string describe() const override { return "dft1d(" + std::to_string(dim()) + ")"; }
  CVec forward(const CVec& x) const override { return apply(x, false); }
  CVec adjoint(const CVec& y) const override { return apply(y, true); }

 private:
  CVec apply(const CVec& x, bool inverse) const {
    CVec out = x;
    fft_.run(out.data(), inverse);
    out *= scale_;
    return out;
  }
  Fft fft_;
  double scale_;
};

class Dft2dImpl final : public detail::OperatorImpl {
 public:
  explicit Dft2dImpl(Index side) : side_(side), fft_(side), scale_(1.0 / double(side)) {}
  Index dim() const override { return side_ * side_; }
  Field field() const override { return Field::complex; }
  TransformKind kind() const override { return TransformKind::dft2d; }
  std::string describe() const override {
    return "dft2d(" + std::to_string(side_) + "x" + std::to_string(side_) + ")";
  }
  CVec forward(const CVec& x) const override { return apply(x, false); }
  CVec adjoint(const CVec& y) const override { return apply(y, true); }

 private:
  CVec apply(const CVec& x, bool inverse) const {
    CVec out = x;
    for (Index r = 0; r < side_; ++r) fft_.run(out.data() + r * side_, inverse);
    std::vector<Complex> column(side_);
    for (Index c = 0; c < side_; ++c) {
      for (Index r = 0; r < side_; ++r) column[r] = out(r * side_ + c);
      fft_.run(column.data(), inverse);
      for (Index r = 0; r < side_; ++r) out(r * side_ + c) = column[r];
    }
    out *= scale_;
    return out;
  }
  Index side_;
  Fft fft_;
  double scale_;
};

// One orthonormal Haar step on `len` entries read with `stride`.
void haar_step(Complex* data, Index len, Index stride, std::vector<Complex>& scratch) {
  const Index half = len / 2;
  scratch.resize(len);
  for (Index i = 0; i < half; ++i) {
    const Complex a = data[(2 * i) * stride];
    const Complex b = data[(2 * i + 1) * stride];
    scratch[i] = (a + b) * kInvSqrt2;
    scratch[half + i] = (a - b) * kInvSqrt2;
  }
  for (Index i = 0; i < len; ++i) data[i * stride] = scratch[i];
}

void haar_step_inverse(Complex* data, Index len, Index stride, std::vector<Complex>& scratch) {
  const Index half = len / 2;
  scratch.resize(len);
  for (Index i = 0; i < half; ++i) {
    const Complex s = data[i * stride];
    const Complex d = data[(half + i) * stride];
    scratch[2 * i] = (s + d) * kInvSqrt2;
    scratch[2 * i + 1] = (s - d) * kInvSqrt2;
  }
  for (Index i = 0; i < len; ++i) data[i * stride] = scratch[i];
}

class Haar1dImpl final : public detail::OperatorImpl {
 public:
  Haar1dImpl(Index n, int levels) : n_(n), levels_(levels) {}
  Index dim() const override { return n_; }
  Field field() const override { return Field::real; }
  TransformKind kind() const override { return TransformKind::haar1d; }
  std::string describe() const override {
    return "haar1d(" + std::to_string(n_) + ",levels=" + std::to_string(levels_) + ")";
  }
  CVec forward(const CVec& x) const override {
    CVec out = x;
    std::vector<Complex> scratch;
    Index len = n_;
    for (int l = 0; l < levels_; ++l, len /= 2) haar_step(out.data(), len, 1, scratch);
    return out;
  }
  CVec adjoint(const CVec& y) const override {
    CVec out = y;
    std::vector<Complex> scratch;
    Index len = n_ >> (levels_ - 1);
    for (int l = 0; l < levels_; ++l, len *= 2) haar_step_inverse(out.data(), len, 1, scratch);
    return out;
  }

 private:
  Index n_;
  int levels_;
};

class Haar2dImpl final : public detail::OperatorImpl {
 public:
  Haar2dImpl(Index side, int levels) : side_(side), levels_(levels) {}
  Index dim() const override { return side_ * side_; }
  Field field() const override { return Field::real; }
  TransformKind kind() const override { return TransformKind::haar2d; }
  std::string describe() const override {
    return "haar2d(" + std::to_string(side_) + "x" + std::to_string(side_) +
           ",levels=" + std::to_string(levels_) + ")";
  }
  CVec forward(const CVec& x) const override {
    CVec out = x;
    std::vector<Complex> scratch;
    Index len = side_;
    for (int l = 0; l < levels_; ++l, len /= 2) {
      for (Index r = 0; r < len; ++r) haar_step(out.data() + r * side_, len, 1, scratch);
      for (Index c = 0; c < len; ++c) haar_step(out.data() + c, len, side_, scratch);
    }
    return out;
  }
  CVec adjoint(const CVec& y) const override {
    CVec out = y;
    std::vector<Complex> scratch;
    Index len = side_ >> (levels_ - 1);
    for (int l = 0; l < levels_; ++l, len *= 2) {
      for (Index c = 0; c < len; ++c) haar_step_inverse(out.data() + c, len, side_, scratch);
      for (Index r = 0; r < len; ++r) haar_step_inverse(out.data() + r * side_, len, 1, scratch);
    }
    return out;
  }

 private:
  Index side_;
  int levels_;
};

class DenseImpl final : public detail::OperatorImpl {
 public:
  DenseImpl(CMat matrix, Field field) : matrix_(std::move(matrix)), field_(field) {}
  Index dim() const override { return matrix_.rows(); }
  Field field() const override { return field_; }
  TransformKind kind() const override { return TransformKind::dense; }
  std::string describe() const override { return "dense(" + std::to_string(dim()) + ")"; }
  CVec forward(const CVec& x) const override { return matrix_ * x; }
  CVec adjoint(const CVec& y) const override { return matrix_.adjoint() * y; }

 private:
  CMat matrix_;
  Field field_;
};

class ComposedImpl final : public detail::OperatorImpl {
 public:
  ComposedImpl(UnitaryOperator measurement, UnitaryOperator sparsity)
      : measurement_(std::move(measurement)), sparsity_(std::move(sparsity)) {}
  Index dim() const override { return measurement_.dim(); }
  Field field() const override {
    return measurement_.field() == Field::real && sparsity_.field() == Field::real ? Field::real
                                                                                    : Field::complex;
  }
  TransformKind kind() const override { return TransformKind::composed; }
  std::string describe() const override {
    return measurement_.describe() + "*adjoint(" + sparsity_.describe() + ")";
  }
  CVec forward(const CVec& x) const override {
    return measurement_.forward(sparsity_.adjoint(x));
  }
  CVec adjoint(const CVec& y) const override {
    return sparsity_.forward(measurement_.adjoint(y));
  }

 private:
  UnitaryOperator measurement_;
  UnitaryOperator sparsity_;
};

class BlockDiagonalImpl final : public detail::OperatorImpl {
 public:
  BlockDiagonalImpl(UnitaryOperator block, Index channels)
      : block_(std::move(block)), channels_(channels) {}
  Index dim() const override { return block_.dim() * channels_; }
  Field field() const override { return block_.field(); }
  TransformKind kind() const override { return TransformKind::block_diagonal; }
  std::string describe() const override {
    return "blockdiag(" + block_.describe() + "," + std::to_string(channels_) + ")";
  }
  CVec forward(const CVec& x) const override { return apply(x, false); }
  CVec adjoint(const CVec& y) const override { return apply(y, true); }

 private:
  CVec apply(const CVec& x, bool adjoint) const {
    const Index b = block_.dim();
    CVec out(x.size());
    for (Index c = 0; c < channels_; ++c) {
      const CVec part = x.segment(c * b, b);
      out.segment(c * b, b) = adjoint ? block_.adjoint(part) : block_.forward(part);
    }
    return out;
  }
  UnitaryOperator block_;
  Index channels_;
};

}  // namespace

UnitaryOperator::UnitaryOperator(std::shared_ptr<const detail::OperatorImpl> impl)
    : impl_(std::move(impl)) {
  if (!impl_) throw std::invalid_argument("UnitaryOperator: null implementation");
}

Index UnitaryOperator::dim() const { return impl_->dim(); }
Field UnitaryOperator::field() const { return impl_->field(); }
TransformKind UnitaryOperator::kind() const { return impl_->kind(); }
std::string UnitaryOperator::describe() const { return impl_->describe(); }

CVec UnitaryOperator::forward(const CVec& x) const {
  if (x.size() != dim()) throw std::invalid_argument("forward: dimension mismatch");
  return impl_->forward(x);
}

CVec UnitaryOperator::adjoint(const CVec& y) const {
  if (y.size() != dim()) throw std::invalid_argument("adjoint: dimension mismatch");
  return impl_->adjoint(y);
}

CVec UnitaryOperator::row_vector(Index j) const {
  if (j < 0 || j >= dim()) throw std::out_of_range("row_vector: index out of range");
  CVec e = CVec::Zero(dim());
  e(j) = 1.0;
  return impl_->adjoint(e);
}

CMat UnitaryOperator::to_dense() const {
  const Index n = dim();
  CMat out(n, n);
  CVec e = CVec::Zero(n);
  for (Index k = 0; k < n; ++k) {
    e(k) = 1.0;
    out.col(k) = impl_->forward(e);
    e(k) = 0.0;
  }
  return out;
}

CMat UnitaryOperator::forward_columns(const Mat& columns) const {
  if (columns.rows() != dim()) throw std::invalid_argument("forward_columns: dimension mismatch");
  CMat out(dim(), columns.cols());
  for (Index c = 0; c < columns.cols(); ++c)
    out.col(c) = impl_->forward(CVec(columns.col(c).cast<Complex>()));
  return out;
}

UnitaryOperator make_identity_operator(Index n) {
  if (n < 1) throw std::invalid_argument("identity operator: n must be positive");
  return UnitaryOperator(std::make_shared<IdentityImpl>(n));
}

UnitaryOperator make_dft_operator(Index n) {
  if (n < 2 || !is_power_of_two(n))
    throw std::invalid_argument("DFT length must be a power of two >= 2, got " + std::to_string(n));
  return UnitaryOperator(std::make_shared<Dft1dImpl>(n));
}

UnitaryOperator make_dft2d_operator(Index side) {
  if (side < 2 || !is_power_of_two(side))
    throw std::invalid_argument("2D DFT side must be a power of two >= 2, got " +
                                std::to_string(side));
  return UnitaryOperator(std::make_shared<Dft2dImpl>(side));
}

UnitaryOperator make_haar_operator(Index n, int levels) {
  if (levels < 1) throw std::invalid_argument("Haar levels must be >= 1");
  if (levels > 62 || n < 2 || n % (Index(1) << levels) != 0)
    throw std::invalid_argument("Haar: n=" + std::to_string(n) + " not divisible by 2^" +
                                std::to_string(levels));
  return UnitaryOperator(std::make_shared<Haar1dImpl>(n, levels));
}

UnitaryOperator make_haar2d_operator(Index side, int levels) {
  if (levels < 1) throw std::invalid_argument("Haar levels must be >= 1");
  if (levels > 62 || side < 2 || side % (Index(1) << levels) != 0)
    throw std::invalid_argument("Haar2d: side=" + std::to_string(side) + " not divisible by 2^" +
                                std::to_string(levels));
  return UnitaryOperator(std::make_shared<Haar2dImpl>(side, levels));
}

UnitaryOperator make_dense_operator(const CMat& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1)
    throw std::invalid_argument("dense operator must be square and non-empty");
  const CMat gram = matrix.adjoint() * matrix;
  const double defect = (gram - CMat::Identity(matrix.rows(), matrix.cols())).cwiseAbs().maxCoeff();
  if (defect > 1e-8)
    throw std::invalid_argument("dense operator is not unitary (defect " + std::to_string(defect) +
                                ")");
  const Field field = matrix.imag().cwiseAbs().maxCoeff() == 0.0 ? Field::real : Field::complex;
  return UnitaryOperator(std::make_shared<DenseImpl>(matrix, field));
}

UnitaryOperator make_dense_operator(const Mat& matrix) {
  return make_dense_operator(CMat(matrix.cast<Complex>()));
}

UnitaryOperator compose_measurement_basis(const UnitaryOperator& measurement,
                                          const UnitaryOperator& sparsity) {
  if (measurement.dim() != sparsity.dim())
    throw std::invalid_argument("compose: dimension mismatch (" + std::to_string(measurement.dim()) +
                                " vs " + std::to_string(sparsity.dim()) + ")");
  return UnitaryOperator(std::make_shared<ComposedImpl>(measurement, sparsity));
}

UnitaryOperator make_block_diagonal(const UnitaryOperator& block, Index channels) {
  if (channels < 1) throw std::invalid_argument("block diagonal: channels must be positive");
  return UnitaryOperator(std::make_shared<BlockDiagonalImpl>(block, channels));
}

}  // namespace vdcs
