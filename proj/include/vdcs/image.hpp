#pragma once

#include <string>

#include "vdcs/transforms.hpp"

namespace vdcs {

/// Square grayscale image, row-major, values in [0, 1].
struct Image {
  Vec pixels;
  Index side = 0;
};

/// Binary 8-bit PGM (P5). The image must be square with a power-of-two side.
Image parse_pgm(const std::string& bytes);
Image load_image_pgm(const std::string& path);
void save_image_pgm(const Image& image, const std::string& path);

struct SparsifiedSignal {
  Vec signal;
  /// W x with all but the s largest-magnitude entries zeroed.
  Vec coefficients;
};

/// Keeps the s largest-magnitude coefficients of x in the real basis W.
SparsifiedSignal sparsify_in_basis(const Vec& x, const UnitaryOperator& W, Index s);

}  // namespace vdcs
