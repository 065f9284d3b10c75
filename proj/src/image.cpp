#include "vdcs/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "vdcs/csv.hpp"

namespace vdcs {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw IoError("PGM: truncated header");
  return bytes.substr(start, pos - start);
}

long long header_int(const std::string& bytes, std::size_t& pos) {
  try {
    return csv::parse_int(header_token(bytes, pos));
  } catch (const std::invalid_argument&) {
    throw IoError("PGM: malformed header field");
  }
}

}  // namespace

Image parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  if (header_token(bytes, pos) != "P5") throw IoError("PGM: expected binary P5 magic");
  const long long width = header_int(bytes, pos);
  const long long height = header_int(bytes, pos);
  const long long maxval = header_int(bytes, pos);
  if (width < 1 || height < 1) throw IoError("PGM: non-positive dimensions");
  if (width != height) throw IoError("PGM: image is not square");
  if (!is_power_of_two(Index(width))) throw IoError("PGM: side is not a power of two");
  if (maxval != 255) throw IoError("PGM: only 8-bit images (maxval 255) are supported");
  ++pos;  // single whitespace byte after maxval
  const std::size_t count = std::size_t(width * height);
  if (bytes.size() < pos + count) throw IoError("PGM: pixel data truncated");
  Image image;
  image.side = Index(width);
  image.pixels.resize(Index(count));
  for (std::size_t i = 0; i < count; ++i)
    image.pixels(Index(i)) = double(static_cast<unsigned char>(bytes[pos + i])) / 255.0;
  return image;
}

Image load_image_pgm(const std::string& path) { return parse_pgm(csv::read_file(path)); }

void save_image_pgm(const Image& image, const std::string& path) {
  std::string out = "P5\n" + std::to_string(image.side) + " " + std::to_string(image.side) + "\n255\n";
  for (Index i = 0; i < image.pixels.size(); ++i) {
    const double v = std::clamp(image.pixels(i), 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  csv::write_file(path, out);
}

SparsifiedSignal sparsify_in_basis(const Vec& x, const UnitaryOperator& W, Index s) {
  if (x.size() != W.dim()) throw std::invalid_argument("sparsify_in_basis: dimension mismatch");
  if (s < 1 || s > x.size()) throw std::invalid_argument("sparsify_in_basis: need 1 <= s <= n");
  const Vec c = W.forward(x).real();
  std::vector<Index> idx(c.size());
  std::iota(idx.begin(), idx.end(), Index(0));
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(c(a)) > std::abs(c(b)); });
  SparsifiedSignal out;
  out.coefficients = Vec::Zero(c.size());
  for (Index i = 0; i < s; ++i) out.coefficients(idx[i]) = c(idx[i]);
  out.signal = W.adjoint(out.coefficients.cast<Complex>()).real();
  return out;
}

}  // namespace vdcs
