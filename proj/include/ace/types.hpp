#ifndef ACE_TYPES_HPP
#define ACE_TYPES_HPP

#include <Eigen/Core>

#include <cassert>
#include <cstdint>

namespace ace {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Bottleneck-layer embedding of one image or patch.
using ActivationVector = Eigen::VectorXf;

/// A batch of activations, one sample per row.
using ActivationMatrix = RowMatrix<float>;

/// A batch of class scores (or logits), one sample per row.
using ScoreMatrix = RowMatrix<float>;

/// Dense RGB image. Pixel (x, y) lives in row y * width + x; columns are
/// the R, G, B channels.
template <typename Scalar>
struct Image {
  using PixelArray = Eigen::Array<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

  int width = 0;
  int height = 0;
  PixelArray pixels;

  Image() = default;
  Image(int w, int h, Scalar fill = Scalar(0)) : width(w), height(h), pixels(PixelArray::Constant(Eigen::Index(w) * h, 3, fill)) {}

  /// An image whose pixels are left unset; the caller writes every pixel.
  static Image uninitialized(int w, int h) {
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(Eigen::Index(w) * h, 3);
    return img;
  }

  Scalar& operator()(int x, int y, int c) {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return pixels(Eigen::Index(y) * width + x, c);
  }
  Scalar operator()(int x, int y, int c) const {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return pixels(Eigen::Index(y) * width + x, c);
  }

  Eigen::Index pixel_count() const { return Eigen::Index(width) * height; }
  bool empty() const { return width == 0 || height == 0; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width == b.width && a.height == b.height && (a.pixels == b.pixels).all();
  }
};

using RgbImage = Image<float>;

/// Binary per-pixel map, rows = height, cols = width.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel integer labels, rows = height, cols = width.
using LabelMap = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Tight bounding box of the true entries of `mask`; w == 0 when empty.
BBox bounding_box(const Mask& mask);

}  // namespace ace

#endif  // ACE_TYPES_HPP
