#ifndef ACE_IMAGE_HPP
#define ACE_IMAGE_HPP

#include "ace/errors.hpp"
#include "ace/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace ace {

/// Half-pixel-center source coordinate for destination index `dst` when
/// mapping `src_len` samples onto `dst_len`. Equal lengths give the identity.
inline double source_coordinate(int dst, int src_len, int dst_len) {
  const double s = (double(dst) + 0.5) * double(src_len) / double(dst_len) - 0.5;
  return std::clamp(s, 0.0, double(src_len - 1));
}

struct BilinearTap {
  int i0;
  int i1;
  double t;
};

inline std::vector<BilinearTap> bilinear_taps(int src_len, int dst_len) {
  std::vector<BilinearTap> taps(dst_len);
  for (int d = 0; d < dst_len; ++d) {
    const double s = source_coordinate(d, src_len, dst_len);
    const int i0 = int(std::floor(s));
    const int i1 = std::min(i0 + 1, src_len - 1);
    taps[d] = {i0, i1, s - i0};
  }
  return taps;
}

/// Bilinear resize of a multi-channel image stored as Image<Scalar>.
template <typename Scalar>
Image<Scalar> resize_bilinear(const Image<Scalar>& src, int width, int height) {
  require(!src.empty() && width > 0 && height > 0, "resize_bilinear: empty source or target");
  if (width == src.width && height == src.height) return src;
  const auto xs = bilinear_taps(src.width, width);
  const auto ys = bilinear_taps(src.height, height);
  auto out = Image<Scalar>::uninitialized(width, height);
  const Scalar* in = src.pixels.data();
  Scalar* dst = out.pixels.data();
  for (int y = 0; y < height; ++y) {
    const auto& ty = ys[std::size_t(y)];
    const Scalar* r0 = in + std::ptrdiff_t(ty.i0) * src.width * 3;
    const Scalar* r1 = in + std::ptrdiff_t(ty.i1) * src.width * 3;
    for (int x = 0; x < width; ++x, dst += 3) {
      const auto& tx = xs[std::size_t(x)];
      const std::ptrdiff_t a = std::ptrdiff_t(tx.i0) * 3, b = std::ptrdiff_t(tx.i1) * 3;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - tx.t) * r0[a + c] + tx.t * r0[b + c];
        const double bot = (1 - tx.t) * r1[a + c] + tx.t * r1[b + c];
        dst[c] = Scalar((1 - ty.t) * top + ty.t * bot);
      }
    }
  }
  return out;
}

/// Bilinear resize of a single-channel map (rows = height).
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> resize_bilinear(
    const Eigen::ArrayBase<Derived>& src, int width, int height) {
  using Scalar = typename Derived::Scalar;
  const int sw = int(src.cols());
  const int sh = int(src.rows());
  require(sw > 0 && sh > 0 && width > 0 && height > 0, "resize_bilinear: empty source or target");
  const auto xs = bilinear_taps(sw, width);
  const auto ys = bilinear_taps(sh, height);
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(height, width);
  for (int y = 0; y < height; ++y) {
    const auto& ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const auto& tx = xs[x];
      const double top = (1 - tx.t) * src(ty.i0, tx.i0) + tx.t * src(ty.i0, tx.i1);
      const double bot = (1 - tx.t) * src(ty.i1, tx.i0) + tx.t * src(ty.i1, tx.i1);
      out(y, x) = Scalar((1 - ty.t) * top + ty.t * bot);
    }
  }
  return out;
}

template <typename Scalar>
Image<Scalar> crop(const Image<Scalar>& src, const BBox& box) {
  require(box.x >= 0 && box.y >= 0 && box.w > 0 && box.h > 0 && box.x + box.w <= src.width &&
              box.y + box.h <= src.height,
          "crop: box outside image");
  Image<Scalar> out(box.w, box.h);
  for (int y = 0; y < box.h; ++y)
    out.pixels.middleRows(Eigen::Index(y) * box.w, box.w) =
        src.pixels.middleRows(Eigen::Index(box.y + y) * src.width + box.x, box.w);
  return out;
}

inline Mask crop(const Mask& mask, const BBox& box) { return mask.block(box.y, box.x, box.h, box.w); }

/// Round to the nearest 8-bit level, as a PNG round trip would.
RgbImage quantize8(const RgbImage& image);

RgbImage read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// True for file extensions read_image understands.
bool is_image_file(const std::filesystem::path& path);

}  // namespace ace

#endif  // ACE_IMAGE_HPP
