#include "ace/segmentation.hpp"

#include "ace/errors.hpp"
#include "ace/image.hpp"

namespace ace {

Mask SegmentPatch::full_mask(int width, int height) const {
  Mask full = Mask::Constant(height, width, false);
  full.block(bbox.y, bbox.x, bbox.h, bbox.w) = mask;
  return full;
}

RgbImage extract_patch(const RgbImage& image, const Mask& mask, int target_width, int target_height,
                       float pad_value) {
  require(mask.rows() == image.height && mask.cols() == image.width, "extract_patch: mask dims differ from image");
  require(target_width > 0 && target_height > 0, "extract_patch: target size must be positive");
  const BBox box = bounding_box(mask);
  require(box.w > 0, "extract_patch: empty mask");

  // Single pass equivalent to: pixels outside the mask set to pad, crop to
  // the box, bilinear resize of both the crop and the mask, then pad where
  // the resized mask weight is below one half.
  const auto xs = bilinear_taps(box.w, target_width);
  const auto ys = bilinear_taps(box.h, target_height);
  auto out = RgbImage::uninitialized(target_width, target_height);
  float* dst = out.pixels.data();
  const float* src = image.pixels.data();
  for (int y = 0; y < target_height; ++y) {
    const auto& ty = ys[std::size_t(y)];
    const int sy0 = box.y + ty.i0, sy1 = box.y + ty.i1;
    for (int x = 0; x < target_width; ++x, dst += 3) {
      const auto& tx = xs[std::size_t(x)];
      const int sx0 = box.x + tx.i0, sx1 = box.x + tx.i1;
      const bool m00 = mask(sy0, sx0), m01 = mask(sy0, sx1), m10 = mask(sy1, sx0), m11 = mask(sy1, sx1);
      const double wtop = (1 - tx.t) * m00 + tx.t * m01;
      const double wbot = (1 - tx.t) * m10 + tx.t * m11;
      if (float((1 - ty.t) * wtop + ty.t * wbot) < 0.5f) {
        dst[0] = dst[1] = dst[2] = pad_value;
        continue;
      }
      const float* p00 = src + (std::ptrdiff_t(sy0) * image.width + sx0) * 3;
      const float* p01 = src + (std::ptrdiff_t(sy0) * image.width + sx1) * 3;
      const float* p10 = src + (std::ptrdiff_t(sy1) * image.width + sx0) * 3;
      const float* p11 = src + (std::ptrdiff_t(sy1) * image.width + sx1) * 3;
      for (int c = 0; c < 3; ++c) {
        const float v00 = m00 ? p00[c] : pad_value, v01 = m01 ? p01[c] : pad_value;
        const float v10 = m10 ? p10[c] : pad_value, v11 = m11 ? p11[c] : pad_value;
        const double top = (1 - tx.t) * v00 + tx.t * v01;
        const double bot = (1 - tx.t) * v10 + tx.t * v11;
        dst[c] = float((1 - ty.t) * top + ty.t * bot);
      }
    }
  }
  return out;
}

std::vector<SegmentPatch> segment_masks(const RgbImage& image, const SegmentationOptions& options, int image_id) {
  require(!options.resolutions.empty(), "multiresolution_segment: resolutions must be non-empty");
  std::vector<SegmentPatch> segments;
  for (std::size_t level = 0; level < options.resolutions.size(); ++level) {
    const int n_segments = options.resolutions[level];
    require(n_segments >= 1, "multiresolution_segment: every resolution must be >= 1");
    const SuperpixelLabeling labeling =
        slic_segment(image, {n_segments, options.compactness, options.max_iters, options.seed});
    for (int label = 0; label < labeling.n_labels; ++label) {
      const Mask mask = labeling.mask_of(label);
      if (mask.count() < options.min_segment_pixels) continue;
      SegmentPatch seg;
      seg.image_id = image_id;
      seg.resolution_level = int(level);
      seg.segment_label = label;
      seg.bbox = bounding_box(mask);
      seg.mask = crop(mask, seg.bbox);
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

void fill_patch(SegmentPatch& segment, const RgbImage& image, const SegmentationOptions& options) {
  segment.patch = extract_patch(image, segment.full_mask(image.width, image.height), options.target_width,
                                options.target_height, options.pad_value);
}

std::vector<SegmentPatch> multiresolution_segment(const RgbImage& image, const SegmentationOptions& options,
                                                  int image_id) {
  auto segments = segment_masks(image, options, image_id);
  for (auto& seg : segments) fill_patch(seg, image, options);
  return segments;
}

}  // namespace ace
