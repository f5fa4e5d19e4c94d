#ifndef ACE_SEGMENTATION_HPP
#define ACE_SEGMENTATION_HPP

#include "ace/slic.hpp"
#include "ace/types.hpp"

#include <span>
#include <vector>

namespace ace {

/// Gray used for everything outside a segment; the zero point of
/// Inception-style input normalization.
inline constexpr float kDefaultPadGray = 117.5f / 255.0f;

/// Segments with fewer pixels carry nothing resolvable after resizing.
inline constexpr int kMinSegmentPixels = 64;

/// One superpixel of one source image.
struct SegmentPatch {
  int image_id = 0;
  int resolution_level = 0;
  int segment_label = 0;
  BBox bbox;          // in source image coordinates
  Mask mask;          // cropped to bbox
  RgbImage patch;     // model-input sized; may be released after featurization
  int pixel_count() const { return int(mask.count()); }

  /// The segment mask placed back into a full-size frame.
  Mask full_mask(int width, int height) const;
};

struct SegmentationOptions {
  std::vector<int> resolutions{15, 50, 80};
  double compactness = 10.0;
  int max_iters = 10;
  std::uint64_t seed = 0;
  int target_width = 299;
  int target_height = 299;
  float pad_value = kDefaultPadGray;
  int min_segment_pixels = kMinSegmentPixels;
};

/// Masks out everything but `mask`, crops to the mask bounding box and resizes
/// that box to `target_width` x `target_height` (aspect ratio is not kept).
/// Output pixels whose resized mask weight is below one half are set to
/// exactly `pad_value`.
RgbImage extract_patch(const RgbImage& image, const Mask& mask, int target_width, int target_height, float pad_value);

/// Segments the image at every resolution and keeps every segment with at
/// least `min_segment_pixels` pixels. Patches are left empty.
std::vector<SegmentPatch> segment_masks(const RgbImage& image, const SegmentationOptions& options, int image_id = 0);

/// Fills `segment.patch` from its source image.
void fill_patch(SegmentPatch& segment, const RgbImage& image, const SegmentationOptions& options);

/// segment_masks followed by patch extraction for every kept segment.
std::vector<SegmentPatch> multiresolution_segment(const RgbImage& image, const SegmentationOptions& options,
                                                  int image_id = 0);

}  // namespace ace

#endif  // ACE_SEGMENTATION_HPP
