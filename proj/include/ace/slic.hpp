#ifndef ACE_SLIC_HPP
#define ACE_SLIC_HPP

#include "ace/types.hpp"

#include <cstdint>
#include <vector>

namespace ace {

struct SuperpixelLabeling {
  int width = 0;
  int height = 0;
  LabelMap labels;  // rows = height
  int n_labels = 0;

  std::vector<int> label_counts() const;
  Mask mask_of(int label) const { return labels == label; }
};

struct SlicOptions {
  int n_segments = 1;
  double compactness = 10.0;
  int max_iters = 10;
  /// SLIC itself is deterministic; the seed is recorded for provenance only.
  std::uint64_t seed = 0;
};

/// Per-iteration sum over pixels of the squared joint color/space distance
/// to the assigned center. Non-increasing by construction.
struct SlicTrace {
  std::vector<double> total_distance;
};

/// sRGB in [0,1] to CIELAB (D65 white).
Image<float> rgb_to_lab(const RgbImage& image);

/// Simple linear iterative clustering in joint CIELAB + xy space, followed by
/// a connectivity pass that folds every stray fragment into the adjacent
/// label it shares the longest border with.
SuperpixelLabeling slic_segment(const RgbImage& image, const SlicOptions& options, SlicTrace* trace = nullptr);

/// Relabels `labels` so every label is one 4-connected region and labels are
/// compact (0..n-1 in raster order of first appearance). Returns the count.
int enforce_connectivity(LabelMap& labels);

}  // namespace ace

#endif  // ACE_SLIC_HPP
