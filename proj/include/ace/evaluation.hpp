#ifndef ACE_EVALUATION_HPP
#define ACE_EVALUATION_HPP

#include "ace/discovery.hpp"
#include "ace/model.hpp"
#include "ace/segmentation.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ace {

enum class ConceptOrder { importance, random, reverse };

const char* to_string(ConceptOrder order);

struct CurvePoint {
  int k = 0;
  double accuracy = 0.0;
};

/// Nearest concept by minimum distance to any member example; ties go to the
/// lowest concept id.
int assign_segment_to_concept(const ActivationVector& activation, std::span<const Concept> concepts);

struct EvalSegment {
  BBox bbox;
  Mask mask;  // cropped to bbox
  int concept_id = -1;
};

struct EvalImage {
  RgbImage image;  // at model input size
  int label = 0;
  std::vector<EvalSegment> segments;
};

/// Evaluation images with every segment already assigned to a concept.
struct EvaluationSet {
  std::vector<EvalImage> images;
  float pad_value = kDefaultPadGray;
};

EvaluationSet prepare_evaluation(const SplitModel& model, std::span<const RgbImage> images, std::span<const int> labels,
                                 std::span<const Concept> concepts, const SegmentationOptions& segmentation,
                                 int batch_size = 32);

/// Concept ids in the requested order; `ranked_ids` is the importance order.
std::vector<int> concept_order(std::span<const int> ranked_ids, ConceptOrder order, std::uint64_t seed);

/// The orders a curve averages over: one for importance and reverse, and
/// `n_random_orders` seeded permutations for random.
std::vector<std::vector<int>> concept_orders(std::span<const int> ranked_ids, ConceptOrder order, std::uint64_t seed,
                                             int n_random_orders);

/// Union of the pixels of every segment assigned to one of `selected`.
Mask selected_pixels(const EvalImage& image, std::span<const int> selected);

/// Keeps only the selected concepts' pixels; everything else is pad gray.
RgbImage render_sufficient(const EvalImage& image, std::span<const int> selected, float pad_value);
/// Replaces the selected concepts' pixels with pad gray.
RgbImage render_destroyed(const EvalImage& image, std::span<const int> selected, float pad_value);

/// Top-1 accuracy after adding the first k concepts (k = 0..k_max). The
/// random order reports the mean over `n_random_orders` permutations.
std::vector<CurvePoint> ssc_curve(const SplitModel& model, const EvaluationSet& set, std::span<const int> ranked_ids,
                                  ConceptOrder order, int k_max, std::uint64_t seed, int n_random_orders = 1);

/// Top-1 accuracy after removing the first k concepts (k = 0..k_max).
std::vector<CurvePoint> sdc_curve(const SplitModel& model, const EvaluationSet& set, std::span<const int> ranked_ids,
                                  ConceptOrder order, int k_max, std::uint64_t seed, int n_random_orders = 1);

nlohmann::json to_json(std::span<const CurvePoint> curve);

// ---------------------------------------------------------------------------
// Concept stitching

/// A segment's own pixels at original scale, cropped to its bounding box.
struct Cutout {
  RgbImage pixels;
  Mask mask;
};

struct StitchOptions {
  int canvas_width = 299;
  int canvas_height = 299;
  int n_images = 100;
  double coverage = 0.5;
  int max_attempts = 50;
  /// Consecutive failed placements after which a canvas is finished.
  int max_failures = 20;
  float pad_value = kDefaultPadGray;
  std::uint64_t seed = 0;
};

/// Canvases of pad gray with member segments of the given concepts placed at
/// random non-overlapping positions until `coverage` of the canvas is filled.
std::vector<RgbImage> stitch_images(std::span<const std::vector<Cutout>> concepts, const StitchOptions& options);

struct StitchResult {
  int class_index = 0;
  int n_images = 0;
  int n_correct = 0;
  std::vector<std::string> example_paths;

  double accuracy() const { return n_images ? double(n_correct) / n_images : 0.0; }
};

StitchResult stitching_accuracy(const SplitModel& model, std::span<const RgbImage> stitched, int class_index);

nlohmann::json to_json(const StitchResult& r);

}  // namespace ace

#endif  // ACE_EVALUATION_HPP
