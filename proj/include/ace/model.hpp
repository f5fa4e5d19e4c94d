#ifndef ACE_MODEL_HPP
#define ACE_MODEL_HPP

#include "ace/nn.hpp"
#include "ace/segmentation.hpp"
#include "ace/types.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ace {

enum class SpatialMode { flatten, average_pool };

/// Pixel intensities in [0,1] are mapped to model input as x * scale + offset.
struct InputNormalization {
  std::array<float, 3> scale{1.0f, 1.0f, 1.0f};
  std::array<float, 3> offset{0.0f, 0.0f, 0.0f};
};

struct ModelMetadata {
  int input_width = 299;
  int input_height = 299;
  InputNormalization input_range;
  std::string bottleneck_name;
  int bottleneck_dim = 0;
  int n_classes = 0;
  std::vector<std::string> class_labels;
  float pad_gray = kDefaultPadGray;
  SpatialMode spatial_mode = SpatialMode::flatten;
  /// Name of the head output holding pre-softmax logits; empty = first output.
  std::string head_logits_output;
  std::string probe_image = "probe_image.png";
  std::vector<float> probe_scores;

  /// Index of `name` in class_labels, or -1.
  int class_index(const std::string& name) const;
};

ModelMetadata metadata_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelMetadata& m);

/// A classifier factored into featurizer (image -> bottleneck) and head
/// (bottleneck -> logits). Immutable after construction; safe to share.
class SplitModel {
 public:
  SplitModel(nn::Graph featurizer, nn::Graph head, ModelMetadata metadata);

  const ModelMetadata& metadata() const { return metadata_; }
  const nn::Graph& featurizer() const { return featurizer_; }
  const nn::Graph& head() const { return head_; }
  int bottleneck_dim() const { return metadata_.bottleneck_dim; }
  int n_classes() const { return metadata_.n_classes; }

 private:
  nn::Graph featurizer_;
  nn::Graph head_;
  ModelMetadata metadata_;
};

/// Loads featurizer.onnx, head.onnx and metadata.json from `model_dir` and
/// checks that the composed model reproduces the stored probe scores.
SplitModel load_split_model(const std::filesystem::path& model_dir);

/// Maximum absolute deviation between the stored probe scores and the
/// composed model's scores on the probe image.
double probe_deviation(const SplitModel& model, const std::filesystem::path& model_dir);

ActivationMatrix featurize(const SplitModel& model, std::span<const RgbImage> images);

/// Pre-softmax class logits, one row per activation.
ScoreMatrix head_logits(const SplitModel& model, const ActivationMatrix& activations);

/// Softmax-normalized class scores, one row per activation.
ScoreMatrix predict_head(const SplitModel& model, const ActivationMatrix& activations);

ScoreMatrix predict_full(const SplitModel& model, std::span<const RgbImage> images);

/// Row-wise softmax computed in double precision.
ScoreMatrix softmax_rows(const ScoreMatrix& logits);

/// 1e-2 * max(|a|, 1).
double default_epsilon(const ActivationVector& activation);

/// Central difference of logit `class_index` along unit `direction`.
double directional_derivative(const SplitModel& model, const ActivationVector& activation,
                              const Eigen::VectorXd& direction, int class_index, double epsilon);

/// Batched directional derivatives; epsilon <= 0 selects default_epsilon per row.
Eigen::VectorXd directional_derivatives(const SplitModel& model, const ActivationMatrix& activations,
                                        const Eigen::VectorXd& direction, int class_index, double epsilon = 0.0);

/// Segments of one image with their activations; patch pixels are released
/// after featurization.
struct FeaturizedSegments {
  std::vector<SegmentPatch> segments;
  ActivationMatrix activations;
};

/// Segmentation options with patch size and pad gray taken from the model.
SegmentationOptions segmentation_for(const SplitModel& model, SegmentationOptions base);

/// Patches are always extracted at the model input size; the pad value is
/// taken from `options`.
FeaturizedSegments featurize_segments(const SplitModel& model, const RgbImage& image,
                                      const SegmentationOptions& options, int image_id, int batch_size = 32);

/// Resizes to the model input size when needed.
RgbImage to_model_input(const SplitModel& model, const RgbImage& image);

}  // namespace ace

#endif  // ACE_MODEL_HPP
