#ifndef ACE_FIXTURES_MODELS_HPP
#define ACE_FIXTURES_MODELS_HPP

#include "ace/model.hpp"
#include "ace/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ace::fixtures {

/// Serialized featurizer and head plus metadata (probe scores unset).
struct ModelFiles {
  std::string featurizer;
  std::string head;
  ModelMetadata metadata;
};

/// The in-memory split model, without the probe check.
SplitModel make_split_model(const ModelFiles& files);

/// Writes featurizer.onnx, head.onnx, a probe image and metadata.json whose
/// probe scores are computed by composing the two graphs.
void write_model_dir(const std::filesystem::path& dir, const ModelFiles& files, std::uint64_t probe_seed = 7);

/// Featurizer: global average of the RGB input projected to `dim` features by
/// a fixed matrix. Head: logits = W a + b with W of shape n_classes x dim.
ModelFiles linear_model(const RowMatrix<float>& weights, const std::vector<float>& bias, int input_size = 32);

/// Same featurizer as linear_model; head is dense(hidden) -> ReLU -> dense,
/// with weights drawn from the seed.
ModelFiles mlp_model(int dim, int hidden, int n_classes, std::uint64_t seed, int input_size = 32);

struct PlantedModelOptions {
  int input_size = 299;
  /// Class 1 iff the image holds more than this many pure-red pixels.
  double threshold_pixels = 500.0;
  double gain = 1000.0;
};

/// Featurizer: per-pixel channels (positive and negative offsets of R, G, B
/// from pad gray, and redness) averaged over space; the embedding is those
/// means L1-normalized, with redness weighted up, plus a small-scale copy of
/// the mean redness. Head: logit0 = 0, logit1 = gain * (mean redness -
/// threshold). Classes: "plain" (0), "red" (1).
ModelFiles planted_model(const PlantedModelOptions& options = {});

/// Redness channel of the planted featurizer for one pixel.
float planted_redness(float r, float g, float b);

}  // namespace ace::fixtures

#endif  // ACE_FIXTURES_MODELS_HPP
