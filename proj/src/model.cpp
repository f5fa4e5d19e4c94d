#include "ace/model.hpp"

#include "ace/errors.hpp"
#include "ace/fileio.hpp"
#include "ace/image.hpp"

#include <cmath>

namespace ace {

namespace {

constexpr double kProbeTolerance = 1e-4;
constexpr double kUnitTolerance = 1e-6;

std::int64_t known_product(const std::vector<std::int64_t>& dims, std::size_t from) {
  std::int64_t p = 1;
  for (std::size_t k = from; k < dims.size(); ++k) {
    if (dims[k] < 0) return -1;
    p *= dims[k];
  }
  return p;
}

const std::string& logits_name(const SplitModel& model) {
  const auto& name = model.metadata().head_logits_output;
  return name.empty() ? model.head().outputs().front().name : name;
}

}  // namespace

int ModelMetadata::class_index(const std::string& name) const {
  for (std::size_t k = 0; k < class_labels.size(); ++k)
    if (class_labels[k] == name) return int(k);
  return -1;
}

ModelMetadata metadata_from_json(const nlohmann::json& j) {
  ModelMetadata m;
  try {
    const auto size = j.at("input_size");
    m.input_width = size.at(0).get<int>();
    m.input_height = size.at(1).get<int>();
    if (j.contains("input_range")) {
      const auto& r = j.at("input_range");
      m.input_range.scale = r.at("scale").get<std::array<float, 3>>();
      m.input_range.offset = r.at("offset").get<std::array<float, 3>>();
    }
    m.bottleneck_name = j.value("bottleneck_name", std::string());
    m.bottleneck_dim = j.at("bottleneck_dim").get<int>();
    m.n_classes = j.at("n_classes").get<int>();
    m.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    // Values above 1 are taken as 8-bit levels (e.g. 117.5).
    m.pad_gray = j.value("pad_gray", kDefaultPadGray);
    if (m.pad_gray > 1.0f) m.pad_gray /= 255.0f;
    const std::string mode = j.value("spatial_mode", std::string("flatten"));
    if (mode == "flatten")
      m.spatial_mode = SpatialMode::flatten;
    else if (mode == "average_pool")
      m.spatial_mode = SpatialMode::average_pool;
    else
      fail(ErrorKind::model_format, "unknown spatial_mode '" + mode + "'");
    m.head_logits_output = j.value("head_logits_output", std::string());
    m.probe_image = j.value("probe_image", std::string("probe_image.png"));
    m.probe_scores = j.value("probe_scores", std::vector<float>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::model_format, std::string("metadata.json: ") + e.what());
  }
  if (m.input_width < 1 || m.input_height < 1) fail(ErrorKind::model_format, "metadata: input_size must be positive");
  if (m.bottleneck_dim < 1) fail(ErrorKind::model_format, "metadata: bottleneck_dim must be >= 1");
  if (m.n_classes < 2) fail(ErrorKind::model_format, "metadata: n_classes must be >= 2");
  if (int(m.class_labels.size()) != m.n_classes)
    fail(ErrorKind::model_format, "metadata: class_labels length differs from n_classes");
  return m;
}

nlohmann::json to_json(const ModelMetadata& m) {
  return {
      {"input_size", {m.input_width, m.input_height}},
      {"input_range", {{"scale", m.input_range.scale}, {"offset", m.input_range.offset}}},
      {"bottleneck_name", m.bottleneck_name},
      {"bottleneck_dim", m.bottleneck_dim},
      {"n_classes", m.n_classes},
      {"class_labels", m.class_labels},
      {"pad_gray", m.pad_gray},
      {"spatial_mode", m.spatial_mode == SpatialMode::flatten ? "flatten" : "average_pool"},
      {"head_logits_output", m.head_logits_output},
      {"probe_image", m.probe_image},
      {"probe_scores", m.probe_scores},
  };
}

SplitModel::SplitModel(nn::Graph featurizer, nn::Graph head, ModelMetadata metadata)
    : featurizer_(std::move(featurizer)), head_(std::move(head)), metadata_(std::move(metadata)) {
  if (featurizer_.inputs().size() != 1) fail(ErrorKind::model_format, "featurizer must have exactly one input");
  if (head_.inputs().size() != 1) fail(ErrorKind::model_format, "head must have exactly one input");

  const auto& in = featurizer_.inputs().front().dims;
  if (in.size() == 4) {
    if ((in[1] >= 0 && in[1] != 3) || (in[2] >= 0 && in[2] != metadata_.input_height) ||
        (in[3] >= 0 && in[3] != metadata_.input_width))
      fail(ErrorKind::model_format, "featurizer input shape does not match metadata input_size");
  } else if (!in.empty()) {
    fail(ErrorKind::model_format, "featurizer input must be NCHW");
  }

  const auto& head_in = head_.inputs().front().dims;
  if (!head_in.empty()) {
    const std::int64_t dim = known_product(head_in, 1);
    if (dim >= 0 && dim != metadata_.bottleneck_dim)
      fail(ErrorKind::model_format, "head expects input dim " + std::to_string(dim) + " but bottleneck_dim is " +
                                        std::to_string(metadata_.bottleneck_dim));
  }
  if (!metadata_.head_logits_output.empty()) {
    bool found = false;
    for (const auto& o : head_.outputs()) found |= o.name == metadata_.head_logits_output;
    if (!found) fail(ErrorKind::model_format, "head has no output named '" + metadata_.head_logits_output + "'");
  }
}

ActivationMatrix featurize(const SplitModel& model, std::span<const RgbImage> images) {
  const auto& meta = model.metadata();
  const int w = meta.input_width, h = meta.input_height;
  if (images.empty()) return ActivationMatrix(0, model.bottleneck_dim());
  for (const auto& img : images)
    if (img.width != w || img.height != h)
      fail(ErrorKind::invalid_argument, "featurize: image is " + std::to_string(img.width) + "x" +
                                            std::to_string(img.height) + ", model expects " + std::to_string(w) +
                                            "x" + std::to_string(h));

  const std::int64_t n = std::int64_t(images.size());
  const std::int64_t plane = std::int64_t(w) * h;
  nn::Tensor input = nn::Tensor::floats({n, 3, h, w}, std::vector<float>(std::size_t(n * 3 * plane)));
  for (std::int64_t b = 0; b < n; ++b) {
    const float* src = images[std::size_t(b)].pixels.data();
    float* dst = input.f.data() + b * 3 * plane;
    const auto& sc = meta.input_range.scale;
    const auto& of = meta.input_range.offset;
    for (std::int64_t p = 0; p < plane; ++p) {
      dst[p] = src[3 * p] * sc[0] + of[0];
      dst[plane + p] = src[3 * p + 1] * sc[1] + of[1];
      dst[2 * plane + p] = src[3 * p + 2] * sc[2] + of[2];
    }
  }

  const auto& graph = model.featurizer();
  auto outputs = graph.run({{graph.inputs().front().name, std::move(input)}});
  const nn::Tensor& out = outputs.begin()->second;
  if (out.dtype != nn::DType::float32 || out.shape.empty() || out.shape[0] != n)
    fail(ErrorKind::model_format, "featurizer output must be float with a leading batch dimension");

  const std::int64_t per_sample = out.numel() / n;
  ActivationMatrix acts;
  if (meta.spatial_mode == SpatialMode::flatten || out.shape.size() <= 2) {
    acts = Eigen::Map<const ActivationMatrix>(out.f.data(), n, per_sample);
  } else {
    const std::int64_t channels = out.shape[1];
    const std::int64_t spatial = per_sample / channels;
    acts.resize(n, channels);
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t c = 0; c < channels; ++c) {
        double s = 0;
        const float* p = out.f.data() + (b * channels + c) * spatial;
        for (std::int64_t k = 0; k < spatial; ++k) s += p[k];
        acts(b, c) = float(s / double(spatial));
      }
  }
  if (acts.cols() != model.bottleneck_dim())
    fail(ErrorKind::model_format, "featurizer emits dim " + std::to_string(acts.cols()) + " but bottleneck_dim is " +
                                      std::to_string(model.bottleneck_dim()));
  if (!acts.allFinite()) fail(ErrorKind::model_format, "featurizer produced non-finite activations");
  return acts;
}

ScoreMatrix head_logits(const SplitModel& model, const ActivationMatrix& activations) {
  if (activations.cols() != model.bottleneck_dim())
    fail(ErrorKind::invalid_argument, "activation dim " + std::to_string(activations.cols()) +
                                          " does not match bottleneck_dim " + std::to_string(model.bottleneck_dim()));
  const std::int64_t n = activations.rows();
  if (n == 0) return ScoreMatrix(0, model.n_classes());
  const auto& graph = model.head();
  std::vector<std::int64_t> shape{n, model.bottleneck_dim()};
  const auto& declared = graph.inputs().front().dims;
  if (declared.size() > 2) {
    shape.assign(declared.begin(), declared.end());
    shape[0] = n;
  }
  nn::Tensor input = nn::Tensor::floats(shape, std::vector<float>(activations.data(), activations.data() + activations.size()));
  const std::string& name = logits_name(model);
  auto outputs = graph.run({{graph.inputs().front().name, std::move(input)}}, {name});
  const nn::Tensor& out = outputs.at(name);
  if (out.dtype != nn::DType::float32 || out.numel() != n * model.n_classes())
    fail(ErrorKind::model_format, "head output does not have n_classes entries per sample");
  return Eigen::Map<const ScoreMatrix>(out.f.data(), n, model.n_classes());
}

ScoreMatrix softmax_rows(const ScoreMatrix& logits) {
  ScoreMatrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Eigen::RowVectorXd row = logits.row(r).cast<double>();
    const Eigen::RowVectorXd e = (row.array() - row.maxCoeff()).exp();
    out.row(r) = (e / e.sum()).cast<float>();
  }
  return out;
}

ScoreMatrix predict_head(const SplitModel& model, const ActivationMatrix& activations) {
  return softmax_rows(head_logits(model, activations));
}

ScoreMatrix predict_full(const SplitModel& model, std::span<const RgbImage> images) {
  return predict_head(model, featurize(model, images));
}

double default_epsilon(const ActivationVector& activation) {
  return 1e-2 * std::max(double(activation.cast<double>().norm()), 1.0);
}

Eigen::VectorXd directional_derivatives(const SplitModel& model, const ActivationMatrix& activations,
                                        const Eigen::VectorXd& direction, int class_index, double epsilon) {
  require(direction.size() == model.bottleneck_dim(), "directional_derivative: direction dim mismatch");
  require(std::abs(direction.norm() - 1.0) <= kUnitTolerance, "directional_derivative: direction must be unit norm");
  require(class_index >= 0 && class_index < model.n_classes(), "directional_derivative: class index out of range");
  const Eigen::Index n = activations.rows();
  Eigen::VectorXd eps(n);
  for (Eigen::Index r = 0; r < n; ++r)
    eps(r) = epsilon > 0 ? epsilon : default_epsilon(activations.row(r).transpose());

  ActivationMatrix probes(2 * n, activations.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::RowVectorXd a = activations.row(r).cast<double>();
    probes.row(2 * r) = (a + eps(r) * direction.transpose()).cast<float>();
    probes.row(2 * r + 1) = (a - eps(r) * direction.transpose()).cast<float>();
  }
  const ScoreMatrix logits = head_logits(model, probes);
  Eigen::VectorXd out(n);
  for (Eigen::Index r = 0; r < n; ++r)
    out(r) = (double(logits(2 * r, class_index)) - double(logits(2 * r + 1, class_index))) / (2 * eps(r));
  return out;
}

double directional_derivative(const SplitModel& model, const ActivationVector& activation,
                              const Eigen::VectorXd& direction, int class_index, double epsilon) {
  require(epsilon > 0, "directional_derivative: epsilon must be positive");
  ActivationMatrix row = activation.transpose();
  return directional_derivatives(model, row, direction, class_index, epsilon)(0);
}

double probe_deviation(const SplitModel& model, const std::filesystem::path& model_dir) {
  const auto& meta = model.metadata();
  RgbImage probe = read_image(model_dir / meta.probe_image);
  if (probe.width != meta.input_width || probe.height != meta.input_height)
    fail(ErrorKind::model_format, "probe image size does not match input_size");
  const ScoreMatrix scores = predict_full(model, std::span<const RgbImage>(&probe, 1));
  if (int(meta.probe_scores.size()) != meta.n_classes)
    fail(ErrorKind::model_format, "probe_scores must have n_classes entries");
  double dev = 0;
  for (int k = 0; k < meta.n_classes; ++k)
    dev = std::max(dev, std::abs(double(scores(0, k)) - double(meta.probe_scores[std::size_t(k)])));
  return dev;
}

SplitModel load_split_model(const std::filesystem::path& model_dir) {
  for (const char* name : {"featurizer.onnx", "head.onnx", "metadata.json"})
    if (!std::filesystem::exists(model_dir / name))
      fail(ErrorKind::not_found, "model directory " + model_dir.string() + " lacks " + name);
  nlohmann::json meta_json;
  try {
    meta_json = nlohmann::json::parse(read_file(model_dir / "metadata.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::model_format, std::string("metadata.json: ") + e.what());
  }
  SplitModel model(nn::Graph::load(model_dir / "featurizer.onnx"), nn::Graph::load(model_dir / "head.onnx"),
                   metadata_from_json(meta_json));
  const double dev = probe_deviation(model, model_dir);
  if (!(dev <= kProbeTolerance))
    fail(ErrorKind::model_integrity, "probe image scores deviate from reference by " + std::to_string(dev));
  return model;
}

SegmentationOptions segmentation_for(const SplitModel& model, SegmentationOptions base) {
  base.target_width = model.metadata().input_width;
  base.target_height = model.metadata().input_height;
  base.pad_value = model.metadata().pad_gray;
  return base;
}

FeaturizedSegments featurize_segments(const SplitModel& model, const RgbImage& image,
                                      const SegmentationOptions& options, int image_id, int batch_size) {
  require(batch_size >= 1, "featurize_segments: batch_size must be >= 1");
  SegmentationOptions opts = options;
  opts.target_width = model.metadata().input_width;
  opts.target_height = model.metadata().input_height;
  FeaturizedSegments out;
  out.segments = segment_masks(image, opts, image_id);
  out.activations.resize(Eigen::Index(out.segments.size()), model.bottleneck_dim());
  std::vector<RgbImage> batch;
  for (std::size_t start = 0; start < out.segments.size(); start += std::size_t(batch_size)) {
    const std::size_t end = std::min(out.segments.size(), start + std::size_t(batch_size));
    batch.clear();
    for (std::size_t i = start; i < end; ++i) {
      fill_patch(out.segments[i], image, opts);
      batch.push_back(std::move(out.segments[i].patch));
      out.segments[i].patch = RgbImage();
    }
    out.activations.middleRows(Eigen::Index(start), Eigen::Index(end - start)) = featurize(model, batch);
  }
  return out;
}

RgbImage to_model_input(const SplitModel& model, const RgbImage& image) {
  const auto& m = model.metadata();
  if (image.width == m.input_width && image.height == m.input_height) return image;
  return resize_bilinear(image, m.input_width, m.input_height);
}

}  // namespace ace
