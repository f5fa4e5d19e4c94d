#include "ace/fixtures/models.hpp"

#include "ace/errors.hpp"
#include "ace/fileio.hpp"
#include "ace/fixtures/onnx_builder.hpp"
#include "ace/image.hpp"
#include "ace/rng.hpp"

namespace ace::fixtures {

namespace {

constexpr float kRedness[4] = {2.0f, -1.5f, -1.5f, -0.8f};  // weights on R, G, B and bias
constexpr double kRednessScale = 0.05;                       // embedding scale of mean redness
constexpr double kRednessWeight = 10.0;                      // weight of redness in the color direction

/// input [N,3,S,S] -> GlobalAveragePool -> Flatten -> Gemm(P) -> [N,dim]
std::string mean_rgb_featurizer(int dim, int input_size) {
  OnnxBuilder b("mean_rgb_featurizer");
  b.input("image", {-1, 3, input_size, input_size});
  std::vector<float> proj;
  for (int d = 0; d < dim; ++d)
    for (int c = 0; c < 3; ++c) proj.push_back(float(std::sin(1.0 + 0.7 * d + 1.3 * c)));
  b.initializer("proj", {dim, 3}, proj);
  b.node("GlobalAveragePool", {"image"}, {"pooled"});
  b.node("Flatten", {"pooled"}, {"flat"}).attr("axis", std::int64_t(1));
  b.node("Gemm", {"flat", "proj"}, {"bottleneck"}).attr("transB", std::int64_t(1));
  b.output("bottleneck", {-1, dim});
  return b.serialize();
}

ModelMetadata base_metadata(int input_size, int dim, int n_classes) {
  ModelMetadata m;
  m.input_width = m.input_height = input_size;
  m.bottleneck_name = "bottleneck";
  m.bottleneck_dim = dim;
  m.n_classes = n_classes;
  for (int c = 0; c < n_classes; ++c) m.class_labels.push_back("class" + std::to_string(c));
  return m;
}

}  // namespace

float planted_redness(float r, float g, float b) {
  return std::max(0.0f, kRedness[0] * r + kRedness[1] * g + kRedness[2] * b + kRedness[3]);
}

SplitModel make_split_model(const ModelFiles& files) {
  return SplitModel(nn::Graph::parse(files.featurizer), nn::Graph::parse(files.head), files.metadata);
}

void write_model_dir(const std::filesystem::path& dir, const ModelFiles& files, std::uint64_t probe_seed) {
  const auto& m = files.metadata;
  RgbImage probe(m.input_width, m.input_height);
  Rng rng(probe_seed);
  for (Eigen::Index i = 0; i < probe.pixels.size(); ++i) probe.pixels.data()[i] = float(rng.uniform());
  probe = quantize8(probe);

  ModelFiles out = files;
  out.metadata.probe_image = "probe_image.png";
  const SplitModel model = make_split_model(out);
  const ScoreMatrix scores = predict_full(model, std::span<const RgbImage>(&probe, 1));
  out.metadata.probe_scores.assign(scores.data(), scores.data() + scores.size());

  atomic_write(dir / "featurizer.onnx", out.featurizer);
  atomic_write(dir / "head.onnx", out.head);
  write_png(dir / "probe_image.png", probe);
  atomic_write(dir / "metadata.json", to_json(out.metadata).dump(2) + "\n");
}

ModelFiles linear_model(const RowMatrix<float>& weights, const std::vector<float>& bias, int input_size) {
  const int n_classes = int(weights.rows()), dim = int(weights.cols());
  require(int(bias.size()) == n_classes, "linear_model: bias length must equal the class count");
  OnnxBuilder h("linear_head");
  h.input("bottleneck", {-1, dim});
  h.initializer("W", {n_classes, dim}, std::vector<float>(weights.data(), weights.data() + weights.size()));
  h.initializer("b", {n_classes}, bias);
  h.node("Gemm", {"bottleneck", "W", "b"}, {"logits"}).attr("transB", std::int64_t(1));
  h.output("logits", {-1, n_classes});
  return {mean_rgb_featurizer(dim, input_size), h.serialize(), base_metadata(input_size, dim, n_classes)};
}

ModelFiles mlp_model(int dim, int hidden, int n_classes, std::uint64_t seed, int input_size) {
  Rng rng(seed);
  auto draw = [&](int n, double scale) {
    std::vector<float> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = float(rng.normal() * scale);
    return v;
  };
  OnnxBuilder h("mlp_head");
  h.input("bottleneck", {-1, dim});
  h.initializer("W1", {hidden, dim}, draw(hidden * dim, 1.0 / std::sqrt(double(dim))));
  h.initializer("b1", {hidden}, draw(hidden, 0.5));
  h.initializer("W2", {n_classes, hidden}, draw(n_classes * hidden, 1.0 / std::sqrt(double(hidden))));
  h.initializer("b2", {n_classes}, draw(n_classes, 0.1));
  h.node("Gemm", {"bottleneck", "W1", "b1"}, {"hidden"}).attr("transB", std::int64_t(1));
  h.node("Relu", {"hidden"}, {"hidden_relu"});
  h.node("Gemm", {"hidden_relu", "W2", "b2"}, {"logits"}).attr("transB", std::int64_t(1));
  h.output("logits", {-1, n_classes});
  return {mean_rgb_featurizer(dim, input_size), h.serialize(), base_metadata(input_size, dim, n_classes)};
}

ModelFiles planted_model(const PlantedModelOptions& options) {
  const int s = options.input_size;
  const float pad = kDefaultPadGray;
  // Per-pixel channels: the positive and negative parts of each color's
  // offset from pad gray (so padding contributes nothing), then redness.
  constexpr int P = 7;
  OnnxBuilder f("planted_featurizer");
  f.input("image", {-1, 3, s, s});
  std::vector<float> w;
  std::vector<float> b;
  for (int c = 0; c < 3; ++c)
    for (float sign : {1.0f, -1.0f}) {
      for (int k = 0; k < 3; ++k) w.push_back(k == c ? sign : 0.0f);
      b.push_back(-sign * pad);
    }
  w.insert(w.end(), {kRedness[0], kRedness[1], kRedness[2]});
  b.push_back(kRedness[3]);
  f.initializer("conv_w", {P, 3, 1, 1}, w);
  f.initializer("conv_b", {P}, b);
  f.node("Conv", {"image", "conv_w", "conv_b"}, {"conv"}).attr("kernel_shape", std::vector<std::int64_t>{1, 1});
  f.node("Relu", {"conv"}, {"relu"});
  f.node("GlobalAveragePool", {"relu"}, {"gap"});
  f.node("Flatten", {"gap"}, {"means"});
  // The color channels plus weighted redness are L1-normalized, so a
  // segment's embedding does not depend on how much of the patch it fills,
  // and any sizeable red area dominates it. Mean redness is also kept at a
  // small scale: it carries the class evidence without dominating distances.
  std::vector<float> select_color(P * P, 0.0f), color_sum(P, 1.0f), select_red(P, 0.0f);
  for (int c = 0; c < P; ++c) select_color[std::size_t(c * P + c)] = 1.0f;
  select_color[std::size_t(P * P - 1)] = float(kRednessWeight);
  color_sum[P - 1] = float(kRednessWeight);
  select_red[P - 1] = float(kRednessScale);
  f.initializer("select_color", {P, P}, select_color);
  f.initializer("color_sum", {P, 1}, color_sum);
  f.initializer("select_red", {P, 1}, select_red);
  f.initializer("eps", {1}, {1e-6f});
  f.node("MatMul", {"means", "select_color"}, {"color"});
  f.node("MatMul", {"means", "color_sum"}, {"total"});
  f.node("Add", {"total", "eps"}, {"total_eps"});
  f.node("Div", {"color", "total_eps"}, {"direction"});
  f.node("MatMul", {"means", "select_red"}, {"red"});
  f.node("Concat", {"direction", "red"}, {"bottleneck"}).attr("axis", std::int64_t(1));
  constexpr int D = P + 1;
  f.output("bottleneck", {-1, D});

  // A pure red pixel has redness 2 - 0.8 = 1.2; logit 1 is positive iff
  // the mean redness exceeds that of `threshold_pixels` pure red pixels.
  const double threshold = options.threshold_pixels * 1.2 / (double(s) * s);
  const double gain = options.gain / kRednessScale;
  OnnxBuilder h("planted_head");
  h.input("bottleneck", {-1, D});
  std::vector<float> hw(2 * D, 0.0f);
  hw[2 * D - 1] = float(gain);
  h.initializer("W", {2, D}, hw);
  h.initializer("b", {2}, {0.0f, float(-options.gain * threshold)});
  h.node("Gemm", {"bottleneck", "W", "b"}, {"logits"}).attr("transB", std::int64_t(1));
  h.output("logits", {-1, 2});

  ModelMetadata m = base_metadata(s, D, 2);
  m.bottleneck_name = "bottleneck";
  m.class_labels = {"plain", "red"};
  m.spatial_mode = SpatialMode::flatten;
  return {f.serialize(), h.serialize(), m};
}

}  // namespace ace::fixtures
