#include "ace/fileio.hpp"
#include "ace/fixtures/models.hpp"
#include "ace/model.hpp"
#include "helpers.hpp"

#include "json.hpp"

using namespace ace;

namespace {

RowMatrix<float> weights_3x4() {
  RowMatrix<float> w(3, 4);
  w << 1, -2, 0.5f, 0,  //
      0, 1, 1, -1,      //
      -1, 0, 2, 3;
  return w;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("linear fixture: head logits are W a + b") {
    const auto files = fixtures::linear_model(weights_3x4(), {0.1f, -0.2f, 0.3f});
    const SplitModel m = fixtures::make_split_model(files);
    const RgbImage img = test::random_image(32, 32, 1);
    const ActivationMatrix a = featurize(m, std::span<const RgbImage>(&img, 1));
    REQUIRE(a.cols() == 4);
    const ScoreMatrix logits = head_logits(m, a);
    const Eigen::VectorXf expected = weights_3x4() * a.row(0).transpose() + Eigen::Vector3f(0.1f, -0.2f, 0.3f);
    for (int c = 0; c < 3; ++c) CHECK(logits(0, c) == doctest::Approx(expected(c)).epsilon(1e-5));
    const ScoreMatrix p = predict_head(m, a);
    CHECK(p.row(0).sum() == doctest::Approx(1.0));
    const ScoreMatrix full = predict_full(m, std::span<const RgbImage>(&img, 1));
    CHECK((full - p).cwiseAbs().maxCoeff() < 1e-6f);
  }

  TEST_CASE("directional derivative of a linear head is w . v") {
    const auto w = weights_3x4();
    const SplitModel m = fixtures::make_split_model(fixtures::linear_model(w, {0, 0, 0}));
    const ActivationVector a = ActivationVector::Constant(4, 0.3f);
    Eigen::VectorXd v(4);
    v << 0.5, -0.5, 0.5, 0.5;
    for (int c = 0; c < 3; ++c) {
      const double expected = w.row(c).cast<double>().dot(v);
      CHECK(directional_derivative(m, a, v, c, 1e-2) == doctest::Approx(expected).epsilon(1e-3));
    }
    CHECK(test::error_kind_of([&] { directional_derivative(m, a, 2.0 * v, 0, 1e-2); }) ==
          ErrorKind::invalid_argument);
    CHECK(default_epsilon(a) == doctest::Approx(1e-2));
  }

  TEST_CASE("model directory round trip and probe self-check") {
    const auto dir = test::scratch_dir("model_dir");
    fixtures::write_model_dir(dir, fixtures::mlp_model(8, 6, 3, 5));
    const SplitModel m = load_split_model(dir);
    CHECK(m.n_classes() == 3);
    CHECK(probe_deviation(m, dir) <= 1e-4);

    // Tampering with the stored probe scores trips the integrity check.
    auto meta = nlohmann::json::parse(read_file(dir / "metadata.json"));
    meta["probe_scores"][0] = meta["probe_scores"][0].get<double>() + 0.01;
    atomic_write(dir / "metadata.json", meta.dump());
    CHECK(test::error_kind_of([&] { load_split_model(dir); }) == ErrorKind::model_integrity);

    std::filesystem::remove(dir / "head.onnx");
    CHECK(test::error_kind_of([&] { load_split_model(dir); }) == ErrorKind::not_found);
  }

  TEST_CASE("metadata validation") {
    auto files = fixtures::linear_model(weights_3x4(), {0, 0, 0});
    files.metadata.bottleneck_dim = 5;
    CHECK(test::error_kind_of([&] { fixtures::make_split_model(files); }) == ErrorKind::model_format);
    const auto j = to_json(fixtures::linear_model(weights_3x4(), {0, 0, 0}).metadata);
    const ModelMetadata back = metadata_from_json(j);
    CHECK(back.bottleneck_dim == 4);
    CHECK(back.n_classes == 3);
    auto bad = j;
    bad["spatial_mode"] = "sideways";
    CHECK(test::error_kind_of([&] { metadata_from_json(bad); }) == ErrorKind::model_format);
  }

  TEST_CASE("featurize checks the image size; to_model_input resizes") {
    const SplitModel m = fixtures::make_split_model(fixtures::linear_model(weights_3x4(), {0, 0, 0}));
    const RgbImage small = test::random_image(20, 10, 2);
    CHECK(test::error_kind_of([&] { featurize(m, std::span<const RgbImage>(&small, 1)); }) ==
          ErrorKind::invalid_argument);
    const RgbImage fitted = to_model_input(m, small);
    CHECK(fitted.width == 32);
    CHECK(fitted.height == 32);
  }

  TEST_CASE("featurize_segments is batch-size independent") {
    const SplitModel m = fixtures::make_split_model(fixtures::linear_model(weights_3x4(), {0, 0, 0}));
    const RgbImage img = test::random_image(32, 32, 3);
    SegmentationOptions opt;
    opt.resolutions = {3, 6};
    opt.min_segment_pixels = 1;
    const auto a = featurize_segments(m, img, opt, 0, 1);
    const auto b = featurize_segments(m, img, opt, 0, 7);
    REQUIRE(a.activations.rows() == Eigen::Index(a.segments.size()));
    CHECK((a.activations - b.activations).cwiseAbs().maxCoeff() < 1e-6f);
  }

  TEST_CASE("planted fixture classifies by red pixel count") {
    fixtures::PlantedModelOptions opt;
    opt.input_size = 64;
    opt.threshold_pixels = 100;
    const SplitModel m = fixtures::make_split_model(fixtures::planted_model(opt));
    auto with_red = [](int n_red) {
      RgbImage img(64, 64, 0.45f);
      for (int i = 0; i < n_red; ++i) {
        img(i % 64, i / 64, 0) = 1.0f;
        img(i % 64, i / 64, 1) = img(i % 64, i / 64, 2) = 0.0f;
      }
      return img;
    };
    const std::vector<RgbImage> imgs = {with_red(0), with_red(80), with_red(120), with_red(400)};
    const ScoreMatrix s = predict_full(m, imgs);
    CHECK(s(0, 0) > s(0, 1));
    CHECK(s(1, 0) > s(1, 1));
    CHECK(s(2, 1) > s(2, 0));
    CHECK(s(3, 1) > s(3, 0));
  }
}
