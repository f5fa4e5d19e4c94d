#include "ace/evaluation.hpp"
#include "ace/fixtures/models.hpp"
#include "helpers.hpp"

#include <set>

using namespace ace;

namespace {

Concept single_member_concept(int id, std::vector<float> member) {
  Concept c;
  c.concept_id = id;
  c.member_activations = Eigen::Map<const Eigen::RowVectorXf>(member.data(), Eigen::Index(member.size()));
  c.size = 1;
  return c;
}

fixtures::PlantedModelOptions small_planted() {
  fixtures::PlantedModelOptions opt;
  opt.input_size = 64;
  opt.threshold_pixels = 100;
  return opt;
}

// 64x64 gray image with a 12x12 red square (144 red pixels; class 1 for the
// small planted model). Segment 0 is the square (concept 10), segment 1 the
// rest (concept 20).
EvalImage red_square_image() {
  EvalImage e;
  e.image = RgbImage(64, 64, 0.45f);
  e.label = 1;
  Mask square = Mask::Constant(64, 64, false);
  square.block(20, 30, 12, 12) = true;
  for (int y = 20; y < 32; ++y)
    for (int x = 30; x < 42; ++x) {
      e.image(x, y, 0) = 1.0f;
      e.image(x, y, 1) = e.image(x, y, 2) = 0.0f;
    }
  e.segments.push_back({{30, 20, 12, 12}, Mask::Constant(12, 12, true), 10});
  e.segments.push_back({{0, 0, 64, 64}, !square, 20});
  return e;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("assignment picks the nearest member, lowest id on ties") {
    std::vector<Concept> cs = {single_member_concept(3, {1, 0}), single_member_concept(7, {-1, 0}),
                               single_member_concept(9, {0, 2})};
    CHECK(assign_segment_to_concept(Eigen::Vector2f(1, 0), cs) == 3);
    CHECK(assign_segment_to_concept(Eigen::Vector2f(0, 0), cs) == 3);  // 3 and 7 tie at distance 1
    CHECK(assign_segment_to_concept(Eigen::Vector2f(0, 1.6f), cs) == 9);
    std::swap(cs[0], cs[1]);
    CHECK(assign_segment_to_concept(Eigen::Vector2f(0, 0), cs) == 3);
    CHECK(test::error_kind_of([] { assign_segment_to_concept(Eigen::Vector2f(0, 0), std::span<const Concept>()); }) ==
          ErrorKind::invalid_argument);
  }

  TEST_CASE("concept orders") {
    const std::vector<int> ranked = {4, 1, 7, 2, 9};
    CHECK(concept_order(ranked, ConceptOrder::importance, 0) == ranked);
    CHECK(concept_order(ranked, ConceptOrder::reverse, 0) == std::vector<int>{9, 2, 7, 1, 4});
    const auto r = concept_order(ranked, ConceptOrder::random, 3);
    CHECK(std::multiset<int>(r.begin(), r.end()) == std::multiset<int>(ranked.begin(), ranked.end()));
    CHECK(concept_order(ranked, ConceptOrder::random, 3) == r);
    CHECK(concept_orders(ranked, ConceptOrder::random, 3, 6).size() == 6);
    CHECK(concept_orders(ranked, ConceptOrder::reverse, 3, 6).size() == 1);
  }

  TEST_CASE("sufficient and destroyed renders partition the pixels") {
    const EvalImage e = red_square_image();
    const float pad = 0.2f;
    for (const std::vector<int>& sel : {std::vector<int>{}, std::vector<int>{10}, std::vector<int>{20},
                                        std::vector<int>{10, 20}}) {
      const Mask m = selected_pixels(e, sel);
      const RgbImage s = render_sufficient(e, sel, pad), d = render_destroyed(e, sel, pad);
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const RgbImage& kept = m(y, x) ? s : d;
          const RgbImage& gone = m(y, x) ? d : s;
          CHECK(kept(x, y, 0) == e.image(x, y, 0));
          CHECK(gone(x, y, 0) == pad);
        }
    }
  }

  TEST_CASE("SSC and SDC on a planted image") {
    const SplitModel model = fixtures::make_split_model(fixtures::planted_model(small_planted()));
    EvaluationSet set;
    set.images.push_back(red_square_image());
    const std::vector<int> ranked = {10, 20};
    const auto ssc = ssc_curve(model, set, ranked, ConceptOrder::importance, 5, 0);
    REQUIRE(ssc.size() == 3);  // k_max is capped at the concept count
    CHECK(ssc[0].accuracy == 0.0);
    CHECK(ssc[1].accuracy == 1.0);
    CHECK(ssc[2].accuracy == 1.0);
    const auto sdc = sdc_curve(model, set, ranked, ConceptOrder::importance, 2, 0);
    CHECK(sdc[0].accuracy == 1.0);
    CHECK(sdc[1].accuracy == 0.0);
    const auto rev = ssc_curve(model, set, ranked, ConceptOrder::reverse, 2, 0);
    CHECK(rev[1].accuracy == 0.0);
    const auto rnd = ssc_curve(model, set, ranked, ConceptOrder::random, 2, 0, 40);
    CHECK(rnd[1].accuracy > 0.0);
    CHECK(rnd[1].accuracy < 1.0);
    CHECK(rnd[2].accuracy == 1.0);
    CHECK(to_json(ssc).size() == 3);
  }

  TEST_CASE("prepare_evaluation assigns every segment") {
    const SplitModel model = fixtures::make_split_model(fixtures::planted_model(small_planted()));
    const RgbImage img = red_square_image().image;
    std::vector<Concept> cs = {single_member_concept(0, std::vector<float>(8, 0.1f)),
                               single_member_concept(1, std::vector<float>(8, 0.3f))};
    SegmentationOptions seg;
    seg.resolutions = {4, 9};
    seg.min_segment_pixels = 1;
    const int label = 1;
    const auto set = prepare_evaluation(model, std::span<const RgbImage>(&img, 1), std::span<const int>(&label, 1),
                                        cs, seg);
    REQUIRE(set.images.size() == 1);
    CHECK(!set.images[0].segments.empty());
    for (const auto& s : set.images[0].segments) CHECK((s.concept_id == 0 || s.concept_id == 1));
  }

  TEST_CASE("stitching") {
    Cutout small{RgbImage(10, 10, 0.9f), Mask::Constant(10, 10, true)};
    const std::vector<std::vector<Cutout>> one = {{small}};
    StitchOptions opt;
    opt.canvas_width = opt.canvas_height = 64;
    opt.n_images = 3;
    opt.coverage = 0.0;
    opt.pad_value = 0.5f;
    const auto canvases = stitch_images(one, opt);
    REQUIRE(canvases.size() == 3);
    for (const auto& c : canvases) CHECK((c.pixels.col(0) == 0.9f).count() == 100);

    opt.coverage = 0.3;
    opt.seed = 11;
    const auto a = stitch_images(one, opt), b = stitch_images(one, opt);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == b[i]);
      CHECK((a[i].pixels.col(0) == 0.9f).count() >= 0.3 * 64 * 64);
    }

    Cutout huge{RgbImage(80, 10, 0.9f), Mask::Constant(10, 80, true)};
    const std::vector<std::vector<Cutout>> too_big = {{huge}};
    opt.coverage = 0.5;
    const auto skipped = stitch_images(too_big, opt);
    for (const auto& c : skipped) CHECK((c.pixels == 0.5f).all());

    const std::vector<std::vector<Cutout>> empty_concept = {{}};
    CHECK(test::error_kind_of([&] { stitch_images(empty_concept, opt); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("stitching accuracy counts the target class") {
    const SplitModel model = fixtures::make_split_model(fixtures::planted_model(small_planted()));
    const std::vector<RgbImage> imgs = {red_square_image().image, RgbImage(64, 64, 0.5f)};
    const StitchResult r = stitching_accuracy(model, imgs, 1);
    CHECK(r.n_images == 2);
    CHECK(r.n_correct == 1);
    CHECK(r.accuracy() == 0.5);
    CHECK(to_json(r).at("n_correct") == 1);
  }
}
