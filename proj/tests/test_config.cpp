#include "ace/pipeline.hpp"
#include "helpers.hpp"

using namespace ace;
using nlohmann::json;

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const PipelineConfig c;
    CHECK(c.resolutions == std::vector<int>{15, 50, 80});
    CHECK(c.clustering.k == 25);
    CHECK(c.clustering.n_keep == 40);
    CHECK(c.tcav.n_runs == 20);
    CHECK(c.tcav.alpha == 0.05);
    CHECK(c.tcav.random_pool_size == 40);
    CHECK(c.n_discovery_images == 50);
    CHECK(c.stitch.n_concepts == 4);
    CHECK(c.stitch.n_images == 100);
    CHECK(c.min_segment_pixels == kMinSegmentPixels);
  }

  TEST_CASE("parsing resolves paths and nested sections") {
    const json j = {{"model_dir", "m"},
                    {"class", "zebra"},
                    {"discovery_dir", "/abs/d"},
                    {"seed", 7},
                    {"segmentation", {{"resolutions", {5, 10}}, {"pad_gray", 117.5}}},
                    {"clustering", {{"k", 9}}},
                    {"tcav", {{"n_runs", 5}}}};
    const PipelineConfig c = config_from_json(j, "/base");
    CHECK(c.model_dir == std::filesystem::path("/base/m"));
    CHECK(c.discovery_dir == std::filesystem::path("/abs/d"));
    CHECK(c.class_name == "zebra");
    CHECK(c.seed == 7);
    CHECK(c.resolutions == std::vector<int>{5, 10});
    REQUIRE(c.pad_gray.has_value());
    CHECK(*c.pad_gray == doctest::Approx(117.5 / 255.0));
    CHECK(c.clustering.k == 9);
    CHECK(c.tcav.n_runs == 5);
    CHECK(config_from_json({{"class", 3}}).class_name == "3");

    // to_json round-trips.
    const PipelineConfig back = config_from_json(to_json(c));
    CHECK(back.resolutions == c.resolutions);
    CHECK(back.clustering.k == 9);
    CHECK(back.model_dir == c.model_dir);
  }

  TEST_CASE("bad configs are config errors") {
    CHECK(test::error_kind_of([] { config_from_json({{"bogus", 1}}); }) == ErrorKind::config);
    CHECK(test::error_kind_of([] { config_from_json({{"seed", "x"}}); }) == ErrorKind::config);
    CHECK(test::error_kind_of([] { config_from_json({{"clustering", {{"kk", 1}}}}); }) == ErrorKind::config);
    CHECK(test::error_kind_of([] { config_from_json(json::array()); }) == ErrorKind::config);
    CHECK(test::error_kind_of([] { load_config("/nonexistent/ace.json"); }) == ErrorKind::config);

    PipelineConfig c;
    c.model_dir = "m";
    c.class_name = "x";
    c.discovery_dir = "d";
    CHECK_NOTHROW(validate(c));
    c.clustering.k = 0;
    CHECK(test::error_kind_of([&] { validate(c); }) == ErrorKind::config);
    c.clustering.k = 25;
    c.resolutions.clear();
    CHECK(test::error_kind_of([&] { validate(c); }) == ErrorKind::config);
    c.resolutions = {15};
    c.tcav.alpha = 1.5;
    CHECK(test::error_kind_of([&] { validate(c); }) == ErrorKind::config);
    c.tcav.alpha = 0.05;
    c.class_name.clear();
    CHECK(test::error_kind_of([&] { validate(c); }) == ErrorKind::config);
  }

  TEST_CASE("stages and exit codes") {
    CHECK(stage_from_string("eval") == Stage::eval);
    CHECK(std::string(to_string(Stage::stitch)) == "stitch");
    CHECK(test::error_kind_of([] { stage_from_string("nope"); }) == ErrorKind::config);
    CHECK(exit_code_for(ErrorKind::config) == 2);
    CHECK(exit_code_for(ErrorKind::invalid_argument) == 2);
    CHECK(exit_code_for(ErrorKind::insufficient_data) == 3);
    CHECK(exit_code_for(ErrorKind::model_format) == 4);
    CHECK(exit_code_for(ErrorKind::model_integrity) == 4);
    CHECK(exit_code_for(ErrorKind::dependency) == 1);
    CHECK(exit_code_for(ErrorKind::io) == 1);
  }
}
