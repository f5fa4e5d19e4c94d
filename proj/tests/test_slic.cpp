#include "ace/slic.hpp"
#include "helpers.hpp"
#include "slic_checks.hpp"

using namespace ace;

TEST_SUITE("slic") {
  TEST_CASE("invariants on random images") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const int w = 40 + int(rng.below(80)), h = 40 + int(rng.below(80));
      const int k = 5 + int(rng.below(60));
      const RgbImage img = test::random_image(w, h, seed);
      const SlicOptions opt{k, 10.0, 10, seed};
      const auto a = slic_segment(img, opt);
      CAPTURE(seed);
      CHECK(test::slic_partition_violation(a) == "");
      CHECK(a.n_labels >= 0.5 * k);
      CHECK(a.n_labels <= 1.5 * k);
      const auto b = slic_segment(img, opt);
      CHECK((a.labels == b.labels).all());
    }
  }

  TEST_CASE("total distance is non-increasing") {
    const RgbImage img = test::random_image(60, 50, 9);
    SlicTrace trace;
    slic_segment(img, {20, 10.0, 10, 0}, &trace);
    REQUIRE(trace.total_distance.size() >= 2);
    for (std::size_t i = 1; i < trace.total_distance.size(); ++i)
      CHECK(trace.total_distance[i] <= trace.total_distance[i - 1] * (1 + 1e-9));
  }

  TEST_CASE("one segment labels everything zero") {
    const auto s = slic_segment(test::random_image(10, 10, 1), {1});
    CHECK(s.n_labels == 1);
    CHECK((s.labels == 0).all());
  }

  TEST_CASE("n_segments out of range is rejected") {
    const RgbImage img = test::random_image(5, 5, 1);
    CHECK(test::error_kind_of([&] { slic_segment(img, {0}); }) == ErrorKind::invalid_argument);
    CHECK(test::error_kind_of([&] { slic_segment(img, {26}); }) == ErrorKind::invalid_argument);
    CHECK(test::error_kind_of([&] { slic_segment(RgbImage{}, {1}); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("uniform image still yields a valid partition") {
    const RgbImage img(30, 30, 0.5f);
    const auto s = slic_segment(img, {9});
    CHECK(test::slic_partition_violation(s) == "");
  }

  TEST_CASE("enforce_connectivity splits stray fragments into neighbors") {
    LabelMap labels(3, 5);
    labels << 0, 0, 1, 1, 0,  //
        0, 0, 1, 1, 1,        //
        0, 0, 1, 1, 1;
    const int n = enforce_connectivity(labels);
    CHECK(n == 2);
    CHECK(labels(0, 4) == labels(0, 3));
    SuperpixelLabeling s{5, 3, labels, n};
    CHECK(test::slic_partition_violation(s) == "");
  }

  TEST_CASE("lab conversion of white and black") {
    RgbImage img(2, 1);
    img(0, 0, 0) = img(0, 0, 1) = img(0, 0, 2) = 1.0f;
    const auto lab = rgb_to_lab(img);
    CHECK(lab(0, 0, 0) == doctest::Approx(100.0).epsilon(1e-3));
    CHECK(std::abs(lab(0, 0, 1)) < 0.01);
    CHECK(lab(1, 0, 0) == doctest::Approx(0.0));
  }
}
