#include "ace/image.hpp"
#include "helpers.hpp"

#include <fstream>

using namespace ace;

TEST_SUITE("image") {
  TEST_CASE("resize to the same size is the identity") {
    const RgbImage img = test::random_image(17, 11, 1);
    CHECK(resize_bilinear(img, 17, 11) == img);
  }

  TEST_CASE("resize of a constant image stays constant") {
    RgbImage img(9, 5, 0.25f);
    const RgbImage out = resize_bilinear(img, 31, 20);
    CHECK(out.width == 31);
    CHECK(out.height == 20);
    CHECK((out.pixels - 0.25f).abs().maxCoeff() < 1e-6f);
  }

  TEST_CASE("downscaling by two averages pixel pairs") {
    RgbImage img(4, 1);
    const float v[4] = {0.0f, 1.0f, 0.2f, 0.4f};
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) img(x, 0, c) = v[x];
    const RgbImage out = resize_bilinear(img, 2, 1);
    CHECK(out(0, 0, 0) == doctest::Approx(0.5));
    CHECK(out(1, 0, 0) == doctest::Approx(0.3));
  }

  TEST_CASE("crop and bounding box") {
    const RgbImage img = test::random_image(10, 8, 2);
    const RgbImage c = crop(img, {2, 3, 4, 2});
    CHECK(c.width == 4);
    CHECK(c(0, 0, 1) == img(2, 3, 1));
    CHECK(c(3, 1, 2) == img(5, 4, 2));
    Mask m = Mask::Constant(8, 10, false);
    m(2, 3) = m(5, 7) = true;
    CHECK(bounding_box(m) == BBox{3, 2, 5, 4});
    CHECK(bounding_box(Mask::Constant(3, 3, false)).w == 0);
    CHECK(test::error_kind_of([&] { crop(img, {8, 0, 4, 2}); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("png round trip equals 8-bit quantization") {
    const auto dir = test::scratch_dir("png");
    const RgbImage img = test::random_image(13, 7, 3);
    write_png(dir / "a.png", img);
    const RgbImage back = read_image(dir / "a.png");
    CHECK(back == quantize8(img));
    CHECK(is_image_file("x.PNG"));
    CHECK(is_image_file("x.jpeg"));
    CHECK_FALSE(is_image_file("x.txt"));
  }

  TEST_CASE("unreadable images raise an error") {
    const auto dir = test::scratch_dir("badpng");
    {
      std::ofstream(dir / "bad.png") << "not a png";
    }
    CHECK_THROWS_AS(read_image(dir / "bad.png"), Error);
    CHECK_THROWS_AS(read_image(dir / "missing.png"), Error);
  }
}
