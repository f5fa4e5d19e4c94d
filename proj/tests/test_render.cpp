#include "ace/render.hpp"
#include "helpers.hpp"

using namespace ace;

TEST_SUITE("render") {
  TEST_CASE("montage layout") {
    const std::vector<RgbImage> patches(3, RgbImage(20, 20, 0.2f)), crops(3, RgbImage(7, 5, 0.8f));
    const RgbImage m = make_montage(patches, crops, 50, 4);
    CHECK(m.width == 3 * 50 + 4 * 4);
    CHECK(m.height == 2 * 50 + 3 * 4);
    CHECK(m(0, 0, 0) == 1.0f);                           // white border
    CHECK(m(4, 4, 0) == doctest::Approx(0.2f));          // first patch, top row
    CHECK(m(4, 4 + 50 + 4, 0) == doctest::Approx(0.8f)); // its crop below
  }

  TEST_CASE("svg output is well formed and escaped") {
    const std::string svg = curve_svg("SSC <test>", "k", {{"importance", {{0, 0.0}, {1, 1.0}}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("SSC &lt;test&gt;") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(xml_escape("a&b\"'") == "a&amp;b&quot;&apos;");
    const std::vector<IndexEntry> entries = {{0, 40, "medium", 0.9, 0.01, true, "montages/concept_00.png"}};
    const std::string index = index_svg("Concepts", entries, {"curves/ssc.svg"});
    CHECK(index.find("montages/concept_00.png") != std::string::npos);
    CHECK(index.find("curves/ssc.svg") != std::string::npos);
  }
}
