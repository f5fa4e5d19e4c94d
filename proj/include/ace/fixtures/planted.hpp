#ifndef ACE_FIXTURES_PLANTED_HPP
#define ACE_FIXTURES_PLANTED_HPP

#include "ace/types.hpp"

#include <filesystem>
#include <vector>

namespace ace::fixtures {

/// Synthetic images of low-saturation textured noise with green/blue
/// distractor squares; class "red" images also carry 2-4 pure red squares.
struct PlantedImage {
  RgbImage image;
  std::vector<BBox> red_squares;
  std::vector<BBox> distractors;
};

PlantedImage make_planted_image(int size, bool red, std::uint64_t seed);

/// True for the pure red used by the planted squares.
inline bool is_planted_red(float r, float g, float b) { return r > 0.9f && g < 0.1f && b < 0.1f; }

struct PlantedCorpusOptions {
  int size = 299;
  int n_discovery = 50;  // class "red" images for discovery
  int n_random = 50;     // class "plain" images (random counterexamples)
  int n_eval = 20;       // per class
  std::uint64_t seed = 1;
};

/// Writes <root>/discovery/{red,plain}/*.png and <root>/eval/{red,plain}/*.png
/// plus truth.json with every image's red-square boxes.
void write_planted_corpus(const std::filesystem::path& root, const PlantedCorpusOptions& options = {});

}  // namespace ace::fixtures

#endif  // ACE_FIXTURES_PLANTED_HPP
