#include "ace/fixtures/planted.hpp"

#include "ace/fileio.hpp"
#include "ace/image.hpp"
#include "ace/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "json.hpp"

namespace ace::fixtures {

namespace {

bool overlaps(const BBox& a, const BBox& b, int margin) {
  return a.x < b.x + b.w + margin && b.x < a.x + a.w + margin && a.y < b.y + b.h + margin &&
         b.y < a.y + a.h + margin;
}

std::string image_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%03d.png", i);
  return buf;
}

}  // namespace

PlantedImage make_planted_image(int size, bool red, std::uint64_t seed) {
  Rng rng(seed);
  PlantedImage out;
  out.image = RgbImage(size, size);

  // Low-saturation background: gray level, slight cool tint, two oriented
  // sinusoidal textures and per-pixel noise.
  const double level = 0.35 + 0.3 * rng.uniform();
  const double tint_g = 0.06 * rng.uniform(), tint_b = 0.06 * rng.uniform();
  double freq[2], angle[2], phase[2];
  for (int t = 0; t < 2; ++t) {
    freq[t] = 0.05 + 0.25 * rng.uniform();
    angle[t] = std::numbers::pi * rng.uniform();
    phase[t] = 2 * std::numbers::pi * rng.uniform();
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double tex = 0;
      for (int t = 0; t < 2; ++t)
        tex += 0.07 * std::sin(freq[t] * (std::cos(angle[t]) * x + std::sin(angle[t]) * y) + phase[t]);
      const double noise = 0.08 * (rng.uniform() - 0.5);
      const double v = level + tex + noise;
      const double rgb[3] = {v - 0.02, v + tint_g, v + tint_b};
      for (int c = 0; c < 3; ++c) out.image(x, y, c) = float(std::clamp(rgb[c], 0.0, 1.0));
    }

  std::vector<BBox> placed;
  // Square sizes are given for 299 px images and scale with `size`. A
  // square that finds no free spot within the attempt budget is dropped.
  auto place = [&](int lo, int hi) -> std::optional<BBox> {
    lo = std::max(4, lo * size / 299);
    hi = std::max(lo, hi * size / 299);
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const int s = lo + int(rng.below(std::size_t(hi - lo + 1)));
      const BBox b{int(rng.below(std::size_t(size - s - 8))) + 4, int(rng.below(std::size_t(size - s - 8))) + 4, s, s};
      bool ok = true;
      for (const auto& p : placed) ok &= !overlaps(b, p, 6);
      if (ok) {
        placed.push_back(b);
        return b;
      }
    }
    return std::nullopt;
  };
  auto fill = [&](const BBox& b, float r, float g, float bl) {
    for (int y = b.y; y < b.y + b.h; ++y)
      for (int x = b.x; x < b.x + b.w; ++x) {
        out.image(x, y, 0) = r;
        out.image(x, y, 1) = g;
        out.image(x, y, 2) = bl;
      }
  };
  if (red) {
    const int n = 2 + int(rng.below(3));
    for (int i = 0; i < n; ++i)
      if (const auto b = place(30, 50)) {
        out.red_squares.push_back(*b);
        fill(*b, 1.0f, 0.0f, 0.0f);
      }
  }
  const int n_distractors = 1 + int(rng.below(3));
  for (int i = 0; i < n_distractors; ++i)
    if (const auto b = place(25, 45)) {
      out.distractors.push_back(*b);
      if (rng.below(2)) fill(*b, 0.1f, 0.7f, 0.2f);
      else fill(*b, 0.15f, 0.25f, 0.85f);
    }
  out.image = quantize8(out.image);
  return out;
}

void write_planted_corpus(const std::filesystem::path& root, const PlantedCorpusOptions& options) {
  nlohmann::json truth = nlohmann::json::object();
  std::uint64_t stream = 0;
  auto emit = [&](const std::string& split, const std::string& label, int count) {
    for (int i = 0; i < count; ++i) {
      const auto img = make_planted_image(options.size, label == "red", mix_seed(options.seed, stream++));
      const std::string rel = split + "/" + label + "/" + image_name(i);
      write_png(root / rel, img.image);
      nlohmann::json boxes = nlohmann::json::array();
      for (const auto& b : img.red_squares) boxes.push_back({b.x, b.y, b.w, b.h});
      truth[rel] = boxes;
    }
  };
  emit("discovery", "red", options.n_discovery);
  emit("discovery", "plain", options.n_random);
  emit("eval", "red", options.n_eval);
  emit("eval", "plain", options.n_eval);
  atomic_write(root / "truth.json", truth.dump(1) + "\n");
}

}  // namespace ace::fixtures
