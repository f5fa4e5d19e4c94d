#include "ace/evaluation.hpp"

#include "ace/errors.hpp"
#include "ace/image.hpp"
#include "ace/log.hpp"
#include "ace/rng.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace ace {

const char* to_string(ConceptOrder order) {
  switch (order) {
    case ConceptOrder::importance: return "importance";
    case ConceptOrder::random: return "random";
    case ConceptOrder::reverse: return "reverse";
  }
  return "unknown";
}

int assign_segment_to_concept(const ActivationVector& activation, std::span<const Concept> concepts) {
  require(!concepts.empty(), "assign_segment_to_concept: no concepts");
  double best = std::numeric_limits<double>::infinity();
  int best_id = std::numeric_limits<int>::max();
  const Eigen::RowVectorXd a = activation.transpose().cast<double>();
  for (const auto& c : concepts) {
    require(c.member_activations.rows() > 0, "assign_segment_to_concept: concept without members");
    require(c.member_activations.cols() == activation.size(), "assign_segment_to_concept: dimension mismatch");
    const double d = (c.member_activations.cast<double>().rowwise() - a).rowwise().squaredNorm().minCoeff();
    if (d < best || (d == best && c.concept_id < best_id)) {
      best = d;
      best_id = c.concept_id;
    }
  }
  return best_id;
}

EvaluationSet prepare_evaluation(const SplitModel& model, std::span<const RgbImage> images, std::span<const int> labels,
                                 std::span<const Concept> concepts, const SegmentationOptions& segmentation,
                                 int batch_size) {
  require(images.size() == labels.size(), "prepare_evaluation: images and labels differ in length");
  EvaluationSet set;
  set.pad_value = model.metadata().pad_gray;
  for (std::size_t i = 0; i < images.size(); ++i) {
    EvalImage eval;
    eval.image = to_model_input(model, images[i]);
    eval.label = labels[i];
    auto featurized = featurize_segments(model, eval.image, segmentation, int(i), batch_size);
    for (std::size_t s = 0; s < featurized.segments.size(); ++s) {
      auto& seg = featurized.segments[s];
      eval.segments.push_back(
          {seg.bbox, std::move(seg.mask),
           assign_segment_to_concept(featurized.activations.row(Eigen::Index(s)).transpose(), concepts)});
    }
    set.images.push_back(std::move(eval));
  }
  return set;
}

std::vector<int> concept_order(std::span<const int> ranked_ids, ConceptOrder order, std::uint64_t seed) {
  std::vector<int> ids(ranked_ids.begin(), ranked_ids.end());
  if (order == ConceptOrder::reverse) std::reverse(ids.begin(), ids.end());
  if (order == ConceptOrder::random) {
    Rng rng(seed);
    rng.shuffle(std::span<int>(ids));
  }
  return ids;
}

std::vector<std::vector<int>> concept_orders(std::span<const int> ranked_ids, ConceptOrder order, std::uint64_t seed,
                                             int n_random_orders) {
  if (order != ConceptOrder::random) return {concept_order(ranked_ids, order, seed)};
  require(n_random_orders >= 1, "concept_orders: n_random_orders must be positive");
  std::vector<std::vector<int>> out;
  for (int r = 0; r < n_random_orders; ++r)
    out.push_back(concept_order(ranked_ids, order, mix_seed(seed, std::uint64_t(r))));
  return out;
}

Mask selected_pixels(const EvalImage& image, std::span<const int> selected) {
  Mask m = Mask::Constant(image.image.height, image.image.width, false);
  for (const auto& seg : image.segments) {
    if (std::find(selected.begin(), selected.end(), seg.concept_id) == selected.end()) continue;
    m.block(seg.bbox.y, seg.bbox.x, seg.bbox.h, seg.bbox.w) = m.block(seg.bbox.y, seg.bbox.x, seg.bbox.h, seg.bbox.w) || seg.mask;
  }
  return m;
}

namespace {

RgbImage render(const EvalImage& image, std::span<const int> selected, float pad_value, bool keep_selected) {
  const Mask m = selected_pixels(image, selected);
  RgbImage out = image.image;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (m(y, x) != keep_selected)
        for (int c = 0; c < 3; ++c) out(x, y, c) = pad_value;
  return out;
}

std::vector<CurvePoint> curve(const SplitModel& model, const EvaluationSet& set, std::span<const int> ranked_ids,
                              ConceptOrder order, int k_max, std::uint64_t seed, int n_random_orders, bool sufficient) {
  require(k_max >= 0, "curve: k_max must be non-negative");
  require(!set.images.empty(), "curve: empty evaluation set");
  const auto orders = concept_orders(ranked_ids, order, seed, n_random_orders);
  const int top = std::min<int>(k_max, int(ranked_ids.size()));

  // A render depends only on which selected concepts occur in the image, so
  // each image is classified once per distinct such subset.
  const std::size_t n_images = set.images.size();
  std::vector<std::set<int>> present(n_images);
  for (std::size_t i = 0; i < n_images; ++i)
    for (const auto& seg : set.images[i].segments) present[i].insert(seg.concept_id);
  std::vector<std::map<std::vector<int>, bool>> correct(n_images);
  auto effective = [&](std::size_t i, const std::vector<int>& ids, int k) {
    std::vector<int> key;
    for (int j = 0; j < k; ++j)
      if (present[i].count(ids[std::size_t(j)])) key.push_back(ids[std::size_t(j)]);
    std::sort(key.begin(), key.end());
    return key;
  };
  std::vector<std::pair<std::size_t, std::vector<int>>> pending;
  for (const auto& ids : orders)
    for (int k = 0; k <= top; ++k)
      for (std::size_t i = 0; i < n_images; ++i) {
        auto key = effective(i, ids, k);
        if (correct[i].emplace(key, false).second) pending.emplace_back(i, std::move(key));
      }
  constexpr std::size_t kBatch = 16;
  std::vector<RgbImage> batch;
  for (std::size_t start = 0; start < pending.size(); start += kBatch) {
    const std::size_t end = std::min(pending.size(), start + kBatch);
    batch.clear();
    for (std::size_t p = start; p < end; ++p)
      batch.push_back(render(set.images[pending[p].first], pending[p].second, set.pad_value, sufficient));
    const ScoreMatrix scores = predict_full(model, batch);
    for (std::size_t p = start; p < end; ++p) {
      Eigen::Index arg;
      scores.row(Eigen::Index(p - start)).maxCoeff(&arg);
      const std::size_t i = pending[p].first;
      correct[i][pending[p].second] = int(arg) == set.images[i].label;
    }
  }

  std::vector<CurvePoint> points;
  for (int k = 0; k <= top; ++k) {
    long hits = 0;
    for (const auto& ids : orders)
      for (std::size_t i = 0; i < n_images; ++i) hits += correct[i].at(effective(i, ids, k));
    points.push_back({k, double(hits) / (double(n_images) * double(orders.size()))});
  }
  return points;
}

}  // namespace

RgbImage render_sufficient(const EvalImage& image, std::span<const int> selected, float pad_value) {
  return render(image, selected, pad_value, true);
}

RgbImage render_destroyed(const EvalImage& image, std::span<const int> selected, float pad_value) {
  return render(image, selected, pad_value, false);
}

std::vector<CurvePoint> ssc_curve(const SplitModel& model, const EvaluationSet& set, std::span<const int> ranked_ids,
                                  ConceptOrder order, int k_max, std::uint64_t seed, int n_random_orders) {
  return curve(model, set, ranked_ids, order, k_max, seed, n_random_orders, true);
}

std::vector<CurvePoint> sdc_curve(const SplitModel& model, const EvaluationSet& set, std::span<const int> ranked_ids,
                                  ConceptOrder order, int k_max, std::uint64_t seed, int n_random_orders) {
  return curve(model, set, ranked_ids, order, k_max, seed, n_random_orders, false);
}

nlohmann::json to_json(std::span<const CurvePoint> curve) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : curve) arr.push_back({{"k", p.k}, {"accuracy", p.accuracy}});
  return arr;
}

std::vector<RgbImage> stitch_images(std::span<const std::vector<Cutout>> concepts, const StitchOptions& options) {
  require(options.canvas_width > 0 && options.canvas_height > 0, "stitch_images: canvas must be non-empty");
  require(options.n_images >= 0, "stitch_images: n_images must be non-negative");
  std::vector<std::size_t> usable;
  for (std::size_t c = 0; c < concepts.size(); ++c) {
    require(!concepts[c].empty(), "stitch_images: concept without member segments");
    usable.push_back(c);
  }
  require(!usable.empty(), "stitch_images: no concepts");

  const int cw = options.canvas_width, ch = options.canvas_height;
  const double target = options.coverage * double(cw) * double(ch);
  std::vector<RgbImage> canvases;
  Rng rng(options.seed);
  bool warned = false;
  for (int n = 0; n < options.n_images; ++n) {
    RgbImage canvas(cw, ch, options.pad_value);
    Mask occupied = Mask::Constant(ch, cw, false);
    double covered = 0;
    int failures = 0;
    do {
      const auto& pool = concepts[usable[rng.below(usable.size())]];
      const Cutout& cut = pool[rng.below(pool.size())];
      const int w = cut.pixels.width, h = cut.pixels.height;
      if (w > cw || h > ch) {
        if (!warned) log::warn("stitch_images: skipping segments larger than the canvas");
        warned = true;
        ++failures;
        continue;
      }
      bool placed = false;
      for (int attempt = 0; attempt < options.max_attempts && !placed; ++attempt) {
        const int x0 = int(rng.below(std::size_t(cw - w + 1)));
        const int y0 = int(rng.below(std::size_t(ch - h + 1)));
        if ((occupied.block(y0, x0, h, w) && cut.mask).any()) continue;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            if (cut.mask(y, x)) {
              occupied(y0 + y, x0 + x) = true;
              for (int c = 0; c < 3; ++c) canvas(x0 + x, y0 + y, c) = cut.pixels(x, y, c);
            }
        covered += double(cut.mask.count());
        placed = true;
      }
      failures = placed ? 0 : failures + 1;
    } while (covered < target && failures < options.max_failures);
    canvases.push_back(std::move(canvas));
  }
  return canvases;
}

StitchResult stitching_accuracy(const SplitModel& model, std::span<const RgbImage> stitched, int class_index) {
  require(!stitched.empty(), "stitching_accuracy: no canvases");
  StitchResult r;
  r.class_index = class_index;
  r.n_images = int(stitched.size());
  constexpr std::size_t kBatch = 16;
  for (std::size_t start = 0; start < stitched.size(); start += kBatch) {
    const std::size_t end = std::min(stitched.size(), start + kBatch);
    const ScoreMatrix scores = predict_full(model, stitched.subspan(start, end - start));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      Eigen::Index arg;
      scores.row(i).maxCoeff(&arg);
      r.n_correct += int(arg) == class_index;
    }
  }
  return r;
}

nlohmann::json to_json(const StitchResult& r) {
  return {{"class_index", r.class_index},
          {"n_images", r.n_images},
          {"n_correct", r.n_correct},
          {"accuracy", r.accuracy()},
          {"example_paths", r.example_paths}};
}

}  // namespace ace
