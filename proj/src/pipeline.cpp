#include "ace/pipeline.hpp"

#include "ace/activation_cache.hpp"
#include "ace/cav.hpp"
#include "ace/evaluation.hpp"
#include "ace/fileio.hpp"
#include "ace/image.hpp"
#include "ace/log.hpp"
#include "ace/model.hpp"
#include "ace/parallel.hpp"
#include "ace/render.hpp"
#include "ace/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>

namespace ace {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kCacheLayoutVersion = 1;
constexpr int kMinUsableImages = 10;
constexpr int kMaxExamples = 10;
constexpr const char* kManifest = "manifest.json";

// Stream ids for seeds derived from the run seed.
enum : std::uint64_t {
  kStreamDiscoverySample = 0x100,
  kStreamRandomSample = 0x101,
  kStreamPools = 0x200,
  kStreamImportance = 0x300,
  kStreamEvalSample = 0x400,
  kStreamEvalOrder = 0x401,
  kStreamStitch = 0x500,
  kStreamBaseline = 0x600,
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::io, path.string() + ": " + e.what());
  }
}

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

json bbox_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }


// --------------------------------------------------------------------------
// Inputs

struct ImageFile {
  fs::path path;
  std::string name;  // relative to its root, generic separators
  std::uint64_t hash = 0;
};

std::vector<ImageFile> list_images(const fs::path& root, const std::set<fs::path>& exclude = {}) {
  std::vector<ImageFile> files;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_directory() && exclude.count(it->path())) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && is_image_file(it->path()))
      files.push_back({it->path(), fs::relative(it->path(), root).generic_string(), 0});
  }
  if (ec) fail(ErrorKind::config, "cannot list images in " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return files;
}

/// Keeps at most n files, chosen with the seed; the kept files stay sorted.
std::vector<ImageFile> sample_down(std::vector<ImageFile> files, int n, std::uint64_t seed) {
  if (int(files.size()) <= n) return files;
  Rng rng(seed);
  auto perm = rng.permutation(files.size());
  perm.resize(std::size_t(n));
  std::sort(perm.begin(), perm.end());
  std::vector<ImageFile> kept;
  for (auto i : perm) kept.push_back(std::move(files[i]));
  return kept;
}

void hash_files(std::vector<ImageFile>& files, int jobs) {
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    try {
      files[i].hash = fnv1a(read_file(files[i].path));
    } catch (const Error&) {
      files[i].hash = 0;  // unreadable; reported when decoding
    }
  });
}

json files_json(const std::vector<ImageFile>& files) {
  json arr = json::array();
  for (const auto& f : files) arr.push_back({f.name, to_hex(f.hash)});
  return arr;
}

std::string key_of(const json& j) { return to_hex(fnv1a(j.dump())); }

// --------------------------------------------------------------------------
// Run context

struct Context {
  PipelineConfig config;
  std::optional<SplitModel> model;
  std::string model_fingerprint;
  int class_index = 0;
  std::string class_label;
  SegmentationOptions segmentation;

  fs::path class_dir;
  std::vector<ImageFile> discovery_files;
  std::vector<ImageFile> random_files;

  std::string discover_key, score_key, eval_key, stitch_key;
  std::vector<ImageFile> eval_files;

  PipelineRun run;

  fs::path stage_dir(const std::string& stage, const std::string& key) const {
    return config.cache_dir / (stage + "-" + key);
  }
  fs::path discover_dir() const { return stage_dir("discover", discover_key); }
  fs::path score_dir() const { return stage_dir("score", score_key); }
  fs::path eval_dir() const { return stage_dir("eval", eval_key); }
  fs::path stitch_dir() const { return stage_dir("stitch", stitch_key); }
  const SplitModel& m() const { return *model; }
};

bool stage_done(const fs::path& dir) { return fs::exists(dir / kManifest); }

void load_model(Context& ctx) {
  const auto& dir = ctx.config.model_dir;
  try {
    ctx.model.emplace(load_split_model(dir));
    std::string bytes;
    for (const char* f : {"featurizer.onnx", "head.onnx", "metadata.json"}) bytes += to_hex(fnv1a(read_file(dir / f)));
    ctx.model_fingerprint = to_hex(fnv1a(bytes));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::model_format || e.kind() == ErrorKind::model_integrity) throw;
    fail(ErrorKind::model_format, "model " + dir.string() + ": " + e.what());
  }
  const auto& meta = ctx.m().metadata();
  int idx = meta.class_index(ctx.config.class_name);
  if (idx < 0 && !ctx.config.class_name.empty() &&
      ctx.config.class_name.find_first_not_of("0123456789") == std::string::npos) {
    idx = std::stoi(ctx.config.class_name);
    if (idx >= meta.n_classes) idx = -1;
  }
  if (idx < 0) fail(ErrorKind::config, "config: class '" + ctx.config.class_name + "' is not a class of the model");
  ctx.class_index = idx;
  ctx.class_label = idx < int(meta.class_labels.size()) ? meta.class_labels[std::size_t(idx)] : std::to_string(idx);

  SegmentationOptions seg;
  seg.resolutions = ctx.config.resolutions;
  seg.compactness = ctx.config.compactness;
  seg.max_iters = ctx.config.slic_max_iters;
  seg.seed = ctx.config.seed;
  seg.min_segment_pixels = ctx.config.min_segment_pixels;
  seg = segmentation_for(ctx.m(), seg);
  if (ctx.config.pad_gray) seg.pad_value = *ctx.config.pad_gray;
  ctx.segmentation = seg;
}

json segmentation_json(const SegmentationOptions& s) {
  return {{"resolutions", s.resolutions},     {"compactness", s.compactness},
          {"max_iters", s.max_iters},         {"min_segment_pixels", s.min_segment_pixels},
          {"pad_value", s.pad_value},         {"target", {s.target_width, s.target_height}}};
}

void resolve_discovery_inputs(Context& ctx) {
  const auto& c = ctx.config;
  if (!fs::is_directory(c.discovery_dir))
    fail(ErrorKind::config, "config: discovery_dir " + c.discovery_dir.string() + " is not a directory");
  ctx.class_dir = c.discovery_dir / ctx.class_label;
  if (!fs::is_directory(ctx.class_dir))
    fail(ErrorKind::config, "config: no folder '" + ctx.class_label + "' in " + c.discovery_dir.string());
  ctx.discovery_files =
      sample_down(list_images(ctx.class_dir), c.n_discovery_images, mix_seed(c.seed, kStreamDiscoverySample));
  if (!c.random_dir.empty()) {
    if (!fs::is_directory(c.random_dir))
      fail(ErrorKind::config, "config: random_dir " + c.random_dir.string() + " is not a directory");
    ctx.random_files = list_images(c.random_dir);
  } else {
    ctx.random_files = list_images(c.discovery_dir, {ctx.class_dir});
  }
  ctx.random_files = sample_down(std::move(ctx.random_files), c.n_random_images, mix_seed(c.seed, kStreamRandomSample));
  hash_files(ctx.discovery_files, c.jobs);
  hash_files(ctx.random_files, c.jobs);

  json key = {{"layout", kCacheLayoutVersion},
              {"model", ctx.model_fingerprint},
              {"class_index", ctx.class_index},
              {"images", files_json(ctx.discovery_files)},
              {"random_images", files_json(ctx.random_files)},
              {"seed", c.seed},
              {"segmentation", segmentation_json(ctx.segmentation)},
              {"clustering",
               {{"k", c.clustering.k},
                {"n_keep", c.clustering.n_keep},
                {"max_iters", c.clustering.max_iters},
                {"n_init", c.clustering.n_init},
                {"n_discovery_images", c.n_discovery_images}}}};
  ctx.discover_key = key_of(key);
  ctx.score_key = key_of({{"discover", ctx.discover_key},
                          {"seed", c.seed},
                          {"n_runs", c.tcav.n_runs},
                          {"alpha", c.tcav.alpha},
                          {"epsilon", c.tcav.epsilon},
                          {"random_pool_size", c.tcav.random_pool_size},
                          {"test", "pseudo-concept-single-case-t"}});
  ctx.stitch_key = key_of({{"score", ctx.score_key},
                           {"seed", c.seed},
                           {"n_concepts", c.stitch.n_concepts},
                           {"n_images", c.stitch.n_images},
                           {"coverage", c.stitch.coverage},
                           {"max_attempts", c.stitch.max_attempts},
                           {"n_saved", c.stitch.n_saved}});
  if (!c.eval_dir.empty() && fs::is_directory(c.eval_dir)) {
    const fs::path class_eval = c.eval_dir / ctx.class_label;
    ctx.eval_files = sample_down(list_images(fs::is_directory(class_eval) ? class_eval : c.eval_dir),
                                 c.eval.n_eval_images, mix_seed(c.seed, kStreamEvalSample));
    hash_files(ctx.eval_files, c.jobs);
    ctx.eval_key = key_of({{"score", ctx.score_key},
                           {"seed", c.seed},
                           {"k_max", c.eval.k_max},
                           {"n_random_orders", c.eval.n_random_orders},
                           {"images", files_json(ctx.eval_files)}});
  }
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void record(Context& ctx, const std::string& stage, const std::string& key, bool hit, const fs::path& dir) {
  StageRun r{key, hit, 0.0};
  const json manifest = read_json(dir / kManifest);
  r.seconds = manifest.value("seconds", 0.0);
  ctx.run.stages[stage] = r;
  log::info(stage + ": " + (hit ? "cache hit (" : "computed (") + dir.string() + ")");
}

// --------------------------------------------------------------------------
// discover

struct ImageSegments {
  bool usable = false;
  RgbImage image;
  std::vector<SegmentPatch> segments;
  ActivationMatrix activations;
  ActivationMatrix whole;  // activation of the full image (one row)
};

std::vector<ImageSegments> featurize_files(const Context& ctx, const std::vector<ImageFile>& files, bool whole) {
  std::vector<ImageSegments> out(files.size());
  parallel_for(files.size(), ctx.config.jobs, [&](std::size_t i) {
    RgbImage img;
    try {
      img = to_model_input(ctx.m(), read_image(files[i].path));
    } catch (const Error& e) {
      log::warn("skipping unreadable image " + files[i].path.string() + ": " + e.what());
      return;
    }
    auto fs = featurize_segments(ctx.m(), img, ctx.segmentation, int(i), ctx.config.batch_size);
    out[i].segments = std::move(fs.segments);
    out[i].activations = std::move(fs.activations);
    if (whole) out[i].whole = featurize(ctx.m(), std::span<const RgbImage>(&img, 1));
    out[i].image = std::move(img);
    out[i].usable = true;
  });
  return out;
}

/// Flattens per-image segments (skipping unusable images, renumbering image
/// ids densely) into one activation matrix plus sidecar rows.
struct Flattened {
  ActivationMatrix activations;
  json rows = json::array();
  std::vector<SegmentRef> refs;
  std::vector<std::pair<int, int>> origin;  // (dense image id, index within image)
  std::vector<int> image_slot;              // dense image id -> index into files
};

Flattened flatten(std::vector<ImageSegments>& images, const std::vector<ImageFile>& files, int dim) {
  Flattened f;
  Eigen::Index total = 0;
  for (const auto& im : images) total += im.usable ? im.activations.rows() : 0;
  f.activations.resize(total, dim);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].usable) continue;
    const int id = int(f.image_slot.size());
    f.image_slot.push_back(int(i));
    auto& im = images[i];
    for (std::size_t s = 0; s < im.segments.size(); ++s, ++row) {
      auto& seg = im.segments[s];
      seg.image_id = id;
      f.activations.row(row) = im.activations.row(Eigen::Index(s));
      f.refs.push_back({id, seg.resolution_level, seg.segment_label, seg.bbox});
      f.origin.emplace_back(int(i), int(s));
      f.rows.push_back({{"row", row},
                        {"image_id", id},
                        {"image", files[i].name},
                        {"resolution_level", seg.resolution_level},
                        {"segment_label", seg.segment_label},
                        {"bbox", bbox_json(seg.bbox)},
                        {"pixels", seg.pixel_count()}});
    }
  }
  return f;
}

RgbImage mask_image(const Mask& mask) {
  RgbImage out(int(mask.cols()), int(mask.rows()), 0.0f);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (mask(y, x))
        for (int c = 0; c < 3; ++c) out(x, y, c) = 1.0f;
  return out;
}

void run_discover(Context& ctx) {
  const fs::path dir = ctx.discover_dir();
  if (stage_done(dir)) return record(ctx, "discover", ctx.discover_key, true, dir);
  Timer timer;
  const auto& c = ctx.config;
  log::info("discover: segmenting " + std::to_string(ctx.discovery_files.size()) + " images of class '" +
            ctx.class_label + "'");
  auto images = featurize_files(ctx, ctx.discovery_files, true);
  const int usable = int(std::count_if(images.begin(), images.end(), [](const auto& im) { return im.usable; }));
  if (usable < kMinUsableImages)
    fail(ErrorKind::insufficient_data, "discover: only " + std::to_string(usable) + " usable images of class '" +
                                           ctx.class_label + "' (need at least " +
                                           std::to_string(kMinUsableImages) + ")");
  const int dim = ctx.m().bottleneck_dim();
  Flattened seg = flatten(images, ctx.discovery_files, dim);

  ActivationMatrix class_acts(usable, dim);
  json class_rows = json::array();
  for (std::size_t id = 0; id < seg.image_slot.size(); ++id) {
    const int slot = seg.image_slot[id];
    class_acts.row(Eigen::Index(id)) = images[std::size_t(slot)].whole.row(0);
    class_rows.push_back({{"row", id}, {"image_id", id}, {"image", ctx.discovery_files[std::size_t(slot)].name}});
  }

  log::info("discover: segmenting " + std::to_string(ctx.random_files.size()) + " random images");
  auto random_images = featurize_files(ctx, ctx.random_files, false);
  Flattened rnd = flatten(random_images, ctx.random_files, dim);
  random_images.clear();

  ClusteringConfig cc = c.clustering;
  cc.seed = c.seed;
  cc.n_discovery_images = usable;
  log::info("discover: clustering " + std::to_string(seg.refs.size()) + " segments");
  DiscoveryResult discovery = discover_concepts(seg.refs, seg.activations, cc, ctx.class_index);
  // A concept needs kMinCavExamples members to train a CAV. Only small
  // discovery sets can retain such clusters; they cannot be tested, so drop
  // them here (concepts are ordered by size, so ids stay contiguous).
  const auto untestable = std::find_if(discovery.concepts.begin(), discovery.concepts.end(),
                                       [](const Concept& con) { return con.size < kMinCavExamples; });
  if (untestable != discovery.concepts.end()) {
    const int n = int(discovery.concepts.end() - untestable);
    log::warn("discover: dropping " + std::to_string(n) + " concept(s) with fewer than " +
              std::to_string(kMinCavExamples) + " members");
    discovery.discarded_cluster_count += n;
    discovery.concepts.erase(untestable, discovery.concepts.end());
  }
  if (discovery.concepts.empty())
    fail(ErrorKind::insufficient_data, "discover: no cluster passed the retention rules with at least " +
                                           std::to_string(kMinCavExamples) + " members");

  write_activation_cache(dir / "segments.acea", seg.activations, seg.rows);
  write_activation_cache(dir / "class.acea", class_acts, class_rows);
  write_activation_cache(dir / "random.acea", rnd.activations, rnd.rows);
  atomic_write(dir / "discovery.json", dump(to_json(discovery)));

  // Patch cache for concept members: model patch, source crop and mask.
  parallel_for(discovery.concepts.size(), c.jobs, [&](std::size_t ci) {
    const Concept& con = discovery.concepts[ci];
    const fs::path cdir = dir / "patches" / ("concept_" + two_digits(con.concept_id));
    for (std::size_t j = 0; j < con.member_indices.size(); ++j) {
      const auto [slot, s] = seg.origin[std::size_t(con.member_indices[j])];
      const ImageSegments& im = images[std::size_t(slot)];
      const SegmentPatch& sp = im.segments[std::size_t(s)];
      const std::string stem = "m" + two_digits(int(j));
      write_png(cdir / (stem + "_patch.png"),
                extract_patch(im.image, sp.full_mask(im.image.width, im.image.height), ctx.segmentation.target_width,
                              ctx.segmentation.target_height, ctx.segmentation.pad_value));
      write_png(cdir / (stem + "_crop.png"), crop(im.image, sp.bbox));
      write_png(cdir / (stem + "_mask.png"), mask_image(sp.mask));
      atomic_write(cdir / (stem + ".json"),
                   dump({{"image_id", sp.image_id},
                         {"image", ctx.discovery_files[std::size_t(slot)].name},
                         {"resolution_level", sp.resolution_level},
                         {"segment_label", sp.segment_label},
                         {"bbox", bbox_json(sp.bbox)}}));
    }
  });

  json images_json = json::array();
  for (int slot : seg.image_slot) images_json.push_back(ctx.discovery_files[std::size_t(slot)].name);
  const json manifest = {{"stage", "discover"},
                         {"key", ctx.discover_key},
                         {"seconds", timer.seconds()},
                         {"class_index", ctx.class_index},
                         {"class_label", ctx.class_label},
                         {"images", images_json},
                         {"n_skipped", int(images.size()) - usable},
                         {"n_segments", seg.refs.size()},
                         {"n_random_images", rnd.image_slot.size()},
                         {"n_random_segments", rnd.refs.size()},
                         {"n_concepts", discovery.concepts.size()},
                         {"discarded_cluster_count", discovery.discarded_cluster_count}};
  atomic_write(dir / kManifest, dump(manifest));
  record(ctx, "discover", ctx.discover_key, false, dir);
}

DiscoveryResult load_discovery(const Context& ctx) {
  const auto acts = read_activation_cache(ctx.discover_dir() / "segments.acea");
  return discovery_from_json(read_json(ctx.discover_dir() / "discovery.json"), acts);
}

void require_stage(const fs::path& dir, const std::string& stage) {
  if (!stage_done(dir))
    fail(ErrorKind::dependency, "stage '" + stage + "' has not been run for this configuration; run --stage " +
                                    stage + " first");
}

// --------------------------------------------------------------------------
// score

void run_score(Context& ctx) {
  require_stage(ctx.discover_dir(), "discover");
  const fs::path dir = ctx.score_dir();
  if (stage_done(dir)) return record(ctx, "score", ctx.score_key, true, dir);
  Timer timer;
  const auto& c = ctx.config;
  const DiscoveryResult discovery = load_discovery(ctx);
  const ActivationMatrix class_acts = read_activation_cache(ctx.discover_dir() / "class.acea");
  const ActivationMatrix random_acts = read_activation_cache(ctx.discover_dir() / "random.acea");
  if (random_acts.rows() < c.tcav.random_pool_size)
    fail(ErrorKind::insufficient_data, "score: " + std::to_string(random_acts.rows()) +
                                           " random segments available, a pool needs " +
                                           std::to_string(c.tcav.random_pool_size));
  // n_runs + 1 pools: the concept uses the first n_runs, and the random
  // baseline scores every pool as a pseudo-concept against the others.
  std::vector<ActivationMatrix> pools(std::size_t(c.tcav.n_runs) + 1);
  for (int p = 0; p <= c.tcav.n_runs; ++p) {
    Rng rng(mix_seed(c.seed, kStreamPools + std::uint64_t(p)));
    const auto perm = rng.permutation(std::size_t(random_acts.rows()));
    auto& pool = pools[std::size_t(p)];
    pool.resize(c.tcav.random_pool_size, random_acts.cols());
    for (int r = 0; r < c.tcav.random_pool_size; ++r) pool.row(r) = random_acts.row(Eigen::Index(perm[std::size_t(r)]));
  }

  ImportanceOptions base_opt;
  base_opt.n_runs = c.tcav.n_runs;
  base_opt.alpha = c.tcav.alpha;
  base_opt.epsilon = c.tcav.epsilon;
  base_opt.seed = mix_seed(c.seed, kStreamBaseline);
  log::info("score: random baseline from " + std::to_string(pools.size()) + " pools");
  const RandomBaseline baseline = random_baseline(ctx.m(), class_acts, ctx.class_index, pools, base_opt, c.jobs);

  log::info("score: testing " + std::to_string(discovery.concepts.size()) + " concepts");
  std::vector<TcavResult> results(discovery.concepts.size());
  parallel_for(discovery.concepts.size(), c.jobs, [&](std::size_t i) {
    const Concept& con = discovery.concepts[i];
    ImportanceOptions opt;
    opt.n_runs = c.tcav.n_runs;
    opt.alpha = c.tcav.alpha;
    opt.epsilon = c.tcav.epsilon;
    opt.seed = mix_seed(c.seed, kStreamImportance + std::uint64_t(con.concept_id));
    const ConceptSample sample{con.concept_id, con.size, con.cluster_size, &con.member_activations};
    results[i] = importance_test(ctx.m(), sample, class_acts, ctx.class_index, pools, baseline, opt);
  });
  const auto ranked = rank_concepts(std::move(results));
  json arr = json::array();
  for (const auto& r : ranked) arr.push_back(to_json(r));
  atomic_write(dir / "tcav.json", dump({{"results", arr}}));
  atomic_write(dir / kManifest, dump({{"stage", "score"}, {"key", ctx.score_key}, {"seconds", timer.seconds()}}));
  record(ctx, "score", ctx.score_key, false, dir);
}

std::vector<TcavResult> load_scores(const Context& ctx) {
  std::vector<TcavResult> out;
  const json scores = read_json(ctx.score_dir() / "tcav.json");
  for (const auto& r : scores.at("results")) out.push_back(tcav_result_from_json(r));
  return out;
}

std::vector<int> ranked_ids(const std::vector<TcavResult>& ranked) {
  std::vector<int> ids;
  for (const auto& r : ranked) ids.push_back(r.concept_id);
  return ids;
}

// --------------------------------------------------------------------------
// eval

void run_eval(Context& ctx) {
  require_stage(ctx.score_dir(), "score");
  if (ctx.config.eval_dir.empty()) fail(ErrorKind::config, "config: eval stage needs eval_dir");
  if (ctx.eval_files.empty())
    fail(ErrorKind::insufficient_data, "eval: no images found in " + ctx.config.eval_dir.string());
  const fs::path dir = ctx.eval_dir();
  if (stage_done(dir)) return record(ctx, "eval", ctx.eval_key, true, dir);
  Timer timer;
  const auto& c = ctx.config;
  const DiscoveryResult discovery = load_discovery(ctx);
  const auto ids = ranked_ids(load_scores(ctx));

  log::info("eval: segmenting " + std::to_string(ctx.eval_files.size()) + " evaluation images");
  std::vector<std::optional<EvalImage>> prepared(ctx.eval_files.size());
  parallel_for(ctx.eval_files.size(), c.jobs, [&](std::size_t i) {
    RgbImage img;
    try {
      img = read_image(ctx.eval_files[i].path);
    } catch (const Error& e) {
      log::warn("skipping unreadable image " + ctx.eval_files[i].path.string() + ": " + e.what());
      return;
    }
    const int label = ctx.class_index;
    auto set = prepare_evaluation(ctx.m(), std::span<const RgbImage>(&img, 1), std::span<const int>(&label, 1),
                                  discovery.concepts, ctx.segmentation, c.batch_size);
    prepared[i] = std::move(set.images.front());
  });
  EvaluationSet set;
  set.pad_value = ctx.segmentation.pad_value;
  json images = json::array();
  for (std::size_t i = 0; i < prepared.size(); ++i)
    if (prepared[i]) {
      set.images.push_back(std::move(*prepared[i]));
      images.push_back(ctx.eval_files[i].name);
    }
  if (set.images.empty()) fail(ErrorKind::insufficient_data, "eval: no readable evaluation images");

  const int k_max = std::min<int>(c.eval.k_max, int(ids.size()));
  const std::uint64_t order_seed = mix_seed(c.seed, kStreamEvalOrder);
  const ConceptOrder orders[] = {ConceptOrder::importance, ConceptOrder::random, ConceptOrder::reverse};
  std::vector<std::vector<CurvePoint>> curves(6);
  parallel_for(6, c.jobs, [&](std::size_t i) {
    const ConceptOrder order = orders[i % 3];
    curves[i] = i < 3 ? ssc_curve(ctx.m(), set, ids, order, k_max, order_seed, c.eval.n_random_orders)
                      : sdc_curve(ctx.m(), set, ids, order, k_max, order_seed, c.eval.n_random_orders);
  });
  json ssc, sdc;
  for (int i = 0; i < 3; ++i) {
    ssc[to_string(orders[i])] = to_json(curves[std::size_t(i)]);
    sdc[to_string(orders[i])] = to_json(curves[std::size_t(i + 3)]);
  }
  const json out = {
      {"protocol",
       "top-1 accuracy over the target class's evaluation images; every segment is assigned to its nearest concept; "
       "absent pixels are pad gray; the random order is the mean over random_orders"},
      {"class_index", ctx.class_index},
      {"n_images", set.images.size()},
      {"images", images},
      {"k_max", k_max},
      {"random_orders", concept_orders(ids, ConceptOrder::random, order_seed, c.eval.n_random_orders)},
      {"ssc", ssc},
      {"sdc", sdc}};
  atomic_write(dir / "curves.json", dump(out));
  atomic_write(dir / kManifest, dump({{"stage", "eval"}, {"key", ctx.eval_key}, {"seconds", timer.seconds()}}));
  record(ctx, "eval", ctx.eval_key, false, dir);
}

// --------------------------------------------------------------------------
// stitch

std::vector<Cutout> load_cutouts(const fs::path& concept_dir, int n_members) {
  std::vector<Cutout> cutouts;
  for (int j = 0; j < n_members; ++j) {
    const std::string stem = "m" + two_digits(j);
    Cutout cut;
    cut.pixels = read_image(concept_dir / (stem + "_crop.png"));
    const RgbImage mask = read_image(concept_dir / (stem + "_mask.png"));
    cut.mask = Mask(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y)
      for (int x = 0; x < mask.width; ++x) cut.mask(y, x) = mask(x, y, 0) > 0.5f;
    cutouts.push_back(std::move(cut));
  }
  return cutouts;
}

void run_stitch(Context& ctx) {
  require_stage(ctx.score_dir(), "score");
  const fs::path dir = ctx.stitch_dir();
  if (stage_done(dir)) return record(ctx, "stitch", ctx.stitch_key, true, dir);
  Timer timer;
  const auto& c = ctx.config;
  const DiscoveryResult discovery = load_discovery(ctx);
  const auto ranked = load_scores(ctx);
  std::vector<int> top;
  for (const auto& r : ranked)
    if (int(top.size()) < c.stitch.n_concepts) top.push_back(r.concept_id);
  if (top.empty()) fail(ErrorKind::insufficient_data, "stitch: no concepts to stitch");

  std::vector<std::vector<Cutout>> pools;
  for (int id : top) {
    const auto it = std::find_if(discovery.concepts.begin(), discovery.concepts.end(),
                                 [&](const Concept& con) { return con.concept_id == id; });
    require(it != discovery.concepts.end(), "stitch: unknown concept id");
    pools.push_back(
        load_cutouts(ctx.discover_dir() / "patches" / ("concept_" + two_digits(id)), int(it->members.size())));
  }
  StitchOptions opt;
  opt.canvas_width = ctx.segmentation.target_width;
  opt.canvas_height = ctx.segmentation.target_height;
  opt.n_images = c.stitch.n_images;
  opt.coverage = c.stitch.coverage;
  opt.max_attempts = c.stitch.max_attempts;
  opt.pad_value = ctx.segmentation.pad_value;
  opt.seed = mix_seed(c.seed, kStreamStitch);
  const auto canvases = stitch_images(pools, opt);
  StitchResult result = stitching_accuracy(ctx.m(), canvases, ctx.class_index);
  for (int i = 0; i < std::min<int>(c.stitch.n_saved, int(canvases.size())); ++i) {
    const std::string name = "canvas_" + two_digits(i) + ".png";
    write_png(dir / name, canvases[std::size_t(i)]);
    result.example_paths.push_back("stitch/" + name);
  }
  json out = to_json(result);
  out["concept_ids"] = top;
  out["coverage"] = c.stitch.coverage;
  atomic_write(dir / "stitch.json", dump(out));
  atomic_write(dir / kManifest, dump({{"stage", "stitch"}, {"key", ctx.stitch_key}, {"seconds", timer.seconds()}}));
  record(ctx, "stitch", ctx.stitch_key, false, dir);
}

// --------------------------------------------------------------------------
// report

void copy_file_atomic(const fs::path& from, const fs::path& to) { atomic_write(to, read_file(from)); }

std::vector<CurvePoint> curve_from_json(const json& arr) {
  std::vector<CurvePoint> pts;
  for (const auto& p : arr) pts.push_back({p.at("k").get<int>(), p.at("accuracy").get<double>()});
  return pts;
}

fs::path emit_report(Context& ctx) {
  require_stage(ctx.discover_dir(), "discover");
  const auto& c = ctx.config;
  const fs::path out = c.output_dir;
  const auto& meta = ctx.m().metadata();
  const json manifest = read_json(ctx.discover_dir() / kManifest);
  const json discovery_json = read_json(ctx.discover_dir() / "discovery.json");

  std::map<int, TcavResult> scores;
  std::vector<int> order;
  const bool scored = stage_done(ctx.score_dir());
  if (scored)
    for (const auto& r : load_scores(ctx)) {
      scores[r.concept_id] = r;
      order.push_back(r.concept_id);
    }
  else
    for (const auto& con : discovery_json.at("concepts")) order.push_back(con.at("concept_id").get<int>());

  std::map<int, json> concept_by_id;
  for (const auto& con : discovery_json.at("concepts")) concept_by_id[con.at("concept_id").get<int>()] = con;

  json concepts = json::array();
  std::vector<IndexEntry> index_entries;
  for (int id : order) {
    const json& con = concept_by_id.at(id);
    const std::string tag = "concept_" + two_digits(id);
    const fs::path src = ctx.discover_dir() / "patches" / tag;
    const int n_members = int(con.at("members").size());
    const int n_examples = std::min(kMaxExamples, n_members);
    std::vector<RgbImage> patches, crops;
    json examples = json::array();
    for (int j = 0; j < n_examples; ++j) {
      const std::string stem = "m" + two_digits(j);
      const std::string rel = "examples/" + tag + "/" + two_digits(j) + ".png";
      copy_file_atomic(src / (stem + "_patch.png"), out / rel);
      examples.push_back(rel);
      patches.push_back(read_image(src / (stem + "_patch.png")));
      crops.push_back(read_image(src / (stem + "_crop.png")));
    }
    const std::string montage = "montages/" + tag + ".png";
    write_png(out / montage, make_montage(patches, crops));

    json rec = {{"concept_id", id},
                {"size", con.at("size")},
                {"n_source_images", con.at("n_source_images")},
                {"cluster_size", con.at("cluster_size")},
                {"cluster_source_images", con.at("cluster_source_images")},
                {"retention_rule", con.at("retention_rule")},
                {"examples", examples},
                {"montage", montage}};
    IndexEntry entry{id, con.at("size").get<int>(), con.at("retention_rule").get<std::string>(), {}, {}, false,
                     montage};
    if (scored) {
      const TcavResult& r = scores.at(id);
      rec["tcav_score"] = r.score;
      rec["p_value"] = r.p_value;
      rec["passed"] = r.passed;
      rec["rank"] = r.rank;
      rec["tcav"] = to_json(r);
      entry.score = r.score;
      entry.p_value = r.p_value;
      entry.passed = r.passed;
    }
    concepts.push_back(rec);
    index_entries.push_back(entry);
  }

  json report = {{"schema_version", 1},
                 {"config", to_json(c)},
                 {"model",
                  {{"n_classes", meta.n_classes},
                   {"class_labels", meta.class_labels},
                   {"bottleneck_name", meta.bottleneck_name},
                   {"bottleneck_dim", meta.bottleneck_dim},
                   {"input_size", {meta.input_width, meta.input_height}},
                   {"fingerprint", ctx.model_fingerprint}}},
                 {"class", {{"index", ctx.class_index}, {"label", ctx.class_label}}},
                 {"discovery",
                  {{"cache_key", ctx.discover_key},
                   {"images", manifest.at("images")},
                   {"n_images", manifest.at("images").size()},
                   {"n_skipped", manifest.at("n_skipped")},
                   {"n_segments", manifest.at("n_segments")},
                   {"n_random_images", manifest.at("n_random_images")},
                   {"n_random_segments", manifest.at("n_random_segments")},
                   {"n_concepts", manifest.at("n_concepts")},
                   {"discarded_cluster_count", manifest.at("discarded_cluster_count")},
                   {"pad_value", ctx.segmentation.pad_value}}},
                 {"concepts", concepts}};
  if (scored) report["ranking"] = order;

  std::vector<std::string> links;
  if (!ctx.eval_key.empty() && stage_done(ctx.eval_dir())) {
    json curves = read_json(ctx.eval_dir() / "curves.json");
    for (const char* kind : {"ssc", "sdc"}) {
      std::map<std::string, std::vector<CurvePoint>> series;
      for (const auto& [name, arr] : curves.at(kind).items()) series[name] = curve_from_json(arr);
      const bool is_ssc = std::string(kind) == "ssc";
      const std::string rel = std::string("curves/") + kind + ".svg";
      atomic_write(out / rel, curve_svg(is_ssc ? "Smallest sufficient concepts (SSC)" : "Smallest destroying concepts (SDC)",
                                        is_ssc ? "concepts added" : "concepts removed", series));
      curves[std::string(kind) + "_svg"] = rel;
      links.push_back(rel);
    }
    report["curves"] = curves;
  }
  if (stage_done(ctx.stitch_dir())) {
    json stitch = read_json(ctx.stitch_dir() / "stitch.json");
    for (const auto& rel : stitch.at("example_paths"))
      copy_file_atomic(ctx.stitch_dir() / fs::path(rel.get<std::string>()).filename(), out / rel.get<std::string>());
    report["stitch"] = stitch;
  }

  json timings = json::object();
  for (const auto& [stage, r] : ctx.run.stages)
    timings[stage] = {{"seconds", r.seconds}, {"cache_hit", r.cache_hit}, {"cache_key", r.key}};
  for (const auto& [stage, dir] : std::vector<std::pair<std::string, fs::path>>{
           {"discover", ctx.discover_dir()}, {"score", ctx.score_dir()}, {"stitch", ctx.stitch_dir()}})
    if (!timings.contains(stage) && stage_done(dir)) timings[stage] = {{"seconds", read_json(dir / kManifest).value("seconds", 0.0)}};
  if (!ctx.eval_key.empty() && !timings.contains("eval") && stage_done(ctx.eval_dir()))
    timings["eval"] = {{"seconds", read_json(ctx.eval_dir() / kManifest).value("seconds", 0.0)}};
  report["timings"] = timings;

  atomic_write(out / "report.json", dump(report));
  atomic_write(out / "index.svg",
               index_svg("ACE concepts for class '" + ctx.class_label + "'", index_entries, links));
  return out / "report.json";
}

}  // namespace

PipelineRun run_pipeline(const PipelineConfig& config, Stage stage) {
  validate(config);
  Context ctx;
  ctx.config = config;
  load_model(ctx);
  resolve_discovery_inputs(ctx);
  switch (stage) {
    case Stage::discover: run_discover(ctx); break;
    case Stage::score: run_score(ctx); break;
    case Stage::eval: run_eval(ctx); break;
    case Stage::stitch: run_stitch(ctx); break;
    case Stage::report: break;
    case Stage::all:
      run_discover(ctx);
      run_score(ctx);
      if (config.eval_dir.empty()) log::warn("no eval_dir configured; skipping the eval stage");
      else run_eval(ctx);
      run_stitch(ctx);
      break;
  }
  ctx.run.report_path = emit_report(ctx);
  log::info("report written to " + ctx.run.report_path.string());
  return std::move(ctx.run);
}

}  // namespace ace
