#include "ace/pipeline.hpp"

#include "ace/errors.hpp"
#include "ace/fileio.hpp"

#include <set>

namespace ace {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::config, "config: " + msg); }

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) config_error("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!j.at(key).is_number_integer()) throw std::invalid_argument("expected an integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!j.at(key).is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      const json& v = j.at(key);
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) throw std::invalid_argument("expected a non-negative integer");
    }
    out = j.at(key).get<T>();
  } catch (const std::exception& e) {
    config_error("'" + (where.empty() ? std::string(key) : where + "." + key) + "': " + e.what());
  }
}

void read_path(const json& j, const char* key, fs::path& out, const fs::path& base) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) config_error(std::string("'") + key + "' must be a string path");
  fs::path p = j.at(key).get<std::string>();
  out = (p.empty() || p.is_absolute() || base.empty()) ? p : base / p;
}

}  // namespace

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, "",
             {"model_dir", "class", "discovery_dir", "eval_dir", "random_dir", "cache_dir", "output_dir", "seed",
              "n_discovery_images", "n_random_images", "segmentation", "clustering", "tcav", "eval", "stitch",
              "jobs", "batch_size"});
  PipelineConfig c;
  read_path(j, "model_dir", c.model_dir, base_dir);
  read_path(j, "discovery_dir", c.discovery_dir, base_dir);
  read_path(j, "eval_dir", c.eval_dir, base_dir);
  read_path(j, "random_dir", c.random_dir, base_dir);
  read_path(j, "cache_dir", c.cache_dir, base_dir);
  read_path(j, "output_dir", c.output_dir, base_dir);
  if (j.contains("class")) {
    const auto& v = j.at("class");
    if (v.is_string()) c.class_name = v.get<std::string>();
    else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) c.class_name = std::to_string(v.get<std::int64_t>());
    else config_error("'class' must be a label string or a non-negative index");
  }
  read(j, "seed", c.seed, "");
  read(j, "n_discovery_images", c.n_discovery_images, "");
  read(j, "n_random_images", c.n_random_images, "");
  read(j, "jobs", c.jobs, "");
  read(j, "batch_size", c.batch_size, "");
  if (j.contains("segmentation")) {
    const auto& s = j.at("segmentation");
    check_keys(s, "segmentation", {"resolutions", "compactness", "max_iters", "min_segment_pixels", "pad_gray"});
    read(s, "resolutions", c.resolutions, "segmentation");
    read(s, "compactness", c.compactness, "segmentation");
    read(s, "max_iters", c.slic_max_iters, "segmentation");
    read(s, "min_segment_pixels", c.min_segment_pixels, "segmentation");
    if (s.contains("pad_gray") && !s.at("pad_gray").is_null()) {
      double pad = 0;
      read(s, "pad_gray", pad, "segmentation");
      c.pad_gray = float(pad > 1.0 ? pad / 255.0 : pad);
    }
  }
  if (j.contains("clustering")) {
    const auto& s = j.at("clustering");
    check_keys(s, "clustering", {"k", "n_keep", "max_iters", "n_init"});
    read(s, "k", c.clustering.k, "clustering");
    read(s, "n_keep", c.clustering.n_keep, "clustering");
    read(s, "max_iters", c.clustering.max_iters, "clustering");
    read(s, "n_init", c.clustering.n_init, "clustering");
  }
  if (j.contains("tcav")) {
    const auto& s = j.at("tcav");
    check_keys(s, "tcav", {"n_runs", "alpha", "epsilon", "random_pool_size"});
    read(s, "n_runs", c.tcav.n_runs, "tcav");
    read(s, "alpha", c.tcav.alpha, "tcav");
    read(s, "epsilon", c.tcav.epsilon, "tcav");
    read(s, "random_pool_size", c.tcav.random_pool_size, "tcav");
  }
  if (j.contains("eval")) {
    const auto& s = j.at("eval");
    check_keys(s, "eval", {"k_max", "n_eval_images", "n_random_orders"});
    read(s, "k_max", c.eval.k_max, "eval");
    read(s, "n_eval_images", c.eval.n_eval_images, "eval");
    read(s, "n_random_orders", c.eval.n_random_orders, "eval");
  }
  if (j.contains("stitch")) {
    const auto& s = j.at("stitch");
    check_keys(s, "stitch", {"n_concepts", "n_images", "coverage", "max_attempts", "n_saved"});
    read(s, "n_concepts", c.stitch.n_concepts, "stitch");
    read(s, "n_images", c.stitch.n_images, "stitch");
    read(s, "coverage", c.stitch.coverage, "stitch");
    read(s, "max_attempts", c.stitch.max_attempts, "stitch");
    read(s, "n_saved", c.stitch.n_saved, "stitch");
  }
  c.clustering.n_discovery_images = c.n_discovery_images;
  c.clustering.seed = c.seed;
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    config_error("cannot read " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const PipelineConfig& c) {
  return {{"model_dir", c.model_dir.string()},
          {"class", c.class_name},
          {"discovery_dir", c.discovery_dir.string()},
          {"eval_dir", c.eval_dir.string()},
          {"random_dir", c.random_dir.string()},
          {"cache_dir", c.cache_dir.string()},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed},
          {"n_discovery_images", c.n_discovery_images},
          {"n_random_images", c.n_random_images},
          {"segmentation",
           {{"resolutions", c.resolutions},
            {"compactness", c.compactness},
            {"max_iters", c.slic_max_iters},
            {"min_segment_pixels", c.min_segment_pixels},
            {"pad_gray", c.pad_gray ? json(*c.pad_gray) : json(nullptr)}}},
          {"clustering",
           {{"k", c.clustering.k},
            {"n_keep", c.clustering.n_keep},
            {"max_iters", c.clustering.max_iters},
            {"n_init", c.clustering.n_init}}},
          {"tcav",
           {{"n_runs", c.tcav.n_runs},
            {"alpha", c.tcav.alpha},
            {"epsilon", c.tcav.epsilon},
            {"random_pool_size", c.tcav.random_pool_size}}},
          {"eval", {{"k_max", c.eval.k_max}, {"n_eval_images", c.eval.n_eval_images}, {"n_random_orders", c.eval.n_random_orders}}},
          {"stitch",
           {{"n_concepts", c.stitch.n_concepts},
            {"n_images", c.stitch.n_images},
            {"coverage", c.stitch.coverage},
            {"max_attempts", c.stitch.max_attempts},
            {"n_saved", c.stitch.n_saved}}}};
}

void validate(const PipelineConfig& c) {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) config_error(msg);
  };
  check(!c.model_dir.empty(), "model_dir is required");
  check(!c.class_name.empty(), "class is required");
  check(!c.discovery_dir.empty(), "discovery_dir is required");
  check(!c.cache_dir.empty(), "cache_dir must not be empty");
  check(!c.output_dir.empty(), "output_dir must not be empty");
  check(!c.resolutions.empty(), "segmentation.resolutions must be non-empty");
  for (int r : c.resolutions) check(r >= 1, "segmentation.resolutions entries must be >= 1");
  check(c.compactness > 0, "segmentation.compactness must be > 0");
  check(c.slic_max_iters >= 1, "segmentation.max_iters must be >= 1");
  check(c.min_segment_pixels >= 1, "segmentation.min_segment_pixels must be >= 1");
  check(!c.pad_gray || (*c.pad_gray >= 0 && *c.pad_gray <= 1), "segmentation.pad_gray must be in [0, 255]");
  check(c.n_discovery_images >= 1, "n_discovery_images must be >= 1");
  check(c.n_random_images >= 1, "n_random_images must be >= 1");
  check(c.clustering.k >= 1, "clustering.k must be >= 1");
  check(c.clustering.n_keep >= 1, "clustering.n_keep must be >= 1");
  check(c.clustering.max_iters >= 1, "clustering.max_iters must be >= 1");
  check(c.clustering.n_init >= 1, "clustering.n_init must be >= 1");
  check(c.tcav.n_runs >= 2, "tcav.n_runs must be >= 2");
  check(c.tcav.alpha > 0 && c.tcav.alpha < 1, "tcav.alpha must be in (0, 1)");
  check(c.tcav.random_pool_size >= 10, "tcav.random_pool_size must be >= 10");
  check(c.eval.k_max >= 0, "eval.k_max must be >= 0");
  check(c.eval.n_eval_images >= 1, "eval.n_eval_images must be >= 1");
  check(c.eval.n_random_orders >= 1, "eval.n_random_orders must be >= 1");
  check(c.stitch.n_concepts >= 1, "stitch.n_concepts must be >= 1");
  check(c.stitch.n_images >= 1, "stitch.n_images must be >= 1");
  check(c.stitch.coverage >= 0 && c.stitch.coverage <= 1, "stitch.coverage must be in [0, 1]");
  check(c.stitch.max_attempts >= 1, "stitch.max_attempts must be >= 1");
  check(c.stitch.n_saved >= 0, "stitch.n_saved must be >= 0");
  check(c.jobs >= 1, "jobs must be >= 1");
  check(c.batch_size >= 1, "batch_size must be >= 1");
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::discover: return "discover";
    case Stage::score: return "score";
    case Stage::eval: return "eval";
    case Stage::stitch: return "stitch";
    case Stage::report: return "report";
    case Stage::all: return "all";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::discover, Stage::score, Stage::eval, Stage::stitch, Stage::report, Stage::all})
    if (s == to_string(st)) return st;
  config_error("unknown stage '" + s + "'");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::insufficient_data: return 3;
    case ErrorKind::model_format:
    case ErrorKind::model_integrity: return 4;
    default: return 1;
  }
}

}  // namespace ace
