#ifndef ACE_PIPELINE_HPP
#define ACE_PIPELINE_HPP

#include "ace/discovery.hpp"
#include "ace/errors.hpp"
#include "ace/segmentation.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ace {

struct TcavConfig {
  int n_runs = 20;
  double alpha = 0.05;
  double epsilon = 0.0;            // <= 0: per-activation default
  int random_pool_size = 40;       // segments per random counterexample pool
};

struct EvalConfig {
  int k_max = 5;
  int n_eval_images = 50;
  int n_random_orders = 20;        // permutations averaged for the random order
};

struct StitchConfig {
  int n_concepts = 4;
  int n_images = 100;
  double coverage = 0.5;
  int max_attempts = 50;
  int n_saved = 10;                // canvases written out as examples
};

/// Everything a pipeline run depends on. Defaults are the paper's values.
struct PipelineConfig {
  std::filesystem::path model_dir;
  /// Class label or decimal class index.
  std::string class_name;
  std::filesystem::path discovery_dir;
  std::filesystem::path eval_dir;
  /// Images for random counterexamples; empty = the other class folders of
  /// discovery_dir.
  std::filesystem::path random_dir;
  std::filesystem::path cache_dir = "ace_cache";
  std::filesystem::path output_dir = "ace_out";
  std::uint64_t seed = 0;
  int n_discovery_images = 50;
  int n_random_images = 50;
  std::vector<int> resolutions{15, 50, 80};
  double compactness = 10.0;
  int slic_max_iters = 10;
  int min_segment_pixels = kMinSegmentPixels;
  /// Overrides the model's pad gray when set (values > 1 are /255).
  std::optional<float> pad_gray;
  ClusteringConfig clustering;
  TcavConfig tcav;
  EvalConfig eval;
  StitchConfig stitch;
  int jobs = 1;
  int batch_size = 8;
};

/// Strict parse: unknown keys and ill-typed values are config errors.
/// Relative paths are resolved against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);
/// Checks value ranges; throws ErrorKind::config.
void validate(const PipelineConfig& config);

enum class Stage { discover, score, eval, stitch, report, all };
const char* to_string(Stage stage);
Stage stage_from_string(const std::string& s);

/// Per-stage bookkeeping for one invocation.
struct StageRun {
  std::string key;        // cache key (hex)
  bool cache_hit = false;
  double seconds = 0.0;   // compute time recorded when the stage was built
};

struct PipelineRun {
  std::map<std::string, StageRun> stages;
  std::filesystem::path report_path;
};

/// Runs `stage` (and, for Stage::all, every stage in order), reusing cached
/// stage outputs whose key matches, then re-emits the report.
PipelineRun run_pipeline(const PipelineConfig& config, Stage stage);

/// Exit code for an error kind: 2 invalid config, 3 insufficient data,
/// 4 model error, 1 anything else.
int exit_code_for(ErrorKind kind);

/// The report JSON schema published as docs/schema.json.
const nlohmann::json& report_schema();

}  // namespace ace

#endif  // ACE_PIPELINE_HPP
