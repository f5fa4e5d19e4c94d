// Batch command line for the ACE pipeline.

#include "ace/errors.hpp"
#include "ace/log.hpp"
#include "ace/pipeline.hpp"
#include "ace/runtime.hpp"

#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      ace::fail(ace::ErrorKind::config, "config: --resolutions expects comma-separated integers, got '" + text + "'");
    }
  }
  return out;
}

/// Applies "dotted.key=value" assignments on top of the config's JSON form;
/// unknown keys are then rejected by the strict parser like in a file.
ace::PipelineConfig apply_overrides(const ace::PipelineConfig& config, const std::vector<std::string>& overrides) {
  nlohmann::json j = ace::to_json(config);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      ace::fail(ace::ErrorKind::config, "config: --set expects key=value, got '" + item + "'");
    nlohmann::json* node = &j;
    std::stringstream path(item.substr(0, eq));
    std::string part;
    while (std::getline(path, part, '.')) {
      if (!node->is_object()) ace::fail(ace::ErrorKind::config, "config: '" + item.substr(0, eq) + "' is not a key");
      node = &(*node)[part];
    }
    const std::string text = item.substr(eq + 1);
    *node = nlohmann::json::parse(text, nullptr, false);
    if (node->is_discarded()) *node = text;
  }
  return ace::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  ace::tune_allocator();
  CLI::App app{"ACE: automatic concept-based explanations for an image classifier"};

  std::string config_path, model_dir, class_name, discovery_dir, eval_dir, resolutions, cache_dir, out_dir;
  std::string stage = "all", log_level = "info";
  std::vector<std::string> overrides;
  int k = 0, n_keep = 0, n_runs = 0, jobs = 0;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  auto* o_model = app.add_option("--model-dir", model_dir, "split model directory (featurizer.onnx, head.onnx, metadata.json)");
  auto* o_class = app.add_option("--class", class_name, "target class label or index");
  auto* o_disc = app.add_option("--discovery-dir", discovery_dir, "folder with one subfolder of images per class");
  auto* o_eval = app.add_option("--eval-dir", eval_dir, "evaluation images (same layout)");
  auto* o_res = app.add_option("--resolutions", resolutions, "comma-separated SLIC segment counts, e.g. 15,50,80");
  auto* o_k = app.add_option("--k", k, "number of k-means clusters");
  auto* o_keep = app.add_option("--n-keep", n_keep, "segments kept per concept");
  auto* o_runs = app.add_option("--n-runs", n_runs, "CAV runs per concept");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_cache = app.add_option("--cache-dir", cache_dir, "cache directory");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_jobs = app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", overrides,
                 "override any config key, e.g. --set tcav.alpha=0.01 (value parsed as JSON, else taken as a string)");
  app.add_option("--stage", stage, "stage to run")
      ->check(CLI::IsMember({"discover", "score", "eval", "stitch", "report", "all"}))
      ->capture_default_str();
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  using ace::log::Level;
  const std::map<std::string, Level> levels = {{"debug", Level::debug}, {"info", Level::info}, {"warn", Level::warn},
                                               {"error", Level::error}, {"off", Level::off}};
  ace::log::set_level(levels.at(log_level));

  try {
    ace::PipelineConfig config = config_path.empty() ? ace::PipelineConfig{} : ace::load_config(config_path);
    if (o_model->count()) config.model_dir = model_dir;
    if (o_class->count()) config.class_name = class_name;
    if (o_disc->count()) config.discovery_dir = discovery_dir;
    if (o_eval->count()) config.eval_dir = eval_dir;
    if (o_res->count()) config.resolutions = parse_int_list(resolutions);
    if (o_k->count()) config.clustering.k = k;
    if (o_keep->count()) config.clustering.n_keep = n_keep;
    if (o_runs->count()) config.tcav.n_runs = n_runs;
    if (o_seed->count()) config.seed = seed;
    if (o_cache->count()) config.cache_dir = cache_dir;
    if (o_out->count()) config.output_dir = out_dir;
    if (o_jobs->count()) config.jobs = jobs;
    config.clustering.seed = config.seed;
    if (!overrides.empty()) config = apply_overrides(config, overrides);

    const auto run = ace::run_pipeline(config, ace::stage_from_string(stage));
    std::cout << run.report_path.string() << "\n";
    return 0;
  } catch (const ace::Error& e) {
    std::cerr << "ace: error (" << ace::to_string(e.kind()) << "): " << e.what() << "\n";
    return ace::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ace: error: " << e.what() << "\n";
    return 1;
  }
}
