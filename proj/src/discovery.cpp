#include "ace/discovery.hpp"

#include <map>
#include <set>

namespace ace {

const char* to_string(RetentionRule rule) {
  switch (rule) {
    case RetentionRule::high_frequency: return "high_frequency";
    case RetentionRule::medium: return "medium";
    case RetentionRule::high_popularity: return "high_popularity";
  }
  return "unknown";
}

RetentionRule retention_rule_from_string(const std::string& s) {
  if (s == "high_frequency") return RetentionRule::high_frequency;
  if (s == "medium") return RetentionRule::medium;
  if (s == "high_popularity") return RetentionRule::high_popularity;
  fail(ErrorKind::invalid_argument, "unknown retention rule '" + s + "'");
}

std::optional<RetentionRule> retention_rule(const ClusterStats& stats, int n_discovery_images) {
  // Integer forms of images > n/2, images > n/4, size > n, size > 2n.
  const long long n = n_discovery_images;
  const long long images = stats.n_source_images, size = stats.size;
  if (2 * images > n) return RetentionRule::high_frequency;
  if (4 * images > n && size > n) return RetentionRule::medium;
  if (size > 2 * n) return RetentionRule::high_popularity;
  return std::nullopt;
}

namespace {

int distinct_images(std::span<const SegmentRef> segments, const std::vector<int>& indices) {
  std::set<int> ids;
  for (int i : indices) ids.insert(segments[std::size_t(i)].image_id);
  return int(ids.size());
}

}  // namespace

FilterOutcome filter_clusters(std::span<const ClusterCandidate> clusters, std::span<const SegmentRef> segments,
                              const ActivationMatrix& activations, int n_discovery_images) {
  FilterOutcome out;
  for (const auto& cluster : clusters) {
    const auto rule = retention_rule(cluster.stats, n_discovery_images);
    if (!rule) {
      ++out.discarded;
      continue;
    }
    Concept c;
    c.retention_rule = *rule;
    c.centroid = cluster.centroid;
    c.cluster_size = cluster.stats.size;
    c.cluster_source_images = cluster.stats.n_source_images;
    c.member_indices = cluster.kept_indices;
    c.size = int(cluster.kept_indices.size());
    c.n_source_images = distinct_images(segments, cluster.kept_indices);
    c.member_activations.resize(c.size, activations.cols());
    for (int m = 0; m < c.size; ++m) {
      const int idx = cluster.kept_indices[std::size_t(m)];
      c.members.push_back(segments[std::size_t(idx)]);
      c.member_activations.row(m) = activations.row(idx);
    }
    out.concepts.push_back(std::move(c));
  }
  return out;
}

DiscoveryResult discover_concepts(std::span<const SegmentRef> segments, const ActivationMatrix& activations,
                                  const ClusteringConfig& config, int class_index) {
  require(Eigen::Index(segments.size()) == activations.rows(), "discover_concepts: segments and activations differ in length");
  require(config.k >= 1 && config.n_keep >= 1, "discover_concepts: k and n_keep must be >= 1");
  if (Eigen::Index(segments.size()) < config.k)
    fail(ErrorKind::insufficient_data, "discover_concepts: " + std::to_string(segments.size()) +
                                           " segments for k = " + std::to_string(config.k) + " (short by " +
                                           std::to_string(config.k - int(segments.size())) + ")");

  const RowMatrix<double> points = activations.cast<double>();
  const auto km = kmeans(points, {config.k, config.seed, config.max_iters, 1e-8, config.n_init});

  std::vector<ClusterCandidate> candidates(static_cast<std::size_t>(km.centroids.rows()));
  for (std::size_t i = 0; i < km.assignments.size(); ++i)
    candidates[std::size_t(km.assignments[i])].member_indices.push_back(int(i));
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto& cand = candidates[c];
    RowMatrix<double> members(Eigen::Index(cand.member_indices.size()), points.cols());
    for (std::size_t m = 0; m < cand.member_indices.size(); ++m) members.row(Eigen::Index(m)) = points.row(cand.member_indices[m]);
    cand.centroid = km.centroids.row(Eigen::Index(c)).transpose().cast<float>();
    for (int local : prune_cluster(members, km.centroids.row(Eigen::Index(c)), config.n_keep))
      cand.kept_indices.push_back(cand.member_indices[std::size_t(local)]);
    cand.stats = {int(cand.member_indices.size()), distinct_images(segments, cand.member_indices)};
  }

  auto filtered = filter_clusters(candidates, segments, activations, config.n_discovery_images);
  auto& concepts = filtered.concepts;
  std::stable_sort(concepts.begin(), concepts.end(), [](const Concept& a, const Concept& b) {
    if (a.size != b.size) return a.size > b.size;
    if (a.cluster_size != b.cluster_size) return a.cluster_size > b.cluster_size;
    for (Eigen::Index d = 0; d < a.centroid.size(); ++d)
      if (a.centroid(d) != b.centroid(d)) return a.centroid(d) < b.centroid(d);
    return false;
  });
  for (std::size_t i = 0; i < concepts.size(); ++i) concepts[i].concept_id = int(i);

  DiscoveryResult result;
  result.class_index = class_index;
  result.concepts = std::move(concepts);
  result.discarded_cluster_count = filtered.discarded;
  result.config = config;
  return result;
}

nlohmann::json to_json(const SegmentRef& ref) {
  return {{"image_id", ref.image_id},
          {"resolution_level", ref.resolution_level},
          {"segment_label", ref.segment_label},
          {"bbox", {ref.bbox.x, ref.bbox.y, ref.bbox.w, ref.bbox.h}}};
}

SegmentRef segment_ref_from_json(const nlohmann::json& j) {
  SegmentRef r;
  r.image_id = j.at("image_id").get<int>();
  r.resolution_level = j.at("resolution_level").get<int>();
  r.segment_label = j.at("segment_label").get<int>();
  const auto& b = j.at("bbox");
  r.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  return r;
}

namespace {

nlohmann::json floats_json(const Eigen::Ref<const Eigen::RowVectorXf>& v) {
  return std::vector<float>(v.data(), v.data() + v.size());
}

}  // namespace

nlohmann::json to_json(const DiscoveryResult& result) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& c : result.concepts) {
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t m = 0; m < c.members.size(); ++m) {
      auto rec = to_json(c.members[m]);
      rec["segment_index"] = c.member_indices[m];
      members.push_back(std::move(rec));
    }
    concepts.push_back({{"concept_id", c.concept_id},
                        {"size", c.size},
                        {"n_source_images", c.n_source_images},
                        {"cluster_size", c.cluster_size},
                        {"cluster_source_images", c.cluster_source_images},
                        {"retention_rule", to_string(c.retention_rule)},
                        {"centroid", floats_json(c.centroid.transpose())},
                        {"members", std::move(members)}});
  }
  const auto& cfg = result.config;
  return {{"class_index", result.class_index},
          {"discarded_cluster_count", result.discarded_cluster_count},
          {"config",
           {{"k", cfg.k},
            {"n_keep", cfg.n_keep},
            {"max_iters", cfg.max_iters},
            {"seed", cfg.seed},
            {"n_discovery_images", cfg.n_discovery_images},
            {"n_init", cfg.n_init}}},
          {"concepts", std::move(concepts)}};
}

DiscoveryResult discovery_from_json(const nlohmann::json& j, const ActivationMatrix& segment_activations) {
  DiscoveryResult r;
  r.class_index = j.at("class_index").get<int>();
  r.discarded_cluster_count = j.at("discarded_cluster_count").get<int>();
  const auto& cfg = j.at("config");
  r.config.k = cfg.at("k").get<int>();
  r.config.n_keep = cfg.at("n_keep").get<int>();
  r.config.max_iters = cfg.at("max_iters").get<int>();
  r.config.seed = cfg.at("seed").get<std::uint64_t>();
  r.config.n_discovery_images = cfg.at("n_discovery_images").get<int>();
  r.config.n_init = cfg.at("n_init").get<int>();
  for (const auto& cj : j.at("concepts")) {
    Concept c;
    c.concept_id = cj.at("concept_id").get<int>();
    c.size = cj.at("size").get<int>();
    c.n_source_images = cj.at("n_source_images").get<int>();
    c.cluster_size = cj.at("cluster_size").get<int>();
    c.cluster_source_images = cj.at("cluster_source_images").get<int>();
    c.retention_rule = retention_rule_from_string(cj.at("retention_rule").get<std::string>());
    const auto centroid = cj.at("centroid").get<std::vector<float>>();
    c.centroid = Eigen::Map<const ActivationVector>(centroid.data(), Eigen::Index(centroid.size()));
    const auto& members = cj.at("members");
    c.member_activations.resize(Eigen::Index(members.size()), c.centroid.size());
    for (std::size_t m = 0; m < members.size(); ++m) {
      c.members.push_back(segment_ref_from_json(members[m]));
      const int idx = members[m].at("segment_index").get<int>();
      if (idx < 0 || idx >= segment_activations.rows() || segment_activations.cols() != c.centroid.size())
        fail(ErrorKind::io, "discovery record does not match the activation cache");
      c.member_indices.push_back(idx);
      c.member_activations.row(Eigen::Index(m)) = segment_activations.row(idx);
    }
    r.concepts.push_back(std::move(c));
  }
  return r;
}

}  // namespace ace
