#ifndef ACE_DISCOVERY_HPP
#define ACE_DISCOVERY_HPP

#include "ace/kmeans.hpp"
#include "ace/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ace {

/// Provenance of one segment; what a concept member points back to.
struct SegmentRef {
  int image_id = 0;
  int resolution_level = 0;
  int segment_label = 0;
  BBox bbox;

  friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
};

struct ClusteringConfig {
  int k = 25;
  int n_keep = 40;
  int max_iters = 300;
  std::uint64_t seed = 0;
  int n_discovery_images = 50;
  int n_init = 10;
};

enum class RetentionRule { high_frequency, medium, high_popularity };

const char* to_string(RetentionRule rule);
RetentionRule retention_rule_from_string(const std::string& s);

/// Cluster statistics the retention rules read (taken before pruning).
struct ClusterStats {
  int size = 0;
  int n_source_images = 0;
};

/// First matching rule, or nothing when the cluster is discarded:
///   high_frequency:  images > n/2
///   medium:          images > n/4 and size > n
///   high_popularity: size > 2n
/// All comparisons are strict.
std::optional<RetentionRule> retention_rule(const ClusterStats& stats, int n_discovery_images);

struct Concept {
  int concept_id = 0;
  std::vector<SegmentRef> members;         // pruned members, nearest first
  std::vector<int> member_indices;         // rows in the discovery segment list
  ActivationMatrix member_activations;     // one row per member
  ActivationVector centroid;               // mean over the full, unpruned cluster
  int size = 0;                            // pruned member count
  int n_source_images = 0;                 // distinct images among pruned members
  int cluster_size = 0;                    // before pruning
  int cluster_source_images = 0;           // before pruning
  RetentionRule retention_rule = RetentionRule::high_frequency;
};

struct DiscoveryResult {
  int class_index = 0;
  std::vector<Concept> concepts;
  int discarded_cluster_count = 0;
  ClusteringConfig config;
};

/// Indices (into the rows of `members`) of the `n_keep` rows nearest to
/// `centroid`, nearest first; ties keep input order.
template <typename Derived, typename CDerived>
std::vector<int> prune_cluster(const Eigen::MatrixBase<Derived>& members, const Eigen::MatrixBase<CDerived>& centroid,
                               int n_keep) {
  require(members.rows() > 0, "prune_cluster: empty cluster");
  require(n_keep >= 1, "prune_cluster: n_keep must be >= 1");
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> c = centroid.derived().reshaped().transpose().template cast<Scalar>();
  const Vector<Scalar> d2 = (members.rowwise() - c).rowwise().squaredNorm();
  std::vector<int> idx(static_cast<std::size_t>(members.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return d2(a) < d2(b); });
  if (int(idx.size()) > n_keep) idx.resize(std::size_t(n_keep));
  return idx;
}

/// A k-means cluster ready for the retention filter.
struct ClusterCandidate {
  std::vector<int> member_indices;  // all members, pre-pruning
  std::vector<int> kept_indices;    // pruned members, nearest first
  ActivationVector centroid;
  ClusterStats stats;               // pre-pruning
};

struct FilterOutcome {
  std::vector<Concept> concepts;
  int discarded = 0;
};

/// Applies the retention rules; kept clusters become Concepts (ids assigned
/// later by the caller).
FilterOutcome filter_clusters(std::span<const ClusterCandidate> clusters, std::span<const SegmentRef> segments,
                              const ActivationMatrix& activations, int n_discovery_images);

/// k-means -> per-cluster pruning -> retention filter. Concepts are ordered
/// by size (descending) and numbered in that order.
DiscoveryResult discover_concepts(std::span<const SegmentRef> segments, const ActivationMatrix& activations,
                                  const ClusteringConfig& config, int class_index = 0);

nlohmann::json to_json(const SegmentRef& ref);
SegmentRef segment_ref_from_json(const nlohmann::json& j);
/// Member activations are not serialized; they are restored from the
/// segment activation matrix by segment index.
nlohmann::json to_json(const DiscoveryResult& result);
DiscoveryResult discovery_from_json(const nlohmann::json& j, const ActivationMatrix& segment_activations);

}  // namespace ace

#endif  // ACE_DISCOVERY_HPP
