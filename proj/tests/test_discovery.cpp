#include "ace/discovery.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace ace;

namespace {

struct Corpus {
  std::vector<SegmentRef> segments;
  ActivationMatrix activations;
  std::vector<int> blob;  // -1 for noise
};

// Three tight blobs of 60 points (from 30 images each) plus 50 uniform noise points.
Corpus blobs_with_noise() {
  Corpus c;
  Rng rng(17);
  const float centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 60; ++i) {
      c.segments.push_back({i % 30, 0, b * 60 + i, {0, 0, 1, 1}});
      c.blob.push_back(b);
    }
  for (int i = 0; i < 50; ++i) {
    c.segments.push_back({30 + i % 20, 0, 1000 + i, {0, 0, 1, 1}});
    c.blob.push_back(-1);
  }
  c.activations.resize(Eigen::Index(c.segments.size()), 2);
  for (std::size_t i = 0; i < c.segments.size(); ++i) {
    const Eigen::Index r = Eigen::Index(i);
    if (c.blob[i] >= 0) {
      c.activations(r, 0) = centers[c.blob[i]][0] + float(0.2 * rng.normal());
      c.activations(r, 1) = centers[c.blob[i]][1] + float(0.2 * rng.normal());
    } else {
      c.activations(r, 0) = float(-20 + 40 * rng.uniform());
      c.activations(r, 1) = float(-20 + 40 * rng.uniform());
    }
  }
  return c;
}

}  // namespace

TEST_SUITE("discovery") {
  TEST_CASE("retention truth table") {
    for (const auto& row : oracle::retention_truth_table()) {
      CAPTURE(row.name);
      CHECK(retention_rule(row.stats, 50) == row.expected);
    }
  }

  TEST_CASE("pruning keeps exactly the nearest members") {
    Rng rng(4);
    RowMatrix<double> m(30, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    const Eigen::RowVector3d centroid(0.1, -0.2, 0.3);
    const auto kept = prune_cluster(m, centroid, 12);
    std::vector<std::pair<double, int>> all;
    for (int i = 0; i < 30; ++i) all.emplace_back((m.row(i) - centroid).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    REQUIRE(kept.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(kept[std::size_t(i)] == all[std::size_t(i)].second);
    CHECK(prune_cluster(m, centroid, 100).size() == 30);
  }

  TEST_CASE("planted blobs are recovered as pure concepts") {
    const Corpus c = blobs_with_noise();
    ClusteringConfig cfg;
    cfg.k = 5;
    cfg.n_discovery_images = 50;
    const auto r = discover_concepts(c.segments, c.activations, cfg);
    REQUIRE(r.concepts.size() == 3);
    std::set<int> blobs_found;
    for (const auto& concept_ : r.concepts) {
      std::map<int, int> counts;
      for (int idx : concept_.member_indices) ++counts[c.blob[std::size_t(idx)]];
      const auto best = std::max_element(counts.begin(), counts.end(),
                                         [](auto& a, auto& b) { return a.second < b.second; });
      CHECK(best->first >= 0);
      CHECK(double(best->second) / concept_.size >= 0.9);
      blobs_found.insert(best->first);
      CHECK(concept_.size <= cfg.n_keep);
      CHECK(concept_.member_activations.rows() == concept_.size);
      CHECK(retention_rule({concept_.cluster_size, concept_.cluster_source_images}, 50).has_value());
    }
    CHECK(blobs_found.size() == 3);
    // Concepts are ordered by size and numbered in that order.
    for (std::size_t i = 0; i < r.concepts.size(); ++i) CHECK(r.concepts[i].concept_id == int(i));
  }

  TEST_CASE("identical activations give one concept") {
    std::vector<SegmentRef> segs;
    for (int i = 0; i < 60; ++i) segs.push_back({i % 40, 0, i, {0, 0, 1, 1}});
    const ActivationMatrix acts = ActivationMatrix::Constant(60, 4, 0.5f);
    const auto r = discover_concepts(segs, acts, ClusteringConfig{});
    CHECK(r.concepts.size() == 1);
  }

  TEST_CASE("k points from one image give no concepts") {
    std::vector<SegmentRef> segs;
    Rng rng(1);
    ActivationMatrix acts(25, 3);
    for (int i = 0; i < 25; ++i) segs.push_back({0, 0, i, {0, 0, 1, 1}});
    for (Eigen::Index i = 0; i < acts.size(); ++i) acts.data()[i] = float(rng.normal());
    const auto r = discover_concepts(segs, acts, ClusteringConfig{});
    CHECK(r.concepts.empty());
    CHECK(r.discarded_cluster_count == 25);
  }

  TEST_CASE("too few segments is insufficient data") {
    std::vector<SegmentRef> segs(5);
    const ActivationMatrix acts = ActivationMatrix::Zero(5, 2);
    CHECK(test::error_kind_of([&] { discover_concepts(segs, acts, ClusteringConfig{}); }) ==
          ErrorKind::insufficient_data);
  }

  TEST_CASE("json round trip restores member activations") {
    const Corpus c = blobs_with_noise();
    ClusteringConfig cfg;
    cfg.k = 5;
    const auto r = discover_concepts(c.segments, c.activations, cfg);
    const auto back = discovery_from_json(to_json(r), c.activations);
    REQUIRE(back.concepts.size() == r.concepts.size());
    for (std::size_t i = 0; i < r.concepts.size(); ++i) {
      CHECK(back.concepts[i].members == r.concepts[i].members);
      CHECK(back.concepts[i].member_activations == r.concepts[i].member_activations);
      CHECK(back.concepts[i].retention_rule == r.concepts[i].retention_rule);
    }
    CHECK(retention_rule_from_string("medium") == RetentionRule::medium);
  }
}
