#include "ace/cav.hpp"

#include "ace/errors.hpp"
#include "ace/parallel.hpp"
#include "ace/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ace {

namespace {

struct Split {
  std::vector<std::size_t> train, test;
};

// Each side gets its own generator keyed by (seed, side size), so swapping
// concept and random sides of equal size reproduces the same split.
Split split_side(std::size_t n, std::uint64_t seed, double holdout) {
  Rng rng(mix_seed(seed, n));
  const auto perm = rng.permutation(n);
  const auto n_test = std::size_t(std::floor(double(n) * holdout));
  Split s;
  s.test.assign(perm.begin(), perm.begin() + std::ptrdiff_t(n_test));
  s.train.assign(perm.begin() + std::ptrdiff_t(n_test), perm.end());
  return s;
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double sample_variance(std::span<const double> v, double m) {
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace

Cav train_cav(const ActivationMatrix& concept_activations, const ActivationMatrix& random_activations,
              std::uint64_t seed, const CavOptions& options) {
  const Eigen::Index nc = concept_activations.rows(), nr = random_activations.rows();
  if (nc < kMinCavExamples || nr < kMinCavExamples)
    fail(ErrorKind::insufficient_data, "train_cav: need at least " + std::to_string(kMinCavExamples) +
                                           " examples per side, got " + std::to_string(nc) + " concept and " +
                                           std::to_string(nr) + " random");
  require(concept_activations.cols() == random_activations.cols(), "train_cav: dimension mismatch");
  const Eigen::Index dim = concept_activations.cols();

  const Split cs = split_side(std::size_t(nc), seed, options.holdout_fraction);
  const Split rs = split_side(std::size_t(nr), seed, options.holdout_fraction);

  auto stack = [&](const std::vector<std::size_t>& ci, const std::vector<std::size_t>& ri, RowMatrix<double>& x,
                   Eigen::VectorXd& y) {
    x.resize(Eigen::Index(ci.size() + ri.size()), dim);
    y.resize(x.rows());
    Eigen::Index row = 0;
    for (auto i : ci) {
      x.row(row) = concept_activations.row(Eigen::Index(i)).cast<double>();
      y(row++) = 1.0;
    }
    for (auto i : ri) {
      x.row(row) = random_activations.row(Eigen::Index(i)).cast<double>();
      y(row++) = 0.0;
    }
  };
  RowMatrix<double> x_train, x_test;
  Eigen::VectorXd y_train, y_test;
  stack(cs.train, rs.train, x_train, y_train);
  stack(cs.test, rs.test, x_test, y_test);

  const auto fit = fit_logistic(x_train, y_train, options.classifier);

  Cav cav;
  const double norm = fit.weights.norm();
  if (norm > 1e-12 && std::isfinite(norm)) {
    cav.direction = fit.weights / norm;
  } else {
    // No separating signal at all: fall back to a seeded random direction.
    Rng rng(mix_seed(seed, 0xcafe));
    cav.direction.resize(dim);
    for (Eigen::Index d = 0; d < dim; ++d) cav.direction(d) = rng.normal();
    cav.direction.normalize();
  }
  if (x_test.rows() > 0) {
    const Eigen::VectorXd z = fit.decision(x_test);
    int correct = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) correct += (z(i) > 0) == (y_test(i) > 0.5);
    cav.accuracy = double(correct) / double(z.size());
  }
  return cav;
}

double tcav_score(const SplitModel& model, const Cav& cav, const ActivationMatrix& class_activations,
                  int class_index, double epsilon) {
  require(class_activations.rows() > 0, "tcav_score: no class activations");
  const Eigen::VectorXd dd = directional_derivatives(model, class_activations, cav.direction, class_index, epsilon);
  // A derivative of exactly zero does not count as an increase.
  return double((dd.array() > 0.0).count()) / double(dd.size());
}

TTest single_case_t_test(double x, std::span<const double> controls) {
  require(controls.size() >= 2, "single_case_t_test: need at least two controls");
  const double m = double(controls.size());
  const double mc = mean(controls);
  const double sd = std::sqrt(sample_variance(controls, mc));
  TTest r;
  r.dof = m - 1.0;
  if (sd == 0.0) {
    r.p_value = x == mc ? 1.0 : 0.0;
    r.t = x == mc ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), x - mc);
    return r;
  }
  r.t = (x - mc) / (sd * std::sqrt(1.0 + 1.0 / m));
  const boost::math::students_t dist(r.dof);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

namespace {

void require_pools(std::size_t pools, const ImportanceOptions& options) {
  require(options.n_runs >= 2, "importance_test: n_runs must be >= 2");
  if (pools < std::size_t(options.n_runs) + 1)
    fail(ErrorKind::insufficient_data, "importance_test: " + std::to_string(pools) + " random pools for " +
                                           std::to_string(options.n_runs) + " runs (need n_runs + 1)");
}

}  // namespace

RandomBaseline random_baseline(const SplitModel& model, const ActivationMatrix& class_activations, int class_index,
                               std::span<const ActivationMatrix> random_pools, const ImportanceOptions& options,
                               int jobs) {
  require_pools(random_pools.size(), options);
  const std::size_t n = std::size_t(options.n_runs);
  RandomBaseline b;
  b.pseudo_concept_scores.assign(n + 1, 0.0);
  parallel_for(n + 1, jobs, [&](std::size_t j) {
    double sum = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == j) continue;
      const Cav cav = train_cav(random_pools[j], random_pools[i],
                                mix_seed(mix_seed(options.seed, 0xba5e0000 + j), i), options.cav);
      sum += tcav_score(model, cav, class_activations, class_index, options.epsilon);
    }
    b.pseudo_concept_scores[j] = sum / double(n);
  });
  return b;
}

TcavResult importance_test(const SplitModel& model, const ConceptSample& concept_sample,
                           const ActivationMatrix& class_activations, int class_index,
                           std::span<const ActivationMatrix> random_pools, const RandomBaseline& baseline,
                           const ImportanceOptions& options) {
  require(concept_sample.activations != nullptr, "importance_test: concept activations missing");
  require_pools(random_pools.size(), options);
  require(baseline.pseudo_concept_scores.size() >= 2, "importance_test: baseline needs two pseudo-concepts");

  TcavResult r;
  r.concept_id = concept_sample.concept_id;
  r.class_index = class_index;
  r.concept_size = concept_sample.size;
  r.cluster_size = concept_sample.cluster_size;
  for (int run = 0; run < options.n_runs; ++run) {
    const auto i = std::size_t(run);
    Cav cav = train_cav(*concept_sample.activations, random_pools[i], mix_seed(options.seed, i), options.cav);
    cav.concept_id = concept_sample.concept_id;
    cav.run_index = run;
    r.per_run_scores.push_back(tcav_score(model, cav, class_activations, class_index, options.epsilon));
    r.cav_accuracies.push_back(cav.accuracy);
  }
  r.random_scores = baseline.pseudo_concept_scores;
  r.score = mean(r.per_run_scores);
  r.p_value = single_case_t_test(r.score, r.random_scores).p_value;
  r.passed = r.p_value < options.alpha;
  return r;
}

TcavResult importance_test(const SplitModel& model, const ConceptSample& concept_sample,
                           const ActivationMatrix& class_activations, int class_index,
                           std::span<const ActivationMatrix> random_pools, const ImportanceOptions& options) {
  const RandomBaseline baseline = random_baseline(model, class_activations, class_index, random_pools, options);
  return importance_test(model, concept_sample, class_activations, class_index, random_pools, baseline, options);
}

std::vector<TcavResult> rank_concepts(std::vector<TcavResult> results) {
  std::stable_sort(results.begin(), results.end(), [](const TcavResult& a, const TcavResult& b) {
    if (a.passed != b.passed) return a.passed;
    if (a.score != b.score) return a.score > b.score;
    if (a.concept_size != b.concept_size) return a.concept_size > b.concept_size;
    if (a.cluster_size != b.cluster_size) return a.cluster_size > b.cluster_size;
    return a.concept_id < b.concept_id;
  });
  for (std::size_t k = 0; k < results.size(); ++k) results[k].rank = int(k);
  return results;
}

nlohmann::json to_json(const TcavResult& r) {
  return {{"concept_id", r.concept_id},
          {"class_index", r.class_index},
          {"score", r.score},
          {"per_run_scores", r.per_run_scores},
          {"random_scores", r.random_scores},
          {"cav_accuracies", r.cav_accuracies},
          {"p_value", r.p_value},
          {"passed", r.passed},
          {"concept_size", r.concept_size},
          {"cluster_size", r.cluster_size},
          {"rank", r.rank}};
}

TcavResult tcav_result_from_json(const nlohmann::json& j) {
  TcavResult r;
  r.concept_id = j.at("concept_id").get<int>();
  r.class_index = j.at("class_index").get<int>();
  r.score = j.at("score").get<double>();
  r.per_run_scores = j.at("per_run_scores").get<std::vector<double>>();
  r.random_scores = j.at("random_scores").get<std::vector<double>>();
  r.cav_accuracies = j.value("cav_accuracies", std::vector<double>());
  r.p_value = j.at("p_value").get<double>();
  r.passed = j.at("passed").get<bool>();
  r.concept_size = j.at("concept_size").get<int>();
  r.cluster_size = j.value("cluster_size", 0);
  r.rank = j.value("rank", -1);
  return r;
}

}  // namespace ace
