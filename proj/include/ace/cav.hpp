#ifndef ACE_CAV_HPP
#define ACE_CAV_HPP

#include "ace/logistic.hpp"
#include "ace/model.hpp"
#include "ace/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace ace {

/// Fewest examples per side train_cav accepts.
inline constexpr int kMinCavExamples = 10;

struct Cav {
  Eigen::VectorXd direction;  // unit norm, points toward the concept side
  double accuracy = 0.0;      // on the held-out third
  int concept_id = -1;
  int run_index = 0;
};

struct CavOptions {
  LogisticOptions classifier;
  double holdout_fraction = 1.0 / 3.0;
};

/// Linear classifier separating concept activations (label 1) from random
/// counterexamples (label 0). Rows are samples.
Cav train_cav(const ActivationMatrix& concept_activations, const ActivationMatrix& random_activations,
              std::uint64_t seed, const CavOptions& options = {});

/// Fraction of `class_activations` whose class logit strictly increases along
/// the CAV direction. epsilon <= 0 uses the per-activation default.
double tcav_score(const SplitModel& model, const Cav& cav, const ActivationMatrix& class_activations,
                  int class_index, double epsilon = 0.0);

struct TTest {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Two-sided test of whether one case `x` differs from a control sample
/// (Crawford & Howell, 1998): t = (x - mean) / (sd * sqrt(1 + 1/m)) with
/// m - 1 degrees of freedom. Valid when x and the controls are exchangeable
/// under the null. Needs at least two controls.
TTest single_case_t_test(double x, std::span<const double> controls);

struct TcavResult {
  int concept_id = -1;
  int class_index = 0;
  double score = 0.0;
  std::vector<double> per_run_scores;
  std::vector<double> random_scores;
  std::vector<double> cav_accuracies;
  double p_value = 1.0;
  bool passed = false;
  int concept_size = 0;
  int cluster_size = 0;
  int rank = -1;
};

struct ImportanceOptions {
  int n_runs = 20;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  CavOptions cav;
};

struct ConceptSample {
  int concept_id = -1;
  int size = 0;
  int cluster_size = 0;
  const ActivationMatrix* activations = nullptr;
};

/// Null distribution of the importance test. A concept's runs all share its
/// one fixed sample, so its mean score carries that sample's chance offset;
/// the comparison must therefore be against random *pseudo-concepts* built
/// the same way. With n = n_runs and n + 1 pools, pseudo-concept j is pool j
/// scored against the n other pools, exactly as the concept is scored against
/// pools 0..n-1.
struct RandomBaseline {
  /// Mean TCAV score of each pseudo-concept (n_runs + 1 entries).
  std::vector<double> pseudo_concept_scores;
};

/// Trains the n_runs * (n_runs + 1) random-vs-random CAVs of the baseline.
/// Needs at least n_runs + 1 pools; the baseline depends only on the pools,
/// class activations and seed, so one baseline serves every concept.
RandomBaseline random_baseline(const SplitModel& model, const ActivationMatrix& class_activations, int class_index,
                               std::span<const ActivationMatrix> random_pools, const ImportanceOptions& options,
                               int jobs = 1);

/// Concept-vs-random CAVs on pools 0..n_runs-1 (per_run_scores); the mean
/// score is compared with the baseline's pseudo-concept scores
/// (random_scores) by single_case_t_test.
TcavResult importance_test(const SplitModel& model, const ConceptSample& concept_sample,
                           const ActivationMatrix& class_activations, int class_index,
                           std::span<const ActivationMatrix> random_pools, const RandomBaseline& baseline,
                           const ImportanceOptions& options);

/// As above, computing the baseline from `options.seed`.
TcavResult importance_test(const SplitModel& model, const ConceptSample& concept_sample,
                           const ActivationMatrix& class_activations, int class_index,
                           std::span<const ActivationMatrix> random_pools, const ImportanceOptions& options);

/// Passed results by score (desc), then size (desc); failed results after.
/// Assigns `rank` (0-based) in the returned order.
std::vector<TcavResult> rank_concepts(std::vector<TcavResult> results);

nlohmann::json to_json(const TcavResult& r);
TcavResult tcav_result_from_json(const nlohmann::json& j);

}  // namespace ace

#endif  // ACE_CAV_HPP
