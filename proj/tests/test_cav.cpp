#include "ace/cav.hpp"
#include "ace/fixtures/models.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ace;

namespace {

ActivationMatrix gaussian(int rows, int dim, double shift, Rng& rng) {
  ActivationMatrix m(rows, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = float(rng.normal() + shift);
  return m;
}

}  // namespace

TEST_SUITE("cav") {
  TEST_CASE("logistic regression separates separable data") {
    RowMatrix<double> x(40, 2);
    Eigen::VectorXd y(40);
    Rng rng(1);
    for (int i = 0; i < 40; ++i) {
      y(i) = i % 2;
      x(i, 0) = (i % 2 ? 2.0 : -2.0) + 0.3 * rng.normal();
      x(i, 1) = rng.normal();
    }
    const auto m = fit_logistic(x, y);
    const Eigen::VectorXd z = m.decision(x);
    for (int i = 0; i < 40; ++i) CHECK((z(i) > 0) == (y(i) > 0.5));
    CHECK(m.weights(0) > 0);
  }

  TEST_CASE("a CAV points toward the concept and is unit length") {
    Rng rng(2);
    const ActivationMatrix concept_acts = gaussian(30, 5, 1.0, rng);
    const ActivationMatrix random_acts = gaussian(30, 5, -1.0, rng);
    const Cav cav = train_cav(concept_acts, random_acts, 3);
    CHECK(cav.direction.norm() == doctest::Approx(1.0));
    CHECK(cav.direction.sum() > 0);
    CHECK(cav.accuracy >= 0.9);
    CHECK(train_cav(concept_acts, random_acts, 3).direction == cav.direction);
  }

  TEST_CASE("fewer than ten examples per side is insufficient data") {
    Rng rng(3);
    const ActivationMatrix a = gaussian(9, 3, 0, rng), b = gaussian(20, 3, 0, rng);
    CHECK(test::error_kind_of([&] { train_cav(a, b, 0); }) == ErrorKind::insufficient_data);
    CHECK(test::error_kind_of([&] { train_cav(b, a, 0); }) == ErrorKind::insufficient_data);
  }

  TEST_CASE("identical sides fall back to a unit direction") {
    const ActivationMatrix a = ActivationMatrix::Constant(12, 3, 1.0f);
    const Cav cav = train_cav(a, a, 4);
    CHECK(cav.direction.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("TCAV analytic oracle on a linear head") {
    int positive = 0;
    CHECK(oracle::tcav_oracle_mismatches(100, &positive) == 0);
    CHECK(positive > 10);
    CHECK(positive < 90);
  }

  TEST_CASE("single-case t-test against reference values") {
    const std::vector<double> controls = {12, 15, 11, 14, 13, 16, 12, 14};
    // t = (x - mean) / (sd * sqrt(1 + 1/m)), two-sided with m - 1 dof (scipy.stats.t)
    const TTest t = single_case_t_test(19.0, controls);
    CHECK(t.t == doctest::Approx(3.147326).epsilon(1e-5));
    CHECK(t.dof == 7.0);
    CHECK(t.p_value == doctest::Approx(0.016212).epsilon(1e-4));
    CHECK(single_case_t_test(9.0, controls).t < 0);
    const std::vector<double> same = {0.5, 0.5, 0.5};
    CHECK(single_case_t_test(0.5, same).p_value == 1.0);
    CHECK(single_case_t_test(1.0, same).p_value == 0.0);
    CHECK(test::error_kind_of([&] { single_case_t_test(1.0, std::vector<double>{1.0}); }) ==
          ErrorKind::invalid_argument);
  }

  TEST_CASE("importance test detects a real concept") {
    // Linear head; class logit 0 grows along +x0. Concept sits at +x0 and
    // random activations carry no x0 signal, so no random pseudo-concept can
    // move the logit (the situation of an object part absent from random
    // images).
    RowMatrix<float> w = RowMatrix<float>::Zero(2, 4);
    w(0, 0) = 1.0f;
    const SplitModel model = fixtures::make_split_model(fixtures::linear_model(w, {0, 0}));
    Rng rng(5);
    ActivationMatrix concept_acts = gaussian(40, 4, 0.0, rng);
    concept_acts.col(0).array() += 3.0f;
    const ActivationMatrix class_acts = gaussian(30, 4, 0.0, rng);
    std::vector<ActivationMatrix> pools;
    for (int p = 0; p < 21; ++p) {
      pools.push_back(gaussian(40, 4, 0.0, rng));
      pools.back().col(0).setZero();
    }
    const TcavResult r = importance_test(model, {7, 40, 90, &concept_acts}, class_acts, 0, pools, {});
    CHECK(r.concept_id == 7);
    CHECK(r.per_run_scores.size() == 20);
    CHECK(r.random_scores.size() == 21);  // one per pseudo-concept
    CHECK(r.score == doctest::Approx(1.0));
    CHECK(r.passed);
    CHECK(r.p_value < 0.01);
    // An explicitly shared baseline gives the same result.
    const RandomBaseline base = random_baseline(model, class_acts, 0, pools, {}, 2);
    CHECK(base.pseudo_concept_scores == r.random_scores);
    CHECK(importance_test(model, {7, 40, 90, &concept_acts}, class_acts, 0, pools, base, {}).p_value == r.p_value);

    // n_runs + 1 pools are needed.
    std::vector<ActivationMatrix> few(pools.begin(), pools.begin() + 20);
    CHECK(test::error_kind_of([&] { importance_test(model, {7, 40, 90, &concept_acts}, class_acts, 0, few, {}); }) ==
          ErrorKind::insufficient_data);
  }

  TEST_CASE("null concepts rarely pass") {
    const SplitModel model = fixtures::make_split_model(fixtures::mlp_model(6, 12, 2, 3));
    int passed = 0;
    for (int trial = 0; trial < 10; ++trial) passed += oracle::null_trial_passes(model, trial, 6);
    CHECK(passed <= 2);
  }

  TEST_CASE("ranking: passed first, then score, size and id") {
    std::vector<TcavResult> rs(4);
    rs[0] = {.concept_id = 0, .score = 0.9, .passed = false, .concept_size = 40};
    rs[1] = {.concept_id = 1, .score = 0.7, .passed = true, .concept_size = 40};
    rs[2] = {.concept_id = 2, .score = 0.8, .passed = true, .concept_size = 20};
    rs[3] = {.concept_id = 3, .score = 0.8, .passed = true, .concept_size = 30};
    const auto ranked = rank_concepts(rs);
    std::vector<int> ids;
    for (const auto& r : ranked) ids.push_back(r.concept_id);
    CHECK(ids == std::vector<int>{3, 2, 1, 0});
    CHECK(ranked[0].rank == 0);
    CHECK(ranked[3].rank == 3);
    const auto back = tcav_result_from_json(to_json(ranked[1]));
    CHECK(back.concept_id == 2);
    CHECK(back.rank == 1);
  }
}
