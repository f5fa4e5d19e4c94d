#ifndef ACE_LOGISTIC_HPP
#define ACE_LOGISTIC_HPP

#include "ace/types.hpp"

#include <cmath>

namespace ace {

struct LogisticOptions {
  int epochs = 500;
  double l2 = 1e-3;
  /// Step size; <= 0 picks 1 / L for the loss's Lipschitz bound L.
  double learning_rate = 0.0;
};

template <typename Scalar>
struct LogisticModel {
  Vector<Scalar> weights;
  Scalar bias = 0;

  template <typename Derived>
  Vector<Scalar> decision(const Eigen::MatrixBase<Derived>& x) const {
    return (x * weights).array() + bias;
  }
};

/// Full-batch gradient descent on mean logistic loss + (l2/2)|w|^2, starting
/// from zero. Labels are 0/1.
template <typename Derived, typename LDerived>
LogisticModel<typename Derived::Scalar> fit_logistic(const Eigen::MatrixBase<Derived>& x,
                                                     const Eigen::MatrixBase<LDerived>& labels,
                                                     const LogisticOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows();
  LogisticModel<Scalar> model;
  model.weights = Vector<Scalar>::Zero(x.cols());
  if (n == 0) return model;

  // Mean squared row norm (+1 for the bias column) bounds the largest
  // eigenvalue of the data covariance, so 1/L is a safe step.
  Scalar step = Scalar(opt.learning_rate);
  if (step <= 0) {
    const Scalar lipschitz = Scalar(0.25) * (x.rowwise().squaredNorm().mean() + Scalar(1)) + Scalar(opt.l2);
    step = Scalar(1) / lipschitz;
  }
  const Vector<Scalar> y = labels.template cast<Scalar>();
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const Vector<Scalar> z = model.decision(x);
    const Vector<Scalar> residual = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix() - y;
    const Vector<Scalar> grad_w = x.transpose() * residual / Scalar(n) + Scalar(opt.l2) * model.weights;
    const Scalar grad_b = residual.mean();
    model.weights -= step * grad_w;
    model.bias -= step * grad_b;
  }
  return model;
}

}  // namespace ace

#endif  // ACE_LOGISTIC_HPP
