#ifndef ACE_KMEANS_HPP
#define ACE_KMEANS_HPP

#include "ace/errors.hpp"
#include "ace/rng.hpp"
#include "ace/types.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace ace {

struct KMeansOptions {
  int k = 25;
  std::uint64_t seed = 0;
  int max_iters = 300;
  double tol = 1e-8;
  /// Independent k-means++ restarts; the lowest-inertia run wins.
  int n_init = 10;
};

template <typename Scalar>
struct KMeansResult {
  std::vector<int> assignments;  // cluster index per input row
  RowMatrix<Scalar> centroids;   // one row per non-empty cluster
  Scalar inertia = 0;
  /// Inertia after each assignment step of the winning run.
  std::vector<Scalar> inertia_history;
  int iterations = 0;
};

namespace detail {

/// Row order that sorts points lexicographically (stable on ties).
template <typename Derived>
std::vector<Eigen::Index> lexicographic_order(const Eigen::MatrixBase<Derived>& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) < points(b, c)) return true;
      if (points(b, c) < points(a, c)) return false;
    }
    return false;
  });
  return order;
}

template <typename Scalar>
RowMatrix<Scalar> kmeanspp_seeds(const RowMatrix<Scalar>& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  RowMatrix<Scalar> centers(k, x.cols());
  centers.row(0) = x.row(Eigen::Index(rng.below(std::size_t(n))));
  Vector<Scalar> d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = double(d2.sum());
    Eigen::Index pick = 0;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += double(d2(i));
        if (acc > target && d2(i) > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = Eigen::Index(rng.below(std::size_t(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

/// Nearest center per row (lowest index on ties); returns inertia.
template <typename Scalar>
Scalar assign_nearest(const RowMatrix<Scalar>& x, const RowMatrix<Scalar>& centers, std::vector<int>& labels) {
  labels.resize(std::size_t(x.rows()));
  Scalar inertia = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const Scalar d = (x.row(i) - centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = int(c);
      }
    }
    labels[std::size_t(i)] = arg;
    inertia += best;
  }
  return inertia;
}

/// Hartigan's single-point transfers on top of a Lloyd fixed point: move a
/// point to another cluster whenever that lowers the inertia, accounting for
/// the shift of both means. Every transfer strictly lowers the inertia, and a
/// transfer-stable partition is also Lloyd-stable, so this only escapes local
/// optima Lloyd cannot. At most opt.max_iters sweeps.
template <typename Scalar>
void hartigan_refine(const RowMatrix<Scalar>& x, RowMatrix<Scalar>& centers, KMeansResult<Scalar>& r,
                     const KMeansOptions& opt) {
  const Eigen::Index k = centers.rows();
  if (k < 2) return;
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int a : r.assignments) ++counts[std::size_t(a)];
  auto recompute = [&] {
    centers.setZero();
    for (Eigen::Index i = 0; i < x.rows(); ++i) centers.row(r.assignments[std::size_t(i)]) += x.row(i);
    for (Eigen::Index c = 0; c < k; ++c) centers.row(c) /= Scalar(counts[std::size_t(c)]);
  };
  recompute();
  for (int sweep = 0; sweep < opt.max_iters; ++sweep) {
    bool moved = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int a = r.assignments[std::size_t(i)];
      const int na = counts[std::size_t(a)];
      if (na == 1) continue;
      const Scalar removal = Scalar(na) / Scalar(na - 1) * (x.row(i) - centers.row(a)).squaredNorm();
      Scalar best = removal;
      int target = -1;
      for (Eigen::Index b = 0; b < k; ++b) {
        if (b == a) continue;
        const int nb = counts[std::size_t(b)];
        const Scalar added = Scalar(nb) / Scalar(nb + 1) * (x.row(i) - centers.row(b)).squaredNorm();
        // Relative margin keeps rounding noise from cycling points.
        if (added < best && removal - added > Scalar(1e-12) * removal) {
          best = added;
          target = int(b);
        }
      }
      if (target < 0) continue;
      const int nb = counts[std::size_t(target)];
      centers.row(a) = (centers.row(a) * Scalar(na) - x.row(i)) / Scalar(na - 1);
      centers.row(target) = (centers.row(target) * Scalar(nb) + x.row(i)) / Scalar(nb + 1);
      --counts[std::size_t(a)];
      ++counts[std::size_t(target)];
      r.assignments[std::size_t(i)] = target;
      moved = true;
    }
    if (!moved) break;
    recompute();
    Scalar inertia = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      inertia += (x.row(i) - centers.row(r.assignments[std::size_t(i)])).squaredNorm();
    if (inertia < r.inertia_history.back()) r.inertia_history.push_back(inertia);
  }
}

template <typename Scalar>
KMeansResult<Scalar> lloyd(const RowMatrix<Scalar>& x, RowMatrix<Scalar> centers, const KMeansOptions& opt) {
  KMeansResult<Scalar> r;
  for (int iter = 0;; ++iter) {
    r.inertia = assign_nearest(x, centers, r.assignments);
    r.inertia_history.push_back(r.inertia);
    r.iterations = iter + 1;

    // Recompute means; clusters left without members are dropped.
    const Eigen::Index k = centers.rows();
    RowMatrix<Scalar> sums = RowMatrix<Scalar>::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      sums.row(r.assignments[std::size_t(i)]) += x.row(i);
      ++counts[std::size_t(r.assignments[std::size_t(i)])];
    }
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int kept = 0;
    for (Eigen::Index c = 0; c < k; ++c)
      if (counts[std::size_t(c)] > 0) remap[std::size_t(c)] = kept++;
    RowMatrix<Scalar> next(kept, x.cols());
    for (Eigen::Index c = 0; c < k; ++c)
      if (counts[std::size_t(c)] > 0) next.row(remap[std::size_t(c)]) = sums.row(c) / Scalar(counts[std::size_t(c)]);
    for (int& a : r.assignments) a = remap[std::size_t(a)];

    Scalar shift = 0;
    if (kept == k) shift = (next - centers).rowwise().norm().maxCoeff();
    const bool dropped = kept != k;
    centers = std::move(next);
    if ((!dropped && shift <= Scalar(opt.tol)) || iter + 1 >= opt.max_iters) break;
  }
  hartigan_refine(x, centers, r, opt);
  r.centroids = std::move(centers);
  // Final labels/inertia consistent with the returned centroids.
  r.inertia = assign_nearest(x, r.centroids, r.assignments);
  if (r.inertia < r.inertia_history.back()) r.inertia_history.push_back(r.inertia);
  return r;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding, refined by Hartigan transfers. Points are visited in
/// lexicographic order, so the result does not depend on input row order.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, const KMeansOptions& opt) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  require(n > 0, "kmeans: no points");
  require(opt.k >= 1, "kmeans: k must be >= 1");
  if (opt.k > n)
    fail(ErrorKind::invalid_argument,
         "kmeans: k = " + std::to_string(opt.k) + " exceeds the number of points (" + std::to_string(n) + ")");
  require(opt.max_iters >= 1 && opt.n_init >= 1, "kmeans: max_iters and n_init must be >= 1");

  const auto order = detail::lexicographic_order(points);
  RowMatrix<Scalar> sorted(n, points.cols());
  for (Eigen::Index i = 0; i < n; ++i) sorted.row(i) = points.row(order[std::size_t(i)]);

  KMeansResult<Scalar> best;
  bool have = false;
  for (int run = 0; run < opt.n_init; ++run) {
    Rng rng(mix_seed(opt.seed, std::uint64_t(run)));
    auto r = detail::lloyd(sorted, detail::kmeanspp_seeds(sorted, opt.k, rng), opt);
    if (!have || r.inertia < best.inertia) {
      best = std::move(r);
      have = true;
    }
  }
  std::vector<int> original(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) original[std::size_t(order[std::size_t(i)])] = best.assignments[std::size_t(i)];
  best.assignments = std::move(original);
  return best;
}

}  // namespace ace

#endif  // ACE_KMEANS_HPP
