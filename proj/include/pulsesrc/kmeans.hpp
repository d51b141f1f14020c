#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pulsesrc/error.hpp"

namespace pulsesrc {

struct KMeansResult {
  Eigen::MatrixXd centroids;     // n x k
  std::vector<int> assignment;   // per point
  double wcss = 0.0;
  int iterations = 0;
  bool converged = false;        // assignments stabilized before the cap
  int reseeded = 0;              // empty clusters refilled from the farthest point
  int degenerate = 0;            // empty clusters left as duplicates (all points coincide)
  std::vector<double> wcss_history;  // after every assignment step
};

namespace detail {

// Uniform in [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double assign_points(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                            std::vector<int>& assignment, std::vector<double>& dist) {
  double wcss = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.cols(); ++j) {
      const double d = (points.col(i) - centroids.col(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
    dist[static_cast<std::size_t>(i)] = best_d;
    wcss += best_d;
  }
  return wcss;
}

}  // namespace detail

/// k-means++ seeding: first center uniform, later ones with probability
/// proportional to squared distance from the nearest chosen center. When every
/// remaining point coincides with a chosen center the lowest-index point is
/// taken (duplicate centers).
inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n_pts = points.cols();
  Eigen::MatrixXd centers(points.rows(), k);
  auto first = static_cast<Eigen::Index>(detail::uniform01(rng) * static_cast<double>(n_pts));
  first = std::min(first, n_pts - 1);
  centers.col(0) = points.col(first);
  std::vector<double> d2(static_cast<std::size_t>(n_pts));
  for (Eigen::Index i = 0; i < n_pts; ++i)
    d2[static_cast<std::size_t>(i)] = (points.col(i) - centers.col(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = detail::uniform01(rng) * total;
      double acc = 0.0;
      pick = n_pts - 1;
      for (Eigen::Index i = 0; i < n_pts; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[static_cast<std::size_t>(pick)] == 0.0 && pick > 0) --pick;
    }
    centers.col(c) = points.col(pick);
    for (Eigen::Index i = 0; i < n_pts; ++i) {
      const double d = (points.col(i) - centers.col(c)).squaredNorm();
      auto& cur = d2[static_cast<std::size_t>(i)];
      if (d < cur) cur = d;
    }
  }
  return centers;
}

/// Lloyd iteration from k-means++ seeds on the columns of `points`.
/// Stops when an assignment step changes nothing (the returned centroids are
/// then the means of the returned assignment, a Lloyd fixed point) or after
/// `max_iter` steps. Empty clusters are re-seeded from the point farthest
/// from its centroid.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                           int max_iter = 300) {
  const Eigen::Index n_pts = points.cols();
  if (k < 1) throw PreconditionError("kmeans: k must be >= 1");
  if (n_pts < k)
    throw InsufficientSamples("kmeans: " + std::to_string(n_pts) + " points for k = " +
                              std::to_string(k));

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centroids = kmeanspp_init(points, k, rng);
  res.assignment.assign(static_cast<std::size_t>(n_pts), -1);
  std::vector<double> dist(static_cast<std::size_t>(n_pts));
  std::vector<int> next(static_cast<std::size_t>(n_pts));

  res.wcss = detail::assign_points(points, res.centroids, res.assignment, dist);
  res.wcss_history.push_back(res.wcss);

  for (int it = 1; it <= max_iter; ++it) {
    res.iterations = it;
    // Update step.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n_pts; ++i) {
      const int c = res.assignment[static_cast<std::size_t>(i)];
      sums.col(c) += points.col(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    bool reseeded = false;
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        res.centroids.col(c) = sums.col(c) / counts[static_cast<std::size_t>(c)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = 0.0;
      for (Eigen::Index i = 0; i < n_pts; ++i) {
        const int owner = res.assignment[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] < 2) continue;
        const double d = (points.col(i) - res.centroids.col(owner)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) {
        ++res.degenerate;
        continue;
      }
      --counts[static_cast<std::size_t>(res.assignment[static_cast<std::size_t>(far)])];
      res.assignment[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      res.centroids.col(c) = points.col(far);
      ++res.reseeded;
      reseeded = true;
    }

    // Assignment step.
    const double wcss = detail::assign_points(points, res.centroids, next, dist);
    assert(wcss <= res.wcss * (1.0 + 1e-12) + 1e-12);
    res.wcss_history.push_back(wcss);
    res.wcss = wcss;
    const bool changed = next != res.assignment;
    res.assignment.swap(next);
    if (!changed && !reseeded) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// Lloyd objective of `centroids` under nearest-centroid assignment.
inline double wcss_of(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
  std::vector<int> a(static_cast<std::size_t>(points.cols()));
  std::vector<double> d(a.size());
  return detail::assign_points(points, centroids, a, d);
}

}  // namespace pulsesrc
