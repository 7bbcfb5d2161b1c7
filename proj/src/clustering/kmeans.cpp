// Copyright 2026 The RALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ralm/clustering/kmeans.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ralm/errors.hpp"

namespace ralm::cluster {

namespace {

std::size_t count_distinct_rows(const DenseMatrix& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

struct Assignment {
  std::vector<int> labels;
  std::vector<double> sq_dist;
  double inertia = 0.0;
};

Assignment assign_all(const DenseMatrix& points, const DenseMatrix& centroids) {
  Assignment a;
  const auto n = static_cast<std::size_t>(points.rows());
  a.labels.resize(n);
  a.sq_dist.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = points.row(static_cast<Eigen::Index>(i));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = (centroids.row(j) - row).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    a.labels[i] = best;
    a.sq_dist[i] = best_d;
    a.inertia += best_d;
  }
  return a;
}

DenseMatrix kmeanspp_seed(const DenseMatrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  DenseMatrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    // k never exceeds the distinct point count, so some d2 is positive.
    std::discrete_distribution<Eigen::Index> pick(d2.begin(), d2.end());
    centroids.row(c) = points.row(pick(rng));
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

/// Means of the current labels; empty clusters take over the point farthest
/// from its own centroid (never the last member of a cluster).
DenseMatrix update_centroids(const DenseMatrix& points, std::vector<int>& labels,
                             const DenseMatrix& previous) {
  const Eigen::Index k = previous.rows();
  for (Eigen::Index guard = 0; guard <= k; ++guard) {
    DenseMatrix sums = DenseMatrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      sums.row(labels[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    DenseMatrix centroids = previous;
    int empty = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      } else if (empty < 0) {
        empty = static_cast<int>(j);
      }
    }
    if (empty < 0) return centroids;
    std::size_t far = labels.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
      const double d = (points.row(static_cast<Eigen::Index>(i)) - centroids.row(labels[i])).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == labels.size()) return centroids;
    labels[far] = empty;
  }
  throw Error("kmeans: empty-cluster repair did not settle");
}

}  // namespace

KMeansModel kmeans_fit(const DenseMatrix& points, int k, const KMeansOptions& options) {
  if (points.rows() == 0) throw ArgumentError("kmeans_fit: empty input");
  if (k < 1) throw ArgumentError("kmeans_fit: k must be >= 1");
  if (!points.allFinite()) throw ArgumentError("kmeans_fit: non-finite points");
  const std::size_t distinct = count_distinct_rows(points);
  const int eff_k = static_cast<int>(
      std::min<std::size_t>({static_cast<std::size_t>(k), static_cast<std::size_t>(points.rows()), distinct}));

  std::mt19937_64 rng(options.seed);
  KMeansModel model;
  model.k = eff_k;
  model.centroids = kmeanspp_seed(points, eff_k, rng);
  Assignment current = assign_all(points, model.centroids);
  model.inertia_history.push_back(current.inertia);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    std::vector<int> labels = current.labels;
    DenseMatrix next = update_centroids(points, labels, model.centroids);
    const double shift = (next - model.centroids).rowwise().norm().maxCoeff();
    Assignment reassigned = assign_all(points, next);
    if (reassigned.inertia > current.inertia) break;  // rounding at convergence
    model.centroids = std::move(next);
    current = std::move(reassigned);
    model.inertia_history.push_back(current.inertia);
    ++model.iterations_run;
    if (shift < options.tol) break;
  }

  // Final assignment may strand a centroid; move it onto the worst-served point.
  for (int guard = 0; guard < eff_k * static_cast<int>(points.rows()); ++guard) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(eff_k), 0);
    for (int l : current.labels) ++counts[static_cast<std::size_t>(l)];
    auto it = std::find(counts.begin(), counts.end(), 0);
    if (it == counts.end()) break;
    const auto far = static_cast<Eigen::Index>(
        std::max_element(current.sq_dist.begin(), current.sq_dist.end()) - current.sq_dist.begin());
    if (current.sq_dist[static_cast<std::size_t>(far)] <= 0.0) break;
    model.centroids.row(it - counts.begin()) = points.row(far);
    current = assign_all(points, model.centroids);
    model.inertia_history.push_back(current.inertia);
  }

  model.inertia = current.inertia;
  model.assignments = std::move(current.labels);
  return model;
}

SeedsRepresentation seeds_to_representation(const std::string& candidate_id,
                                            std::span<const std::string> seed_user_ids,
                                            const EmbeddingLookup& lookup, int k,
                                            std::int64_t version_ts, const KMeansOptions& options) {
  std::vector<RowVector> rows;
  rows.reserve(seed_user_ids.size());
  SeedsRepresentation rep;
  rep.candidate_id = candidate_id;
  rep.version_ts = version_ts;
  for (const auto& id : seed_user_ids) {
    if (auto e = lookup(id)) {
      rows.push_back(std::move(*e));
    } else {
      ++rep.seeds_missing;
    }
  }
  if (rows.empty()) throw NoSeedsError("candidate " + candidate_id + ": no seed has an embedding");
  DenseMatrix points(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) points.row(static_cast<Eigen::Index>(i)) = rows[i];
  const KMeansModel model = kmeans_fit(points, k, options);
  rep.centroids = model.centroids;
  rep.k = model.k;
  rep.seeds_used = rows.size();
  return rep;
}

}  // namespace ralm::cluster
