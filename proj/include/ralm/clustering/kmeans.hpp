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

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ralm/numeric/dense.hpp"

namespace ralm::cluster {

struct KMeansOptions {
  int max_iters = 100;
  /// Stop once no centroid moves farther than this (Euclidean).
  double tol = 1e-6;
  std::uint64_t seed = 1;
};

struct KMeansModel {
  int k = 0;
  DenseMatrix centroids;                // k x h
  double inertia = 0.0;                 // sum of squared distances to nearest centroid
  int iterations_run = 0;
  std::vector<double> inertia_history;  // after seeding, then after every Lloyd iteration
  std::vector<int> assignments;         // per input point
};

/// k-means++ seeding followed by Lloyd iterations. The effective cluster
/// count is min(k, n, number of distinct points). Clusters left empty are
/// reseeded to the point farthest from its centroid.
KMeansModel kmeans_fit(const DenseMatrix& points, int k, const KMeansOptions& options = {});

/// Index of the nearest centroid (Euclidean); ties go to the lowest index.
template <typename Derived>
int assign(const Eigen::MatrixBase<Derived>& point, const DenseMatrix& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (centroids.row(j) - point.reshaped().transpose().template cast<double>()).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

template <typename Derived>
int assign(const Eigen::MatrixBase<Derived>& point, const KMeansModel& model) {
  return assign(point, model.centroids);
}

/// Seeds representation: k cluster centroids in look-alike space.
struct SeedsRepresentation {
  std::string candidate_id;
  DenseMatrix centroids;  // k x h
  int k = 0;
  std::int64_t version_ts = 0;
  std::size_t seeds_used = 0;
  std::size_t seeds_missing = 0;
};

using EmbeddingLookup = std::function<std::optional<RowVector>(const std::string&)>;

/// Fetches seed embeddings, clusters them and packages the centroids.
/// Unknown seeds are skipped and counted; throws NoSeedsError if none resolve.
SeedsRepresentation seeds_to_representation(const std::string& candidate_id,
                                            std::span<const std::string> seed_user_ids,
                                            const EmbeddingLookup& lookup, int k,
                                            std::int64_t version_ts,
                                            const KMeansOptions& options = {});

}  // namespace ralm::cluster
