#pragma once

#include <cstdint>
#include <vector>

#include "cgc/augmentation.hpp"

namespace cgc {

// Number of condensed nodes per class; proportional to training-class sizes
// by largest-remainder apportionment with a floor of one.
struct CondensedLabelPlan {
  std::vector<std::int64_t> sizes;  // length num_classes
  std::int64_t total = 0;           // sum of sizes

  std::int64_t offset(std::int32_t cls) const {
    std::int64_t o = 0;
    for (std::int32_t i = 0; i < cls; ++i) o += sizes[i];
    return o;
  }
};

CondensedLabelPlan plan_labels(const std::vector<std::int64_t>& train_class_counts,
                               std::int64_t n_condensed);

enum class ClusterMethod { Kmeans, Random };

struct ClusterResult {
  std::vector<std::int32_t> assignments;   // subclass index per point
  std::vector<double> objective_history;   // within-cluster SSE per Lloyd pass
  int iterations = 0;
};

// k-means++ seeding with Lloyd refinement (or uniform random assignment).
// Deterministic for a given seed. Empty clusters are repaired by stealing
// the farthest point from the largest cluster.
ClusterResult cluster_class(const DenseMatrix& points, std::int64_t k,
                            ClusterMethod method, std::uint64_t seed);

enum class WeightMode { Softmax, Linear, Uniform };

// The per-class cluster structure over the pool and the aggregated
// condensed-node embeddings.
struct PartitionPlan {
  std::vector<std::int32_t> assignments;  // subclass index per pool row (within its class)
  std::vector<double> weights;            // aggregation weight per pool row
  DenseMatrix embeddings;                 // total x d, rows grouped by ascending class
  std::vector<std::int32_t> labels;       // class per condensed row
  double objective = 0.0;                 // sum over pool rows of ||row - subclass mean||^2
};

// Confidence-calibrated aggregation of pool rows into condensed embeddings.
//   softmax: exp(conf / tau), row-normalized within the subclass
//   linear:  conf, row-normalized (the temperature cancels algebraically)
//   uniform: 1 / |subclass|
PartitionPlan aggregate(const AugmentedPool& pool, const CondensedLabelPlan& plan,
                        const std::vector<std::vector<std::int32_t>>& class_assignments,
                        double tau, WeightMode mode);

// ||X' - P H||^2 where P is the uniform subclass-aggregation matrix implied
// by the assignments (each condensed row against its subclass mean).
double simplified_dm_objective(const DenseMatrix& x_prime,
                               const AugmentedPool& pool,
                               const CondensedLabelPlan& plan,
                               const std::vector<std::vector<std::int32_t>>& class_assignments);

// Within-cluster SSE of the pool under the given partition (uniform
// subclass means as centroids).
double partition_sse(const AugmentedPool& pool, const CondensedLabelPlan& plan,
                     const std::vector<std::vector<std::int32_t>>& class_assignments);

// Pool row indices per class, in pool order.
std::vector<std::vector<std::int64_t>> rows_by_class(const AugmentedPool& pool,
                                                     std::int32_t num_classes);

}  // namespace cgc
