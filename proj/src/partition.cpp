#include "cgc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cgc/rng.hpp"

namespace cgc {

CondensedLabelPlan plan_labels(const std::vector<std::int64_t>& train_class_counts,
                               std::int64_t n_condensed) {
  const auto c = static_cast<std::int64_t>(train_class_counts.size());
  if (n_condensed < c) {
    throw Error(ErrorKind::InvalidArgument,
                "condensed size " + std::to_string(n_condensed) +
                    " is below the class count " + std::to_string(c));
  }
  std::int64_t total_train = 0;
  for (std::int64_t v : train_class_counts) {
    if (v <= 0) {
      throw Error(ErrorKind::InvalidArgument, "every class needs training nodes");
    }
    total_train += v;
  }

  CondensedLabelPlan plan;
  plan.sizes.assign(static_cast<std::size_t>(c), 0);
  plan.total = n_condensed;

  std::vector<double> remainder(static_cast<std::size_t>(c));
  std::int64_t assigned = 0;
  for (std::int64_t i = 0; i < c; ++i) {
    const double quota = static_cast<double>(n_condensed) *
                         static_cast<double>(train_class_counts[i]) /
                         static_cast<double>(total_train);
    plan.sizes[i] = static_cast<std::int64_t>(std::floor(quota));
    remainder[i] = quota - std::floor(quota);
    assigned += plan.sizes[i];
  }
  // largest remainder first; ties to the lower class index
  std::vector<std::int64_t> order(static_cast<std::size_t>(c));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::int64_t i = 0; assigned < n_condensed; ++i) {
    plan.sizes[order[i % c]]++;
    assigned++;
  }
  // floor of one per class, funded by the currently largest class
  for (std::int64_t i = 0; i < c; ++i) {
    while (plan.sizes[i] == 0) {
      std::int64_t donor = std::max_element(plan.sizes.begin(), plan.sizes.end()) -
                           plan.sizes.begin();
      plan.sizes[donor]--;
      plan.sizes[i]++;
    }
  }
  return plan;
}

namespace {

double sq_dist(const DenseMatrix& pts, std::int64_t r, const Eigen::RowVectorXd& c) {
  return (pts.row(r) - c).squaredNorm();
}

double sse(const DenseMatrix& pts, const std::vector<std::int32_t>& assign,
           const DenseMatrix& centroids) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    s += (pts.row(r) - centroids.row(assign[r])).squaredNorm();
  }
  return s;
}

DenseMatrix recompute_centroids(const DenseMatrix& pts,
                                const std::vector<std::int32_t>& assign,
                                std::int64_t k) {
  DenseMatrix centroids = DenseMatrix::Zero(k, pts.cols());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    centroids.row(assign[r]) += pts.row(r);
    counts[assign[r]]++;
  }
  for (std::int64_t j = 0; j < k; ++j) {
    if (counts[j] > 0) centroids.row(j) /= static_cast<double>(counts[j]);
  }
  return centroids;
}

// every cluster must end non-empty: repeatedly move the farthest point of
// the largest cluster into an empty one
void repair_empty(const DenseMatrix& pts, std::vector<std::int32_t>& assign,
                  std::int64_t k) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (std::int32_t a : assign) counts[a]++;
  for (std::int64_t j = 0; j < k; ++j) {
    while (counts[j] == 0) {
      std::int64_t largest = std::max_element(counts.begin(), counts.end()) -
                             counts.begin();
      Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(pts.cols());
      for (Eigen::Index r = 0; r < pts.rows(); ++r) {
        if (assign[r] == largest) center += pts.row(r);
      }
      center /= static_cast<double>(counts[largest]);
      std::int64_t far_row = -1;
      double far_d = -1.0;
      for (Eigen::Index r = 0; r < pts.rows(); ++r) {
        if (assign[r] != largest) continue;
        double dd = sq_dist(pts, r, center);
        if (dd > far_d) {
          far_d = dd;
          far_row = r;
        }
      }
      assign[far_row] = static_cast<std::int32_t>(j);
      counts[largest]--;
      counts[j]++;
    }
  }
}

std::vector<std::int32_t> kmeanspp_seed_assign(const DenseMatrix& pts,
                                               std::int64_t k, Rng& rng,
                                               DenseMatrix& centroids) {
  const Eigen::Index m = pts.rows();
  centroids.resize(k, pts.cols());
  std::vector<double> d2(static_cast<std::size_t>(m),
                         std::numeric_limits<double>::infinity());
  centroids.row(0) = pts.row(static_cast<Eigen::Index>(rng.uniform_index(m)));
  for (std::int64_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
      d2[r] = std::min(d2[r], sq_dist(pts, r, centroids.row(j - 1)));
      total += d2[r];
    }
    Eigen::Index pick;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (Eigen::Index r = 0; r < m; ++r) {
        acc += d2[r];
        if (acc >= target) {
          pick = r;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(m));
    }
    centroids.row(j) = pts.row(pick);
  }
  std::vector<std::int32_t> assign(static_cast<std::size_t>(m), 0);
  for (Eigen::Index r = 0; r < m; ++r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < k; ++j) {
      double dd = sq_dist(pts, r, centroids.row(j));
      if (dd < best) {
        best = dd;
        assign[r] = static_cast<std::int32_t>(j);
      }
    }
  }
  return assign;
}

}  // namespace

ClusterResult cluster_class(const DenseMatrix& points, std::int64_t k,
                            ClusterMethod method, std::uint64_t seed) {
  const Eigen::Index m = points.rows();
  if (m == 0 || k < 1) {
    throw Error(ErrorKind::InvalidArgument, "cluster_class: empty input");
  }
  if (k > m) {
    throw Error(ErrorKind::InvalidArgument,
                "cluster_class: " + std::to_string(k) + " clusters exceed " +
                    std::to_string(m) +
                    " points; raise the augmentation percentage p or lower the "
                    "condensation ratio");
  }
  Rng rng(seed);
  ClusterResult res;

  if (method == ClusterMethod::Random) {
    std::vector<std::int64_t> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    res.assignments.assign(static_cast<std::size_t>(m), 0);
    for (std::int64_t j = 0; j < k; ++j) {
      res.assignments[perm[j]] = static_cast<std::int32_t>(j);
    }
    for (Eigen::Index i = k; i < m; ++i) {
      res.assignments[perm[i]] = static_cast<std::int32_t>(rng.uniform_index(k));
    }
    DenseMatrix centroids = recompute_centroids(points, res.assignments, k);
    res.objective_history.push_back(sse(points, res.assignments, centroids));
    return res;
  }

  constexpr int kMaxIterations = 100;
  constexpr double kRelTol = 1e-6;

  DenseMatrix centroids;
  res.assignments = kmeanspp_seed_assign(points, k, rng, centroids);
  repair_empty(points, res.assignments, k);
  centroids = recompute_centroids(points, res.assignments, k);
  double prev = sse(points, res.assignments, centroids);
  res.objective_history.push_back(prev);

  for (int it = 0; it < kMaxIterations; ++it) {
    bool changed = false;
    for (Eigen::Index r = 0; r < m; ++r) {
      double best = std::numeric_limits<double>::infinity();
      std::int32_t arg = res.assignments[r];
      for (std::int64_t j = 0; j < k; ++j) {
        double dd = sq_dist(points, r, centroids.row(j));
        if (dd < best) {
          best = dd;
          arg = static_cast<std::int32_t>(j);
        }
      }
      if (arg != res.assignments[r]) {
        res.assignments[r] = arg;
        changed = true;
      }
    }
    repair_empty(points, res.assignments, k);
    centroids = recompute_centroids(points, res.assignments, k);
    const double cur = sse(points, res.assignments, centroids);
    res.objective_history.push_back(cur);
    res.iterations = it + 1;
    if (!changed) break;
    if (std::abs(prev - cur) < kRelTol * std::max(prev, 1e-300)) break;
    prev = cur;
  }
  return res;
}

std::vector<std::vector<std::int64_t>> rows_by_class(const AugmentedPool& pool,
                                                     std::int32_t num_classes) {
  std::vector<std::vector<std::int64_t>> rows(static_cast<std::size_t>(num_classes));
  for (std::int64_t r = 0; r < pool.size(); ++r) {
    rows[pool.labels[r]].push_back(r);
  }
  return rows;
}

namespace {

// uniform subclass means, rows grouped by ascending class then subclass
DenseMatrix subclass_means(const AugmentedPool& pool, const CondensedLabelPlan& plan,
                           const std::vector<std::vector<std::int32_t>>& class_assignments,
                           const std::vector<std::vector<std::int64_t>>& rows) {
  const auto c = static_cast<std::int32_t>(plan.sizes.size());
  DenseMatrix means = DenseMatrix::Zero(plan.total, pool.embeddings.cols());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(plan.total), 0);
  std::int64_t offset = 0;
  for (std::int32_t i = 0; i < c; ++i) {
    const auto& members = rows[i];
    const auto& assign = class_assignments[i];
    if (assign.size() != members.size()) {
      throw Error(ErrorKind::SizeMismatch,
                  "assignment length mismatch for class " + std::to_string(i));
    }
    for (std::size_t t = 0; t < members.size(); ++t) {
      if (assign[t] < 0 || assign[t] >= plan.sizes[i]) {
        throw Error(ErrorKind::InvalidArgument, "subclass index out of range");
      }
      means.row(offset + assign[t]) += pool.embeddings.row(members[t]);
      counts[offset + assign[t]]++;
    }
    offset += plan.sizes[i];
  }
  for (std::int64_t j = 0; j < plan.total; ++j) {
    if (counts[j] == 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "empty subclass " + std::to_string(j));
    }
    means.row(j) /= static_cast<double>(counts[j]);
  }
  return means;
}

}  // namespace

PartitionPlan aggregate(const AugmentedPool& pool, const CondensedLabelPlan& plan,
                        const std::vector<std::vector<std::int32_t>>& class_assignments,
                        double tau, WeightMode mode) {
  if (mode == WeightMode::Softmax && !(tau > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "softmax weighting needs tau > 0");
  }
  const auto c = static_cast<std::int32_t>(plan.sizes.size());
  const auto rows = rows_by_class(pool, c);

  PartitionPlan out;
  out.assignments.assign(static_cast<std::size_t>(pool.size()), -1);
  out.weights.assign(static_cast<std::size_t>(pool.size()), 0.0);
  out.embeddings = DenseMatrix::Zero(plan.total, pool.embeddings.cols());
  out.labels.resize(static_cast<std::size_t>(plan.total));

  std::int64_t offset = 0;
  for (std::int32_t i = 0; i < c; ++i) {
    const auto& members = rows[i];
    const auto& assign = class_assignments[i];
    if (assign.size() != members.size()) {
      throw Error(ErrorKind::SizeMismatch,
                  "assignment length mismatch for class " + std::to_string(i));
    }
    // bucket members per subclass
    std::vector<std::vector<std::int64_t>> buckets(
        static_cast<std::size_t>(plan.sizes[i]));
    for (std::size_t t = 0; t < members.size(); ++t) {
      if (assign[t] < 0 || assign[t] >= plan.sizes[i]) {
        throw Error(ErrorKind::InvalidArgument, "subclass index out of range");
      }
      buckets[assign[t]].push_back(members[t]);
      out.assignments[members[t]] = assign[t];
    }
    for (std::int64_t j = 0; j < plan.sizes[i]; ++j) {
      const auto& bucket = buckets[j];
      if (bucket.empty()) {
        throw Error(ErrorKind::InvalidArgument,
                    "empty subclass " + std::to_string(j) + " in class " +
                        std::to_string(i));
      }
      std::vector<double> w(bucket.size(), 0.0);
      switch (mode) {
        case WeightMode::Uniform: {
          std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(bucket.size()));
          break;
        }
        case WeightMode::Softmax: {
          double mx = -std::numeric_limits<double>::infinity();
          for (std::int64_t r : bucket) {
            mx = std::max(mx, pool.confidence[r] / tau);
          }
          double sum = 0.0;
          for (std::size_t t = 0; t < bucket.size(); ++t) {
            w[t] = std::exp(pool.confidence[bucket[t]] / tau - mx);
            sum += w[t];
          }
          for (double& v : w) v /= sum;
          break;
        }
        case WeightMode::Linear: {
          // weights conf/tau row-normalized: tau cancels, so it is not applied
          double sum = 0.0;
          for (std::int64_t r : bucket) sum += pool.confidence[r];
          if (sum > 0.0) {
            for (std::size_t t = 0; t < bucket.size(); ++t) {
              w[t] = pool.confidence[bucket[t]] / sum;
            }
          } else {
            std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(bucket.size()));
          }
          break;
        }
      }
      const std::int64_t row = offset + j;
      for (std::size_t t = 0; t < bucket.size(); ++t) {
        out.embeddings.row(row) += w[t] * pool.embeddings.row(bucket[t]);
        out.weights[bucket[t]] = w[t];
      }
      out.labels[row] = i;
    }
    offset += plan.sizes[i];
  }
  out.objective = partition_sse(pool, plan, class_assignments);
  return out;
}

double simplified_dm_objective(const DenseMatrix& x_prime, const AugmentedPool& pool,
                               const CondensedLabelPlan& plan,
                               const std::vector<std::vector<std::int32_t>>& class_assignments) {
  if (x_prime.rows() != plan.total || x_prime.cols() != pool.embeddings.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "simplified_dm_objective: bad shape");
  }
  const auto rows = rows_by_class(pool, static_cast<std::int32_t>(plan.sizes.size()));
  const DenseMatrix means = subclass_means(pool, plan, class_assignments, rows);
  return (x_prime - means).squaredNorm();
}

double partition_sse(const AugmentedPool& pool, const CondensedLabelPlan& plan,
                     const std::vector<std::vector<std::int32_t>>& class_assignments) {
  const auto c = static_cast<std::int32_t>(plan.sizes.size());
  const auto rows = rows_by_class(pool, c);
  const DenseMatrix means = subclass_means(pool, plan, class_assignments, rows);
  double s = 0.0;
  std::int64_t offset = 0;
  for (std::int32_t i = 0; i < c; ++i) {
    const auto& members = rows[i];
    const auto& assign = class_assignments[i];
    for (std::size_t t = 0; t < members.size(); ++t) {
      s += (pool.embeddings.row(members[t]) - means.row(offset + assign[t]))
               .squaredNorm();
    }
    offset += plan.sizes[i];
  }
  return s;
}

}  // namespace cgc
