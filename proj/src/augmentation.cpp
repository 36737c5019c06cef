#include "cgc/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include "cgc/rng.hpp"

namespace cgc {

AugmentedPool augment(const PropagationStack& stack, const Assessment& assess,
                      const LabeledNodes& labels,
                      const std::vector<std::uint32_t>& train_mask, double p,
                      std::uint64_t seed) {
  if (p < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "augmentation percentage must be >= 0");
  }
  const int depth = stack.depth;
  if (p > 0.0 && depth < 1) {
    throw Error(ErrorKind::InvalidArgument,
                "augmentation needs at least one shallow layer (depth >= 1)");
  }
  const auto n_train = static_cast<std::int64_t>(train_mask.size());
  const Eigen::Index d = stack.layers.front().cols();

  std::int64_t m = std::llround(p / 100.0 * static_cast<double>(n_train));
  const std::int64_t candidates = n_train * depth;
  bool clamped = false;
  if (m > candidates) {
    m = candidates;
    clamped = true;
  }

  // exponential-keys weighted sampling without replacement:
  // key = Exp(1) / weight, keep the m smallest
  std::vector<std::size_t> selected;
  if (m > 0) {
    Rng rng(seed);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(static_cast<std::size_t>(candidates));
    std::size_t cand = 0;
    for (int l = 0; l < depth; ++l) {
      for (std::int64_t r = 0; r < n_train; ++r, ++cand) {
        const double w = assess.class_errors[labels.labels[train_mask[r]]];
        keys.emplace_back(rng.exponential() / w, cand);
      }
    }
    std::nth_element(keys.begin(), keys.begin() + (m - 1), keys.end());
    selected.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) selected.push_back(keys[i].second);
    std::sort(selected.begin(), selected.end());  // canonical (depth, node) order
  }

  AugmentedPool pool;
  pool.base_count = n_train;
  pool.sample_clamped = clamped;
  pool.embeddings.resize(n_train + m, d);
  pool.labels.reserve(static_cast<std::size_t>(n_train + m));
  pool.confidence.reserve(static_cast<std::size_t>(n_train + m));
  pool.origin.reserve(static_cast<std::size_t>(n_train + m));

  for (std::int64_t r = 0; r < n_train; ++r) {
    pool.embeddings.row(r) = stack.layers.back().row(train_mask[r]);
    pool.labels.push_back(labels.labels[train_mask[r]]);
    pool.confidence.push_back(assess.confidence(r, depth));
    pool.origin.emplace_back(train_mask[r], depth);
  }
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const int l = static_cast<int>(selected[i] / static_cast<std::size_t>(n_train));
    const auto r = static_cast<std::int64_t>(selected[i] % static_cast<std::size_t>(n_train));
    const Eigen::Index row = n_train + static_cast<Eigen::Index>(i);
    pool.embeddings.row(row) = stack.layers[l].row(train_mask[r]);
    pool.labels.push_back(labels.labels[train_mask[r]]);
    pool.confidence.push_back(assess.confidence(r, l));
    pool.origin.emplace_back(train_mask[r], l);
  }
  return pool;
}

}  // namespace cgc
