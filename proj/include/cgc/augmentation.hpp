#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cgc/assessment.hpp"

namespace cgc {

// Training-node embeddings entering the partition: every training node at
// depth K (the base pool) plus an error-weighted sample of shallower-depth
// rows. `origin[r]` records (node id, depth) for row r.
struct AugmentedPool {
  DenseMatrix embeddings;                 // M x d
  std::vector<std::int32_t> labels;       // length M
  std::vector<double> confidence;         // length M
  std::vector<std::pair<std::uint32_t, int>> origin;
  std::int64_t base_count = 0;            // number of depth-K rows (= N_train)
  bool sample_clamped = false;            // requested more than the candidate pool

  std::int64_t size() const { return embeddings.rows(); }
};

// Samples round(p/100 * N_train) shallow-depth rows without replacement,
// each candidate weighted by its class error.
AugmentedPool augment(const PropagationStack& stack, const Assessment& assess,
                      const LabeledNodes& labels,
                      const std::vector<std::uint32_t>& train_mask, double p,
                      std::uint64_t seed);

}  // namespace cgc
