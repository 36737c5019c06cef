#pragma once

#include <vector>

#include "cgc/propagation.hpp"

namespace cgc {

// Closed-form linear probe over depth-averaged training embeddings.
// Confidence is the clamped linear score at a node's true class; class
// errors are the depth-K misclassification rates with add-one smoothing.
struct Assessment {
  DenseMatrix weights;                    // num_features x num_classes
  std::vector<std::uint32_t> train_nodes; // row order of `confidence`
  DenseMatrix confidence;                 // num_train x (K + 1), in [0, 1]
  std::vector<double> class_errors;       // smoothed, in (0, 1)
  std::vector<double> raw_class_errors;   // unsmoothed, in [0, 1]
};

Assessment fit_probe(const PropagationStack& stack, const LabeledNodes& labels,
                     const std::vector<std::uint32_t>& train_mask);

// Minimum-norm least-squares solution of A X = B (rank-revealing COD).
DenseMatrix min_norm_lstsq(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace cgc
