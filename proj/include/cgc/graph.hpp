#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgc/error.hpp"

namespace cgc {

// Row-major dense matrix of doubles. All numeric payloads in the toolkit
// use this layout so views over on-disk data and Eigen kernels agree.
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Undirected graph in CSR form. Symmetric, no stored self-loops, column
// indices sorted within each row, no duplicates. `values` empty means every
// edge has weight 1.
struct SparseAdjacency {
  std::int64_t num_nodes = 0;
  std::vector<std::uint64_t> row_offsets;  // length num_nodes + 1
  std::vector<std::uint32_t> col_indices;
  std::vector<double> values;  // empty => unit weights

  std::uint64_t nnz() const { return col_indices.size(); }
  bool has_values() const { return !values.empty(); }
  double value_at(std::uint64_t pos) const {
    return values.empty() ? 1.0 : values[pos];
  }

  // Builds the canonical CSR from an edge list. Both directions of each
  // undirected edge are inserted, duplicates are merged (by summing weights
  // when weights are given, as a set otherwise) and self-loops dropped.
  static SparseAdjacency from_edges(
      std::int64_t num_nodes,
      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
      const std::vector<double>* weights = nullptr);

  // Wraps raw CSR arrays, validating every structural invariant
  // (sortedness, index range, no duplicates, no self-loops, symmetry).
  static SparseAdjacency from_csr(std::int64_t num_nodes,
                                  std::vector<std::uint64_t> row_offsets,
                                  std::vector<std::uint32_t> col_indices,
                                  std::vector<double> values = {});

  // Canonical undirected edge list (u < v), sorted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

  bool structurally_equal(const SparseAdjacency& other) const;
};

struct LabeledNodes {
  std::vector<std::int32_t> labels;  // values in [0, num_classes)
  std::int32_t num_classes = 0;

  DenseMatrix one_hot() const;
};

enum class TaskKind { Transductive, Inductive };

struct Dataset {
  SparseAdjacency adjacency;
  DenseMatrix features;  // num_nodes x num_features
  LabeledNodes labels;
  std::vector<std::uint32_t> train_mask;  // sorted node index sets
  std::vector<std::uint32_t> val_mask;
  std::vector<std::uint32_t> test_mask;
  TaskKind task = TaskKind::Transductive;

  std::int64_t num_nodes() const { return adjacency.num_nodes; }
  std::int64_t num_features() const { return features.cols(); }
};

// Symmetric normalization of an adjacency with implicit self-loops:
// entry (i,j) is w(i,j) / sqrt(deg(i) deg(j)) over the self-looped graph.
// The stored CSR always carries values and includes the diagonal.
struct NormalizedAdjacency {
  SparseAdjacency matrix;
};

NormalizedAdjacency normalize(const SparseAdjacency& adj);

// Sparse-times-dense product. Output row i is the weighted sum of feature
// rows over i's (self-looped, normalized) neighborhood.
DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& feats);

// Subgraph induced by `nodes` with node ids relabeled to 0..|nodes|-1.
// Edges survive iff both endpoints are kept; masks are restricted and
// relabeled accordingly.
Dataset induced_subgraph(const Dataset& ds,
                         const std::vector<std::uint32_t>& nodes);

}  // namespace cgc
