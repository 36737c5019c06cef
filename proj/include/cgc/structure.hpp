#pragma once

#include <optional>

#include "cgc/graph.hpp"

namespace cgc {

struct StructureParams {
  double cos_threshold = 0.9;  // edge (i,j) iff cosine similarity > threshold
  double alpha = 1.0;          // smoothness weight on the condensed Laplacian
  int depth = 2;               // propagation depth matched by the feature solve
  double jitter = 1e-8;        // relative diagonal regularization of the solve
};

struct CondensedGraph {
  std::vector<std::int32_t> labels;
  DenseMatrix features;
  std::optional<SparseAdjacency> adjacency;  // absent => identity structure
  StructureParams gen_params;

  bool graphless() const { return !adjacency.has_value(); }
};

// Identity-structure condensed graph: features are the aggregated
// embeddings verbatim.
CondensedGraph make_graphless(const DenseMatrix& embeddings,
                              const std::vector<std::int32_t>& labels);

// Binary symmetric adjacency from pairwise cosine similarity; zero
// diagonal (self-loops re-enter via normalization). All-zero rows have
// cosine 0 to everything.
SparseAdjacency build_adjacency(const DenseMatrix& embeddings, double threshold);

// Features whose depth-K propagation through `adj` best reconstructs the
// embeddings, with Dirichlet-energy smoothing weight alpha:
// solves (Q^T Q + alpha L + jitter I) X = Q^T H for Q = norm_adj^K and the
// unnormalized Laplacian L. The jitter escalates x10 up to three times if
// the factorization fails.
DenseMatrix solve_features(const DenseMatrix& embeddings,
                           const SparseAdjacency& adj, double alpha, int depth,
                           double jitter = 1e-8);

// Dense depth-K power of the normalized adjacency.
DenseMatrix normalized_power(const SparseAdjacency& adj, int depth);

// tr(X^T L X) + ||Q X - H||^2 pieces, for verification.
double dirichlet_energy(const DenseMatrix& x, const SparseAdjacency& adj);
double structure_objective(const DenseMatrix& x, const DenseMatrix& embeddings,
                           const SparseAdjacency& adj, double alpha, int depth);

}  // namespace cgc
