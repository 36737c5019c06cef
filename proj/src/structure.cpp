#include "cgc/structure.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace cgc {

CondensedGraph make_graphless(const DenseMatrix& embeddings,
                              const std::vector<std::int32_t>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "make_graphless: label/row mismatch");
  }
  CondensedGraph g;
  g.labels = labels;
  g.features = embeddings;
  return g;
}

SparseAdjacency build_adjacency(const DenseMatrix& embeddings, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "cosine threshold must lie in [0, 1)");
  }
  const Eigen::Index n = embeddings.rows();
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) norms(i) = embeddings.row(i).norm();

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) == 0.0) continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (norms(j) == 0.0) continue;
      const double cos = embeddings.row(i).dot(embeddings.row(j)) /
                         (norms(i) * norms(j));
      if (cos > threshold) {
        edges.emplace_back(static_cast<std::uint32_t>(i),
                           static_cast<std::uint32_t>(j));
      }
    }
  }
  return SparseAdjacency::from_edges(n, edges);
}

DenseMatrix normalized_power(const SparseAdjacency& adj, int depth) {
  const Eigen::Index n = adj.num_nodes;
  DenseMatrix q = DenseMatrix::Identity(n, n);
  if (depth == 0) return q;
  NormalizedAdjacency norm = normalize(adj);
  DenseMatrix dense = DenseMatrix::Zero(n, n);
  const SparseAdjacency& m = norm.matrix;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::uint64_t p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) {
      dense(i, m.col_indices[p]) = m.values[p];
    }
  }
  q = dense;
  for (int l = 1; l < depth; ++l) q = dense * q;
  return q;
}

namespace {

DenseMatrix laplacian(const SparseAdjacency& adj) {
  const Eigen::Index n = adj.num_nodes;
  DenseMatrix l = DenseMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      const double w = adj.value_at(p);
      l(i, adj.col_indices[p]) = -w;
      deg += w;
    }
    l(i, i) = deg;
  }
  return l;
}

}  // namespace

DenseMatrix solve_features(const DenseMatrix& embeddings,
                           const SparseAdjacency& adj, double alpha, int depth,
                           double jitter) {
  if (alpha < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "alpha must be >= 0");
  }
  if (adj.num_nodes != embeddings.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "solve_features: adjacency/embedding size mismatch");
  }
  const Eigen::Index n = adj.num_nodes;
  const DenseMatrix q = normalized_power(adj, depth);
  const DenseMatrix system_base =
      q.transpose() * q + alpha * laplacian(adj);
  const DenseMatrix rhs = q.transpose() * embeddings;

  const double trace_scale =
      std::max(system_base.trace() / static_cast<double>(n), 1e-300);
  double shift = jitter * trace_scale;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    DenseMatrix system = system_base;
    system.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() == Eigen::Success) {
      DenseMatrix x = llt.solve(Eigen::MatrixXd(rhs));
      if (x.allFinite()) return x;
    }
    shift *= 10.0;
  }
  throw Error(ErrorKind::Numerical,
              "feature solve failed (n=" + std::to_string(n) +
                  ", alpha=" + std::to_string(alpha) +
                  ", final jitter=" + std::to_string(shift) + ")");
}

double dirichlet_energy(const DenseMatrix& x, const SparseAdjacency& adj) {
  // tr(X^T L X) for L = D - A
  double energy = 0.0;
  for (Eigen::Index i = 0; i < adj.num_nodes; ++i) {
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      const std::uint32_t j = adj.col_indices[p];
      if (j < static_cast<std::uint32_t>(i)) continue;
      energy += adj.value_at(p) * (x.row(i) - x.row(j)).squaredNorm();
    }
  }
  return energy;
}

double structure_objective(const DenseMatrix& x, const DenseMatrix& embeddings,
                           const SparseAdjacency& adj, double alpha, int depth) {
  const DenseMatrix q = normalized_power(adj, depth);
  return (q * x - embeddings).squaredNorm() + alpha * dirichlet_energy(x, adj);
}

}  // namespace cgc
