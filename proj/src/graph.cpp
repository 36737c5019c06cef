#include "cgc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace cgc {

namespace {

void check_node(std::int64_t num_nodes, std::uint32_t v) {
  if (static_cast<std::int64_t>(v) >= num_nodes) {
    throw Error(ErrorKind::Structural,
                "node index " + std::to_string(v) + " out of range [0, " +
                    std::to_string(num_nodes) + ")");
  }
}

}  // namespace

SparseAdjacency SparseAdjacency::from_edges(
    std::int64_t num_nodes,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
    const std::vector<double>* weights) {
  if (num_nodes < 0) {
    throw Error(ErrorKind::InvalidArgument, "negative node count");
  }
  if (weights && weights->size() != edges.size()) {
    throw Error(ErrorKind::SizeMismatch,
                "edge/weight count mismatch: " + std::to_string(edges.size()) +
                    " vs " + std::to_string(weights->size()));
  }

  struct Entry {
    std::uint32_t row, col;
    double w;
  };
  std::vector<Entry> entries;
  entries.reserve(edges.size() * 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [u, v] = edges[i];
    check_node(num_nodes, u);
    check_node(num_nodes, v);
    if (u == v) continue;  // diagonal enters only at normalization
    double w = weights ? (*weights)[i] : 1.0;
    entries.push_back({u, v, w});
    entries.push_back({v, u, w});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseAdjacency out;
  out.num_nodes = num_nodes;
  out.row_offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      sum += entries[j].w;
      ++j;
    }
    out.col_indices.push_back(entries[i].col);
    if (weights) out.values.push_back(sum);
    out.row_offsets[entries[i].row + 1] = out.col_indices.size();
    i = j;
  }
  for (std::size_t r = 1; r < out.row_offsets.size(); ++r) {
    out.row_offsets[r] = std::max(out.row_offsets[r], out.row_offsets[r - 1]);
  }
  return out;
}

SparseAdjacency SparseAdjacency::from_csr(std::int64_t num_nodes,
                                          std::vector<std::uint64_t> row_offsets,
                                          std::vector<std::uint32_t> col_indices,
                                          std::vector<double> values) {
  if (row_offsets.size() != static_cast<std::size_t>(num_nodes) + 1 ||
      row_offsets.front() != 0 || row_offsets.back() != col_indices.size()) {
    throw Error(ErrorKind::SizeMismatch, "row_offsets inconsistent with nnz");
  }
  if (!values.empty() && values.size() != col_indices.size()) {
    throw Error(ErrorKind::SizeMismatch, "values length != nnz");
  }
  SparseAdjacency out;
  out.num_nodes = num_nodes;
  out.row_offsets = std::move(row_offsets);
  out.col_indices = std::move(col_indices);
  out.values = std::move(values);

  for (std::int64_t i = 0; i < num_nodes; ++i) {
    if (out.row_offsets[i] > out.row_offsets[i + 1]) {
      throw Error(ErrorKind::Structural, "row_offsets not non-decreasing at row " +
                                             std::to_string(i));
    }
    for (std::uint64_t p = out.row_offsets[i]; p < out.row_offsets[i + 1]; ++p) {
      std::uint32_t c = out.col_indices[p];
      check_node(num_nodes, c);
      if (static_cast<std::int64_t>(c) == i) {
        throw Error(ErrorKind::Structural,
                    "self-loop stored at node " + std::to_string(i));
      }
      if (p > out.row_offsets[i] && out.col_indices[p - 1] >= c) {
        throw Error(ErrorKind::Structural,
                    "columns unsorted or duplicated in row " + std::to_string(i));
      }
    }
  }

  // symmetry: every (i,j,w) must have a mirror (j,i,w)
  auto find = [&](std::uint32_t r, std::uint32_t c) -> const double* {
    auto beg = out.col_indices.begin() + static_cast<std::ptrdiff_t>(out.row_offsets[r]);
    auto end = out.col_indices.begin() + static_cast<std::ptrdiff_t>(out.row_offsets[r + 1]);
    auto it = std::lower_bound(beg, end, c);
    if (it == end || *it != c) return nullptr;
    static const double unit = 1.0;
    if (out.values.empty()) return &unit;
    return &out.values[static_cast<std::size_t>(it - out.col_indices.begin())];
  };
  for (std::int64_t i = 0; i < num_nodes; ++i) {
    for (std::uint64_t p = out.row_offsets[i]; p < out.row_offsets[i + 1]; ++p) {
      std::uint32_t j = out.col_indices[p];
      const double* w = find(j, static_cast<std::uint32_t>(i));
      if (!w || *w != out.value_at(p)) {
        throw Error(ErrorKind::Structural,
                    "adjacency not symmetric at edge (" + std::to_string(i) +
                        ", " + std::to_string(j) + ")");
      }
    }
  }
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> SparseAdjacency::edge_list()
    const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(nnz() / 2);
  for (std::int64_t i = 0; i < num_nodes; ++i) {
    for (std::uint64_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
      std::uint32_t j = col_indices[p];
      if (static_cast<std::uint32_t>(i) < j) out.emplace_back(i, j);
    }
  }
  return out;
}

bool SparseAdjacency::structurally_equal(const SparseAdjacency& other) const {
  return num_nodes == other.num_nodes && row_offsets == other.row_offsets &&
         col_indices == other.col_indices && values == other.values;
}

DenseMatrix LabeledNodes::one_hot() const {
  DenseMatrix y = DenseMatrix::Zero(static_cast<Eigen::Index>(labels.size()),
                                    num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

NormalizedAdjacency normalize(const SparseAdjacency& adj) {
  const std::int64_t n = adj.num_nodes;

  std::vector<double> deg(static_cast<std::size_t>(n), 1.0);  // self-loop
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      deg[i] += adj.value_at(p);
    }
  }
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);

  SparseAdjacency out;
  out.num_nodes = n;
  out.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  out.col_indices.reserve(adj.nnz() + static_cast<std::size_t>(n));
  out.values.reserve(adj.nnz() + static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::uint32_t ui = static_cast<std::uint32_t>(i);
    bool diag_done = false;
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      std::uint32_t j = adj.col_indices[p];
      if (!diag_done && j > ui) {
        out.col_indices.push_back(ui);
        out.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
        diag_done = true;
      }
      out.col_indices.push_back(j);
      out.values.push_back(adj.value_at(p) * inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!diag_done) {
      out.col_indices.push_back(ui);
      out.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    out.row_offsets[i + 1] = out.col_indices.size();
  }
  return NormalizedAdjacency{std::move(out)};
}

DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& feats) {
  const SparseAdjacency& m = adj.matrix;
  if (m.num_nodes != feats.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "spmm: adjacency has " + std::to_string(m.num_nodes) +
                    " nodes but features have " + std::to_string(feats.rows()) +
                    " rows");
  }
  DenseMatrix out = DenseMatrix::Zero(feats.rows(), feats.cols());
  for (std::int64_t i = 0; i < m.num_nodes; ++i) {
    auto dst = out.row(i);
    for (std::uint64_t p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) {
      dst += m.values[p] * feats.row(m.col_indices[p]);
    }
  }
  return out;
}

Dataset induced_subgraph(const Dataset& ds,
                         const std::vector<std::uint32_t>& nodes) {
  if (nodes.empty()) {
    throw Error(ErrorKind::InvalidArgument, "induced_subgraph: empty node set");
  }
  const std::int64_t n_old = ds.num_nodes();
  std::vector<std::int64_t> remap(static_cast<std::size_t>(n_old), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    check_node(n_old, nodes[i]);
    remap[nodes[i]] = static_cast<std::int64_t>(i);
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<double> weights;
  const bool weighted = ds.adjacency.has_values();
  for (std::uint32_t u_new = 0; u_new < nodes.size(); ++u_new) {
    std::uint32_t u = nodes[u_new];
    for (std::uint64_t p = ds.adjacency.row_offsets[u];
         p < ds.adjacency.row_offsets[u + 1]; ++p) {
      std::uint32_t v = ds.adjacency.col_indices[p];
      if (v <= u) continue;  // take each undirected edge once
      if (remap[v] < 0) continue;
      edges.emplace_back(u_new, static_cast<std::uint32_t>(remap[v]));
      if (weighted) weights.push_back(ds.adjacency.values[p]);
    }
  }

  Dataset out;
  out.adjacency = SparseAdjacency::from_edges(
      static_cast<std::int64_t>(nodes.size()), edges,
      weighted ? &weights : nullptr);
  out.features.resize(static_cast<Eigen::Index>(nodes.size()), ds.features.cols());
  out.labels.num_classes = ds.labels.num_classes;
  out.labels.labels.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(nodes[i]);
    out.labels.labels[i] = ds.labels.labels[nodes[i]];
  }
  auto restrict_mask = [&](const std::vector<std::uint32_t>& mask) {
    std::vector<std::uint32_t> r;
    for (std::uint32_t v : mask) {
      if (remap[v] >= 0) r.push_back(static_cast<std::uint32_t>(remap[v]));
    }
    std::sort(r.begin(), r.end());
    return r;
  };
  out.train_mask = restrict_mask(ds.train_mask);
  out.val_mask = restrict_mask(ds.val_mask);
  out.test_mask = restrict_mask(ds.test_mask);
  out.task = ds.task;
  return out;
}

}  // namespace cgc
