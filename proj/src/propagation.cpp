#include "cgc/propagation.hpp"

#include <string>

namespace cgc {

namespace {

// row-normalized adjacency with self-loops, for the mean rule
NormalizedAdjacency row_mean_operator(const SparseAdjacency& adj) {
  const std::int64_t n = adj.num_nodes;
  SparseAdjacency m;
  m.num_nodes = n;
  m.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  m.col_indices.reserve(adj.nnz() + static_cast<std::size_t>(n));
  m.values.reserve(adj.nnz() + static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      deg += adj.value_at(p);
    }
    const std::uint32_t ui = static_cast<std::uint32_t>(i);
    bool diag_done = false;
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      std::uint32_t j = adj.col_indices[p];
      if (!diag_done && j > ui) {
        m.col_indices.push_back(ui);
        m.values.push_back(1.0 / deg);
        diag_done = true;
      }
      m.col_indices.push_back(j);
      m.values.push_back(adj.value_at(p) / deg);
    }
    if (!diag_done) {
      m.col_indices.push_back(ui);
      m.values.push_back(1.0 / deg);
    }
    m.row_offsets[i + 1] = m.col_indices.size();
  }
  return NormalizedAdjacency{std::move(m)};
}

}  // namespace

PropagationStack propagate(const Dataset& ds, int depth, PropagationSpec spec) {
  if (depth < 0) {
    throw Error(ErrorKind::InvalidArgument, "propagation depth must be >= 0");
  }
  PropagationStack stack;
  stack.depth = depth;
  stack.spec = spec;
  stack.layers.reserve(static_cast<std::size_t>(depth) + 1);
  stack.layers.push_back(ds.features);
  if (depth == 0) return stack;

  NormalizedAdjacency op = spec.rule == PropagationRule::Mean
                               ? row_mean_operator(ds.adjacency)
                               : normalize(ds.adjacency);
  for (int l = 0; l < depth; ++l) {
    DenseMatrix next = spmm(op, stack.layers.back());
    if (spec.rule == PropagationRule::Ppr) {
      next = (1.0 - spec.ppr_beta) * next + spec.ppr_beta * ds.features;
    }
    stack.layers.push_back(std::move(next));
  }
  return stack;
}

const char* to_string(PropagationRule rule) {
  switch (rule) {
    case PropagationRule::Sgc: return "sgc";
    case PropagationRule::Ppr: return "ppr";
    case PropagationRule::Mean: return "mean";
  }
  return "sgc";
}

PropagationRule propagation_rule_from_string(const std::string& s) {
  if (s == "sgc") return PropagationRule::Sgc;
  if (s == "ppr") return PropagationRule::Ppr;
  if (s == "mean") return PropagationRule::Mean;
  throw Error(ErrorKind::InvalidArgument, "unknown propagation rule: " + s);
}

}  // namespace cgc
