#pragma once

#include <vector>

#include "cgc/graph.hpp"

namespace cgc {

enum class PropagationRule { Sgc, Ppr, Mean };

struct PropagationSpec {
  PropagationRule rule = PropagationRule::Sgc;
  double ppr_beta = 0.1;  // teleport probability, ppr rule only
};

// layers[l] holds the depth-l smoothed features; layers[0] is the raw input.
struct PropagationStack {
  int depth = 0;  // K
  std::vector<DenseMatrix> layers;  // K + 1 entries
  PropagationSpec spec;

  const DenseMatrix& last() const { return layers.back(); }
};

// sgc:  next = norm_adj * cur
// ppr:  next = (1 - beta) * norm_adj * cur + beta * input
// mean: next = row-normalized (A + I) * cur   (closed neighborhood mean)
PropagationStack propagate(const Dataset& ds, int depth, PropagationSpec spec);

const char* to_string(PropagationRule rule);
PropagationRule propagation_rule_from_string(const std::string& s);

}  // namespace cgc
