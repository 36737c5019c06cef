#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgc/dataset_io.hpp"
#include "cgc/graph.hpp"

namespace cgc {

enum class EvalModel { SgcRidge, Gcn2 };

struct EvalConfig {
  EvalModel model = EvalModel::Gcn2;
  int hidden = 256;
  double lr = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int epochs = 600;
  int repeats = 5;
  std::uint64_t seed = 0;
  int depth = 2;        // propagation depth for the ridge evaluator
  double ridge = 1e-2;  // ridge strength for the closed-form evaluator
};

struct EvalReport {
  std::vector<double> accuracies;  // per successful repeat
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> wall_ms;  // per repeat
  int failed_repeats = 0;       // diverged runs excluded from the mean

  std::string to_json() const;
  std::string csv_row(const std::string& dataset, const std::string& preset,
                      double ratio, const std::string& model,
                      double condense_ms, std::uint64_t seed) const;
};

// Closed-form evaluator: ridge regression on the depth-K propagated
// condensed features, scored by argmax over the depth-K propagated
// original graph. Deterministic, so repeats collapse to one.
EvalReport eval_sgc_ridge(const CondensedArtifact& art, const Dataset& original,
                          int depth, double ridge);

// Two-layer GCN trained on the condensed graph with analytic gradients and
// Adam; model selection by best validation accuracy on the original graph.
EvalReport train_gcn2(const CondensedArtifact& art, const Dataset& original,
                      const EvalConfig& cfg);

// Control run: the same GCN trained on the original graph's training nodes.
EvalReport train_gcn2_whole(const Dataset& original, const EvalConfig& cfg);

// Analytic loss gradients for the 2-layer GCN, exposed for verification
// against finite differences. Dropout is disabled.
struct GcnGradients {
  double loss = 0.0;
  DenseMatrix w1_grad;
  DenseMatrix w2_grad;
};
GcnGradients gcn2_loss_gradients(const CondensedArtifact& art,
                                 const DenseMatrix& w1, const DenseMatrix& w2,
                                 double weight_decay);
double gcn2_loss_only(const CondensedArtifact& art, const DenseMatrix& w1,
                      const DenseMatrix& w2, double weight_decay);

}  // namespace cgc
