#pragma once

#include <optional>
#include <string>

#include "cgc/dataset_io.hpp"
#include "cgc/eval.hpp"
#include "cgc/partition.hpp"
#include "cgc/propagation.hpp"
#include "cgc/structure.hpp"

namespace cgc {

enum class Preset { Cgc, CgcX, SimDm, NoAug, NoCal, RandomPartition };

const char* to_string(Preset p);
Preset preset_from_string(const std::string& s);

struct PipelineConfig {
  Preset preset = Preset::CgcX;
  std::optional<double> ratio;             // condensed size = round(ratio * N)
  std::optional<std::int64_t> n_condensed; // wins over ratio when set
  int depth = 2;
  PropagationSpec propagation;
  double p = 50.0;                         // augmentation percentage of N_train
  double tau = 1.0;
  WeightMode mode = WeightMode::Softmax;
  ClusterMethod method = ClusterMethod::Kmeans;
  double cos_threshold = 0.9;
  double alpha = 1.0;
  double jitter = 1e-8;
  std::uint64_t seed = 0;
  EvalConfig eval;

  bool graphless() const { return preset != Preset::Cgc; }

  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
};

// Preset-expanded defaults; explicit caller overrides go on top.
//   cgc               full pipeline with generated structure
//   cgc_x             full pipeline, identity structure
//   simdm             p=0, uniform weights, identity structure
//   no_aug            cgc_x with p=0
//   no_cal            cgc_x with uniform weights
//   random_partition  cgc_x with random cluster assignment
PipelineConfig default_config(Preset preset);

struct CondenseResult {
  CondensedGraph graph;
  Provenance provenance;
};

// propagate -> probe -> augment -> plan -> per-class clustering ->
// calibrated aggregation -> structure materialization. Inductive datasets
// are first restricted to the train-induced subgraph.
CondenseResult condense(const Dataset& ds, const PipelineConfig& cfg);

CondensedArtifact to_artifact(const CondenseResult& result);

const char* to_string(WeightMode m);
const char* to_string(ClusterMethod m);
WeightMode weight_mode_from_string(const std::string& s);
ClusterMethod cluster_method_from_string(const std::string& s);

}  // namespace cgc
