#include "cgc/condense.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "cgc/rng.hpp"
#include "cgc/version.hpp"

namespace cgc {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

const char* to_string(Preset p) {
  switch (p) {
    case Preset::Cgc: return "cgc";
    case Preset::CgcX: return "cgc_x";
    case Preset::SimDm: return "simdm";
    case Preset::NoAug: return "no_aug";
    case Preset::NoCal: return "no_cal";
    case Preset::RandomPartition: return "random_partition";
  }
  return "cgc_x";
}

Preset preset_from_string(const std::string& s) {
  if (s == "cgc") return Preset::Cgc;
  if (s == "cgc_x") return Preset::CgcX;
  if (s == "simdm") return Preset::SimDm;
  if (s == "no_aug") return Preset::NoAug;
  if (s == "no_cal") return Preset::NoCal;
  if (s == "random_partition") return Preset::RandomPartition;
  throw Error(ErrorKind::InvalidArgument, "unknown preset: " + s);
}

const char* to_string(WeightMode m) {
  switch (m) {
    case WeightMode::Softmax: return "softmax";
    case WeightMode::Linear: return "linear";
    case WeightMode::Uniform: return "uniform";
  }
  return "softmax";
}

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "softmax") return WeightMode::Softmax;
  if (s == "linear") return WeightMode::Linear;
  if (s == "uniform") return WeightMode::Uniform;
  throw Error(ErrorKind::InvalidArgument, "unknown weight mode: " + s);
}

const char* to_string(ClusterMethod m) {
  return m == ClusterMethod::Kmeans ? "kmeans" : "random";
}

ClusterMethod cluster_method_from_string(const std::string& s) {
  if (s == "kmeans") return ClusterMethod::Kmeans;
  if (s == "random") return ClusterMethod::Random;
  throw Error(ErrorKind::InvalidArgument, "unknown cluster method: " + s);
}

PipelineConfig default_config(Preset preset) {
  PipelineConfig cfg;
  cfg.preset = preset;
  switch (preset) {
    case Preset::Cgc:
    case Preset::CgcX:
      break;
    case Preset::SimDm:
      cfg.p = 0.0;
      cfg.mode = WeightMode::Uniform;
      break;
    case Preset::NoAug:
      cfg.p = 0.0;
      break;
    case Preset::NoCal:
      cfg.mode = WeightMode::Uniform;
      break;
    case Preset::RandomPartition:
      cfg.method = ClusterMethod::Random;
      break;
  }
  return cfg;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["preset"] = cgc::to_string(preset);
  if (ratio) j["ratio"] = *ratio;
  if (n_condensed) j["n_condensed"] = *n_condensed;
  j["depth"] = depth;
  j["rule"] = cgc::to_string(propagation.rule);
  j["ppr_beta"] = propagation.ppr_beta;
  j["p"] = p;
  j["tau"] = tau;
  j["mode"] = cgc::to_string(mode);
  j["method"] = cgc::to_string(method);
  j["cos_threshold"] = cos_threshold;
  j["alpha"] = alpha;
  j["jitter"] = jitter;
  j["seed"] = seed;
  json e;
  e["model"] = eval.model == EvalModel::Gcn2 ? "gcn2" : "sgc_ridge";
  e["hidden"] = eval.hidden;
  e["lr"] = eval.lr;
  e["weight_decay"] = eval.weight_decay;
  e["dropout"] = eval.dropout;
  e["epochs"] = eval.epochs;
  e["repeats"] = eval.repeats;
  e["seed"] = eval.seed;
  e["depth"] = eval.depth;
  e["ridge"] = eval.ridge;
  j["eval"] = e;
  return j.dump();
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Data, std::string("config parse error: ") + e.what());
  }
  PipelineConfig cfg = default_config(
      j.contains("preset") ? preset_from_string(j["preset"].get<std::string>())
                           : Preset::CgcX);
  if (j.contains("ratio")) cfg.ratio = j["ratio"].get<double>();
  if (j.contains("n_condensed")) cfg.n_condensed = j["n_condensed"].get<std::int64_t>();
  if (j.contains("depth")) cfg.depth = j["depth"].get<int>();
  if (j.contains("rule")) {
    cfg.propagation.rule = propagation_rule_from_string(j["rule"].get<std::string>());
  }
  if (j.contains("ppr_beta")) cfg.propagation.ppr_beta = j["ppr_beta"].get<double>();
  if (j.contains("p")) cfg.p = j["p"].get<double>();
  if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
  if (j.contains("mode")) cfg.mode = weight_mode_from_string(j["mode"].get<std::string>());
  if (j.contains("method")) {
    cfg.method = cluster_method_from_string(j["method"].get<std::string>());
  }
  if (j.contains("cos_threshold")) cfg.cos_threshold = j["cos_threshold"].get<double>();
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("jitter")) cfg.jitter = j["jitter"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("eval")) {
    const json& e = j["eval"];
    if (e.contains("model")) {
      cfg.eval.model = e["model"].get<std::string>() == "sgc_ridge"
                           ? EvalModel::SgcRidge
                           : EvalModel::Gcn2;
    }
    if (e.contains("hidden")) cfg.eval.hidden = e["hidden"].get<int>();
    if (e.contains("lr")) cfg.eval.lr = e["lr"].get<double>();
    if (e.contains("weight_decay")) cfg.eval.weight_decay = e["weight_decay"].get<double>();
    if (e.contains("dropout")) cfg.eval.dropout = e["dropout"].get<double>();
    if (e.contains("epochs")) cfg.eval.epochs = e["epochs"].get<int>();
    if (e.contains("repeats")) cfg.eval.repeats = e["repeats"].get<int>();
    if (e.contains("seed")) cfg.eval.seed = e["seed"].get<std::uint64_t>();
    if (e.contains("depth")) cfg.eval.depth = e["depth"].get<int>();
    if (e.contains("ridge")) cfg.eval.ridge = e["ridge"].get<double>();
  }
  return cfg;
}

CondenseResult condense(const Dataset& input, const PipelineConfig& cfg) {
  const auto t_total = Clock::now();
  CondenseResult result;
  Provenance& prov = result.provenance;
  prov.config_json = cfg.to_json();
  prov.master_seed = cfg.seed;
  prov.preset = to_string(cfg.preset);
  prov.toolkit_version = kToolkitVersion;

  auto t0 = Clock::now();
  const Dataset* ds = &input;
  Dataset induced;
  if (input.task == TaskKind::Inductive) {
    induced = induced_subgraph(input, input.train_mask);
    ds = &induced;
  }
  prov.stage_ms["prepare"] = ms_since(t0);

  std::int64_t n_condensed = 0;
  if (cfg.n_condensed) {
    n_condensed = *cfg.n_condensed;
  } else if (cfg.ratio) {
    n_condensed = std::llround(*cfg.ratio * static_cast<double>(ds->num_nodes()));
  } else {
    throw Error(ErrorKind::InvalidArgument,
                "config needs a condensation ratio or explicit size");
  }

  t0 = Clock::now();
  PropagationStack stack = propagate(*ds, cfg.depth, cfg.propagation);
  prov.stage_ms["propagate"] = ms_since(t0);

  t0 = Clock::now();
  Assessment assess = fit_probe(stack, ds->labels, ds->train_mask);
  prov.stage_ms["assess"] = ms_since(t0);

  t0 = Clock::now();
  AugmentedPool pool = augment(stack, assess, ds->labels, ds->train_mask, cfg.p,
                               derive_seed(cfg.seed, 0x617567));
  if (pool.sample_clamped) {
    prov.warnings.push_back("augmentation sample clamped to candidate pool size");
  }
  prov.stage_ms["augment"] = ms_since(t0);

  t0 = Clock::now();
  const std::int32_t c = ds->labels.num_classes;
  std::vector<std::int64_t> class_counts(static_cast<std::size_t>(c), 0);
  for (std::uint32_t v : ds->train_mask) class_counts[ds->labels.labels[v]]++;
  CondensedLabelPlan plan = plan_labels(class_counts, n_condensed);

  const auto rows = rows_by_class(pool, c);
  std::vector<std::vector<std::int32_t>> class_assignments(
      static_cast<std::size_t>(c));
  for (std::int32_t i = 0; i < c; ++i) {
    DenseMatrix points(static_cast<Eigen::Index>(rows[i].size()),
                       pool.embeddings.cols());
    for (std::size_t t = 0; t < rows[i].size(); ++t) {
      points.row(static_cast<Eigen::Index>(t)) = pool.embeddings.row(rows[i][t]);
    }
    class_assignments[i] =
        cluster_class(points, plan.sizes[i], cfg.method,
                      derive_seed(cfg.seed, static_cast<std::uint64_t>(i)))
            .assignments;
  }
  PartitionPlan partition = aggregate(pool, plan, class_assignments, cfg.tau, cfg.mode);
  prov.stage_ms["partition"] = ms_since(t0);

  t0 = Clock::now();
  if (cfg.graphless()) {
    result.graph = make_graphless(partition.embeddings, partition.labels);
  } else {
    SparseAdjacency adj = build_adjacency(partition.embeddings, cfg.cos_threshold);
    DenseMatrix feats = solve_features(partition.embeddings, adj, cfg.alpha,
                                       cfg.depth, cfg.jitter);
    result.graph.labels = partition.labels;
    result.graph.features = std::move(feats);
    result.graph.adjacency = std::move(adj);
  }
  result.graph.gen_params =
      StructureParams{cfg.cos_threshold, cfg.alpha, cfg.depth, cfg.jitter};
  prov.stage_ms["structure"] = ms_since(t0);
  prov.stage_ms["total"] = ms_since(t_total);
  return result;
}

CondensedArtifact to_artifact(const CondenseResult& result) {
  CondensedArtifact art;
  art.labels = result.graph.labels;
  art.num_classes =
      result.graph.labels.empty()
          ? 0
          : *std::max_element(result.graph.labels.begin(), result.graph.labels.end()) + 1;
  art.features = result.graph.features;
  art.adjacency = result.graph.adjacency;
  art.provenance = result.provenance;
  return art;
}

}  // namespace cgc
