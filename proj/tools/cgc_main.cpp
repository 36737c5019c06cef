#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgc/condense.hpp"
#include "cgc/theory.hpp"
#include "cgc/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

int exit_code_for(const cgc::Error& e) {
  switch (e.kind()) {
    case cgc::ErrorKind::InvalidArgument:
      return 2;
    case cgc::ErrorKind::Numerical:
      return 4;
    default:
      return 3;
  }
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct CondenseFlags {
  std::string config_path;
  std::string preset = "cgc_x";
  double ratio = -1.0;
  std::int64_t n_condensed = -1;
  int depth = -1;
  std::string rule;
  double ppr_beta = -1.0;
  double p = -1.0;
  double tau = -1.0;
  std::string mode;
  std::string method;
  double threshold = -1.0;
  double alpha = -1.0;
  double jitter = -1.0;
  std::int64_t seed = -1;
};

void add_condense_flags(CLI::App* cmd, CondenseFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--preset", f.preset,
                  "cgc | cgc_x | simdm | no_aug | no_cal | random_partition");
  cmd->add_option("--ratio", f.ratio, "condensation ratio N'/N");
  cmd->add_option("--n-condensed", f.n_condensed, "explicit condensed size");
  cmd->add_option("--depth", f.depth, "propagation depth K");
  cmd->add_option("--rule", f.rule, "sgc | ppr | mean");
  cmd->add_option("--ppr-beta", f.ppr_beta, "teleport probability for ppr");
  cmd->add_option("--p", f.p, "augmentation percentage of the training set");
  cmd->add_option("--tau", f.tau, "aggregation temperature");
  cmd->add_option("--mode", f.mode, "softmax | linear | uniform");
  cmd->add_option("--method", f.method, "kmeans | random");
  cmd->add_option("--threshold", f.threshold, "cosine edge threshold");
  cmd->add_option("--alpha", f.alpha, "smoothness weight");
  cmd->add_option("--jitter", f.jitter, "relative solve regularization");
  cmd->add_option("--seed", f.seed, "master seed");
}

// precedence: preset expansion < config file keys < explicit flags
cgc::PipelineConfig resolve_config(const CLI::App* cmd, const CondenseFlags& f) {
  json base = json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) {
      throw cgc::Error(cgc::ErrorKind::Data,
                       "cannot open config file " + f.config_path);
    }
    try {
      in >> base;
    } catch (const std::exception& e) {
      throw cgc::Error(cgc::ErrorKind::Data,
                       std::string("config parse error: ") + e.what());
    }
  }
  if (cmd->count("--preset") || !base.contains("preset")) {
    base["preset"] = f.preset;
  }
  cgc::PipelineConfig cfg = cgc::PipelineConfig::from_json(base.dump());
  if (cmd->count("--ratio")) cfg.ratio = f.ratio;
  if (cmd->count("--n-condensed")) cfg.n_condensed = f.n_condensed;
  if (cmd->count("--depth")) cfg.depth = f.depth;
  if (cmd->count("--rule")) {
    cfg.propagation.rule = cgc::propagation_rule_from_string(f.rule);
  }
  if (cmd->count("--ppr-beta")) cfg.propagation.ppr_beta = f.ppr_beta;
  if (cmd->count("--p")) cfg.p = f.p;
  if (cmd->count("--tau")) cfg.tau = f.tau;
  if (cmd->count("--mode")) cfg.mode = cgc::weight_mode_from_string(f.mode);
  if (cmd->count("--method")) {
    cfg.method = cgc::cluster_method_from_string(f.method);
  }
  if (cmd->count("--threshold")) cfg.cos_threshold = f.threshold;
  if (cmd->count("--alpha")) cfg.alpha = f.alpha;
  if (cmd->count("--jitter")) cfg.jitter = f.jitter;
  if (cmd->count("--seed")) cfg.seed = static_cast<std::uint64_t>(f.seed);
  return cfg;
}

void append_csv_row(const std::string& path, const std::string& row) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw cgc::Error(cgc::ErrorKind::Data, "cannot open csv file " + path);
  }
  if (fresh) {
    out << "dataset,preset,ratio,model,acc_mean,acc_std,condense_ms,seed\n";
  }
  out << row << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"training-free graph condensation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cgc::kToolkitVersion);

  // ---- convert
  auto* convert = app.add_subcommand("convert", "build a dataset directory from text files");
  std::string edges, features, labels, train, val, test, task = "transductive", out_dir;
  convert->add_option("--edges", edges)->required();
  convert->add_option("--features", features)->required();
  convert->add_option("--labels", labels)->required();
  convert->add_option("--train", train)->required();
  convert->add_option("--val", val)->required();
  convert->add_option("--test", test)->required();
  convert->add_option("--task", task, "transductive | inductive");
  convert->add_option("--out", out_dir)->required();

  // ---- synth
  auto* synth = app.add_subcommand("synth", "generate a stochastic block model dataset");
  std::int64_t s_classes = 3, s_per_class = 40, s_features = 16, s_seed = 0;
  double s_pin = 0.5, s_pout = 0.05, s_scale = 5.0;
  std::string s_out;
  synth->add_option("--classes", s_classes);
  synth->add_option("--per-class", s_per_class);
  synth->add_option("--p-in", s_pin);
  synth->add_option("--p-out", s_pout);
  synth->add_option("--features", s_features);
  synth->add_option("--center-scale", s_scale);
  synth->add_option("--seed", s_seed);
  synth->add_option("--out", s_out)->required();

  // ---- condense
  auto* cond = app.add_subcommand("condense", "condense a dataset");
  std::string c_dataset, c_out;
  bool c_json = false;
  CondenseFlags c_flags;
  cond->add_option("--dataset", c_dataset)->required();
  cond->add_option("--out", c_out)->required();
  add_condense_flags(cond, c_flags);
  cond->add_flag("--json", c_json, "machine-readable stdout");

  // ---- evaluate
  auto* eval = app.add_subcommand("evaluate", "train an evaluator on an artifact");
  std::string e_artifact, e_dataset, e_model = "gcn2", e_csv;
  bool e_json = false, e_whole = false;
  cgc::EvalConfig e_cfg;
  std::int64_t e_seed = 0;
  eval->add_option("--artifact", e_artifact);
  eval->add_option("--dataset", e_dataset)->required();
  eval->add_option("--model", e_model, "gcn2 | sgc_ridge");
  eval->add_option("--hidden", e_cfg.hidden);
  eval->add_option("--lr", e_cfg.lr);
  eval->add_option("--weight-decay", e_cfg.weight_decay);
  eval->add_option("--dropout", e_cfg.dropout);
  eval->add_option("--epochs", e_cfg.epochs);
  eval->add_option("--repeats", e_cfg.repeats);
  eval->add_option("--seed", e_seed);
  eval->add_option("--eval-depth", e_cfg.depth, "propagation depth (sgc_ridge)");
  eval->add_option("--ridge", e_cfg.ridge, "ridge strength (sgc_ridge)");
  eval->add_flag("--whole-dataset", e_whole,
                 "control run: train on the original graph instead of an artifact");
  eval->add_flag("--json", e_json);
  eval->add_option("--csv", e_csv, "append a summary row to this csv");

  // ---- bench
  auto* bench = app.add_subcommand("bench", "median-of-5 condensation wall clock");
  std::string b_dataset;
  bool b_json = false;
  int b_runs = 5;
  CondenseFlags b_flags;
  bench->add_option("--dataset", b_dataset)->required();
  bench->add_option("--runs", b_runs);
  add_condense_flags(bench, b_flags);
  bench->add_flag("--json", b_json);

  // ---- verify-props
  auto* verify = app.add_subcommand("verify-props", "numerical checks of the matching identities");
  std::int64_t v_seed = 7, v_draws = 100;
  bool v_json = false;
  verify->add_option("--seed", v_seed);
  verify->add_option("--draws", v_draws);
  verify->add_flag("--json", v_json);

  // ---- report
  auto* report = app.add_subcommand("report", "aggregate evaluation csv files");
  std::vector<std::string> r_inputs;
  std::string r_out_md, r_out_csv;
  report->add_option("--csv", r_inputs, "input csv files")->required();
  report->add_option("--out-md", r_out_md, "markdown summary path");
  report->add_option("--out-csv", r_out_csv, "combined csv path");

  CLI11_PARSE(app, argc, argv);

  if (convert->parsed()) {
    cgc::Dataset ds = cgc::convert_edgelist(
        edges, features, labels, train, val, test,
        task == "inductive" ? cgc::TaskKind::Inductive : cgc::TaskKind::Transductive);
    cgc::write_dataset(ds, out_dir);
    std::cout << "wrote " << out_dir << ": " << ds.num_nodes() << " nodes, "
              << ds.adjacency.nnz() / 2 << " edges, " << ds.num_features()
              << " features, " << ds.labels.num_classes << " classes\n";
    return 0;
  }

  if (synth->parsed()) {
    cgc::Dataset ds = cgc::synth_sbm(static_cast<std::int32_t>(s_classes),
                                     s_per_class, s_pin, s_pout, s_features,
                                     s_scale, static_cast<std::uint64_t>(s_seed));
    cgc::write_dataset(ds, s_out);
    std::cout << "wrote " << s_out << ": " << ds.num_nodes() << " nodes, "
              << ds.adjacency.nnz() / 2 << " edges\n";
    return 0;
  }

  if (cond->parsed()) {
    cgc::PipelineConfig cfg = resolve_config(cond, c_flags);
    cgc::Dataset ds = cgc::read_dataset(c_dataset);
    cgc::CondenseResult result = cgc::condense(ds, cfg);
    cgc::write_artifact(cgc::to_artifact(result), c_out);
    if (c_json) {
      json j;
      j["out"] = c_out;
      j["nodes"] = result.graph.labels.size();
      j["graphless"] = result.graph.graphless();
      j["stage_ms"] = result.provenance.stage_ms;
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "condensed to " << result.graph.labels.size() << " nodes ("
                << (result.graph.graphless() ? "identity structure"
                                             : "generated structure")
                << ") in " << result.provenance.stage_ms.at("total") << " ms\n";
    }
    return 0;
  }

  if (eval->parsed()) {
    e_cfg.seed = static_cast<std::uint64_t>(e_seed);
    e_cfg.model = e_model == "sgc_ridge" ? cgc::EvalModel::SgcRidge
                                         : cgc::EvalModel::Gcn2;
    cgc::Dataset ds = cgc::read_dataset(e_dataset);
    cgc::EvalReport rep;
    std::string preset = "whole_dataset";
    double ratio = 1.0, condense_ms = 0.0;
    if (e_whole) {
      if (e_model == "sgc_ridge") {
        cgc::CondensedArtifact self;
        self.labels.reserve(ds.train_mask.size());
        self.features.resize(static_cast<Eigen::Index>(ds.train_mask.size()),
                             ds.features.cols());
        // ridge control trains on the propagated original training rows
        cgc::NormalizedAdjacency norm = cgc::normalize(ds.adjacency);
        cgc::DenseMatrix h = ds.features;
        for (int l = 0; l < e_cfg.depth; ++l) h = cgc::spmm(norm, h);
        for (std::size_t i = 0; i < ds.train_mask.size(); ++i) {
          self.features.row(static_cast<Eigen::Index>(i)) = h.row(ds.train_mask[i]);
          self.labels.push_back(ds.labels.labels[ds.train_mask[i]]);
        }
        self.num_classes = ds.labels.num_classes;
        rep = cgc::eval_sgc_ridge(self, ds, 0, e_cfg.ridge);
      } else {
        rep = cgc::train_gcn2_whole(ds, e_cfg);
      }
    } else {
      if (e_artifact.empty()) {
        throw cgc::Error(cgc::ErrorKind::InvalidArgument,
                         "--artifact is required unless --whole-dataset is set");
      }
      cgc::CondensedArtifact art = cgc::read_artifact(e_artifact);
      preset = art.provenance.preset.empty() ? "unknown" : art.provenance.preset;
      if (art.provenance.stage_ms.count("total")) {
        condense_ms = art.provenance.stage_ms.at("total");
      }
      if (!art.provenance.config_json.empty()) {
        auto j = json::parse(art.provenance.config_json);
        if (j.contains("ratio")) ratio = j["ratio"].get<double>();
      }
      rep = e_cfg.model == cgc::EvalModel::SgcRidge
                ? cgc::eval_sgc_ridge(art, ds, e_cfg.depth, e_cfg.ridge)
                : cgc::train_gcn2(art, ds, e_cfg);
    }
    if (e_json) {
      std::cout << rep.to_json() << "\n";
    } else {
      std::cout << "accuracy " << rep.mean << " +/- " << rep.stddev << " over "
                << rep.accuracies.size() << " repeats";
      if (rep.failed_repeats > 0) {
        std::cout << " (" << rep.failed_repeats << " diverged)";
      }
      std::cout << "\n";
    }
    if (!e_csv.empty()) {
      append_csv_row(e_csv,
                     rep.csv_row(fs::path(e_dataset).filename().string(), preset,
                                 ratio, e_model, condense_ms, e_cfg.seed));
    }
    return 0;
  }

  if (bench->parsed()) {
    cgc::PipelineConfig cfg = resolve_config(bench, b_flags);
    cgc::Dataset ds = cgc::read_dataset(b_dataset);  // load time excluded
    std::vector<double> times;
    for (int i = 0; i < b_runs; ++i) {
      const auto t0 = Clock::now();
      cgc::CondenseResult result = cgc::condense(ds, cfg);
      times.push_back(ms_since(t0));
      (void)result;
    }
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (b_json) {
      json j;
      j["preset"] = cgc::to_string(cfg.preset);
      j["runs_ms"] = times;
      j["median_ms"] = median;
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "median condensation time over " << b_runs << " runs: "
                << median << " ms\n";
    }
    return 0;
  }

  if (verify->parsed()) {
    auto reports = cgc::run_all_checks(v_draws, static_cast<std::uint64_t>(v_seed));
    bool all_pass = true;
    if (v_json) {
      json arr = json::array();
      for (const auto& r : reports) {
        json j;
        j["name"] = r.name;
        j["residual"] = r.residual;
        j["tolerance"] = r.tolerance;
        j["draws"] = r.draws_checked;
        j["violations"] = r.violations;
        j["pass"] = r.pass;
        arr.push_back(j);
        all_pass = all_pass && r.pass;
      }
      std::cout << arr.dump(2) << "\n";
    } else {
      std::printf("%-34s %12s %12s %8s %6s\n", "check", "residual", "tolerance",
                  "draws", "pass");
      for (const auto& r : reports) {
        std::printf("%-34s %12.3e %12.3e %8lld %6s\n", r.name.c_str(), r.residual,
                    r.tolerance, static_cast<long long>(r.draws_checked),
                    r.pass ? "yes" : "NO");
        all_pass = all_pass && r.pass;
      }
    }
    return all_pass ? 0 : 1;
  }

  if (report->parsed()) {
    std::vector<std::string> rows;
    for (const auto& path : r_inputs) {
      std::ifstream in(path);
      if (!in) throw cgc::Error(cgc::ErrorKind::Data, "cannot open " + path);
      std::string line;
      bool first = true;
      while (std::getline(in, line)) {
        if (first) {
          first = false;
          continue;  // header
        }
        if (!line.empty()) rows.push_back(line);
      }
    }
    std::sort(rows.begin(), rows.end());
    std::ostringstream md;
    md << "| dataset | preset | ratio | model | acc_mean | acc_std | condense_ms | seed |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
      std::string cells = row;
      std::replace(cells.begin(), cells.end(), ',', '|');
      md << "| " << cells << " |\n";
    }
    if (!r_out_md.empty()) {
      std::ofstream out(r_out_md, std::ios::trunc);
      out << md.str();
    }
    if (!r_out_csv.empty()) {
      std::ofstream out(r_out_csv, std::ios::trunc);
      out << "dataset,preset,ratio,model,acc_mean,acc_std,condense_ms,seed\n";
      for (const auto& row : rows) out << row << "\n";
    }
    std::cout << md.str();
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cgc::Error& e) {
    std::cerr << "error (" << cgc::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
