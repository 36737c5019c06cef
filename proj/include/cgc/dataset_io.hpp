#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgc/graph.hpp"

namespace cgc {

// On-disk dataset directory, format_version 1:
//   meta.json            {num_nodes, num_features, num_classes, task, format_version}
//   features.bin         float32 little-endian, row-major
//   labels.bin           uint32
//   adj_row_offsets.bin  uint64   (absent together with col_indices => identity structure)
//   adj_col_indices.bin  uint32
//   train_mask.bin / val_mask.bin / test_mask.bin   uint32 index lists
// Condensed artifacts add provenance.json.
inline constexpr int kFormatVersion = 1;

void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Condensed graph plus the record of how it was produced.
struct Provenance {
  std::string config_json;    // fully resolved pipeline config snapshot
  std::uint64_t master_seed = 0;
  std::string preset;
  std::map<std::string, double> stage_ms;  // per-stage wall clock
  std::string toolkit_version;
  std::vector<std::string> warnings;

  std::string to_json() const;
  static Provenance from_json(const std::string& text);
};

struct CondensedArtifact {
  std::vector<std::int32_t> labels;  // class index per condensed node
  std::int32_t num_classes = 0;
  DenseMatrix features;
  std::optional<SparseAdjacency> adjacency;  // absent => identity structure
  Provenance provenance;
};

void write_artifact(const CondensedArtifact& art,
                    const std::filesystem::path& dir);
CondensedArtifact read_artifact(const std::filesystem::path& dir);

// Text converter. Edges are "u v" lines; features one row per node
// (whitespace- or comma-separated); labels one integer per line; each split
// file lists node indices one per line.
Dataset convert_edgelist(const std::filesystem::path& edges,
                         const std::filesystem::path& features,
                         const std::filesystem::path& labels,
                         const std::filesystem::path& train_split,
                         const std::filesystem::path& val_split,
                         const std::filesystem::path& test_split,
                         TaskKind task);

// Canonical "u v" lines (u < v, sorted), inverse of the edge part of
// convert_edgelist.
void export_edgelist(const Dataset& ds, const std::filesystem::path& out);

// Stochastic block model fixture. Features are a per-class Gaussian center
// (scaled) plus unit noise; the split is 60/20/20 stratified per class.
Dataset synth_sbm(std::int32_t classes, std::int64_t nodes_per_class,
                  double p_in, double p_out, std::int64_t num_features,
                  double class_center_scale, std::uint64_t seed);

}  // namespace cgc
