#include "cgc/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cgc/rng.hpp"
#include "cgc/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk format assumes a little-endian host");

namespace cgc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_bytes(const fs::path& p, const void* data, std::size_t n) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Data, "cannot open for writing: " + p.string());
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!f) throw Error(ErrorKind::Data, "write failed: " + p.string());
}

template <typename T>
void write_array(const fs::path& p, const std::vector<T>& v) {
  write_bytes(p, v.data(), v.size() * sizeof(T));
}

template <typename T>
std::vector<T> read_array(const fs::path& p, std::int64_t expected_count) {
  std::ifstream f(p, std::ios::binary | std::ios::ate);
  if (!f) throw Error(ErrorKind::Data, "cannot open: " + p.string());
  const auto bytes = static_cast<std::uint64_t>(f.tellg());
  if (bytes % sizeof(T) != 0 ||
      (expected_count >= 0 &&
       bytes != static_cast<std::uint64_t>(expected_count) * sizeof(T))) {
    throw Error(ErrorKind::SizeMismatch,
                p.filename().string() + ": file holds " + std::to_string(bytes) +
                    " bytes, expected " +
                    std::to_string(expected_count * static_cast<std::int64_t>(sizeof(T))));
  }
  std::vector<T> v(bytes / sizeof(T));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!f) throw Error(ErrorKind::Data, "read failed: " + p.string());
  return v;
}

std::vector<float> features_to_f32(const DenseMatrix& m) {
  std::vector<float> out(static_cast<std::size_t>(m.size()));
  const double* src = m.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(src[i]);
  return out;
}

DenseMatrix features_from_f32(const std::vector<float>& v, std::int64_t rows,
                              std::int64_t cols) {
  DenseMatrix m(rows, cols);
  double* dst = m.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorKind::Data,
                  "non-finite feature at flat index " + std::to_string(i));
    }
    dst[i] = static_cast<double>(v[i]);
  }
  return m;
}

void validate_mask(const std::vector<std::uint32_t>& mask, std::int64_t n,
                   const std::string& name) {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (static_cast<std::int64_t>(mask[i]) >= n) {
      throw Error(ErrorKind::Data, name + ": index " + std::to_string(mask[i]) +
                                       " out of range");
    }
    if (i > 0 && mask[i - 1] >= mask[i]) {
      throw Error(ErrorKind::Data, name + ": indices not strictly increasing");
    }
  }
}

void validate_disjoint(const Dataset& ds) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(ds.num_nodes()), 0);
  auto mark = [&](const std::vector<std::uint32_t>& m, const char* name) {
    for (std::uint32_t v : m) {
      if (seen[v]) {
        throw Error(ErrorKind::MaskOverlap,
                    std::string("node ") + std::to_string(v) +
                        " appears in multiple masks (" + name + ")");
      }
      seen[v] = 1;
    }
  };
  mark(ds.train_mask, "train");
  mark(ds.val_mask, "val");
  mark(ds.test_mask, "test");
}

void validate_labels(const std::vector<std::int32_t>& labels, std::int32_t c) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw Error(ErrorKind::Data, "label " + std::to_string(labels[i]) +
                                       " at node " + std::to_string(i) +
                                       " outside [0, " + std::to_string(c) + ")");
    }
  }
}

json read_meta(const fs::path& dir) {
  std::ifstream f(dir / "meta.json");
  if (!f) throw Error(ErrorKind::Data, "missing meta.json in " + dir.string());
  json meta;
  try {
    f >> meta;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Data, std::string("meta.json parse error: ") + e.what());
  }
  if (!meta.contains("format_version") || meta["format_version"].get<int>() != kFormatVersion) {
    throw Error(ErrorKind::VersionMismatch,
                "unsupported format_version in " + dir.string());
  }
  return meta;
}

void write_meta(const fs::path& dir, std::int64_t n, std::int64_t d,
                std::int32_t c, TaskKind task) {
  json meta;
  meta["num_nodes"] = n;
  meta["num_features"] = d;
  meta["num_classes"] = c;
  meta["task"] = task == TaskKind::Transductive ? "transductive" : "inductive";
  meta["format_version"] = kFormatVersion;
  std::ofstream f(dir / "meta.json", std::ios::trunc);
  if (!f) throw Error(ErrorKind::Data, "cannot write meta.json");
  f << meta.dump(2) << "\n";
}

std::vector<std::uint32_t> labels_to_u32(const std::vector<std::int32_t>& v) {
  return std::vector<std::uint32_t>(v.begin(), v.end());
}

std::vector<std::int32_t> labels_from_u32(const std::vector<std::uint32_t>& v) {
  return std::vector<std::int32_t>(v.begin(), v.end());
}

}  // namespace

void write_dataset(const Dataset& ds, const fs::path& dir) {
  if (ds.adjacency.has_values()) {
    throw Error(ErrorKind::InvalidArgument,
                "on-disk adjacency is unweighted; weighted graphs are not stored");
  }
  fs::create_directories(dir);
  write_meta(dir, ds.num_nodes(), ds.num_features(), ds.labels.num_classes,
             ds.task);
  write_array(dir / "features.bin", features_to_f32(ds.features));
  write_array(dir / "labels.bin", labels_to_u32(ds.labels.labels));
  write_array(dir / "adj_row_offsets.bin", ds.adjacency.row_offsets);
  write_array(dir / "adj_col_indices.bin", ds.adjacency.col_indices);
  write_array(dir / "train_mask.bin", ds.train_mask);
  write_array(dir / "val_mask.bin", ds.val_mask);
  write_array(dir / "test_mask.bin", ds.test_mask);
}

Dataset read_dataset(const fs::path& dir) {
  json meta = read_meta(dir);
  const std::int64_t n = meta.at("num_nodes").get<std::int64_t>();
  const std::int64_t d = meta.at("num_features").get<std::int64_t>();
  const std::int32_t c = meta.at("num_classes").get<std::int32_t>();
  const std::string task = meta.at("task").get<std::string>();

  Dataset ds;
  ds.task = task == "inductive" ? TaskKind::Inductive : TaskKind::Transductive;
  ds.features = features_from_f32(read_array<float>(dir / "features.bin", n * d), n, d);
  ds.labels.labels = labels_from_u32(read_array<std::uint32_t>(dir / "labels.bin", n));
  ds.labels.num_classes = c;
  validate_labels(ds.labels.labels, c);

  auto offsets = read_array<std::uint64_t>(dir / "adj_row_offsets.bin", n + 1);
  auto cols = read_array<std::uint32_t>(dir / "adj_col_indices.bin",
                                        static_cast<std::int64_t>(offsets.back()));
  ds.adjacency = SparseAdjacency::from_csr(n, std::move(offsets), std::move(cols));

  ds.train_mask = read_array<std::uint32_t>(dir / "train_mask.bin", -1);
  ds.val_mask = read_array<std::uint32_t>(dir / "val_mask.bin", -1);
  ds.test_mask = read_array<std::uint32_t>(dir / "test_mask.bin", -1);
  validate_mask(ds.train_mask, n, "train_mask");
  validate_mask(ds.val_mask, n, "val_mask");
  validate_mask(ds.test_mask, n, "test_mask");
  validate_disjoint(ds);

  std::vector<bool> present(static_cast<std::size_t>(c), false);
  for (std::uint32_t v : ds.train_mask) present[ds.labels.labels[v]] = true;
  for (std::int32_t i = 0; i < c; ++i) {
    if (!present[i]) {
      throw Error(ErrorKind::Data,
                  "class " + std::to_string(i) + " absent from training nodes");
    }
  }
  return ds;
}

std::string Provenance::to_json() const {
  json j;
  j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  j["master_seed"] = master_seed;
  j["preset"] = preset;
  j["stage_ms"] = stage_ms;
  j["toolkit_version"] = toolkit_version;
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

Provenance Provenance::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Data, std::string("provenance parse error: ") + e.what());
  }
  Provenance p;
  p.config_json = j.at("config").dump();
  p.master_seed = j.at("master_seed").get<std::uint64_t>();
  p.preset = j.at("preset").get<std::string>();
  for (auto& [k, v] : j.at("stage_ms").items()) p.stage_ms[k] = v.get<double>();
  p.toolkit_version = j.at("toolkit_version").get<std::string>();
  for (auto& w : j.at("warnings")) p.warnings.push_back(w.get<std::string>());
  return p;
}

void write_artifact(const CondensedArtifact& art, const fs::path& dir) {
  fs::create_directories(dir);
  const std::int64_t n = static_cast<std::int64_t>(art.labels.size());
  write_meta(dir, n, art.features.cols(), art.num_classes,
             TaskKind::Transductive);
  write_array(dir / "features.bin", features_to_f32(art.features));
  write_array(dir / "labels.bin", labels_to_u32(art.labels));
  if (art.adjacency) {
    write_array(dir / "adj_row_offsets.bin", art.adjacency->row_offsets);
    write_array(dir / "adj_col_indices.bin", art.adjacency->col_indices);
  }
  std::vector<std::uint32_t> all(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) all[i] = static_cast<std::uint32_t>(i);
  write_array(dir / "train_mask.bin", all);
  write_array(dir / "val_mask.bin", std::vector<std::uint32_t>{});
  write_array(dir / "test_mask.bin", std::vector<std::uint32_t>{});
  std::ofstream f(dir / "provenance.json", std::ios::trunc);
  if (!f) throw Error(ErrorKind::Data, "cannot write provenance.json");
  f << art.provenance.to_json();
}

CondensedArtifact read_artifact(const fs::path& dir) {
  json meta = read_meta(dir);
  const std::int64_t n = meta.at("num_nodes").get<std::int64_t>();
  const std::int64_t d = meta.at("num_features").get<std::int64_t>();

  CondensedArtifact art;
  art.num_classes = meta.at("num_classes").get<std::int32_t>();
  art.features = features_from_f32(read_array<float>(dir / "features.bin", n * d), n, d);
  art.labels = labels_from_u32(read_array<std::uint32_t>(dir / "labels.bin", n));
  validate_labels(art.labels, art.num_classes);

  std::vector<std::int64_t> counts(static_cast<std::size_t>(art.num_classes), 0);
  for (std::int32_t l : art.labels) counts[l]++;
  for (std::int32_t i = 0; i < art.num_classes; ++i) {
    if (counts[i] == 0) {
      throw Error(ErrorKind::Data,
                  "condensed class " + std::to_string(i) + " is empty");
    }
  }

  if (fs::exists(dir / "adj_row_offsets.bin")) {
    auto offsets = read_array<std::uint64_t>(dir / "adj_row_offsets.bin", n + 1);
    auto cols = read_array<std::uint32_t>(
        dir / "adj_col_indices.bin", static_cast<std::int64_t>(offsets.back()));
    art.adjacency =
        SparseAdjacency::from_csr(n, std::move(offsets), std::move(cols));
  }
  if (fs::exists(dir / "provenance.json")) {
    std::ifstream f(dir / "provenance.json");
    std::stringstream ss;
    ss << f.rdbuf();
    art.provenance = Provenance::from_json(ss.str());
  }
  return art;
}

namespace {

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error(ErrorKind::Data, "cannot open: " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t,") == std::string::npos;
}

std::vector<std::uint32_t> parse_index_file(const fs::path& p, std::int64_t n,
                                            const std::string& name) {
  std::vector<std::uint32_t> out;
  for (const auto& line : read_lines(p)) {
    if (blank(line)) continue;
    std::int64_t v = 0;
    try {
      v = std::stoll(line);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Data, name + ": unparsable index '" + line + "'");
    }
    if (v < 0 || v >= n) {
      throw Error(ErrorKind::Structural,
                  name + ": node index " + std::to_string(v) + " out of range");
    }
    out.push_back(static_cast<std::uint32_t>(v));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Dataset convert_edgelist(const fs::path& edges_path, const fs::path& features_path,
                         const fs::path& labels_path, const fs::path& train_split,
                         const fs::path& val_split, const fs::path& test_split,
                         TaskKind task) {
  // features define the node count and dimensionality
  std::vector<std::vector<double>> rows;
  for (const auto& line : read_lines(features_path)) {
    if (blank(line)) continue;
    std::string norm = line;
    for (char& ch : norm) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream ss(norm);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Data, "non-numeric feature value '" + tok + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::SizeMismatch,
                  "feature row " + std::to_string(rows.size()) + " has " +
                      std::to_string(row.size()) + " values, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Data, "empty feature file");
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
  const std::int64_t d = static_cast<std::int64_t>(rows.front().size());

  Dataset ds;
  ds.features.resize(n, d);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
  }

  std::int32_t max_label = 0;
  for (const auto& line : read_lines(labels_path)) {
    if (blank(line)) continue;
    std::int64_t v = 0;
    try {
      v = std::stoll(line);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Data, "unparsable label '" + line + "'");
    }
    if (v < 0) throw Error(ErrorKind::Data, "negative label");
    ds.labels.labels.push_back(static_cast<std::int32_t>(v));
    max_label = std::max(max_label, static_cast<std::int32_t>(v));
  }
  if (static_cast<std::int64_t>(ds.labels.labels.size()) != n) {
    throw Error(ErrorKind::SizeMismatch,
                "label count " + std::to_string(ds.labels.labels.size()) +
                    " != node count " + std::to_string(n));
  }
  ds.labels.num_classes = max_label + 1;

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& line : read_lines(edges_path)) {
    if (blank(line)) continue;
    std::istringstream ss(line);
    std::int64_t u = 0, v = 0;
    if (!(ss >> u >> v)) {
      throw Error(ErrorKind::Data, "unparsable edge line '" + line + "'");
    }
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw Error(ErrorKind::Structural, "edge endpoint out of range: " + line);
    }
    edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
  }
  ds.adjacency = SparseAdjacency::from_edges(n, edges);

  ds.train_mask = parse_index_file(train_split, n, "train split");
  ds.val_mask = parse_index_file(val_split, n, "val split");
  ds.test_mask = parse_index_file(test_split, n, "test split");
  validate_disjoint(ds);
  ds.task = task;
  return ds;
}

void export_edgelist(const Dataset& ds, const fs::path& out) {
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw Error(ErrorKind::Data, "cannot open for writing: " + out.string());
  for (auto [u, v] : ds.adjacency.edge_list()) {
    f << u << " " << v << "\n";
  }
}

Dataset synth_sbm(std::int32_t classes, std::int64_t nodes_per_class, double p_in,
                  double p_out, std::int64_t num_features,
                  double class_center_scale, std::uint64_t seed) {
  if (classes < 1 || nodes_per_class < 1 || num_features < 1) {
    throw Error(ErrorKind::InvalidArgument, "degenerate sbm shape");
  }
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "require 0 <= p_out < p_in <= 1 for sbm edge probabilities");
  }
  const std::int64_t n = classes * nodes_per_class;
  Rng rng(seed);

  DenseMatrix centers(classes, num_features);
  for (std::int32_t c = 0; c < classes; ++c) {
    for (std::int64_t j = 0; j < num_features; ++j) {
      centers(c, j) = class_center_scale * rng.normal();
    }
  }

  Dataset ds;
  ds.features.resize(n, num_features);
  ds.labels.num_classes = classes;
  ds.labels.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int32_t c = static_cast<std::int32_t>(i / nodes_per_class);
    ds.labels.labels[i] = c;
    for (std::int64_t j = 0; j < num_features; ++j) {
      ds.features(i, j) = centers(c, j) + rng.normal();
    }
  }

  // geometric skipping keeps edge generation O(N + E)
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  auto sample_range = [&](std::int64_t i, std::int64_t begin, std::int64_t end,
                          double p) {
    if (p <= 0.0 || begin >= end) return;
    if (p >= 1.0) {
      for (std::int64_t j = begin; j < end; ++j) {
        edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
      return;
    }
    const double log_q = std::log1p(-p);
    std::int64_t j = begin - 1;
    for (;;) {
      double u = rng.uniform();
      while (u >= 1.0) u = rng.uniform();
      j += 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / log_q));
      if (j >= end) break;
      edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  };
  for (std::int32_t a = 0; a < classes; ++a) {
    const std::int64_t a0 = a * nodes_per_class;
    const std::int64_t a1 = a0 + nodes_per_class;
    for (std::int64_t i = a0; i < a1; ++i) sample_range(i, i + 1, a1, p_in);
    for (std::int32_t b = a + 1; b < classes; ++b) {
      const std::int64_t b0 = b * nodes_per_class;
      const std::int64_t b1 = b0 + nodes_per_class;
      for (std::int64_t i = a0; i < a1; ++i) sample_range(i, b0, b1, p_out);
    }
  }
  ds.adjacency = SparseAdjacency::from_edges(n, edges);

  // stratified 60/20/20
  for (std::int32_t c = 0; c < classes; ++c) {
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(nodes_per_class));
    for (std::int64_t k = 0; k < nodes_per_class; ++k) {
      ids[k] = static_cast<std::uint32_t>(c * nodes_per_class + k);
    }
    rng.shuffle(ids);
    const std::int64_t ntr = std::max<std::int64_t>(1, std::llround(0.6 * nodes_per_class));
    const std::int64_t nva = std::min<std::int64_t>(nodes_per_class - ntr,
                                                    std::llround(0.2 * nodes_per_class));
    for (std::int64_t k = 0; k < nodes_per_class; ++k) {
      if (k < ntr) {
        ds.train_mask.push_back(ids[k]);
      } else if (k < ntr + nva) {
        ds.val_mask.push_back(ids[k]);
      } else {
        ds.test_mask.push_back(ids[k]);
      }
    }
  }
  std::sort(ds.train_mask.begin(), ds.train_mask.end());
  std::sort(ds.val_mask.begin(), ds.val_mask.end());
  std::sort(ds.test_mask.begin(), ds.test_mask.end());
  ds.task = TaskKind::Transductive;
  return ds;
}

}  // namespace cgc
