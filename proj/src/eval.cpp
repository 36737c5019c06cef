#include "cgc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "cgc/rng.hpp"

namespace cgc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// General sparse row matrix (not necessarily square/symmetric); used to
// exploit feature sparsity in the evaluator.
struct SparseRows {
  Eigen::Index rows = 0, cols = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> idx;
  std::vector<double> vals;

  static SparseRows from_dense(const DenseMatrix& m) {
    SparseRows s;
    s.rows = m.rows();
    s.cols = m.cols();
    s.offsets.assign(static_cast<std::size_t>(m.rows()) + 1, 0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) {
          s.idx.push_back(static_cast<std::uint32_t>(j));
          s.vals.push_back(m(i, j));
        }
      }
      s.offsets[i + 1] = s.idx.size();
    }
    return s;
  }

  double density() const {
    return rows == 0 || cols == 0
               ? 1.0
               : static_cast<double>(vals.size()) /
                     (static_cast<double>(rows) * static_cast<double>(cols));
  }

  DenseMatrix multiply(const DenseMatrix& w) const {
    DenseMatrix out = DenseMatrix::Zero(rows, w.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto dst = out.row(i);
      for (std::uint64_t p = offsets[i]; p < offsets[i + 1]; ++p) {
        dst += vals[p] * w.row(idx[p]);
      }
    }
    return out;
  }

  // this^T * g
  DenseMatrix transpose_multiply(const DenseMatrix& g) const {
    DenseMatrix out = DenseMatrix::Zero(cols, g.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (std::uint64_t p = offsets[i]; p < offsets[i + 1]; ++p) {
        out.row(idx[p]) += vals[p] * g.row(i);
      }
    }
    return out;
  }
};

// adjacency (CSR with values) times sparse rows -> sparse rows
SparseRows adj_times_sparse(const SparseAdjacency& a, const SparseRows& x) {
  SparseRows out;
  out.rows = a.num_nodes;
  out.cols = x.cols;
  out.offsets.assign(static_cast<std::size_t>(a.num_nodes) + 1, 0);
  std::vector<double> acc(static_cast<std::size_t>(x.cols), 0.0);
  std::vector<std::uint32_t> touched;
  for (std::int64_t i = 0; i < a.num_nodes; ++i) {
    touched.clear();
    for (std::uint64_t p = a.row_offsets[i]; p < a.row_offsets[i + 1]; ++p) {
      const double w = a.values[p];
      const std::uint32_t j = a.col_indices[p];
      for (std::uint64_t q = x.offsets[j]; q < x.offsets[j + 1]; ++q) {
        const std::uint32_t col = x.idx[q];
        if (acc[col] == 0.0) touched.push_back(col);
        acc[col] += w * x.vals[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::uint32_t col : touched) {
      out.idx.push_back(col);
      out.vals.push_back(acc[col]);
      acc[col] = 0.0;
    }
    out.offsets[i + 1] = out.idx.size();
  }
  return out;
}

DenseMatrix glorot(Eigen::Index in, Eigen::Index out_dim, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out_dim));
  DenseMatrix w(in, out_dim);
  for (Eigen::Index i = 0; i < in; ++i) {
    for (Eigen::Index j = 0; j < out_dim; ++j) {
      w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    }
  }
  return w;
}

struct Adam {
  DenseMatrix m, v;
  int t = 0;
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  Adam(Eigen::Index r, Eigen::Index c, double lr_)
      : m(DenseMatrix::Zero(r, c)), v(DenseMatrix::Zero(r, c)), lr(lr_) {}

  void step(DenseMatrix& w, const DenseMatrix& g) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    w -= (lr / c1) * m.cwiseQuotient(((v / c2).cwiseSqrt().array() + eps).matrix());
  }
};

// What the evaluator trains on: either a condensed graph or the original
// training nodes.
struct TrainSide {
  std::optional<NormalizedAdjacency> structure;  // nullopt => identity
  DenseMatrix features_dense;
  SparseRows features_sparse;
  bool sparse = false;
  std::vector<std::int32_t> labels;      // per row
  std::vector<std::int64_t> loss_rows;   // rows entering the loss
  std::int32_t num_classes = 0;

  Eigen::Index n() const {
    return sparse ? features_sparse.rows : features_dense.rows();
  }
  Eigen::Index d() const {
    return sparse ? features_sparse.cols : features_dense.cols();
  }
};

TrainSide train_side_from_artifact(const CondensedArtifact& art) {
  TrainSide t;
  if (art.adjacency) t.structure = normalize(*art.adjacency);
  t.features_dense = art.features;
  t.labels = art.labels;
  t.num_classes = art.num_classes;
  t.loss_rows.resize(art.labels.size());
  for (std::size_t i = 0; i < art.labels.size(); ++i) {
    t.loss_rows[i] = static_cast<std::int64_t>(i);
  }
  return t;
}

TrainSide train_side_from_dataset(const Dataset& ds) {
  TrainSide t;
  t.structure = normalize(ds.adjacency);
  SparseRows s = SparseRows::from_dense(ds.features);
  if (s.density() < 0.25) {
    t.sparse = true;
    t.features_sparse = std::move(s);
  } else {
    t.features_dense = ds.features;
  }
  t.labels = ds.labels.labels;
  t.num_classes = ds.labels.num_classes;
  t.loss_rows.assign(ds.train_mask.begin(), ds.train_mask.end());
  return t;
}

// Where accuracy is measured: the full graph for transductive tasks, the
// held-out (non-training) subgraph for inductive ones.
struct EvalSide {
  NormalizedAdjacency structure;
  DenseMatrix p1_dense;  // structure * features, precomputed
  SparseRows p1_sparse;
  bool sparse = false;
  std::vector<std::int32_t> labels;
  std::vector<std::uint32_t> val_ids;
  std::vector<std::uint32_t> test_ids;
};

EvalSide make_eval_side(const Dataset& original) {
  Dataset held_out;
  const Dataset* ds = &original;
  if (original.task == TaskKind::Inductive) {
    std::vector<std::uint8_t> in_train(original.num_nodes(), 0);
    for (std::uint32_t v : original.train_mask) in_train[v] = 1;
    std::vector<std::uint32_t> keep;
    for (std::int64_t i = 0; i < original.num_nodes(); ++i) {
      if (!in_train[i]) keep.push_back(static_cast<std::uint32_t>(i));
    }
    held_out = induced_subgraph(original, keep);
    ds = &held_out;
  }
  EvalSide e;
  e.structure = normalize(ds->adjacency);
  DenseMatrix p1 = spmm(e.structure, ds->features);
  SparseRows s = SparseRows::from_dense(p1);
  if (s.density() < 0.25) {
    e.sparse = true;
    e.p1_sparse = std::move(s);
  } else {
    e.p1_dense = std::move(p1);
  }
  e.labels = ds->labels.labels;
  e.val_ids = ds->val_mask;
  e.test_ids = ds->test_mask;
  return e;
}

double accuracy(const DenseMatrix& logits, const std::vector<std::int32_t>& labels,
                const std::vector<std::uint32_t>& ids) {
  if (ids.empty()) return 0.0;
  std::int64_t hit = 0;
  for (std::uint32_t v : ids) {
    Eigen::Index pred = 0;
    logits.row(v).maxCoeff(&pred);
    if (static_cast<std::int32_t>(pred) == labels[v]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ids.size());
}

struct GcnWeights {
  DenseMatrix w1, w2;
};

// forward pass on the evaluation graph (no dropout)
std::pair<double, double> eval_accuracies(const EvalSide& e, const GcnWeights& w) {
  DenseMatrix h1 = e.sparse ? e.p1_sparse.multiply(w.w1) : e.p1_dense * w.w1;
  h1 = h1.cwiseMax(0.0);
  DenseMatrix logits = spmm(e.structure, h1 * w.w2);
  return {accuracy(logits, e.labels, e.val_ids),
          accuracy(logits, e.labels, e.test_ids)};
}

double finalize(EvalReport& rep) {
  if (rep.accuracies.empty()) {
    rep.mean = 0.0;
    rep.stddev = 0.0;
    return 0.0;
  }
  double sum = 0.0;
  for (double a : rep.accuracies) sum += a;
  rep.mean = sum / static_cast<double>(rep.accuracies.size());
  double var = 0.0;
  for (double a : rep.accuracies) var += (a - rep.mean) * (a - rep.mean);
  rep.stddev = std::sqrt(var / static_cast<double>(rep.accuracies.size()));
  return rep.mean;
}

EvalReport run_gcn(const TrainSide& tr, const EvalSide& ev, const EvalConfig& cfg) {
  EvalReport rep;
  const Eigen::Index n = tr.n();
  const Eigen::Index d = tr.d();
  const Eigen::Index h = cfg.hidden;
  const Eigen::Index c = tr.num_classes;
  const double keep = 1.0 - cfg.dropout;
  if (!(keep > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "dropout must be < 1");
  }

  for (int repeat = 0; repeat < cfg.repeats; ++repeat) {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(repeat)));
    GcnWeights w{glorot(d, h, rng), glorot(h, c, rng)};
    Adam opt1(d, h, cfg.lr), opt2(h, c, cfg.lr);

    double best_val = -1.0, best_test = 0.0;
    bool diverged = false;

    if (cfg.epochs == 0) {
      auto [va, ta] = eval_accuracies(ev, w);
      best_val = va;
      best_test = ta;
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      // ---- forward on the training graph, dropout on each layer input
      SparseRows xs;
      DenseMatrix xd;
      DenseMatrix a1;           // dense variant of the first aggregation
      SparseRows a1s;           // sparse variant
      bool a1_sparse = false;
      if (tr.sparse) {
        xs = tr.features_sparse;
        if (cfg.dropout > 0.0) {
          for (double& v : xs.vals) {
            v = rng.uniform() < cfg.dropout ? 0.0 : v / keep;
          }
        }
        if (tr.structure) {
          a1s = adj_times_sparse(tr.structure->matrix, xs);
        } else {
          a1s = std::move(xs);
        }
        a1_sparse = true;
      } else {
        xd = tr.features_dense;
        if (cfg.dropout > 0.0) {
          for (Eigen::Index i = 0; i < xd.size(); ++i) {
            double& v = xd.data()[i];
            v = rng.uniform() < cfg.dropout ? 0.0 : v / keep;
          }
        }
        a1 = tr.structure ? spmm(*tr.structure, xd) : std::move(xd);
      }

      DenseMatrix z1 = a1_sparse ? a1s.multiply(w.w1) : a1 * w.w1;
      DenseMatrix h1 = z1.cwiseMax(0.0);

      DenseMatrix mask2;
      if (cfg.dropout > 0.0) {
        mask2.resize(n, h);
        for (Eigen::Index i = 0; i < mask2.size(); ++i) {
          mask2.data()[i] = rng.uniform() < cfg.dropout ? 0.0 : 1.0 / keep;
        }
        h1 = h1.cwiseProduct(mask2);
      }
      DenseMatrix a2 = tr.structure ? spmm(*tr.structure, h1) : h1;
      DenseMatrix logits = a2 * w.w2;

      // softmax cross-entropy over the loss rows
      const double inv = 1.0 / static_cast<double>(tr.loss_rows.size());
      DenseMatrix dlogits = DenseMatrix::Zero(n, c);
      double loss = 0.0;
      for (std::int64_t r : tr.loss_rows) {
        const auto row = logits.row(r);
        const double mx = row.maxCoeff();
        double se = 0.0;
        for (Eigen::Index j = 0; j < c; ++j) se += std::exp(row(j) - mx);
        const double lse = mx + std::log(se);
        loss += (lse - row(tr.labels[r])) * inv;
        for (Eigen::Index j = 0; j < c; ++j) {
          dlogits(r, j) = std::exp(row(j) - lse) * inv;
        }
        dlogits(r, tr.labels[r]) -= inv;
      }
      if (!std::isfinite(loss)) {
        diverged = true;
        break;
      }

      // ---- backward
      DenseMatrix g2 = a2.transpose() * dlogits + cfg.weight_decay * w.w2;
      DenseMatrix dh1 = dlogits * w.w2.transpose();
      if (tr.structure) dh1 = spmm(*tr.structure, dh1);
      if (cfg.dropout > 0.0) dh1 = dh1.cwiseProduct(mask2);
      DenseMatrix dz1 =
          dh1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
      DenseMatrix g1 = (a1_sparse ? a1s.transpose_multiply(dz1)
                                  : DenseMatrix(a1.transpose() * dz1)) +
                       cfg.weight_decay * w.w1;

      opt1.step(w.w1, g1);
      opt2.step(w.w2, g2);

      auto [va, ta] = eval_accuracies(ev, w);
      if (ev.val_ids.empty() || va > best_val) {
        best_val = va;
        best_test = ta;
      }
    }

    rep.wall_ms.push_back(ms_since(t0));
    if (diverged) {
      rep.failed_repeats++;
    } else {
      rep.accuracies.push_back(best_test);
    }
  }
  finalize(rep);
  return rep;
}

}  // namespace

EvalReport train_gcn2(const CondensedArtifact& art, const Dataset& original,
                      const EvalConfig& cfg) {
  if (art.features.cols() != original.num_features()) {
    throw Error(ErrorKind::DimensionMismatch,
                "artifact and dataset feature widths differ");
  }
  return run_gcn(train_side_from_artifact(art), make_eval_side(original), cfg);
}

EvalReport train_gcn2_whole(const Dataset& original, const EvalConfig& cfg) {
  const Dataset* train_ds = &original;
  Dataset induced;
  if (original.task == TaskKind::Inductive) {
    induced = induced_subgraph(original, original.train_mask);
    train_ds = &induced;
  }
  return run_gcn(train_side_from_dataset(*train_ds), make_eval_side(original), cfg);
}

EvalReport eval_sgc_ridge(const CondensedArtifact& art, const Dataset& original,
                          int depth, double ridge) {
  const auto t0 = Clock::now();
  if (art.features.cols() != original.num_features()) {
    throw Error(ErrorKind::DimensionMismatch,
                "artifact and dataset feature widths differ");
  }
  DenseMatrix train_feats = art.features;
  if (art.adjacency) {
    NormalizedAdjacency norm = normalize(*art.adjacency);
    for (int l = 0; l < depth; ++l) train_feats = spmm(norm, train_feats);
  }
  const Eigen::Index np = train_feats.rows();
  const Eigen::Index d = train_feats.cols();
  DenseMatrix targets = DenseMatrix::Zero(np, art.num_classes);
  for (Eigen::Index i = 0; i < np; ++i) targets(i, art.labels[i]) = 1.0;

  DenseMatrix weights;
  if (np <= d) {
    Eigen::MatrixXd gram = train_feats * train_feats.transpose();
    gram.diagonal().array() += ridge;
    weights = train_feats.transpose() *
              Eigen::LDLT<Eigen::MatrixXd>(gram).solve(Eigen::MatrixXd(targets));
  } else {
    Eigen::MatrixXd gram = train_feats.transpose() * train_feats;
    gram.diagonal().array() += ridge;
    weights = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(
        Eigen::MatrixXd(train_feats.transpose() * targets));
  }

  // score on the original graph
  Dataset held_out;
  const Dataset* ds = &original;
  if (original.task == TaskKind::Inductive) {
    std::vector<std::uint8_t> in_train(original.num_nodes(), 0);
    for (std::uint32_t v : original.train_mask) in_train[v] = 1;
    std::vector<std::uint32_t> keep;
    for (std::int64_t i = 0; i < original.num_nodes(); ++i) {
      if (!in_train[i]) keep.push_back(static_cast<std::uint32_t>(i));
    }
    held_out = induced_subgraph(original, keep);
    ds = &held_out;
  }
  NormalizedAdjacency norm = normalize(ds->adjacency);
  DenseMatrix test_feats = ds->features;
  for (int l = 0; l < depth; ++l) test_feats = spmm(norm, test_feats);
  DenseMatrix logits = test_feats * weights;

  EvalReport rep;
  rep.accuracies.push_back(accuracy(logits, ds->labels.labels, ds->test_mask));
  rep.wall_ms.push_back(ms_since(t0));
  finalize(rep);
  return rep;
}

GcnGradients gcn2_loss_gradients(const CondensedArtifact& art,
                                 const DenseMatrix& w1, const DenseMatrix& w2,
                                 double weight_decay) {
  TrainSide tr = train_side_from_artifact(art);
  const Eigen::Index n = tr.n();
  const Eigen::Index c = tr.num_classes;

  DenseMatrix a1 =
      tr.structure ? spmm(*tr.structure, tr.features_dense) : tr.features_dense;
  DenseMatrix z1 = a1 * w1;
  DenseMatrix h1 = z1.cwiseMax(0.0);
  DenseMatrix a2 = tr.structure ? spmm(*tr.structure, h1) : h1;
  DenseMatrix logits = a2 * w2;

  const double inv = 1.0 / static_cast<double>(tr.loss_rows.size());
  DenseMatrix dlogits = DenseMatrix::Zero(n, c);
  double loss = 0.0;
  for (std::int64_t r : tr.loss_rows) {
    const auto row = logits.row(r);
    const double mx = row.maxCoeff();
    double se = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) se += std::exp(row(j) - mx);
    const double lse = mx + std::log(se);
    loss += (lse - row(tr.labels[r])) * inv;
    for (Eigen::Index j = 0; j < c; ++j) {
      dlogits(r, j) = std::exp(row(j) - lse) * inv;
    }
    dlogits(r, tr.labels[r]) -= inv;
  }
  loss += 0.5 * weight_decay * (w1.squaredNorm() + w2.squaredNorm());

  GcnGradients g;
  g.loss = loss;
  g.w2_grad = a2.transpose() * dlogits + weight_decay * w2;
  DenseMatrix dh1 = dlogits * w2.transpose();
  if (tr.structure) dh1 = spmm(*tr.structure, dh1);
  DenseMatrix dz1 = dh1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  g.w1_grad = a1.transpose() * dz1 + weight_decay * w1;
  return g;
}

double gcn2_loss_only(const CondensedArtifact& art, const DenseMatrix& w1,
                      const DenseMatrix& w2, double weight_decay) {
  return gcn2_loss_gradients(art, w1, w2, weight_decay).loss;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracies"] = accuracies;
  j["mean"] = mean;
  j["stddev"] = stddev;
  j["wall_ms"] = wall_ms;
  j["failed_repeats"] = failed_repeats;
  return j.dump(2);
}

std::string EvalReport::csv_row(const std::string& dataset,
                                const std::string& preset, double ratio,
                                const std::string& model, double condense_ms,
                                std::uint64_t seed) const {
  std::ostringstream ss;
  ss << dataset << "," << preset << "," << ratio << "," << model << "," << mean
     << "," << stddev << "," << condense_ms << "," << seed;
  return ss.str();
}

}  // namespace cgc
