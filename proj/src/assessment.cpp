#include "cgc/assessment.hpp"

#include <algorithm>
#include <string>

#include <Eigen/QR>

namespace cgc {

DenseMatrix min_norm_lstsq(const DenseMatrix& a, const DenseMatrix& b) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.solve(Eigen::MatrixXd(b));
}

Assessment fit_probe(const PropagationStack& stack, const LabeledNodes& labels,
                     const std::vector<std::uint32_t>& train_mask) {
  if (train_mask.empty()) {
    throw Error(ErrorKind::InvalidArgument, "fit_probe: empty training set");
  }
  const std::int32_t c = labels.num_classes;
  const auto n_train = static_cast<Eigen::Index>(train_mask.size());
  const Eigen::Index d = stack.layers.front().cols();
  const int depth = stack.depth;

  std::vector<std::int64_t> class_counts(static_cast<std::size_t>(c), 0);
  for (std::uint32_t v : train_mask) class_counts[labels.labels[v]]++;
  for (std::int32_t i = 0; i < c; ++i) {
    if (class_counts[i] == 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "fit_probe: class " + std::to_string(i) +
                      " has no training nodes");
    }
  }

  // depth-averaged training features and one-hot targets
  DenseMatrix mean_feats = DenseMatrix::Zero(n_train, d);
  for (const DenseMatrix& layer : stack.layers) {
    for (Eigen::Index r = 0; r < n_train; ++r) {
      mean_feats.row(r) += layer.row(train_mask[r]);
    }
  }
  mean_feats /= static_cast<double>(depth + 1);

  DenseMatrix targets = DenseMatrix::Zero(n_train, c);
  for (Eigen::Index r = 0; r < n_train; ++r) {
    targets(r, labels.labels[train_mask[r]]) = 1.0;
  }

  Assessment out;
  out.weights = min_norm_lstsq(mean_feats, targets);
  out.train_nodes.assign(train_mask.begin(), train_mask.end());
  out.confidence.resize(n_train, depth + 1);

  DenseMatrix scores;  // reused per depth
  for (int l = 0; l <= depth; ++l) {
    const DenseMatrix& layer = stack.layers[l];
    for (Eigen::Index r = 0; r < n_train; ++r) {
      double s = layer.row(train_mask[r]).dot(
          out.weights.col(labels.labels[train_mask[r]]));
      out.confidence(r, l) = std::clamp(s, 0.0, 1.0);
    }
  }

  // class error rates from the deepest layer's argmax
  std::vector<std::int64_t> wrong(static_cast<std::size_t>(c), 0);
  const DenseMatrix& deepest = stack.layers.back();
  for (Eigen::Index r = 0; r < n_train; ++r) {
    Eigen::RowVectorXd logit = deepest.row(train_mask[r]) * out.weights;
    Eigen::Index pred = 0;
    logit.maxCoeff(&pred);
    std::int32_t truth = labels.labels[train_mask[r]];
    if (static_cast<std::int32_t>(pred) != truth) wrong[truth]++;
  }
  out.raw_class_errors.resize(static_cast<std::size_t>(c));
  out.class_errors.resize(static_cast<std::size_t>(c));
  for (std::int32_t i = 0; i < c; ++i) {
    const double sz = static_cast<double>(class_counts[i]);
    out.raw_class_errors[i] = static_cast<double>(wrong[i]) / sz;
    out.class_errors[i] = (out.raw_class_errors[i] * sz + 1.0) / (sz + 2.0);
  }
  return out;
}

}  // namespace cgc
