#include "cgc/theory.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cgc/rng.hpp"
#include "cgc/structure.hpp"

namespace cgc {

namespace {

DenseMatrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
  DenseMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

std::vector<std::int32_t> random_labels(Eigen::Index n, std::int32_t c, Rng& rng) {
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[i] = i < c ? static_cast<std::int32_t>(i)  // every class present
                      : static_cast<std::int32_t>(rng.uniform_index(c));
  }
  return labels;
}

DenseMatrix one_hot(const std::vector<std::int32_t>& labels, std::int32_t c) {
  DenseMatrix y = DenseMatrix::Zero(static_cast<Eigen::Index>(labels.size()), c);
  for (std::size_t i = 0; i < labels.size(); ++i) y(i, labels[i]) = 1.0;
  return y;
}

bool rank_ok(const DenseMatrix& z_full, const DenseMatrix& z_small) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_full(z_full);
  if (svd_full.singularValues()(svd_full.singularValues().size() - 1) <
      1e-6 * svd_full.singularValues()(0)) {
    return false;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_small(z_small);
  return svd_small.singularValues()(svd_small.singularValues().size() - 1) >
         1e-6 * svd_small.singularValues()(0);
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

RandomInstance RandomInstance::generate(Eigen::Index n, Eigen::Index d,
                                        Eigen::Index n_small, std::int32_t c,
                                        std::uint64_t seed) {
  if (!(n > d && d > n_small && n_small >= c)) {
    throw Error(ErrorKind::InvalidArgument,
                "rank preconditions need n > d > n_small >= c");
  }
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    RandomInstance inst;
    inst.z_full = gaussian(n, d, rng);
    inst.z_small = gaussian(n_small, d, rng);
    inst.labels_full = random_labels(n, c, rng);
    inst.labels_small = random_labels(n_small, c, rng);
    inst.y_full = one_hot(inst.labels_full, c);
    inst.y_small = one_hot(inst.labels_small, c);
    if (rank_ok(inst.z_full, inst.z_small)) return inst;
    if (attempt > 32) {
      throw Error(ErrorKind::Numerical, "could not draw a full-rank instance");
    }
  }
}

RandomInstance RandomInstance::subset_rows(Eigen::Index n, Eigen::Index d,
                                           Eigen::Index n_small, std::int32_t c,
                                           std::uint64_t seed) {
  RandomInstance inst = generate(n, d, n_small, c, seed);
  inst.z_small = inst.z_full.topRows(n_small);
  inst.labels_small.assign(inst.labels_full.begin(),
                           inst.labels_full.begin() + n_small);
  // the first c rows of the full instance carry one node per class
  inst.y_small = one_hot(inst.labels_small, c);
  return inst;
}

CheckReport check_prop1(const RandomInstance& inst) {
  const DenseMatrix& z = inst.z_full;
  const DenseMatrix& zs = inst.z_small;

  Eigen::MatrixXd gram_full = z.transpose() * z;           // d x d, invertible
  Eigen::MatrixXd gram_small = zs * zs.transpose();        // n' x n', invertible
  Eigen::LDLT<Eigen::MatrixXd> full(gram_full);
  Eigen::LDLT<Eigen::MatrixXd> small(gram_small);

  DenseMatrix theta_full = full.solve(Eigen::MatrixXd(z.transpose() * inst.y_full));
  DenseMatrix theta_small = zs.transpose() * small.solve(Eigen::MatrixXd(inst.y_small));

  const double lhs = (theta_full - theta_small).squaredNorm();
  DenseMatrix inner =
      inst.y_full - z * zs.transpose() * small.solve(Eigen::MatrixXd(inst.y_small));
  const double rhs = full.solve(Eigen::MatrixXd(z.transpose() * inner)).squaredNorm();

  // push-through: Z^T (Z Z^T + lI)^-1 = (Z^T Z + lI)^-1 Z^T
  const double l = inst.lambda;
  Eigen::MatrixXd big = z * z.transpose();
  big.diagonal().array() += l;
  Eigen::MatrixXd lhs_pt = z.transpose() * big.inverse();
  Eigen::MatrixXd reg = z.transpose() * z;
  reg.diagonal().array() += l;
  Eigen::MatrixXd rhs_pt = reg.inverse() * z.transpose();
  const double pt_res = (lhs_pt - rhs_pt).norm() / rhs_pt.norm();

  CheckReport rep;
  rep.name = "prop1_identity_chain";
  rep.tolerance = 1e-8;
  rep.residual = std::max(rel_diff(lhs, rhs), pt_res);
  rep.pass = rel_diff(lhs, rhs) <= 1e-8 && pt_res <= 1e-10;
  rep.draws_checked = 1;
  return rep;
}

CheckReport check_prop2(const RandomInstance& inst) {
  const std::int32_t c = static_cast<std::int32_t>(inst.y_full.cols());

  std::vector<double> count_full(static_cast<std::size_t>(c), 0.0);
  std::vector<double> count_small(static_cast<std::size_t>(c), 0.0);
  for (std::int32_t l : inst.labels_full) count_full[l] += 1.0;
  for (std::int32_t l : inst.labels_small) count_small[l] += 1.0;

  // route 1: aggregation matrices
  DenseMatrix p_full = DenseMatrix::Zero(c, inst.z_full.rows());
  for (Eigen::Index j = 0; j < inst.z_full.rows(); ++j) {
    p_full(inst.labels_full[j], j) = 1.0 / count_full[inst.labels_full[j]];
  }
  DenseMatrix p_small = DenseMatrix::Zero(c, inst.z_small.rows());
  for (Eigen::Index j = 0; j < inst.z_small.rows(); ++j) {
    p_small(inst.labels_small[j], j) = 1.0 / count_small[inst.labels_small[j]];
  }
  const double route1 =
      (p_small * inst.z_small - p_full * inst.z_full).squaredNorm();

  // route 2: per-class prototype differences via label products
  double route2 = 0.0;
  for (std::int32_t i = 0; i < c; ++i) {
    Eigen::RowVectorXd proto_full = Eigen::RowVectorXd::Zero(inst.z_full.cols());
    Eigen::RowVectorXd proto_small = Eigen::RowVectorXd::Zero(inst.z_full.cols());
    for (Eigen::Index j = 0; j < inst.z_full.rows(); ++j) {
      if (inst.labels_full[j] == i) proto_full += inst.z_full.row(j);
    }
    for (Eigen::Index j = 0; j < inst.z_small.rows(); ++j) {
      if (inst.labels_small[j] == i) proto_small += inst.z_small.row(j);
    }
    route2 += (proto_full / count_full[i] - proto_small / count_small[i]).squaredNorm();
  }

  CheckReport rep;
  rep.name = "prop2_prototype_identity";
  rep.tolerance = 1e-10;
  rep.residual = rel_diff(route1, route2);
  rep.pass = rep.residual <= rep.tolerance;
  rep.draws_checked = 1;
  return rep;
}

CheckReport check_prop3(const DenseMatrix& h_full, const DenseMatrix& h_small,
                        const std::vector<std::int32_t>& labels_full,
                        const std::vector<std::int32_t>& labels_small,
                        std::int32_t num_classes, std::int64_t theta_draws,
                        std::uint64_t seed) {
  const Eigen::Index d = h_full.cols();
  Rng rng(seed);

  // per-class blocks and their label/correlation summaries
  std::vector<DenseMatrix> g_term(static_cast<std::size_t>(num_classes));
  std::vector<DenseMatrix> b_term(static_cast<std::size_t>(num_classes));
  for (std::int32_t i = 0; i < num_classes; ++i) {
    DenseMatrix sum_corr_full = DenseMatrix::Zero(d, d);
    DenseMatrix sum_corr_small = DenseMatrix::Zero(d, d);
    Eigen::RowVectorXd sum_full = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd sum_small = Eigen::RowVectorXd::Zero(d);
    double n_full = 0.0, n_small = 0.0;
    for (Eigen::Index r = 0; r < h_full.rows(); ++r) {
      if (labels_full[r] != i) continue;
      sum_corr_full += h_full.row(r).transpose() * h_full.row(r);
      sum_full += h_full.row(r);
      n_full += 1.0;
    }
    for (Eigen::Index r = 0; r < h_small.rows(); ++r) {
      if (labels_small[r] != i) continue;
      sum_corr_small += h_small.row(r).transpose() * h_small.row(r);
      sum_small += h_small.row(r);
      n_small += 1.0;
    }
    if (n_full == 0.0 || n_small == 0.0) {
      throw Error(ErrorKind::InvalidArgument,
                  "class " + std::to_string(i) + " empty on one side");
    }
    g_term[i] = sum_corr_full / n_full - sum_corr_small / n_small;  // d x d
    // gradient at theta=0 is -H^T Y; per class only column i is nonzero
    b_term[i] = DenseMatrix::Zero(d, num_classes);
    b_term[i].col(i) = (sum_full / n_full - sum_small / n_small).transpose();
  }

  double corr_sq = 0.0, proto_sq = 0.0;
  for (std::int32_t i = 0; i < num_classes; ++i) {
    corr_sq += g_term[i].squaredNorm();
    proto_sq += b_term[i].squaredNorm();
  }

  CheckReport rep;
  rep.name = "prop3_gradient_bound";
  rep.tolerance = 1e-10;
  rep.draws_checked = theta_draws;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t < theta_draws; ++t) {
    DenseMatrix theta = gaussian(d, num_classes, rng);
    double lhs = 0.0;
    for (std::int32_t i = 0; i < num_classes; ++i) {
      lhs += (g_term[i] * theta - b_term[i]).squaredNorm();
    }
    const double rhs = proto_sq + corr_sq * theta.squaredNorm();
    worst = std::max(worst, lhs - rhs);
    if (lhs > rhs + rep.tolerance) rep.violations++;
  }
  rep.residual = worst;
  rep.pass = rep.violations == 0;
  return rep;
}

CheckReport check_eq10_bound(const DenseMatrix& h_full, const DenseMatrix& h_small,
                             const DenseMatrix& aggregation,
                             std::int64_t theta_draws, std::uint64_t seed) {
  Rng rng(seed);
  const DenseMatrix diff = h_small - aggregation * h_full;
  const double diff_sq = diff.squaredNorm();

  CheckReport rep;
  rep.name = "eq10_submultiplicative_bound";
  rep.tolerance = 1e-10;
  rep.draws_checked = theta_draws;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t < theta_draws; ++t) {
    DenseMatrix theta = gaussian(h_full.cols(), 4, rng);
    const double lhs = (diff * theta).squaredNorm();
    const double rhs = diff_sq * theta.squaredNorm();
    worst = std::max(worst, lhs - rhs);
    if (lhs > rhs + rep.tolerance) rep.violations++;
  }
  rep.residual = worst;
  rep.pass = rep.violations == 0;
  return rep;
}

CheckReport check_prop4(Eigen::Index n_small, Eigen::Index d, double alpha,
                        int depth, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix embeddings = gaussian(n_small, d, rng);
  // random symmetric structure, roughly 20% dense
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (Eigen::Index i = 0; i < n_small; ++i) {
    for (Eigen::Index j = i + 1; j < n_small; ++j) {
      if (rng.uniform() < 0.2) {
        edges.emplace_back(static_cast<std::uint32_t>(i),
                           static_cast<std::uint32_t>(j));
      }
    }
  }
  SparseAdjacency adj = SparseAdjacency::from_edges(n_small, edges);

  const DenseMatrix solution = solve_features(embeddings, adj, alpha, depth);
  const DenseMatrix q = normalized_power(adj, depth);

  DenseMatrix laplacian_x = DenseMatrix::Zero(n_small, d);
  for (Eigen::Index i = 0; i < n_small; ++i) {
    double deg = 0.0;
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      laplacian_x.row(i) -= adj.value_at(p) * solution.row(adj.col_indices[p]);
      deg += adj.value_at(p);
    }
    laplacian_x.row(i) += deg * solution.row(i);
  }
  const DenseMatrix grad =
      2.0 * (q.transpose() * (q * solution - embeddings)) + 2.0 * alpha * laplacian_x;

  CheckReport rep;
  rep.name = "prop4_stationarity";
  rep.tolerance = 1e-6 * embeddings.norm();
  rep.residual = grad.cwiseAbs().maxCoeff();
  const double obj_solution = structure_objective(solution, embeddings, adj, alpha, depth);
  const double obj_naive = structure_objective(embeddings, embeddings, adj, alpha, depth);
  rep.pass = rep.residual <= rep.tolerance &&
             obj_solution <= obj_naive + 1e-6 * (1.0 + obj_naive);
  rep.draws_checked = 1;
  return rep;
}

std::vector<CheckReport> run_all_checks(std::int64_t draws, std::uint64_t seed) {
  std::vector<CheckReport> reports;

  RandomInstance inst = RandomInstance::generate(30, 5, 4, 2, derive_seed(seed, 1));
  reports.push_back(check_prop1(inst));
  reports.push_back(check_prop2(inst));

  Rng rng(derive_seed(seed, 2));
  DenseMatrix h_full = gaussian(20, 8, rng);
  DenseMatrix h_small = gaussian(6, 8, rng);
  std::vector<std::int32_t> labels_full = random_labels(20, 2, rng);
  std::vector<std::int32_t> labels_small = random_labels(6, 2, rng);
  reports.push_back(check_prop3(h_full, h_small, labels_full, labels_small, 2,
                                draws, derive_seed(seed, 3)));

  // random uniform class-partition aggregation for the bound check
  DenseMatrix agg = DenseMatrix::Zero(6, 20);
  {
    std::vector<std::vector<Eigen::Index>> members(6);
    for (Eigen::Index j = 0; j < 20; ++j) {
      // condensed rows of the matching class: rows 0..2 class 0, 3..5 class 1
      const std::int32_t cls = labels_full[j];
      const Eigen::Index base = cls == 0 ? 0 : 3;
      members[base + static_cast<Eigen::Index>(rng.uniform_index(3))].push_back(j);
    }
    for (Eigen::Index i = 0; i < 6; ++i) {
      if (members[i].empty()) {
        // borrow from a non-empty bucket of the same class
        const Eigen::Index lo = i < 3 ? 0 : 3;
        for (Eigen::Index alt = lo; alt < lo + 3; ++alt) {
          if (members[alt].size() > 1) {
            members[i].push_back(members[alt].back());
            members[alt].pop_back();
            break;
          }
        }
      }
      for (Eigen::Index j : members[i]) {
        agg(i, j) = 1.0 / static_cast<double>(members[i].size());
      }
    }
  }
  reports.push_back(check_eq10_bound(h_full, h_small, agg, draws, derive_seed(seed, 4)));

  const double alphas[] = {0.3, 1.0, 3.0};
  CheckReport prop4;
  prop4.name = "prop4_stationarity";
  prop4.pass = true;
  for (int i = 0; i < 3; ++i) {
    CheckReport r = check_prop4(20, 6, alphas[i], 2, derive_seed(seed, 5 + i));
    prop4.residual = std::max(prop4.residual, r.residual);
    prop4.tolerance = r.tolerance;
    prop4.pass = prop4.pass && r.pass;
    prop4.draws_checked += 1;
  }
  reports.push_back(prop4);
  return reports;
}

}  // namespace cgc
