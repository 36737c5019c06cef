#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgc/graph.hpp"

namespace cgc {

// Randomized instance for the matching-objective identities. Rank
// conditions (n > d > n_small >= c, full column rank of the large
// embedding, invertible small Gram) are enforced by regeneration.
struct RandomInstance {
  DenseMatrix z_full;    // n x d
  DenseMatrix z_small;   // n_small x d
  DenseMatrix y_full;    // n x c one-hot
  DenseMatrix y_small;   // n_small x c one-hot
  std::vector<std::int32_t> labels_full;
  std::vector<std::int32_t> labels_small;
  double lambda = 1e-3;

  static RandomInstance generate(Eigen::Index n, Eigen::Index d,
                                 Eigen::Index n_small, std::int32_t c,
                                 std::uint64_t seed);
  // variant with the small embedding taken as the first rows of the large one
  static RandomInstance subset_rows(Eigen::Index n, Eigen::Index d,
                                    Eigen::Index n_small, std::int32_t c,
                                    std::uint64_t seed);
};

struct CheckReport {
  std::string name;
  double residual = 0.0;   // worst relative residual (identity checks)
  double tolerance = 0.0;
  std::int64_t draws_checked = 0;
  std::int64_t violations = 0;  // bound checks
  bool pass = false;
};

// value identity between the optimal-parameter difference and its
// regression-residual form, plus the push-through lemma at lambda > 0.
CheckReport check_prop1(const RandomInstance& inst);
// class-prototype identity: aggregated-difference norm vs per-class sum
CheckReport check_prop2(const RandomInstance& inst);
// per-class gradient-difference objective bounded by prototype +
// correlation terms, over random transform draws
CheckReport check_prop3(const DenseMatrix& h_full, const DenseMatrix& h_small,
                        const std::vector<std::int32_t>& labels_full,
                        const std::vector<std::int32_t>& labels_small,
                        std::int32_t num_classes, std::int64_t theta_draws,
                        std::uint64_t seed);
// ||(H' - P H) Theta||^2 <= ||H' - P H||^2 ||Theta||^2 over random draws
CheckReport check_eq10_bound(const DenseMatrix& h_full, const DenseMatrix& h_small,
                             const DenseMatrix& aggregation,
                             std::int64_t theta_draws, std::uint64_t seed);
// stationarity and global optimality of the closed-form feature solve
CheckReport check_prop4(Eigen::Index n_small, Eigen::Index d, double alpha,
                        int depth, std::uint64_t seed);

// Full suite as exercised by the verify-props command.
std::vector<CheckReport> run_all_checks(std::int64_t draws, std::uint64_t seed);

}  // namespace cgc
