#include <doctest.h>

#include <cmath>

#include "cgc/graph.hpp"
#include "cgc/rng.hpp"

using namespace cgc;

namespace {

SparseAdjacency path3() {
  return SparseAdjacency::from_edges(3, {{0, 1}, {1, 2}});
}

// dense reference for the normalized operator
DenseMatrix dense_normalized(const SparseAdjacency& adj) {
  const Eigen::Index n = adj.num_nodes;
  DenseMatrix a = DenseMatrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::uint64_t p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
      a(i, adj.col_indices[p]) = adj.value_at(p);
    }
  }
  Eigen::VectorXd deg = a.rowwise().sum();
  DenseMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = a(i, j) / std::sqrt(deg(i) * deg(j));
    }
  }
  return out;
}

SparseAdjacency random_graph(std::int64_t n, double density, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < density) {
        edges.emplace_back(static_cast<std::uint32_t>(i),
                           static_cast<std::uint32_t>(j));
      }
    }
  }
  return SparseAdjacency::from_edges(n, edges);
}

}  // namespace

TEST_CASE("normalize single isolated node") {
  SparseAdjacency adj = SparseAdjacency::from_edges(1, {});
  NormalizedAdjacency norm = normalize(adj);
  REQUIRE(norm.matrix.nnz() == 1);
  CHECK(norm.matrix.col_indices[0] == 0);
  CHECK(norm.matrix.values[0] == 1.0);
}

TEST_CASE("normalize two-node edge graph") {
  SparseAdjacency adj = SparseAdjacency::from_edges(2, {{0, 1}});
  NormalizedAdjacency norm = normalize(adj);
  DenseMatrix expect(2, 2);
  expect << 0.5, 0.5, 0.5, 0.5;
  DenseMatrix got = spmm(norm, DenseMatrix::Identity(2, 2));
  CHECK((got - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("normalize path graph value") {
  NormalizedAdjacency norm = normalize(path3());
  // entry (0,1): degrees with self-loops are 2 and 3
  bool found = false;
  for (std::uint64_t p = norm.matrix.row_offsets[0]; p < norm.matrix.row_offsets[1]; ++p) {
    if (norm.matrix.col_indices[p] == 1) {
      CHECK(norm.matrix.values[p] == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("normalize rejects asymmetric csr and names the edge") {
  // hand-build an asymmetric CSR: edge (0,1) without its mirror
  CHECK_THROWS_AS(SparseAdjacency::from_csr(2, {0, 1, 1}, {1}), Error);
  try {
    SparseAdjacency::from_csr(2, {0, 1, 1}, {1});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Structural);
    CHECK(std::string(e.what()).find("(0, 1)") != std::string::npos);
  }
}

TEST_CASE("normalize deterministic bit-for-bit") {
  Rng rng(11);
  SparseAdjacency adj = random_graph(12, 0.3, rng);
  NormalizedAdjacency a = normalize(adj);
  NormalizedAdjacency b = normalize(adj);
  CHECK(a.matrix.structurally_equal(b.matrix));
}

TEST_CASE("normalized entries lie in (0,1], regular graph rows sum to one") {
  // 4-cycle is 2-regular: every entry of a row is 1/3, rows sum to 1
  SparseAdjacency cycle = SparseAdjacency::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  NormalizedAdjacency norm = normalize(cycle);
  DenseMatrix ones = DenseMatrix::Ones(4, 1);
  DenseMatrix sums = spmm(norm, ones);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(sums(i, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (double v : norm.matrix.values) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
  // entries stay in (0,1] on irregular graphs too
  Rng rng(5);
  SparseAdjacency g = random_graph(9, 0.4, rng);
  for (double v : normalize(g).matrix.values) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("spmm identity adjacency returns input exactly") {
  SparseAdjacency empty = SparseAdjacency::from_edges(3, {});
  NormalizedAdjacency norm = normalize(empty);
  Rng rng(3);
  DenseMatrix x(3, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  DenseMatrix y = spmm(norm, x);
  CHECK((x - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spmm hand example") {
  SparseAdjacency adj = SparseAdjacency::from_edges(2, {{0, 1}});
  DenseMatrix x(2, 2);
  x << 2, 0, 0, 2;
  DenseMatrix y = spmm(normalize(adj), x);
  DenseMatrix expect(2, 2);
  expect << 1, 1, 1, 1;
  CHECK((y - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("spmm dimension mismatch") {
  SparseAdjacency adj = SparseAdjacency::from_edges(2, {{0, 1}});
  CHECK_THROWS_AS(spmm(normalize(adj), DenseMatrix::Zero(3, 2)), Error);
}

TEST_CASE("spmm matches dense oracle exhaustively on small graphs") {
  // every graph on up to 5 nodes
  for (std::int64_t n = 1; n <= 5; ++n) {
    const int pairs = static_cast<int>(n * (n - 1) / 2);
    for (std::uint32_t mask = 0; mask < (1u << pairs); ++mask) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
      int bit = 0;
      for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j, ++bit) {
          if (mask & (1u << bit)) edges.emplace_back(i, j);
        }
      }
      SparseAdjacency adj = SparseAdjacency::from_edges(n, edges);
      DenseMatrix x(n, 2);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = static_cast<double>((i * 7 + 3) % 11) - 5.0;
      }
      DenseMatrix got = spmm(normalize(adj), x);
      DenseMatrix want = dense_normalized(adj) * x;
      REQUIRE((got - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  // random graphs on 6..8 nodes
  Rng rng(17);
  for (std::int64_t n = 6; n <= 8; ++n) {
    for (int rep = 0; rep < 200; ++rep) {
      SparseAdjacency adj = random_graph(n, 0.35, rng);
      DenseMatrix x(n, 3);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
      DenseMatrix got = spmm(normalize(adj), x);
      DenseMatrix want = dense_normalized(adj) * x;
      REQUIRE((got - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("from_edges merges duplicates and symmetrizes") {
  SparseAdjacency a = SparseAdjacency::from_edges(2, {{0, 1}, {0, 1}});
  CHECK(a.nnz() == 2);  // one undirected edge, both directions
  std::vector<double> w{2.0, 3.0};
  SparseAdjacency b =
      SparseAdjacency::from_edges(2, {{0, 1}, {1, 0}}, &w);
  REQUIRE(b.has_values());
  CHECK(b.values[0] == 5.0);  // merged by summing
  CHECK(b.values[1] == 5.0);
}

TEST_CASE("induced subgraph basics") {
  Dataset ds;
  ds.adjacency = SparseAdjacency::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});  // triangle
  ds.features = DenseMatrix::Identity(3, 3);
  ds.labels.labels = {0, 1, 0};
  ds.labels.num_classes = 2;
  ds.train_mask = {0, 1};
  ds.val_mask = {2};

  SUBCASE("full node set is isomorphic") {
    Dataset sub = induced_subgraph(ds, {0, 1, 2});
    CHECK(sub.adjacency.structurally_equal(ds.adjacency));
    CHECK((sub.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sub.train_mask == ds.train_mask);
  }
  SUBCASE("triangle restricted to two nodes keeps one edge") {
    Dataset sub = induced_subgraph(ds, {0, 1});
    CHECK(sub.num_nodes() == 2);
    CHECK(sub.adjacency.nnz() == 2);
    CHECK(sub.labels.labels == std::vector<std::int32_t>{0, 1});
  }
  SUBCASE("isolated node survives") {
    Dataset iso;
    iso.adjacency = SparseAdjacency::from_edges(3, {{0, 1}});
    iso.features = DenseMatrix::Zero(3, 1);
    iso.labels.labels = {0, 0, 0};
    iso.labels.num_classes = 1;
    Dataset sub = induced_subgraph(iso, {2});
    CHECK(sub.num_nodes() == 1);
    CHECK(sub.adjacency.nnz() == 0);
  }
  SUBCASE("empty node set rejected") {
    CHECK_THROWS_AS(induced_subgraph(ds, {}), Error);
  }
}
