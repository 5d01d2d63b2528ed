#include <doctest.h>

#include <random>
#include <tuple>

#include "autograph/error.hpp"
#include "autograph/graph.hpp"
#include "autograph/kernels.hpp"
#include "oracles.hpp"

using namespace autograph;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double zero_frac = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.data) v = u(rng) < zero_frac ? 0.0 : n(rng);
  return m;
}

SparseGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (u(rng) < p)
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 0.5 + u(rng)});
  return SparseGraph::from_edges(n, std::move(edges), true, true);
}

}  // namespace

TEST_CASE("gemm matches the dense oracle and the serial reference bitwise") {
  std::mt19937_64 rng(1);
  for (auto [m, k, n] : {std::tuple{1, 1, 1}, {7, 13, 5}, {300, 70, 33}, {129, 200, 64}}) {
    const Matrix a = random_matrix(m, k, rng, 0.3);
    const Matrix b = random_matrix(k, n, rng);
    const Matrix c = kernels::gemm(a, b);
    CHECK(c == kernels::serial::gemm(a, b));
    CHECK(oracle::max_abs_diff(c, oracle::matmul(a, b)) < 1e-10);
  }
}

TEST_CASE("gemm_tn and gemm_nt accumulate transposed products") {
  std::mt19937_64 rng(2);
  for (auto [m, k, n] : {std::tuple{5, 3, 4}, {257, 150, 17}, {40, 1, 9}}) {
    const Matrix a = random_matrix(m, k, rng, 0.2);
    const Matrix b = random_matrix(m, n, rng);
    const Matrix c0 = random_matrix(k, n, rng);
    Matrix par = c0, ser = c0;
    kernels::gemm_tn_acc(a, b, par);
    kernels::serial::gemm_tn_acc(a, b, ser);
    CHECK(par == ser);
    Matrix expect = oracle::matmul(oracle::transpose(a), b);
    for (std::size_t i = 0; i < expect.size(); ++i) expect.data[i] += c0.data[i];
    CHECK(oracle::max_abs_diff(par, expect) < 1e-10);

    const Matrix x = random_matrix(m, n, rng);
    const Matrix y = random_matrix(k, n, rng);
    const Matrix d0 = random_matrix(m, k, rng);
    Matrix p2 = d0, s2 = d0;
    kernels::gemm_nt_acc(x, y, p2);
    kernels::serial::gemm_nt_acc(x, y, s2);
    CHECK(p2 == s2);
    Matrix e2 = oracle::matmul(x, oracle::transpose(y));
    for (std::size_t i = 0; i < e2.size(); ++i) e2.data[i] += d0.data[i];
    CHECK(oracle::max_abs_diff(p2, e2) < 1e-10);
  }
}

TEST_CASE("spmm matches dense products and is thread-count invariant") {
  std::mt19937_64 rng(3);
  const SparseGraph g = random_graph(400, 0.02, rng);
  const Matrix h = random_matrix(400, 24, rng);
  const Matrix ser = kernels::serial::spmm(g.view(), h);
  CHECK(oracle::max_abs_diff(ser, oracle::matmul(g.to_dense(), h)) < 1e-10);
  const int saved = kernels::max_threads();
  for (int t : {1, 2, 3, 8}) {
    kernels::set_threads(t);
    CHECK(kernels::spmm(g.view(), h) == ser);
    CHECK(kernels::gemm(h, random_matrix(24, 5, rng)).rows == 400);
  }
  kernels::set_threads(saved);

  Matrix acc(400, 24, 1.0);
  kernels::spmm_acc(g.view(), h, acc);
  for (std::size_t i = 0; i < acc.size(); ++i) CHECK(acc.data[i] == doctest::Approx(ser.data[i] + 1.0));
}

TEST_CASE("kernels reject mismatched shapes") {
  Matrix a(2, 3), b(4, 2), c(3, 3);
  CHECK_THROWS_AS(kernels::gemm(a, b), ContractViolation);
  CHECK_THROWS_AS(kernels::gemm_tn_acc(a, b, c), ContractViolation);
  CHECK_THROWS_AS(kernels::gemm_nt_acc(a, b, c), ContractViolation);
  const auto g = SparseGraph::from_edges(3, {{0, 1, 1.0}}, true, false);
  CHECK_THROWS_AS(kernels::spmm(g.view(), a), ContractViolation);
}
