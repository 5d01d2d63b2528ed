#include <random>

#include <benchmark/benchmark.h>

#include "autograph/graph.hpp"
#include "autograph/kernels.hpp"

namespace {

using namespace autograph;

Matrix random_matrix(std::size_t r, std::size_t c, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data) v = u(rng) < density ? u(rng) - 0.5 : 0.0;
  return m;
}

SparseGraph random_graph(std::size_t n, std::size_t avg_degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < n * avg_degree / 2; ++k) {
    const NodeId a = pick(rng), b = pick(rng);
    if (a != b) edges.push_back({a, b, 1.0});
  }
  return normalize(SparseGraph::from_edges(n, std::move(edges), false, false), NormMode::symmetric, true);
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 512, 0.05, 1), b = random_matrix(512, 64, 1.0, 2);
  for (auto _ : state) {
    Matrix c = Parallel ? kernels::gemm(a, b) : kernels::serial::gemm(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
}

template <bool Parallel>
void BM_Spmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SparseGraph g = random_graph(n, 8, 3);
  const Matrix h = random_matrix(n, 64, 1.0, 4);
  for (auto _ : state) {
    Matrix y = Parallel ? kernels::spmm(g.view(), h) : kernels::serial::spmm(g.view(), h);
    benchmark::DoNotOptimize(y.data.data());
  }
}

template <bool Parallel>
void BM_GemmTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1.0, 5), b = random_matrix(n, 64, 1.0, 6);
  Matrix c(64, 64);
  for (auto _ : state) {
    if (Parallel)
      kernels::gemm_tn_acc(a, b, c);
    else
      kernels::serial::gemm_tn_acc(a, b, c);
    benchmark::DoNotOptimize(c.data.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(2708)->Arg(20000);
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Arg(2708)->Arg(20000);
BENCHMARK(BM_Spmm<false>)->Name("spmm/serial")->Arg(2708)->Arg(100000);
BENCHMARK(BM_Spmm<true>)->Name("spmm/omp")->Arg(2708)->Arg(100000);
BENCHMARK(BM_GemmTn<false>)->Name("gemm_tn/serial")->Arg(2708)->Arg(100000);
BENCHMARK(BM_GemmTn<true>)->Name("gemm_tn/omp")->Arg(2708)->Arg(100000);

BENCHMARK_MAIN();
