#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gpatt/kronecker.hpp"

namespace {

Eigen::MatrixXd random_factor(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = normal(rng);
  return B * B.transpose();
}

// Square grids: P factors of size n, N = n^P.
void BM_KronMvprod(benchmark::State& state) {
  const auto P = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<Eigen::Index>(state.range(1));
  std::mt19937_64 rng(1);
  std::vector<Eigen::MatrixXd> factors;
  for (std::size_t p = 0; p < P; ++p) factors.push_back(random_factor(n, rng));
  Eigen::Index N = 1;
  for (const auto& f : factors) N *= f.rows();
  const Eigen::VectorXd u = Eigen::VectorXd::Random(N);
  for (auto _ : state) {
    Eigen::VectorXd v = gpatt::kron_mvprod(factors, u);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetComplexityN(N);
  state.counters["N"] = static_cast<double>(N);
}
BENCHMARK(BM_KronMvprod)->ArgsProduct({{2}, {32, 100, 316}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KronMvprod)->ArgsProduct({{3}, {10, 22, 46}})->Unit(benchmark::kMicrosecond);

void BM_Eigendecompose(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(2);
  const gpatt::KroneckerOperator K({random_factor(n, rng), random_factor(n, rng)});
  for (auto _ : state) {
    gpatt::EigenSystem e = gpatt::eigendecompose(K);
    benchmark::DoNotOptimize(e.values.data());
  }
}
BENCHMARK(BM_Eigendecompose)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
