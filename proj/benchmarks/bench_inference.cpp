#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gpatt/inference.hpp"
#include "gpatt/training.hpp"

namespace {

// n x n quasi-periodic field with a centered hole of 30% of the nodes.
gpatt::ObservationSet holed_field(std::size_t n) {
  const gpatt::Grid g = gpatt::regular_grid(std::vector<std::size_t>{n, n});
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
  std::vector<std::uint8_t> mask(g.size(), 1);
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(0.3) * static_cast<double>(n)));
  const std::size_t lo = (n - side) / 2;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto m = g.multi_index(i);
    const double x = static_cast<double>(m[0]), y = static_cast<double>(m[1]);
    v[static_cast<Eigen::Index>(i)] = std::cos(2 * std::numbers::pi * x / 8) * std::cos(2 * std::numbers::pi * y / 8);
    if (m[0] >= lo && m[0] < lo + side && m[1] >= lo && m[1] < lo + side) {
      mask[i] = 0;
      v[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
  return {g, v, mask};
}

// One log marginal likelihood + gradient at initialized GPatt-A hyperparameters.
void BM_LmlAndGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto A = static_cast<std::size_t>(state.range(1));
  const gpatt::ObservationSet y = holed_field(n);
  const gpatt::ProductKernel kernel = gpatt::ProductKernel::smp(2, A);
  std::mt19937_64 rng(0);
  const gpatt::HyperParams h = gpatt::initialize(kernel, y, rng);
  std::size_t iterations = 0;
  for (auto _ : state) {
    const gpatt::LmlEvaluation ev = gpatt::lml_and_gradient(kernel, h, y, {});
    iterations = ev.solve.iterations;
    benchmark::DoNotOptimize(ev.lml.value);
  }
  state.counters["M"] = static_cast<double>(y.num_observed());
  state.counters["pcg_iters"] = static_cast<double>(iterations);
}
BENCHMARK(BM_LmlAndGradient)->ArgsProduct({{38, 120, 378}, {5, 25}})->Unit(benchmark::kMillisecond);

}  // namespace
