#include <benchmark/benchmark.h>

#include <random>

#include "salc/code_nn.hpp"
#include "salc/floorplan.hpp"
#include "salc/romac.hpp"

using namespace salc;

namespace {

const FloorMap& two_room() {
  static const FloorMap map = FloorMap::load(std::filesystem::path(SALC_DATA_DIR) / "two_room.map");
  return map;
}

void BM_Skeleton(benchmark::State& state) {
  SkeletonOptions opt;
  opt.vertex_stride = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_skeleton(two_room(), opt));
}
BENCHMARK(BM_Skeleton)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ShortestPaths(benchmark::State& state) {
  SkeletonOptions opt;
  opt.vertex_stride = static_cast<int>(state.range(0));
  const Skeleton sk = build_skeleton(two_room(), opt);
  for (auto _ : state) benchmark::DoNotOptimize(shortest_path_matrix(sk));
  state.counters["vertices"] = static_cast<double>(sk.vertex_count());
}
BENCHMARK(BM_ShortestPaths)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_AffinityPropagation(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 0.0);
  Matrix s(n, n);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(gen);
  for (Eigen::Index j = 0; j < n; ++j) s(j, j) = median_preference(s, j);
  for (auto _ : state) benchmark::DoNotOptimize(affinity_propagation(s));
}
BENCHMARK(BM_AffinityPropagation)->Arg(56)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_NetworkStep(benchmark::State& state) {
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  NetworkParams p = init_network(8, 56, kDefaultHiddenSizes, 3);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 3.0);
  Matrix x(8, batch), t(56, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(gen);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(gen);
  NetworkParams grad;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(p, x, t, 1.0, grad));
}
BENCHMARK(BM_NetworkStep)->Arg(1)->Arg(40)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
