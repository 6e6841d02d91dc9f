// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick one.

#include <benchmark/benchmark.h>

#include <vector>

#include "fastspec/affinity.hpp"
#include "fastspec/lanczos.hpp"
#include "fastspec/quadtree.hpp"
#include "fastspec/synthetic.hpp"

using namespace fastspec;

namespace {

GrayImage test_image(std::size_t side) {
  SyntheticSpec s;
  s.kind = SyntheticKind::four_region;
  s.side = side;
  s.noise_sigma = 0.02;
  return make_synthetic(s).image;
}

AffinityParams params() {
  AffinityParams p;
  p.r = 3;
  p.R = 40;
  p.sigma_C = 1.0;
  return p;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(1) ? "parallel" : "serial"); }

void BM_Sobel(benchmark::State& state) {
  const GrayImage img = test_image(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(edge_map(img, exec_of(state)));
  label(state);
}

void BM_PixelW(benchmark::State& state) {
  const GrayImage img = test_image(static_cast<std::size_t>(state.range(0)));
  const EdgeMap e = edge_map(img);
  for (auto _ : state) benchmark::DoNotOptimize(pixel_W(img, e, params(), kDefaultPixelCap, exec_of(state)));
  label(state);
}

void BM_SuperpixelExact(benchmark::State& state) {
  const GrayImage img = test_image(static_cast<std::size_t>(state.range(0)));
  const EdgeMap e = edge_map(img);
  const QuadTree tree = decompose(img, 0.001);
  for (auto _ : state)
    benchmark::DoNotOptimize(superpixel_W_exact(img, e, params(), tree, kDefaultPixelCap, exec_of(state)));
  label(state);
}

void BM_SuperpixelApprox(benchmark::State& state) {
  const GrayImage img = test_image(static_cast<std::size_t>(state.range(0)));
  const EdgeMap e = edge_map(img);
  const auto stats = superpixel_stats(decompose(img, 1e-4), img);
  for (auto _ : state) benchmark::DoNotOptimize(superpixel_W_approx(stats, e, params(), exec_of(state)));
  label(state);
}

void BM_SpMV(benchmark::State& state) {
  const GrayImage img = test_image(static_cast<std::size_t>(state.range(0)));
  const SparseSymMatrix w = pixel_W(img, edge_map(img), params());
  std::vector<double> x(w.order(), 1.0), y(w.order());
  for (auto _ : state) {
    w.multiply(x, y, exec_of(state));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.nnz()));
  label(state);
}

void BM_Lanczos(benchmark::State& state) {
  const GrayImage img = test_image(static_cast<std::size_t>(state.range(0)));
  const auto lap = degree_and_laplacian(pixel_W(img, edge_map(img), params())).laplacian;
  LanczosOptions o;
  o.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(smallest_k(lap, 4, o));
  label(state);
}

}  // namespace

BENCHMARK(BM_Sobel)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PixelW)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SuperpixelExact)->ArgsProduct({{32, 64}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SuperpixelApprox)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpMV)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Lanczos)->ArgsProduct({{64}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
