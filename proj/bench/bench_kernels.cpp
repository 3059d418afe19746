// Parallel/FFT kernels against the serial and dense references.
//
//   OMP_NUM_THREADS=4 ./difftomo_bench

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "difftomo/experiment.hpp"
#include "difftomo/io.hpp"
#include "difftomo/reference.hpp"

using namespace difftomo;

namespace {

/// Halved 2D layout on a J x J grid covering 0.6 m, contrast-1 Shepp-Logan.
const Problem& problem(int J) {
  static std::map<int, Problem> cache;
  auto it = cache.find(J);
  if (it == cache.end()) {
    ExperimentConfig c = parse_config(R"({"grid": {"dim": 2, "J": 32, "pitch": 0.01875},
                                          "layout": {"preset": "halved_2d"},
                                          "simulation": {"anti_crime_factor": 1}, "method": "cisor"})");
    c.grid.J = J;
    c.grid.pitch = 0.6 / J;
    it = cache.emplace(J, build_problem(c)).first;
  }
  return it->second;
}

CVector random_field(Eigen::Index n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v;
}

void BM_G_fft(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)));
  const CVector x = random_field(static_cast<Eigen::Index>(pb.grid.size()));
  for (auto _ : state) benchmark::DoNotOptimize(pb.scalar_ops->apply_G(x));
}

void BM_G_dense(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)));
  const CMatrix G = reference::dense_G(pb.grid, pb.physics);
  const CVector x = random_field(G.cols());
  for (auto _ : state) benchmark::DoNotOptimize(CVector(G * x));
}

void BM_H_stored(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)));
  const CVector x = random_field(static_cast<Eigen::Index>(pb.grid.size()));
  for (auto _ : state) benchmark::DoNotOptimize(pb.scalar_ops->apply_H(x));
}

void BM_H_matrix_free(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)));
  const CVector x = random_field(static_cast<Eigen::Index>(pb.grid.size()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::matrix_free_H(pb.grid, pb.physics, pb.layout.receivers, x));
  }
}

void BM_gradient_parallel(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)));
  const RVector f = 0.5 * pb.phantom->image;
  for (auto _ : state) benchmark::DoNotOptimize(gradient_data_fidelity(*pb.scalar_ops, f, pb.data, pb.incident));
}

void BM_gradient_serial(benchmark::State& state) {
  const Problem& pb = problem(static_cast<int>(state.range(0)));
  const RVector f = 0.5 * pb.phantom->image;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::serial_gradient(*pb.scalar_ops, f, pb.data, pb.incident));
  }
}

void BM_tv_prox(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const Problem& pb = problem(J);
  const RVector z = pb.phantom->image + 0.1 * random_field(J * J).real();
  for (auto _ : state) benchmark::DoNotOptimize(prox_tv_box(z, pb.grid.shape(), 0.05, {0.0, 1.0}, 20));
}

}  // namespace

BENCHMARK(BM_G_fft)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_G_dense)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_H_stored)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_H_matrix_free)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_gradient_parallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gradient_serial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tv_prox)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
