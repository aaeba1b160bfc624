#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "asckit/acdl.hpp"
#include "asckit/ensemble.hpp"
#include "asckit/net.hpp"
#include "asckit/pca.hpp"
#include "asckit/rng.hpp"
#include "asckit/synth.hpp"

using namespace asckit;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void bm_conv1d(benchmark::State& state) {
  Rng rng(1);
  const int filters = 32, rows = 16, width = 7, stride = 2;
  const Eigen::MatrixXd input = random_matrix(rng, rows, 1024);
  std::vector<Eigen::MatrixXd> kernel;
  for (int o = 0; o < filters; ++o) kernel.push_back(random_matrix(rng, rows, width));
  const Eigen::VectorXd bias = random_matrix(rng, filters, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conv1d(input, kernel, bias, stride));
}

void bm_forward_with_taps(benchmark::State& state) {
  Rng rng(2);
  Network net(tiny_chain());
  net.randomize_weights(rng);
  Waveform wave;
  wave.sample_rate = 4000;
  wave.id = "bench";
  wave.samples.resize(2048);
  for (auto& s : wave.samples) s = rng.uniform(-200.0, 200.0);
  const auto taps = tiny_taps();
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_with_taps(wave, taps));
}

void bm_simplex_project(benchmark::State& state) {
  Rng rng(3);
  const Eigen::VectorXd v = random_matrix(rng, state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(simplex_project(v));
}

void bm_sparse_code(benchmark::State& state) {
  Rng rng(4);
  const int n = 64, atoms = 24, classes = 4;
  const Eigen::MatrixXd a = random_matrix(rng, n, atoms);
  const Eigen::MatrixXd w = random_matrix(rng, classes, atoms);
  const Eigen::VectorXd y = random_matrix(rng, n, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(classes);
  g(1) = 1.0;
  const SparseCodeOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(sparse_code(a, w, y, g, opt));
}

void bm_pca_fit(benchmark::State& state) {
  Rng rng(5);
  LayerDataset ds{random_matrix(rng, 64, 200), std::vector<int>(200, 0), "bench"};
  for (auto _ : state) benchmark::DoNotOptimize(pca_fit(ds, 16));
}

void bm_predict_proba(benchmark::State& state) {
  Rng rng(6);
  LayerClassifier c;
  c.support = random_matrix(rng, 16, 100);
  c.alpha = 0.1 * random_matrix(rng, 4, 100);
  c.kernel = {2, 1.0, 1.0, 1e-2};
  c.class_count = 4;
  const Eigen::MatrixXd z = random_matrix(rng, 16, 50);
  for (auto _ : state) benchmark::DoNotOptimize(predict_proba(c, z));
}

void bm_acdl_fit(benchmark::State& state) {
  SubspaceSpec spec;
  spec.examples_per_class = 25;
  const LayerDataset ds = make_subspace_dataset(spec, 9);
  AcdlConfig cfg;
  cfg.initial_atoms_per_class = 8;
  cfg.max_outer_iters = 10;
  cfg.stop_recon_error = 0.0;  // fixed work per repetition
  cfg.normalize_columns = false;
  cfg.seed = 9;
  for (auto _ : state) benchmark::DoNotOptimize(acdl_fit(ds, cfg));
}

}  // namespace

BENCHMARK(bm_conv1d);
BENCHMARK(bm_forward_with_taps);
BENCHMARK(bm_simplex_project)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_sparse_code);
BENCHMARK(bm_pca_fit);
BENCHMARK(bm_predict_proba);
BENCHMARK(bm_acdl_fit)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
