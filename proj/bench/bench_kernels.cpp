// Serial reference kernels vs their OpenMP counterparts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "xsl/evaluation.hpp"
#include "xsl/model.hpp"
#include "xsl/selection.hpp"
#include "xsl/synthetic.hpp"

using namespace xsl;

namespace {

Corpus corpus_of(std::size_t words) {
  SynthConfig cfg;
  cfg.n_words = words;
  cfg.n_objects = words / 2;
  cfg.n_scenes = 4 * words;
  return inject_novel_items(generate_synthetic(cfg, 1), 5, 5);
}

Model model_of(std::size_t words) { return init_model(corpus_of(words), 200, 0.5, 1); }

void BM_SimilarityMatrixSerial(benchmark::State& st) {
  const auto m = model_of(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(similarity_matrix_serial(m));
}

void BM_SimilarityMatrixParallel(benchmark::State& st) {
  const auto m = model_of(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(similarity_matrix(m));
}

void BM_NormalizersSerial(benchmark::State& st) {
  const auto s = similarity_matrix(model_of(static_cast<std::size_t>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(speaker_normalizers_serial(s));
}

void BM_NormalizersParallel(benchmark::State& st) {
  const auto s = similarity_matrix(model_of(static_cast<std::size_t>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(speaker_normalizers(s));
}

struct AccuracyFixture {
  Corpus corpus;
  Model model;
  std::vector<TestScene> scenes;
  explicit AccuracyFixture(std::size_t words)
      : corpus(corpus_of(words)), model(init_model(corpus, 200, 0.5, 1)),
        scenes(build_novel_test_scenes(corpus, 5, 200, 2, 1)) {}
};

// The serial reference scores each scene from scratch; the one-thread run of the
// table-based kernel separates the algorithmic gain from the threading gain.
void BM_AccuracySerial(benchmark::State& st) {
  const AccuracyFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(accuracy_serial(f.model, f.scenes, SelectionStrategy::Bayes));
}

void BM_AccuracyParallel(benchmark::State& st) {
  const AccuracyFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(accuracy(f.model, f.scenes, SelectionStrategy::Bayes));
}

void BM_AccuracyParallelOneThread(benchmark::State& st) {
  const AccuracyFixture f(static_cast<std::size_t>(st.range(0)));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  for (auto _ : st) benchmark::DoNotOptimize(accuracy(f.model, f.scenes, SelectionStrategy::Bayes));
  omp_set_num_threads(saved);
}

}  // namespace

BENCHMARK(BM_SimilarityMatrixSerial)->Arg(40)->Arg(400);
BENCHMARK(BM_SimilarityMatrixParallel)->Arg(40)->Arg(400);
BENCHMARK(BM_NormalizersSerial)->Arg(40)->Arg(400);
BENCHMARK(BM_NormalizersParallel)->Arg(40)->Arg(400);
BENCHMARK(BM_AccuracySerial)->Arg(40)->Arg(400);
BENCHMARK(BM_AccuracyParallel)->Arg(40)->Arg(400);
BENCHMARK(BM_AccuracyParallelOneThread)->Arg(40)->Arg(400);

BENCHMARK_MAIN();
