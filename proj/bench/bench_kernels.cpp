// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "flexner/kernels.hpp"
#include "flexner/synthetic.hpp"

using namespace flexner;

namespace {

struct Fixture {
  BilateralModel model;
  std::vector<Sentence> batch;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    SyntheticOptions o;
    o.train = 64;
    o.dev = o.test = 1;
    const SyntheticCorpus c = make_synthetic(o);
    BilateralConfig cfg;
    cfg.right.char_encoder = CharEncoder::kRecurrent;
    cfg.right.word_encoder = WordEncoder::kConvolutional;
    cfg.labelset = iobes_labelset(build_entity_glossary(c.train).classes());
    BilateralModel m(cfg, build_vocab(c.train));
    m.initialize(1);
    std::vector<Sentence> batch;
    for (const auto& s : c.train.sentences) batch.push_back(m.prepare(s));
    return Fixture{std::move(m), std::move(batch)};
  }();
  return f;
}

kernels::BatchOptions options() {
  kernels::BatchOptions o;
  o.dropout_seed = 7;
  return o;
}

void BM_LossAndGradientSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::loss_and_gradient_serial(f.model, f.batch, options()).loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

void BM_LossAndGradientParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::loss_and_gradient_parallel(f.model, f.batch, options()).loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
  state.counters["threads"] = kernels::max_threads();
}

void BM_DecodeSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::decode_serial(f.model, f.batch, Side::kBoth));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

void BM_DecodeParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::decode_parallel(f.model, f.batch, Side::kBoth));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
  state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_LossAndGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossAndGradientParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
