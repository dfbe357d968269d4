#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "lzwdl/dpm.hpp"
#include "lzwdl/infotheory.hpp"
#include "lzwdl/lzw.hpp"
#include "lzwdl/mdlm.hpp"
#include "lzwdl/random.hpp"

using namespace lzwdl;

namespace {

// Short messages over a small vocabulary, two classes.
LabeledCorpus make_corpus(std::size_t n) {
  const std::vector<std::string> words{"free", "call", "now",  "prize", "see", "you",
                                       "later", "ok",  "home", "the",   "a",   "to"};
  Rng rng(1);
  std::vector<std::string> texts, labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::string t;
    const std::size_t len = 5 + rng.below(15);
    for (std::size_t w = 0; w < len; ++w) {
      if (w) t += ' ';
      t += words[(i % 2) * 4 + rng.below(8)];
    }
    texts.push_back(t);
    labels.push_back(i % 2 ? "ham" : "spam");
  }
  return LabeledCorpus::from_texts(texts, labels, Level::Char);
}

}  // namespace

static void BM_BuildDictionary(benchmark::State& state) {
  const auto corpus = make_corpus(static_cast<std::size_t>(state.range(0)));
  const auto seq = concatenate(corpus);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_dictionary(seq, Level::Char, 32));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(seq.size()));
}
BENCHMARK(BM_BuildDictionary)->Arg(500)->Arg(5000);

static void BM_CountOccurrences(benchmark::State& state) {
  const auto corpus = make_corpus(static_cast<std::size_t>(state.range(0)));
  const auto dict = build_dictionary(concatenate(corpus), Level::Char, 32);
  for (auto _ : state) benchmark::DoNotOptimize(count_occurrences(dict, corpus));
  state.counters["atoms"] = static_cast<double>(dict.size());
}
BENCHMARK(BM_CountOccurrences)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_EncodeCorpus(benchmark::State& state) {
  const auto corpus = make_corpus(2000);
  const auto scored = score_dictionary(build_dictionary(concatenate(corpus), Level::Char, 32),
                                       corpus);
  const auto dict = select_top_k(scored, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(encode_corpus(dict, corpus, 1));
}
BENCHMARK(BM_EncodeCorpus)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_IbBoundary(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<std::vector<double>> p(rows, std::vector<double>(2));
  double total = 0.0;
  for (auto& r : p) {
    for (auto& v : r) total += v = rng.uniform() + 1e-3;
  }
  for (auto& r : p) {
    for (auto& v : r) v /= total;
  }
  const auto joint = JointDistribution::from_rows(p);
  for (auto _ : state) benchmark::DoNotOptimize(ib_boundary(joint));
}
BENCHMARK(BM_IbBoundary)->Arg(8)->Arg(24)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
