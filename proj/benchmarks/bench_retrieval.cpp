#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "lisa/retrieval.hpp"
#include "lisa/util.hpp"

namespace {

using lisa::retrieval::EmbeddingVector;
using lisa::retrieval::HashEmbedder;

std::string random_text(lisa::util::Rng& rng) {
  static const std::vector<std::string> words = {
      "scenario", "ns=health",  "ns=finance",  "action=share",     "action=post",
      "data=schedule", "data=credentials", "audience=public", "audience=fringe",
      "purpose=gossip", "purpose=support"};
  std::string out;
  for (int i = 0; i < 6; ++i)
    out += (i ? " " : "") + words[lisa::util::next_index(rng, words.size())];
  return out;
}

void BM_Embed(benchmark::State& state) {
  HashEmbedder embedder;
  lisa::util::Rng rng(1);
  const std::string text = random_text(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embedder.embed(text));
  }
}
BENCHMARK(BM_Embed);

void BM_Retrieve(benchmark::State& state) {
  HashEmbedder embedder;
  lisa::util::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<EmbeddingVector> pool;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    pool.push_back(embedder.embed(random_text(rng)));
    ids.push_back("id" + std::to_string(i));
  }
  const auto query = embedder.embed(random_text(rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lisa::retrieval::retrieve(query, pool, ids, 5));
  }
}
BENCHMARK(BM_Retrieve)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace
