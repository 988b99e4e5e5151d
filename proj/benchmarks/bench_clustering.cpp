#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "lisa/induction.hpp"
#include "lisa/retrieval.hpp"
#include "lisa/util.hpp"

namespace {

void BM_AgglomerativeCluster(benchmark::State& state) {
  lisa::retrieval::HashEmbedder embedder;
  lisa::util::Rng rng(3);
  static const std::vector<std::string> ns = {"health", "finance", "files"};
  static const std::vector<std::string> data = {"schedule", "credentials", "opinion", "location"};
  static const std::vector<std::string> audience = {"public", "fringe", "coworker"};

  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<lisa::retrieval::EmbeddingVector> points;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string text = "scenario ns=" + ns[lisa::util::next_index(rng, ns.size())] +
                             " data=" + data[lisa::util::next_index(rng, data.size())] +
                             " audience=" + audience[lisa::util::next_index(rng, audience.size())];
    points.push_back(embedder.embed(text));
    ids.push_back("c" + std::to_string(i));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(lisa::induction::agglomerative_cluster(points, 0.20, ids));
  }
}
BENCHMARK(BM_AgglomerativeCluster)->Arg(50)->Arg(150)->Arg(400);

}  // namespace
