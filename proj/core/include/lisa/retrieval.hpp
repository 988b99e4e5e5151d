#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lisa::retrieval {

// L2-normalized fixed-dimension embedding. The stub dimension is 256.
struct EmbeddingVector {
  std::vector<double> values;

  double norm() const;
  bool operator==(const EmbeddingVector&) const = default;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  return 1.0 - cosine(a, b);
}

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Deterministic for a given backend; rejects empty text.
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Stand-in embedder: FNV-1a token hashing of lowercased whitespace tokens
// into 256 buckets, L2-normalized. Stable across processes and platforms.
class HashEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDim = 256;
  EmbeddingVector embed(std::string_view text) const override;
};

// Per-type retrieval caps used on the online path.
struct RetrievalLimits {
  int max_cases = 5;
  int max_broad = 2;
  int max_local = 2;
};

struct Scored {
  std::size_t index = 0;
  double similarity = 0.0;
};

// Top-k by cosine similarity, descending; ties broken by item id ascending.
// Returns fewer than k entries when the pool is smaller. ids must parallel
// pool. k must be >= 1.
std::vector<Scored> retrieve(const EmbeddingVector& query,
                             const std::vector<EmbeddingVector>& pool,
                             const std::vector<std::string>& ids, std::size_t k);

}  // namespace lisa::retrieval
