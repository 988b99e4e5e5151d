#include "lisa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lisa/util.hpp"

namespace lisa::retrieval {

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
  const auto tokens = util::tokenize(text);
  if (tokens.empty())
    throw std::invalid_argument("HashEmbedder: cannot embed empty text");
  EmbeddingVector v;
  v.values.assign(kDim, 0.0);
  for (const auto& tok : tokens) {
    v.values[util::fnv1a64(tok) % kDim] += 1.0;
  }
  const double n = v.norm();
  for (double& x : v.values) x /= n;
  return v;
}

std::vector<Scored> retrieve(const EmbeddingVector& query,
                             const std::vector<EmbeddingVector>& pool,
                             const std::vector<std::string>& ids, std::size_t k) {
  if (k < 1) throw std::invalid_argument("retrieve: k must be >= 1");
  if (pool.size() != ids.size())
    throw std::invalid_argument("retrieve: pool/ids size mismatch");
  std::vector<Scored> scored(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    scored[i] = {i, cosine(query, pool[i])};
  std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return ids[a.index] < ids[b.index];
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace lisa::retrieval
