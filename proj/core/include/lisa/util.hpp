#pragma once

#include <cctype>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace lisa::util {

// FNV-1a 64-bit. Fixed constants so hashed features are stable across
// platforms and runs.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= kFnvPrime;
  }
  return h;
}

// Lowercases, splits on whitespace, trims leading/trailing non-alphanumeric
// characters from each token (inner '=', '_' etc. are kept).
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

using Rng = std::mt19937_64;

// Derives an independent sub-seed from a base seed and a purpose tag, so
// separate components (world, stream, noise, ...) draw from disjoint streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = fnv1a64(tag);
  h ^= base + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// Uniform double in [0,1). Avoids std::uniform_real_distribution so the
// byte stream is identical across standard libraries.
inline double next_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). n must be > 0.
inline std::size_t next_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(next_double(rng) * static_cast<double>(n)) % n;
}

inline bool next_bernoulli(Rng& rng, double p) { return next_double(rng) < p; }

// Fixed-precision decimal formatting (printf "%.*f"); deterministic output
// for CSV and prompt rendering.
std::string format_fixed(double value, int digits);

}  // namespace lisa::util
