#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lisa/memory.hpp"
#include "lisa/util.hpp"

namespace lisa::sim {

struct WorldConfig {
  int plain_rules = 9;
  int mixed_pairs = 5;
  // Fraction of plain rules the base guardrail knows; boundary pairs are
  // always outside its coverage.
  double base_coverage = 0.8;
  // Probability that a sampled case lands in a designed mixed-label
  // neighborhood.
  double boundary_boost = 0.3;

  bool operator==(const WorldConfig&) const = default;
};

// One conjunction -> label entry of the hidden decision list. The key "ns"
// matches the case namespace; all other keys match case attributes.
// base_only rules are wrong beliefs held by the base guardrail: they shape
// base decisions but not ground truth.
struct WorldRule {
  std::vector<std::pair<std::string, std::string>> conditions;
  Label label = Label::Refuse;
  bool known_to_base = false;
  bool base_only = false;
  bool boundary = false;
};

// A seeded synthetic deployment environment: categorical scenario
// attributes, a hidden decision list for ground truth (with designed
// mixed-label neighborhoods), and a base guardrail that knows only part of
// the list. Everything is deterministic given the seed.
class SyntheticWorld {
 public:
  SyntheticWorld(const WorldConfig& config, std::uint64_t seed);

  // Samples a case from the stream or the held-out group pool; group ids
  // never cross pools.
  memory::CaseRecord sample_case(util::Rng& rng, const std::string& case_id,
                                 bool heldout_pool) const;

  Label truth(const memory::CaseRecord& record) const;
  Label base_decision(const memory::CaseRecord& record) const;
  std::function<Label(const memory::CaseRecord&)> base_fn() const;

  const std::vector<WorldRule>& rules() const { return rules_; }
  static bool in_heldout_pool(const std::string& group_id);

 private:
  struct MixedPair {
    std::string ns;
    std::vector<std::pair<std::string, std::string>> anchor;  // fixed non-pivot attributes
    std::string pivot_key;
    std::string allow_value;
    std::string refuse_value;
  };

  memory::CaseRecord finish_case(const std::string& case_id, const std::string& ns,
                                 const std::map<std::string, std::string>& attrs) const;

  WorldConfig config_;
  std::vector<WorldRule> rules_;
  std::vector<MixedPair> pairs_;
};

}  // namespace lisa::sim
