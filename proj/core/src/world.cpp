#include "lisa/world.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace lisa::sim {

namespace {

// Token spellings are part of the stub-embedder contract: all summary and
// policy-template tokens hash into distinct buckets (checked in tests).
const std::vector<std::string> kNamespaces = {"messaging", "calendar", "files", "finance",
                                              "health"};
const std::vector<std::string> kActions = {"share", "send", "post", "store", "forward"};
const std::vector<std::string> kData = {"public_info",   "contact_info", "schedule",
                                        "medical_record", "financial_record", "credentials",
                                        "opinion",        "location"};
const std::vector<std::string> kAudience = {"coworker", "manager", "public",
                                            "external", "friend",  "fringe"};
const std::vector<std::string> kPurpose = {"coordination", "research", "marketing", "support",
                                           "gossip"};

const std::vector<std::string>& values_for(const std::string& key) {
  if (key == "action") return kActions;
  if (key == "data") return kData;
  if (key == "audience") return kAudience;
  if (key == "purpose") return kPurpose;
  if (key == "ns") return kNamespaces;
  throw std::invalid_argument("unknown attribute key: " + key);
}

std::string pick(util::Rng& rng, const std::vector<std::string>& values) {
  return values[util::next_index(rng, values.size())];
}

std::string group_key(const std::string& ns, const std::map<std::string, std::string>& attrs) {
  return "g:" + ns + ":" + attrs.at("action") + ":" + attrs.at("data") + ":" +
         attrs.at("audience") + ":" + attrs.at("purpose");
}

bool rule_matches(const WorldRule& rule, const memory::CaseRecord& record) {
  for (const auto& [key, value] : rule.conditions) {
    if (key == "ns") {
      if (record.domain != value) return false;
    } else {
      const auto it = record.attributes.find(key);
      if (it == record.attributes.end() || it->second != value) return false;
    }
  }
  return true;
}

std::string describe(const std::string& ns, const std::map<std::string, std::string>& attrs) {
  static const std::map<std::string, std::string> data_phrase = {
      {"public_info", "publicly available information"},
      {"contact_info", "personal contact details"},
      {"schedule", "a meeting schedule"},
      {"medical_record", "a medical record"},
      {"financial_record", "a financial record"},
      {"credentials", "account credentials"},
      {"opinion", "a personal opinion"},
      {"location", "someone's current location"}};
  std::ostringstream out;
  out << "In the " << ns << " workspace, a user wants to " << attrs.at("action") << " "
      << data_phrase.at(attrs.at("data")) << " with a " << attrs.at("audience")
      << " contact for " << attrs.at("purpose") << ".";
  return out.str();
}

}  // namespace

SyntheticWorld::SyntheticWorld(const WorldConfig& config, std::uint64_t seed) : config_(config) {
  if (config.plain_rules < 1 || config.mixed_pairs < 0)
    throw std::invalid_argument("SyntheticWorld: invalid rule counts");
  util::Rng rng(seed);

  auto shuffled = [&rng](std::vector<std::string> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[util::next_index(rng, i)]);
    }
    return values;
  };
  const auto data_vals = shuffled(kData);
  const auto audience_vals = shuffled(kAudience);
  const auto purpose_vals = shuffled(kPurpose);
  const auto action_vals = shuffled(kActions);

  // Designed mixed-label neighborhoods: each sits inside a fat risk pattern
  // the base does not know (an unranked data value the rule below marks as
  // refuse-worthy). Within a fixed namespace/action context, one audience
  // value is an exception where the action is appropriate; purpose stays
  // free so each side spans several scenario groups. The base misses the
  // whole pattern, broad induction recovers it and overgeneralizes across
  // the exception, and the resulting corrections make the neighborhood
  // mixed-label. Pair rules sit first in the decision list.
  const int n_pairs = std::min(config.mixed_pairs, 5);
  for (int i = 0; i < n_pairs; ++i) {
    MixedPair pair;
    pair.ns = pick(rng, kNamespaces);
    pair.pivot_key = "audience";
    // The last three audience values stay outside the plain-rule allocation
    // below; pair anchors use the first five data values. One audience value
    // is the benign exception cue across all boundary regions, so reports
    // never carry contradictory orientations for the same pivot value.
    pair.allow_value = audience_vals[3];
    pair.refuse_value = audience_vals[4 + util::next_index(rng, 2)];
    pair.anchor.emplace_back("action", pick(rng, kActions));
    pair.anchor.emplace_back("data", data_vals[i]);

    for (Label label : {Label::Allow, Label::Refuse}) {
      WorldRule rule;
      rule.conditions.emplace_back("ns", pair.ns);
      rule.conditions.insert(rule.conditions.end(), pair.anchor.begin(), pair.anchor.end());
      rule.conditions.emplace_back(pair.pivot_key, label == Label::Allow ? pair.allow_value
                                                                         : pair.refuse_value);
      rule.label = label;
      rule.boundary = true;
      rules_.push_back(std::move(rule));
    }
    pairs_.push_back(std::move(pair));
  }

  // The unknown risk patterns hosting the boundary pairs, scoped to the
  // pair's namespace so the base stays strong outside them.
  for (int i = 0; i < n_pairs; ++i) {
    WorldRule rule;
    rule.conditions.emplace_back("ns", pairs_[i].ns);
    rule.conditions.emplace_back("data", data_vals[i]);
    rule.label = Label::Refuse;
    rule.known_to_base = false;
    rules_.push_back(std::move(rule));
  }

  // Plain rules: each owns a distinct attribute value, so every recurring
  // risk pattern is identifiable from its scenario metadata. Refuse-leaning:
  // the dominant deployment failure mode is novel risk the permissive
  // default lets through. Allow-oriented rules are mostly already known to
  // the base, so allow-corrections stay the rare exception-side signal.
  // Label and coverage shares are exact counts over shuffled positions, so
  // every seed carries the same amount of learnable structure.
  std::vector<std::pair<std::string, std::string>> slots;
  for (int i = n_pairs; i < 8; ++i) slots.emplace_back("data", data_vals[i]);
  for (int i = 0; i < 3; ++i) slots.emplace_back("audience", audience_vals[i]);
  for (const auto& v : purpose_vals) slots.emplace_back("purpose", v);
  for (const auto& v : action_vals) slots.emplace_back("action", v);
  const int n_plain = std::min<int>(config.plain_rules, static_cast<int>(slots.size()));

  std::vector<std::size_t> order(n_plain);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[util::next_index(rng, i)]);
  const int n_refuse = (n_plain * 85 + 50) / 100;
  std::vector<Label> labels(n_plain, Label::Allow);
  for (int i = 0; i < n_refuse; ++i) labels[order[i]] = Label::Refuse;

  std::vector<std::size_t> refuse_idx, allow_idx;
  for (int i = 0; i < n_plain; ++i)
    (labels[i] == Label::Refuse ? refuse_idx : allow_idx).push_back(i);
  auto shuffle_idx = [&rng](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[util::next_index(rng, i)]);
  };
  shuffle_idx(refuse_idx);
  shuffle_idx(allow_idx);
  std::vector<bool> known(n_plain, false);
  const auto n_known_refuse =
      static_cast<std::size_t>(static_cast<double>(refuse_idx.size()) * config.base_coverage + 0.5);
  const auto n_known_allow =
      static_cast<std::size_t>(static_cast<double>(allow_idx.size()) * 0.9 + 0.5);
  for (std::size_t i = 0; i < n_known_refuse && i < refuse_idx.size(); ++i)
    known[refuse_idx[i]] = true;
  for (std::size_t i = 0; i < n_known_allow && i < allow_idx.size(); ++i)
    known[allow_idx[i]] = true;

  for (int i = 0; i < n_plain; ++i) {
    WorldRule rule;
    rule.conditions.push_back(slots[i]);
    rule.label = labels[i];
    rule.known_to_base = known[i];
    rules_.push_back(std::move(rule));
  }
}

memory::CaseRecord SyntheticWorld::finish_case(const std::string& case_id, const std::string& ns,
                                               const std::map<std::string, std::string>& attrs) const {
  memory::CaseRecord record;
  record.case_id = case_id;
  record.domain = ns;
  record.attributes = attrs;
  record.group_id = group_key(ns, attrs);
  record.scenario_summary = "scenario ns=" + ns + " action=" + attrs.at("action") +
                            " data=" + attrs.at("data") + " audience=" + attrs.at("audience") +
                            " purpose=" + attrs.at("purpose");
  record.scenario_text = describe(ns, attrs);
  return record;
}

bool SyntheticWorld::in_heldout_pool(const std::string& group_id) {
  return util::fnv1a64(group_id) % 10 >= 7;
}

memory::CaseRecord SyntheticWorld::sample_case(util::Rng& rng, const std::string& case_id,
                                               bool heldout_pool) const {
  for (int attempt = 0; attempt < 256; ++attempt) {
    std::string ns;
    std::map<std::string, std::string> attrs;
    if (!pairs_.empty() && util::next_bernoulli(rng, config_.boundary_boost)) {
      const MixedPair& pair = pairs_[util::next_index(rng, pairs_.size())];
      ns = pair.ns;
      for (const auto& [key, value] : pair.anchor) attrs[key] = value;
      attrs[pair.pivot_key] =
          util::next_bernoulli(rng, 0.5) ? pair.allow_value : pair.refuse_value;
      attrs["purpose"] = pick(rng, kPurpose);
    } else {
      ns = pick(rng, kNamespaces);
      attrs["action"] = pick(rng, kActions);
      attrs["data"] = pick(rng, kData);
      attrs["audience"] = pick(rng, kAudience);
      attrs["purpose"] = pick(rng, kPurpose);
    }
    if (in_heldout_pool(group_key(ns, attrs)) == heldout_pool) {
      return finish_case(case_id, ns, attrs);
    }
  }
  throw std::runtime_error("SyntheticWorld: failed to sample a case for the requested pool");
}

Label SyntheticWorld::truth(const memory::CaseRecord& record) const {
  for (const auto& rule : rules_)
    if (!rule.base_only && rule_matches(rule, record)) return rule.label;
  return Label::Allow;
}

Label SyntheticWorld::base_decision(const memory::CaseRecord& record) const {
  for (const auto& rule : rules_)
    if (rule.known_to_base && rule_matches(rule, record)) return rule.label;
  return Label::Allow;
}

std::function<Label(const memory::CaseRecord&)> SyntheticWorld::base_fn() const {
  return [this](const memory::CaseRecord& record) { return base_decision(record); };
}

}  // namespace lisa::sim
