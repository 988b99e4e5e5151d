#include "lisa/providers.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "lisa/util.hpp"

namespace lisa::providers {

using guardrail::GuardResult;
using guardrail::MemoryView;
using memory::CaseRecord;
using memory::Report;
using nlohmann::json;

namespace {

// Ranking preference for condition tokens: structured key=value tokens
// first, ordered by how decision-relevant the key tends to be.
int key_rank(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos) return 9;
  static const std::map<std::string, int> priority = {
      {"data", 0}, {"audience", 1}, {"purpose", 2}, {"action", 3}, {"ns", 4}};
  const auto it = priority.find(token.substr(0, eq));
  return it != priority.end() ? it->second : 5;
}

std::string render_item(const std::string& t1, const std::string& t2, Label label) {
  const std::string lw = memory::label_prompt_word(label);
  std::ostringstream out;
  std::string content;
  if (t2.empty()) {
    content = t1 + " situation indicates " + lw + ". " + t1 + " signal supports " + lw + ".";
  } else {
    content = t1 + " " + t2 + " recommends " + lw + ". repeated " + t1 + " " + t2 +
              " evidence confirms " + lw + ".";
  }
  out << "Title: " << t1 << (t2.empty() ? "" : " with " + t2) << "\n";
  out << "Description: Reported failures indicate " << t1 << (t2.empty() ? "" : " " + t2)
      << " scenarios lean " << lw << ".\n";
  out << "Content: " << content << "\n";
  out << "Recommended label: " << lw << "\n";
  out << "Rule type: general_policy";
  return out.str();
}

double env_or(const char* name, double fallback) {
  const char* v = std::getenv(name);
  return v ? std::atof(v) : fallback;
}

json post_json(const std::string& endpoint, const std::string& path, const json& body) {
  httplib::Client client(endpoint);
  client.set_read_timeout(30, 0);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res)
    throw std::runtime_error("http provider: no response from " + endpoint + path);
  if (res->status != 200)
    throw std::runtime_error("http provider: " + endpoint + path + " returned status " +
                             std::to_string(res->status));
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("http provider: invalid JSON response: ") + e.what());
  }
}

}  // namespace

std::string StubInducer::induce(const std::vector<Report>& group) {
  if (group.empty()) return R"({"insights": [], "policies": []})";

  memory::LabelHistogram hist;
  for (const auto& r : group) hist.add(r.corrected_label);
  const Label majority = hist.majority(Label::Refuse);

  std::map<std::string, int> counts_by_label[2];
  for (const auto& r : group) {
    auto& counts = counts_by_label[static_cast<int>(r.corrected_label)];
    for (const auto& tok : util::tokenize(r.record.scenario_summary)) counts[tok]++;
  }

  // Each item abstracts one failure family: the reports of one corrected
  // label sharing a discriminative attribute token. A diverse family is
  // explained by that token alone; a companion token is added only when it
  // holds in nearly the whole family. Families are consumed greedily by
  // size, so one family yields one item and the same rule re-induces the
  // same statement day after day. The majority label may contribute two
  // items, the minority one, three in total.
  std::vector<std::string> items;
  for (Label label : {majority, opposite(majority)}) {
    if (hist.count(label) < 2) continue;
    std::vector<const Report*> side;
    for (const auto& r : group)
      if (r.corrected_label == label) side.push_back(&r);
    std::sort(side.begin(), side.end(), [](const Report* a, const Report* b) {
      return a->record.case_id < b->record.case_id;
    });
    const auto& own = counts_by_label[static_cast<int>(label)];
    const auto& other = counts_by_label[static_cast<int>(opposite(label))];
    auto other_count = [&](const std::string& tok) {
      const auto it = other.find(tok);
      return it == other.end() ? 0 : it->second;
    };

    std::vector<std::pair<std::string, int>> ranked;
    for (const auto& [tok, cnt] : own) {
      if (tok.find('=') == std::string::npos) continue;
      if (cnt < 2) continue;
      ranked.emplace_back(tok, cnt);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      const int ra = key_rank(a.first), rb = key_rank(b.first);
      if (ra != rb) return ra < rb;
      return a.first < b.first;
    });

    // The minority label reserves one of the three item slots only when it
    // is actually present in the group.
    const int budget = label == majority ? (hist.count(opposite(majority)) < 2 ? 3 : 2) : 1;
    int emitted = 0;
    std::vector<bool> covered(side.size(), false);
    for (const auto& [lead, cnt] : ranked) {
      if (emitted >= budget || static_cast<int>(items.size()) >= 3) break;
      std::vector<std::size_t> family;
      for (std::size_t i = 0; i < side.size(); ++i) {
        if (covered[i]) continue;
        const auto toks = util::tokenize(side[i]->record.scenario_summary);
        if (std::find(toks.begin(), toks.end(), lead) != toks.end()) family.push_back(i);
      }
      if (family.size() < 2) continue;

      std::map<std::string, int> co_counts;
      for (std::size_t i : family) {
        for (const auto& tok : util::tokenize(side[i]->record.scenario_summary)) {
          if (tok != lead && tok.find('=') != std::string::npos) co_counts[tok]++;
        }
      }

      // Opposite-label cases carrying both the lead and the candidate
      // companion rule the companion out.
      auto cross_count = [&](const std::string& tok) {
        int n = 0;
        for (const auto& r : group) {
          if (r.corrected_label != opposite(label)) continue;
          const auto toks = util::tokenize(r.record.scenario_summary);
          if (std::find(toks.begin(), toks.end(), lead) != toks.end() &&
              std::find(toks.begin(), toks.end(), tok) != toks.end())
            ++n;
        }
        return n;
      };
      auto pick_companion = [&](int need) {
        std::string best;
        for (const auto& [tok, cnt2] : co_counts) {
          if (cnt2 < need || cross_count(tok) > 0) continue;
          if (best.empty()) {
            best = tok;
            continue;
          }
          const int ra = key_rank(tok), rb = key_rank(best);
          if (ra < rb || (ra == rb && tok < best)) best = tok;
        }
        return best;
      };

      std::string companion;
      // Cross-label occurrences well below the family size are treated as
      // label noise rather than evidence of a boundary inside the family.
      if (3 * other_count(lead) <= cnt) {
        // The token already separates the labels; add a companion only when
        // it holds in nearly the whole family, since the single-token
        // abstraction generalizes better. A lone token backed by only a
        // couple of unscoped reports is not enough corroboration.
        companion = pick_companion(std::max(2, (static_cast<int>(family.size()) * 4 + 4) / 5));
        if (companion.empty() && cnt < 3) continue;
      } else {
        // The token also occurs under the opposite label: refine with a
        // second token that cleanly separates this family from the opposite
        // side's cases. When no refinement exists the family is ambiguous
        // and is left for a later day.
        companion = pick_companion(2);
        if (companion.empty()) continue;
      }

      std::string t1 = lead, t2 = companion;
      if (!t2.empty() && t2 < t1) std::swap(t1, t2);
      items.push_back(render_item(t1, t2, label));
      for (std::size_t i : family) covered[i] = true;
      ++emitted;
    }
  }

  json out;
  out["insights"] = json::array();
  out["policies"] = items;
  return out.dump();
}

StubGuard::StubGuard(BaseFn base_fn, StubGuardOptions opts)
    : base_fn_(std::move(base_fn)), opts_(opts) {
  if (!base_fn_) throw std::invalid_argument("StubGuard: base labeling function is required");
}

GuardResult StubGuard::decide(const CaseRecord& scenario, const MemoryView* memory_view) {
  if (memory_view == nullptr) {
    return {base_fn_(scenario), "base guardrail"};
  }

  const auto case_tokens_vec = util::tokenize(scenario.scenario_summary);
  const std::set<std::string> case_tokens(case_tokens_vec.begin(), case_tokens_vec.end());

  // Tier 1: local boundary cues. A rule applies when its region overlaps the
  // case and at least one pivot sides with this rule while none side against.
  const memory::LocalRule* best_rule = nullptr;
  double best_score = -1.0;
  for (const auto& item : memory_view->locals) {
    const auto region_tokens = util::tokenize(item.rule->region_summary);
    if (region_tokens.empty()) continue;
    std::size_t present = 0;
    for (const auto& tok : region_tokens) present += case_tokens.count(tok);
    const double overlap =
        static_cast<double>(present) / static_cast<double>(region_tokens.size());
    if (overlap < opts_.local_region_overlap) continue;

    const bool is_allow = item.rule->recommended_label == Label::Allow;
    int own_matches = 0, opposite_matches = 0;
    for (const auto& pivot : item.rule->pivots) {
      const std::string& own = is_allow ? pivot.allow_value : pivot.refuse_value;
      const std::string& other = is_allow ? pivot.refuse_value : pivot.allow_value;
      if (own.empty() && other.empty()) continue;  // "no decisive pivot" marker
      auto matches = [&](const std::string& value) {
        if (pivot.attribute == "facet") return case_tokens.count(value) > 0;
        const auto it = scenario.attributes.find(pivot.attribute);
        return it != scenario.attributes.end() && it->second == value;
      };
      if (matches(own)) ++own_matches;
      if (matches(other)) ++opposite_matches;
    }
    if (own_matches == 0 || opposite_matches > 0) continue;
    const double score = overlap + static_cast<double>(own_matches);
    if (score > best_score) {
      best_score = score;
      best_rule = item.rule;
    }
  }
  if (best_rule) {
    return {best_rule->recommended_label, "local rule " + best_rule->rule_id};
  }

  // Tier 2: broad policies whose condition tokens all appear in the case;
  // the highest-confidence applicable policy decides.
  const memory::BroadPolicy* best_policy = nullptr;
  double best_conf = -1.0;
  for (const auto& item : memory_view->broads) {
    bool applicable = true;
    bool has_condition = false;
    for (const auto& tok : util::tokenize(item.policy->statement)) {
      if (tok.find('=') == std::string::npos) continue;
      has_condition = true;
      if (!case_tokens.count(tok)) {
        applicable = false;
        break;
      }
    }
    if (!applicable || !has_condition) continue;
    if (item.confidence > best_conf) {
      best_conf = item.confidence;
      best_policy = item.policy;
    }
  }
  if (best_policy) {
    return {best_policy->recommended_label, "broad policy " + best_policy->policy_id};
  }

  // Tier 3: past-case reuse. Isolated or conflicting neighbors are weak
  // evidence, so this tier acts only on enough sufficiently similar cases
  // that agree unanimously; repeats of the same scenario group carry one
  // vote.
  int votes[2] = {0, 0};
  std::set<std::string> seen_groups;
  for (const auto& item : memory_view->cases) {
    if (item.similarity < opts_.case_similarity) continue;
    if (!seen_groups.insert(item.record->group_id).second) continue;
    ++votes[static_cast<int>(item.corrected_label)];
  }
  if (votes[0] + votes[1] >= opts_.case_min_votes && (votes[0] == 0 || votes[1] == 0)) {
    return {votes[0] > 0 ? Label::Allow : Label::Refuse, "similar past cases"};
  }

  return {base_fn_(scenario), "base guardrail"};
}

HttpEmbedder::HttpEmbedder(std::string endpoint) : endpoint_(std::move(endpoint)) {}

retrieval::EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  if (text.empty()) throw std::invalid_argument("HttpEmbedder: cannot embed empty text");
  const json res = post_json(endpoint_, "/embed", json{{"text", std::string(text)}});
  retrieval::EmbeddingVector v;
  v.values = res.at("vector").get<std::vector<double>>();
  if (v.values.empty()) throw std::runtime_error("HttpEmbedder: empty vector in response");
  const double n = v.norm();
  if (n > 0.0)
    for (double& x : v.values) x /= n;
  return v;
}

HttpInducer::HttpInducer(std::string endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpInducer::induce(const std::vector<Report>& group) {
  const json res = post_json(endpoint_, "/induce",
                             json{{"prompt", induction::render_induction_prompt(group)}});
  return res.at("text").get<std::string>();
}

HttpGuard::HttpGuard(std::string endpoint) : endpoint_(std::move(endpoint)) {}

GuardResult HttpGuard::decide(const CaseRecord& scenario, const MemoryView* memory_view) {
  json body;
  if (memory_view) {
    body["prompt"] = memory_view->prompt;
  } else {
    body["prompt"] = "Given the following new scenario, determine whether the action is\n"
                     "appropriate or inappropriate from a safety or privacy perspective.\n\n"
                     "Scenario:\n" +
                     scenario.scenario_text +
                     "\n\nRespond with JSON only in this order:\n"
                     "{\"reasoning\": \"final rationale\",\n"
                     " \"label\": \"appropriate\" or \"inappropriate\"}\n";
  }
  const json res = post_json(endpoint_, "/guard", body);
  GuardResult result;
  result.label = memory::parse_label_word(res.at("label").get<std::string>());
  result.rationale = res.value("reasoning", "");
  return result;
}

ProviderSet make_providers(const std::string& provider, StubGuard::BaseFn base_fn,
                           StubGuardOptions stub_opts) {
  ProviderSet set;
  if (provider == "stub") {
    stub_opts.local_region_overlap =
        env_or("LISA_STUB_LOCAL_OVERLAP", stub_opts.local_region_overlap);
    stub_opts.case_similarity = env_or("LISA_STUB_CASE_SIMILARITY", stub_opts.case_similarity);
    stub_opts.case_min_votes = static_cast<int>(
        env_or("LISA_STUB_CASE_MIN_VOTES", static_cast<double>(stub_opts.case_min_votes)));
    set.embedder = std::make_unique<retrieval::HashEmbedder>();
    set.inducer = std::make_unique<StubInducer>();
    set.guard = std::make_unique<StubGuard>(std::move(base_fn), stub_opts);
    return set;
  }
  if (provider == "http") {
    const char* endpoint = std::getenv("LISA_HTTP_ENDPOINT");
    if (!endpoint || !*endpoint)
      throw std::invalid_argument("http provider requires LISA_HTTP_ENDPOINT");
    set.embedder = std::make_unique<HttpEmbedder>(endpoint);
    set.inducer = std::make_unique<HttpInducer>(endpoint);
    set.guard = std::make_unique<HttpGuard>(endpoint);
    return set;
  }
  throw std::invalid_argument("unknown provider '" + provider + "' (expected stub or http)");
}

}  // namespace lisa::providers
