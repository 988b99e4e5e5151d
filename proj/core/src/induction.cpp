#include "lisa/induction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lisa/util.hpp"

namespace lisa::induction {

using retrieval::EmbeddingVector;
using nlohmann::json;

namespace {

constexpr double kClusterDistanceThreshold = 0.20;
constexpr int kMinClusterSize = 2;
constexpr double kNearConflictSimilarity = 0.85;
constexpr int kMaxItemsPerGroup = 3;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<Label> try_parse_label(std::string word) {
  for (auto& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  word = trim(word);
  if (word == "appropriate" || word == "allow" || word == "0") return Label::Allow;
  if (word == "inappropriate" || word == "refuse" || word == "1") return Label::Refuse;
  return std::nullopt;
}

std::optional<InducedItem> parse_one_item(const std::string& block, Label majority) {
  InducedItem item;
  bool have_label = false;
  std::istringstream in(block);
  std::string line;
  std::string* open_field = nullptr;
  while (std::getline(in, line)) {
    auto starts = [&](const char* prefix) {
      return line.rfind(prefix, 0) == 0;
    };
    if (starts("Title:")) {
      item.title = trim(line.substr(6));
      open_field = &item.title;
    } else if (starts("Description:")) {
      item.description = trim(line.substr(12));
      open_field = &item.description;
    } else if (starts("Content:")) {
      item.content = trim(line.substr(8));
      open_field = &item.content;
    } else if (starts("Recommended label:")) {
      auto parsed = try_parse_label(line.substr(18));
      if (parsed) {
        item.recommended_label = *parsed;
        have_label = true;
      }
      open_field = nullptr;
    } else if (starts("Rule type:")) {
      std::string rt = trim(line.substr(10));
      if (rt == "general_policy" || rt == "local_exception") item.rule_type = rt;
      open_field = nullptr;
    } else if (open_field && !trim(line).empty()) {
      // continuation line of a multiline field
      *open_field += " " + trim(line);
    }
  }
  if (item.content.empty()) return std::nullopt;
  if (!have_label) item.recommended_label = majority;
  if (item.title.empty()) {
    item.title = item.content.substr(0, std::min<std::size_t>(40, item.content.size()));
  }
  if (item.description.empty()) item.description = item.title;
  return item;
}

std::string report_id(const Report& r) {
  return r.record.case_id + "@d" + std::to_string(r.day);
}

EmbeddingVector centroid(const std::vector<EmbeddingVector>& points,
                         const std::vector<std::size_t>& members) {
  EmbeddingVector c;
  c.values.assign(points[members.front()].values.size(), 0.0);
  for (std::size_t m : members)
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] += points[m].values[i];
  const double n = c.norm();
  if (n > 0.0)
    for (double& v : c.values) v /= n;
  return c;
}

}  // namespace

std::string render_induction_prompt(const std::vector<Report>& group) {
  std::ostringstream out;
  out << "Reported failures to convert into preventive memory:\n\n";
  int i = 1;
  for (const auto& r : group) {
    out << "  Failure " << i++ << ":\n";
    out << "    Scenario: " << r.record.scenario_text << "\n";
    out << "    Model prediction: " << memory::label_prompt_word(r.predicted_label) << "\n";
    out << "    Correct label: " << memory::label_prompt_word(r.corrected_label) << "\n";
    out << "\n";
  }
  out << "Convert these failures into concise, generalizable preventive memory items.\n"
         "Avoid quoting case-specific names or wording. Keep each item compact and\n"
         "reusable. Produce at most 3 items.\n"
         "\n"
         "Each item must follow exactly this multiline format:\n"
         "Title: short risk pattern title\n"
         "Description: one-line summary\n"
         "Content: preventive rule, decisive boundary, and when to defer if needed\n"
         "Recommended label: appropriate or inappropriate\n"
         "Rule type: general_policy or local_exception\n"
         "\n"
         "Respond with JSON: {\"insights\": [\"item1\", \"item2\", ...],\n"
         "\"policies\": [\"item3\", ...]}\n";
  return out.str();
}

std::vector<InducedItem> parse_induced_items(const std::string& raw, Label majority_label) {
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw RefreshError(std::string("inducer response is not valid JSON: ") + e.what());
  }
  std::vector<InducedItem> items;
  for (const char* key : {"insights", "policies"}) {
    for (const auto& entry : j.value(key, json::array())) {
      if (!entry.is_string()) continue;
      if (auto item = parse_one_item(entry.get<std::string>(), majority_label)) {
        items.push_back(std::move(*item));
        if (items.size() >= kMaxItemsPerGroup) return items;
      }
    }
  }
  return items;
}

Label majority_corrected_label(const std::vector<Report>& group) {
  LabelHistogram hist;
  for (const auto& r : group) hist.add(r.corrected_label);
  return hist.majority(Label::Refuse);
}

std::vector<BroadPolicy> induce_broad(const std::vector<Report>& day_reports,
                                      PolicyInducer& inducer, int max_attempts) {
  if (day_reports.empty()) return {};
  const Label majority = majority_corrected_label(day_reports);

  std::vector<InducedItem> items;
  bool parsed = false;
  std::string last_error;
  for (int attempt = 0; attempt < max_attempts && !parsed; ++attempt) {
    try {
      items = parse_induced_items(inducer.induce(day_reports), majority);
      parsed = true;  // a well-formed response with zero items is valid
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (!parsed) throw RefreshError("broad induction failed after retries: " + last_error);
  if (items.empty()) return {};

  LabelHistogram skew;
  std::vector<std::string> provenance;
  for (const auto& r : day_reports) {
    skew.add(r.corrected_label);
    provenance.push_back(report_id(r));
  }
  std::sort(provenance.begin(), provenance.end());

  const int day = day_reports.front().day;
  char day_tag[16];
  std::snprintf(day_tag, sizeof(day_tag), "%03d", day);

  std::vector<BroadPolicy> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    BroadPolicy p;
    p.policy_id = std::string("bp-d") + day_tag + "-" + std::to_string(i);
    p.statement = item.content;
    p.title = item.title;
    p.description = item.description;
    p.recommended_label = item.recommended_label;
    p.evidence.support = skew.count(item.recommended_label);
    p.evidence.contradiction = skew.total() - p.evidence.support;
    p.provenance = provenance;
    p.label_skew = skew;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<std::size_t>> agglomerative_cluster(
    const std::vector<EmbeddingVector>& points, double distance_threshold,
    const std::vector<std::string>& tie_ids) {
  const std::size_t n = points.size();
  if (n != tie_ids.size())
    throw std::invalid_argument("agglomerative_cluster: points/ids size mismatch");
  if (n == 0) return {};

  struct Cluster {
    std::vector<std::size_t> members;
    std::string min_id;
    bool alive = true;
  };
  std::vector<Cluster> clusters(n);
  for (std::size_t i = 0; i < n; ++i) {
    clusters[i].members = {i};
    clusters[i].min_id = tie_ids[i];
  }

  // Linkage matrix, updated with the Lance-Williams rule for average linkage.
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] = retrieval::cosine_distance(points[i], points[j]);

  while (true) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!clusters[i].alive) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!clusters[j].alive) continue;
        const double d = dist[i][j];
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        } else if (d == best && bi < n) {
          auto key = [&](std::size_t a, std::size_t b) {
            const std::string& x = clusters[a].min_id;
            const std::string& y = clusters[b].min_id;
            return x < y ? std::make_pair(x, y) : std::make_pair(y, x);
          };
          if (key(i, j) < key(bi, bj)) {
            bi = i;
            bj = j;
          }
        }
      }
    }
    if (bi == n || best > distance_threshold) break;

    const double wa = static_cast<double>(clusters[bi].members.size());
    const double wb = static_cast<double>(clusters[bj].members.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!clusters[k].alive || k == bi || k == bj) continue;
      dist[bi][k] = dist[k][bi] = (wa * dist[bi][k] + wb * dist[bj][k]) / (wa + wb);
    }
    auto& merged = clusters[bi].members;
    merged.insert(merged.end(), clusters[bj].members.begin(), clusters[bj].members.end());
    clusters[bi].min_id = std::min(clusters[bi].min_id, clusters[bj].min_id);
    clusters[bj].alive = false;
  }

  std::vector<std::vector<std::size_t>> out;
  for (auto& c : clusters) {
    if (!c.alive) continue;
    std::sort(c.members.begin(), c.members.end());
    out.push_back(std::move(c.members));
  }
  std::sort(out.begin(), out.end(),
            [&](const auto& a, const auto& b) { return tie_ids[a.front()] < tie_ids[b.front()]; });
  return out;
}

std::vector<BroadPolicy> merge_broad(const std::vector<BroadPolicy>& candidates,
                                     const retrieval::Embedder& embedder) {
  if (candidates.empty()) return {};

  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].policy_id < candidates[b].policy_id;
  });

  std::vector<EmbeddingVector> points;
  std::vector<std::string> ids;
  points.reserve(order.size());
  for (std::size_t idx : order) {
    points.push_back(embedder.embed(candidates[idx].statement));
    ids.push_back(candidates[idx].policy_id);
  }

  std::vector<BroadPolicy> merged;
  for (const auto& cluster : agglomerative_cluster(points, kClusterDistanceThreshold, ids)) {
    const EmbeddingVector center = centroid(points, cluster);
    std::size_t rep = cluster.front();
    double rep_sim = -2.0;
    for (std::size_t m : cluster) {
      const double sim = retrieval::cosine(points[m], center);
      if (sim > rep_sim || (sim == rep_sim && ids[m] < ids[rep])) {
        rep = m;
        rep_sim = sim;
      }
    }

    BroadPolicy out = candidates[order[rep]];
    out.evidence = {};
    out.label_skew = {};
    std::set<std::string> provenance;
    for (std::size_t m : cluster) {
      const BroadPolicy& member = candidates[order[m]];
      out.evidence.support += member.evidence.support;
      out.evidence.contradiction += member.evidence.contradiction;
      out.label_skew.allow += member.label_skew.allow;
      out.label_skew.refuse += member.label_skew.refuse;
      provenance.insert(member.provenance.begin(), member.provenance.end());
    }
    out.provenance.assign(provenance.begin(), provenance.end());
    out.runtime_evidence = {};
    merged.push_back(std::move(out));
  }
  std::sort(merged.begin(), merged.end(),
            [](const BroadPolicy& a, const BroadPolicy& b) { return a.policy_id < b.policy_id; });
  return merged;
}

std::vector<MixedCluster> detect_mixed_regions(const std::vector<LabeledCase>& cases,
                                               const retrieval::Embedder& embedder) {
  std::map<std::string, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < cases.size(); ++i)
    by_domain[cases[i].record.domain].push_back(i);

  std::vector<MixedCluster> out;
  for (const auto& [domain, indices] : by_domain) {
    std::vector<std::size_t> order = indices;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cases[a].record.case_id < cases[b].record.case_id;
    });
    std::vector<EmbeddingVector> points;
    std::vector<std::string> ids;
    for (std::size_t idx : order) {
      points.push_back(embedder.embed(cases[idx].record.scenario_summary));
      ids.push_back(cases[idx].record.case_id);
    }
    int seq = 0;
    for (const auto& cluster : agglomerative_cluster(points, kClusterDistanceThreshold, ids)) {
      if (cluster.size() < static_cast<std::size_t>(kMinClusterSize)) continue;
      LabelHistogram hist;
      for (std::size_t m : cluster) hist.add(cases[order[m]].corrected_label);
      if (hist.allow == 0 || hist.refuse == 0) continue;  // pure clusters are discarded

      MixedCluster mc;
      mc.cluster_id = domain + "-mx" + std::to_string(seq++);
      mc.domain = domain;
      for (std::size_t m : cluster) mc.member_case_ids.push_back(ids[m]);
      std::sort(mc.member_case_ids.begin(), mc.member_case_ids.end());
      mc.label_histogram = hist;
      const double total = static_cast<double>(hist.total());
      mc.conflict_score = 1.0 - static_cast<double>(std::max(hist.allow, hist.refuse)) / total;

      // Region summary: the summary tokens shared by every member, in the
      // first member's order; falls back to the first member's summary.
      std::vector<std::string> first_tokens =
          util::tokenize(cases[order[cluster.front()]].record.scenario_summary);
      std::vector<std::string> shared;
      for (const auto& tok : first_tokens) {
        bool everywhere = true;
        for (std::size_t m : cluster) {
          const auto toks = util::tokenize(cases[order[m]].record.scenario_summary);
          if (std::find(toks.begin(), toks.end(), tok) == toks.end()) {
            everywhere = false;
            break;
          }
        }
        if (everywhere) shared.push_back(tok);
      }
      if (shared.empty()) {
        mc.region_summary = cases[order[cluster.front()]].record.scenario_summary;
      } else {
        std::string joined;
        for (const auto& tok : shared) {
          if (!joined.empty()) joined += ' ';
          joined += tok;
        }
        mc.region_summary = joined;
      }
      out.push_back(std::move(mc));
    }
  }
  return out;
}

std::string render_local_rule_text(const std::string& region, Label label,
                                   const evidence::EvidenceCounts& ev,
                                   const std::vector<std::string>& pivot_descriptions) {
  std::ostringstream out;
  out << "Local rule: In the boundary-heavy region '" << region << "', treat the case as "
      << memory::label_prompt_word(label) << ".\n";
  out << "Evidence: support=" << ev.support << ", nearby contradictions=" << ev.contradiction
      << ".\n";
  out << "Decisive pivots: ";
  for (std::size_t i = 0; i < pivot_descriptions.size(); ++i) {
    if (i) out << "; ";
    out << pivot_descriptions[i];
  }
  out << ".\n";
  out << "Use this as a narrow exception-level cue when the current case matches the\n"
         "same local pattern.";
  return out.str();
}

std::vector<LocalRule> render_local_rules(const MixedCluster& cluster,
                                          const std::vector<LabeledCase>& members) {
  if (members.empty()) throw std::invalid_argument("render_local_rules: empty member list");

  std::vector<const LabeledCase*> allow_side, refuse_side;
  for (const auto& m : members) {
    (m.corrected_label == Label::Allow ? allow_side : refuse_side).push_back(&m);
  }
  if (allow_side.empty() || refuse_side.empty())
    throw std::invalid_argument("render_local_rules: cluster is not mixed");

  // Attribute pivots: keys whose members agree on one value per side, with
  // the sides disagreeing.
  std::vector<memory::PivotCue> pivots;
  std::set<std::string> keys;
  for (const auto& m : members)
    for (const auto& [k, v] : m.record.attributes) keys.insert(k);
  for (const auto& key : keys) {
    auto common_value = [&](const std::vector<const LabeledCase*>& side) -> std::optional<std::string> {
      std::optional<std::string> value;
      for (const auto* m : side) {
        auto it = m->record.attributes.find(key);
        if (it == m->record.attributes.end()) return std::nullopt;
        if (!value) {
          value = it->second;
        } else if (*value != it->second) {
          return std::nullopt;
        }
      }
      return value;
    };
    auto av = common_value(allow_side);
    auto rv = common_value(refuse_side);
    if (av && rv && *av != *rv) {
      memory::PivotCue cue;
      cue.attribute = key;
      cue.allow_value = *av;
      cue.refuse_value = *rv;
      cue.description = key + " differs: " + *av + " vs " + *rv;
      pivots.push_back(std::move(cue));
    }
  }

  // Textual facets: among each side's five most frequent summary tokens,
  // tokens entirely absent from the other side.
  auto side_tokens = [](const std::vector<const LabeledCase*>& side) {
    std::map<std::string, int> counts;
    for (const auto* m : side)
      for (const auto& tok : util::tokenize(m->record.scenario_summary)) counts[tok]++;
    return counts;
  };
  const auto allow_counts = side_tokens(allow_side);
  const auto refuse_counts = side_tokens(refuse_side);
  auto top_exclusive = [](const std::map<std::string, int>& own,
                          const std::map<std::string, int>& other) {
    std::vector<std::pair<std::string, int>> ranked(own.begin(), own.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > 5) ranked.resize(5);
    std::vector<std::string> exclusive;
    for (const auto& [tok, cnt] : ranked)
      if (!other.count(tok)) exclusive.push_back(tok);
    return exclusive;
  };
  const auto allow_facets = top_exclusive(allow_counts, refuse_counts);
  const auto refuse_facets = top_exclusive(refuse_counts, allow_counts);
  for (std::size_t i = 0; i < std::min(allow_facets.size(), refuse_facets.size()); ++i) {
    const std::string& a = allow_facets[i];
    const std::string& r = refuse_facets[i];
    const bool already = std::any_of(pivots.begin(), pivots.end(), [&](const memory::PivotCue& p) {
      return (a.rfind(p.attribute + "=", 0) == 0 && a == p.attribute + "=" + p.allow_value) ||
             (r.rfind(p.attribute + "=", 0) == 0 && r == p.attribute + "=" + p.refuse_value);
    });
    if (already) continue;
    memory::PivotCue cue;
    cue.attribute = "facet";
    cue.allow_value = a;
    cue.refuse_value = r;
    cue.description = "summary facet differs: " + a + " vs " + r;
    pivots.push_back(std::move(cue));
  }

  std::vector<std::string> descriptions;
  for (const auto& p : pivots) descriptions.push_back(p.description);
  if (descriptions.empty()) descriptions.push_back("no decisive pivot found");

  std::vector<LocalRule> rules;
  for (Label label : {Label::Allow, Label::Refuse}) {
    LocalRule rule;
    rule.rule_id = cluster.cluster_id + (label == Label::Allow ? "-allow" : "-refuse");
    rule.region_summary = cluster.region_summary;
    rule.recommended_label = label;
    rule.pivots = pivots;
    rule.evidence.support = cluster.label_histogram.count(label);
    rule.evidence.contradiction = cluster.label_histogram.total() - rule.evidence.support;
    rule.source_cluster_id = cluster.cluster_id;
    rule.rendered_text = render_local_rule_text(cluster.region_summary, label, rule.evidence,
                                                descriptions);
    rules.push_back(std::move(rule));
  }
  return rules;
}

void mark_near_conflict(std::vector<BroadPolicy>& broad,
                        const std::vector<MixedCluster>& conflicts,
                        const retrieval::Embedder& embedder) {
  if (broad.empty()) return;
  std::vector<EmbeddingVector> regions;
  regions.reserve(conflicts.size());
  for (const auto& c : conflicts) regions.push_back(embedder.embed(c.region_summary));
  for (auto& p : broad) {
    p.near_conflict = false;
    if (regions.empty()) continue;
    const EmbeddingVector stmt = embedder.embed(p.statement);
    for (const auto& region : regions) {
      if (retrieval::cosine(stmt, region) >= kNearConflictSimilarity) {
        p.near_conflict = true;
        break;
      }
    }
  }
}

OfflineRefresher::OfflineRefresher(RefreshProviders providers, evidence::GatingConfig gating)
    : providers_(providers), gating_(gating) {
  if (!providers_.inducer || !providers_.embedder)
    throw std::invalid_argument("OfflineRefresher: inducer and embedder are required");
  gating_.validate();
}

MemorySnapshot OfflineRefresher::refresh(const ReportBank& bank, const MemorySnapshot& previous) {
  // Collect induction groups for days not yet induced; one group per day.
  std::set<int> new_days;
  for (const auto& r : bank.all())
    if (r.day > last_induced_day_) new_days.insert(r.day);

  std::vector<BroadPolicy> candidates = raw_candidates_;
  std::int64_t calls = 0;
  for (int day : new_days) {
    const auto group = bank.on_day(day);
    if (group.empty()) continue;
    auto induced = induce_broad(group, *providers_.inducer);
    ++calls;
    candidates.insert(candidates.end(), induced.begin(), induced.end());
  }

  std::vector<BroadPolicy> merged = merge_broad(candidates, *providers_.embedder);

  // Carry over runtime statistics only for statements that survive.
  for (auto& p : merged) {
    for (const auto& prev : previous.broad) {
      if (prev.statement == p.statement) {
        p.runtime_evidence = prev.runtime_evidence;
        p.evidence.support += prev.runtime_evidence.support;
        p.evidence.contradiction += prev.runtime_evidence.contradiction;
        break;
      }
    }
  }

  std::vector<LabeledCase> labeled;
  labeled.reserve(bank.size());
  for (const auto& r : bank.all()) labeled.push_back({r.record, r.corrected_label});
  const auto regions = detect_mixed_regions(labeled, *providers_.embedder);

  std::vector<LocalRule> local;
  for (const auto& region : regions) {
    std::vector<LabeledCase> members;
    for (const auto& lc : labeled) {
      if (std::binary_search(region.member_case_ids.begin(), region.member_case_ids.end(),
                             lc.record.case_id)) {
        members.push_back(lc);
      }
    }
    auto rules = render_local_rules(region, members);
    local.insert(local.end(), rules.begin(), rules.end());
  }

  mark_near_conflict(merged, regions, *providers_.embedder);

  MemorySnapshot next;
  next.version = previous.version + 1;
  next.broad = std::move(merged);
  next.local = std::move(local);
  next.gating = gating_;

  // Commit refresher state only after the snapshot is fully built.
  raw_candidates_ = std::move(candidates);
  if (!new_days.empty()) last_induced_day_ = *new_days.rbegin();
  inducer_calls_ += calls;
  return next;
}

}  // namespace lisa::induction
