#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lisa/evidence.hpp"

namespace lisa::memory {

using evidence::EvidenceCounts;
using evidence::GatingConfig;

inline const char* label_word(Label l) { return l == Label::Allow ? "allow" : "refuse"; }
// Prompt-facing vocabulary; ALLOW/REFUSE are rendered as appropriate/inappropriate.
inline const char* label_prompt_word(Label l) {
  return l == Label::Allow ? "appropriate" : "inappropriate";
}
Label parse_label_word(const std::string& word);  // accepts both vocabularies

struct LabelHistogram {
  std::int64_t allow = 0;
  std::int64_t refuse = 0;

  std::int64_t total() const { return allow + refuse; }
  std::int64_t count(Label l) const { return l == Label::Allow ? allow : refuse; }
  void add(Label l, std::int64_t n = 1) { (l == Label::Allow ? allow : refuse) += n; }
  Label majority(Label tie_break = Label::Refuse) const {
    if (allow == refuse) return tie_break;
    return allow > refuse ? Label::Allow : Label::Refuse;
  }
  bool operator==(const LabelHistogram&) const = default;
};

// A deployment scenario. scenario_summary is the canonical short form used
// for embedding; attributes is the structured metadata pivot extraction
// reads; group_id keys the split hygiene between stream and held-out data.
struct CaseRecord {
  std::string case_id;
  std::string domain;  // namespace grouping for mixed-region detection
  std::string scenario_text;
  std::string scenario_summary;
  std::string group_id;
  std::map<std::string, std::string> attributes;

  bool operator==(const CaseRecord&) const = default;
};

// A user-reported correction. Reports exist only for misclassified cases;
// `flipped` records whether label noise was applied and is evaluation
// bookkeeping only — the adaptation path never reads it.
struct Report {
  CaseRecord record;
  Label predicted_label = Label::Allow;
  Label corrected_label = Label::Refuse;
  int day = 0;
  bool flipped = false;

  bool operator==(const Report&) const = default;
};

// A reusable natural-language policy with a recommended label and evidence
// counts. `evidence` is the gated total; `runtime_evidence` is the portion
// accumulated online since induction, tracked separately so a global
// refresh can carry it over only when the statement survives the rebuild.
struct BroadPolicy {
  std::string policy_id;
  std::string statement;
  std::string title;
  std::string description;
  Label recommended_label = Label::Refuse;
  EvidenceCounts evidence;
  EvidenceCounts runtime_evidence;
  std::vector<std::string> provenance;  // inducing report ids, sorted
  LabelHistogram label_skew;
  bool near_conflict = false;

  bool operator==(const BroadPolicy&) const = default;
};

// One decisive attribute (or textual facet) separating the two sides of a
// mixed-label region.
struct PivotCue {
  std::string attribute;
  std::string allow_value;
  std::string refuse_value;
  std::string description;

  bool operator==(const PivotCue&) const = default;
};

// A narrow boundary cue rendered from a mixed-label cluster. Local rules
// are never gated; their evidence is serialized as-is.
struct LocalRule {
  std::string rule_id;
  std::string region_summary;
  Label recommended_label = Label::Refuse;
  std::vector<PivotCue> pivots;
  EvidenceCounts evidence;
  std::string source_cluster_id;
  std::string rendered_text;

  bool operator==(const LocalRule&) const = default;
};

// Immutable deployed memory. Evidence counts on items are the only state
// that moves within a snapshot's lifetime (runtime feedback updates);
// structure never changes after publication.
struct MemorySnapshot {
  std::int64_t version = 0;
  std::vector<BroadPolicy> broad;
  std::vector<LocalRule> local;
  GatingConfig gating;

  const BroadPolicy* find_broad(const std::string& id) const;
  BroadPolicy* find_broad(const std::string& id);
  const LocalRule* find_local(const std::string& id) const;
  LocalRule* find_local(const std::string& id);

  bool operator==(const MemorySnapshot&) const = default;
};

// Append-only store of reports, cumulative across days. Duplicate
// (case_id, day) submissions are rejected.
class ReportBank {
 public:
  void record(Report report);
  const std::vector<Report>& all() const { return reports_; }
  std::vector<Report> on_day(int day) const;
  std::size_t size() const { return reports_.size(); }
  int max_day() const { return max_day_; }

 private:
  std::vector<Report> reports_;
  std::set<std::pair<std::string, int>> seen_;
  int max_day_ = -1;
};

// Applies one corrected label to an item that was surfaced for the case:
// label match increments support, mismatch increments contradiction.
void update_evidence(BroadPolicy& policy, Label corrected_label);
void update_evidence(LocalRule& rule, Label corrected_label);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Snapshot persistence as a JSON document with top-level keys `version`,
// `gating`, `broad`, `local`; evidence pairs as {"support", "contradiction"}.
std::string snapshot_to_json(const MemorySnapshot& snapshot);
MemorySnapshot snapshot_from_json(const std::string& text);
void save_snapshot(const MemorySnapshot& snapshot, const std::filesystem::path& path);
MemorySnapshot load_snapshot(const std::filesystem::path& path);

// Report-bank persistence (same JSON conventions) for the offline refresh CLI.
std::string reports_to_json(const std::vector<Report>& reports);
std::vector<Report> reports_from_json(const std::string& text);
void save_reports(const std::vector<Report>& reports, const std::filesystem::path& path);
std::vector<Report> load_reports(const std::filesystem::path& path);

}  // namespace lisa::memory
