#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lisa/memory.hpp"
#include "lisa/retrieval.hpp"

namespace lisa::induction {

using memory::BroadPolicy;
using memory::CaseRecord;
using memory::LabelHistogram;
using memory::LocalRule;
using memory::MemorySnapshot;
using memory::Report;
using memory::ReportBank;

// One parsed item from an inducer response. All five fields are populated
// after parsing; unrecognized labels are resolved by the caller to the
// majority corrected label of the inducing group.
struct InducedItem {
  std::string title;
  std::string description;
  std::string content;
  Label recommended_label = Label::Refuse;
  std::string rule_type = "general_policy";
};

// A semantic cluster of reported cases carrying both labels.
struct MixedCluster {
  std::string cluster_id;
  std::string domain;
  std::vector<std::string> member_case_ids;  // sorted
  LabelHistogram label_histogram;
  double conflict_score = 0.0;  // 1 - max_y n_y / sum_y n_y
  std::string region_summary;
};

struct LabeledCase {
  CaseRecord record;
  Label corrected_label = Label::Refuse;
};

class RefreshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Converts a group of reports into raw policy-item text. The in-repo stub is
// deterministic; the HTTP-backed implementation renders the induction prompt
// and forwards it to an external model.
class PolicyInducer {
 public:
  virtual ~PolicyInducer() = default;
  virtual std::string induce(const std::vector<Report>& group) = 0;
};

// Offline induction prompt for a report group (fixed field order).
std::string render_induction_prompt(const std::vector<Report>& group);

// Parses an inducer response: a JSON object with "insights" and "policies"
// arrays of multiline items (Title / Description / Content / Recommended
// label / Rule type). Items without content are dropped; at most three are
// kept. `majority_label` resolves missing or invalid labels.
std::vector<InducedItem> parse_induced_items(const std::string& raw, Label majority_label);

Label majority_corrected_label(const std::vector<Report>& group);

// Induces broad policy candidates from one day's reports. Evidence is
// initialized from the group: support counts reports whose corrected label
// matches the item, contradiction counts the rest. Provenance covers the
// whole group. Throws RefreshError when the inducer fails after
// `max_attempts` tries.
std::vector<BroadPolicy> induce_broad(const std::vector<Report>& day_reports,
                                      PolicyInducer& inducer, int max_attempts = 2);

// Average-linkage agglomerative clustering over cosine distance with no
// fixed cluster count; clusters are merged while the linkage distance stays
// <= distance_threshold. Ties are broken by the smallest member id so the
// result is independent of input order permutations with equal ids.
std::vector<std::vector<std::size_t>> agglomerative_cluster(
    const std::vector<retrieval::EmbeddingVector>& points, double distance_threshold,
    const std::vector<std::string>& tie_ids);

// Merges semantically overlapping candidates. One representative per
// cluster (maximum cosine similarity to the cluster centroid, statement
// reused verbatim; ties to the smaller policy_id); evidence, label skew and
// provenance are element-wise sums/unions over members.
std::vector<BroadPolicy> merge_broad(const std::vector<BroadPolicy>& candidates,
                                     const retrieval::Embedder& embedder);

// Clusters reported cases per namespace over scenario-summary embeddings
// (threshold 0.20, minimum size 2) and keeps clusters containing both
// labels. conflict_score = 1 - max_y n_y / sum_y n_y.
std::vector<MixedCluster> detect_mixed_regions(const std::vector<LabeledCase>& cases,
                                               const retrieval::Embedder& embedder);

// Renders exactly two complementary label-specific rules for a mixed
// cluster. Pivots are the attributes (and summary facets) whose common
// values differ between the ALLOW and REFUSE members; when none can be
// extracted the rules carry an explicit "no decisive pivot found" entry.
std::vector<LocalRule> render_local_rules(const MixedCluster& cluster,
                                          const std::vector<LabeledCase>& members);

std::string render_local_rule_text(const std::string& region, Label label,
                                   const evidence::EvidenceCounts& ev,
                                   const std::vector<std::string>& pivot_descriptions);

// Flags broad policies whose statement embedding has cosine similarity
// >= 0.85 (inclusive) to any mixed-region summary.
void mark_near_conflict(std::vector<BroadPolicy>& broad,
                        const std::vector<MixedCluster>& conflicts,
                        const retrieval::Embedder& embedder);

struct RefreshProviders {
  PolicyInducer* inducer = nullptr;
  const retrieval::Embedder* embedder = nullptr;
};

// Drives the global refresh: new failures are induced into raw candidates
// (one induction group per day), the whole candidate bank is re-merged,
// local rules are regenerated from scratch over all reported cases, and
// runtime statistics are carried over only for statements that survive.
// Any failure leaves the refresher state and the previous snapshot intact.
class OfflineRefresher {
 public:
  OfflineRefresher(RefreshProviders providers, evidence::GatingConfig gating);

  MemorySnapshot refresh(const ReportBank& bank, const MemorySnapshot& previous);

  const std::vector<BroadPolicy>& raw_candidates() const { return raw_candidates_; }
  std::int64_t inducer_calls() const { return inducer_calls_; }

 private:
  RefreshProviders providers_;
  evidence::GatingConfig gating_;
  std::vector<BroadPolicy> raw_candidates_;
  int last_induced_day_ = -1;
  std::int64_t inducer_calls_ = 0;
};

}  // namespace lisa::induction
