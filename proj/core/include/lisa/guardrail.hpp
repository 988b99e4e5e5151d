#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lisa/memory.hpp"
#include "lisa/retrieval.hpp"

namespace lisa::guardrail {

using memory::CaseRecord;
using memory::MemorySnapshot;

// How retrieved broad items are gated before serialization.
enum class GateMode { Beta, Accuracy, None };

struct DecideOptions {
  retrieval::RetrievalLimits limits;
  GateMode gate_mode = GateMode::Beta;
  bool use_cases = true;
  bool use_broad = true;
  bool use_local = true;
  // Engage the guard model on retrieved cases alone (case-memory baselines).
  // The full method falls back unless a broad item survives gating or a
  // local rule is retrieved.
  bool engage_on_cases = false;
  // Guard-model failures resolve to REFUSE when set, ALLOW otherwise.
  bool fail_closed = true;
  double latency_base = 1.0;
  double latency_per_block = 0.1;
};

// Structured view of the memory serialized for one decision. Providers that
// proxy to an external model read `prompt`; the in-repo stub reads the
// structured entries.
struct MemoryView {
  struct CaseItem {
    const CaseRecord* record = nullptr;
    Label corrected_label = Label::Refuse;
    double similarity = 0.0;
  };
  struct LocalItem {
    const memory::LocalRule* rule = nullptr;
    double similarity = 0.0;
  };
  struct BroadItem {
    const memory::BroadPolicy* policy = nullptr;
    double similarity = 0.0;
    double confidence = 0.0;
  };
  std::vector<CaseItem> cases;
  std::vector<LocalItem> locals;
  std::vector<BroadItem> broads;
  std::string prompt;

  std::size_t block_count() const { return cases.size() + locals.size() + broads.size(); }
};

struct GuardResult {
  Label label = Label::Refuse;
  std::string rationale;
};

// The online guard model. `memory == nullptr` requests the base decision
// with no memory serialization.
class GuardModel {
 public:
  virtual ~GuardModel() = default;
  virtual GuardResult decide(const CaseRecord& scenario, const MemoryView* memory) = 0;
};

struct Decision {
  std::string case_id;
  Label label = Label::Refuse;
  bool used_fallback = false;
  std::vector<std::string> surfaced_broad_ids;
  std::vector<std::string> surfaced_local_ids;
  std::int64_t snapshot_version = 0;
  double simulated_latency = 1.0;
  std::string rationale;
};

// Reported cases available for similarity retrieval on the online path.
class CasePool {
 public:
  void add(const CaseRecord& record, Label corrected_label, const retrieval::Embedder& embedder);
  std::size_t size() const { return records_.size(); }
  const std::vector<CaseRecord>& records() const { return records_; }
  const std::vector<Label>& corrected() const { return corrected_; }
  const std::vector<retrieval::EmbeddingVector>& embeddings() const { return embeddings_; }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<CaseRecord> records_;
  std::vector<Label> corrected_;
  std::vector<retrieval::EmbeddingVector> embeddings_;
  std::vector<std::string> ids_;
};

// Embeddings for a published snapshot, computed once per version.
struct SnapshotIndex {
  const MemorySnapshot* snapshot = nullptr;
  std::vector<retrieval::EmbeddingVector> broad_embeddings;
  std::vector<std::string> broad_ids;
  std::vector<retrieval::EmbeddingVector> local_embeddings;
  std::vector<std::string> local_ids;

  static SnapshotIndex build(const MemorySnapshot& snapshot, const retrieval::Embedder& embedder);
};

// The online decision path: retrieve candidate memory by similarity, gate
// broad items by confidence, serialize the inference prompt, and query the
// guard model; falls back to the base decision when no broad item survives
// and no local rule is retrieved.
Decision decide(const CaseRecord& record, const SnapshotIndex& index, const CasePool& pool,
                GuardModel& guard, const retrieval::Embedder& embedder,
                const DecideOptions& opts);

// Byte-exact inference prompt over the retrieved memory, blocks in
// retrieval-rank order, confidences printed with four decimals.
std::string serialize_prompt(const CaseRecord& record, const MemoryView& view);

// Routes one corrected label to every item the decision surfaced. Throws
// std::invalid_argument for ids absent from the snapshot.
void apply_feedback(const Decision& decision, Label corrected_label, MemorySnapshot& snapshot);

}  // namespace lisa::guardrail
