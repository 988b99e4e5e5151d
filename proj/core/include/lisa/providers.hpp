#pragma once

#include <functional>
#include <memory>
#include <string>

#include "lisa/guardrail.hpp"
#include "lisa/induction.hpp"
#include "lisa/retrieval.hpp"

namespace lisa::providers {

// Deterministic offline manager stand-in. Partitions the group by corrected
// label, ranks summary tokens by frequency (attribute-style `key=value`
// tokens preferred), and renders up to one structured item per label in the
// response format the induction parser expects.
class StubInducer final : public induction::PolicyInducer {
 public:
  std::string induce(const std::vector<memory::Report>& group) override;
};

struct StubGuardOptions {
  // Minimum fraction of a local rule's region tokens present in the case.
  double local_region_overlap = 0.6;
  // Minimum cosine similarity for nearest-case reuse.
  double case_similarity = 0.75;
  // Minimum number of unanimous similar cases before past-case reuse acts.
  int case_min_votes = 4;
};

// Deterministic guard model. Memory tiers are consulted in order: a local
// rule whose region matches and whose pivot cues side with this case, then
// the highest-confidence broad policy whose condition tokens all appear in
// the case summary, then the nearest sufficiently similar past case, then
// the base labeling function.
class StubGuard final : public guardrail::GuardModel {
 public:
  using BaseFn = std::function<Label(const memory::CaseRecord&)>;
  explicit StubGuard(BaseFn base_fn, StubGuardOptions opts = {});

  guardrail::GuardResult decide(const memory::CaseRecord& scenario,
                                const guardrail::MemoryView* memory) override;

 private:
  BaseFn base_fn_;
  StubGuardOptions opts_;
};

// HTTP-backed providers. The endpoint comes from the LISA_HTTP_ENDPOINT
// environment variable (e.g. "http://host:port"); requests POST JSON to
// /embed, /induce and /guard.
class HttpEmbedder final : public retrieval::Embedder {
 public:
  explicit HttpEmbedder(std::string endpoint);
  retrieval::EmbeddingVector embed(std::string_view text) const override;

 private:
  std::string endpoint_;
};

class HttpInducer final : public induction::PolicyInducer {
 public:
  explicit HttpInducer(std::string endpoint);
  std::string induce(const std::vector<memory::Report>& group) override;

 private:
  std::string endpoint_;
};

class HttpGuard final : public guardrail::GuardModel {
 public:
  explicit HttpGuard(std::string endpoint);
  guardrail::GuardResult decide(const memory::CaseRecord& scenario,
                                const guardrail::MemoryView* memory) override;

 private:
  std::string endpoint_;
};

struct ProviderSet {
  std::unique_ptr<retrieval::Embedder> embedder;
  std::unique_ptr<induction::PolicyInducer> inducer;
  std::unique_ptr<guardrail::GuardModel> guard;
};

// provider = "stub" builds the deterministic in-repo providers around the
// given base labeling function; provider = "http" builds HTTP providers from
// LISA_HTTP_ENDPOINT. Throws std::invalid_argument for unknown names or a
// missing endpoint.
ProviderSet make_providers(const std::string& provider, StubGuard::BaseFn base_fn,
                           StubGuardOptions stub_opts = {});

}  // namespace lisa::providers
