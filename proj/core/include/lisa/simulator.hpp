#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lisa/guardrail.hpp"
#include "lisa/induction.hpp"
#include "lisa/providers.hpp"
#include "lisa/world.hpp"

namespace lisa::sim {

// Adaptation methods. The first four form the memory ablation hierarchy
// (pure -> case_memory -> broad_only -> lisa); the lisa_no_* variants ablate
// the full method; gate_accuracy swaps the Beta quantile for empirical
// accuracy. agrail is a reserved id for an unimplemented external baseline.
enum class Method {
  Pure,
  CaseMemory,
  BroadOnly,
  Lisa,
  LisaNoGate,
  LisaNoLocal,
  LisaNoBoth,
  GateAccuracy,
  Agrail,
};

std::optional<Method> parse_method(const std::string& name);
std::string method_name(Method method);
std::vector<std::string> implemented_method_names();
bool method_implemented(Method method);
bool method_uses_policies(Method method);
guardrail::DecideOptions decide_options_for(Method method);

struct DeploymentConfig {
  int days = 10;
  int stream_per_day = 50;
  int heldout_size = 500;
  double noise_rho = 0.0;
  std::uint64_t seed = 1;
  Method method = Method::Lisa;
  evidence::GatingConfig gating;
  WorldConfig world;
  std::string provider = "stub";

  void validate() const;  // throws std::invalid_argument
};

DeploymentConfig config_from_json(const std::string& text);
std::string config_to_json(const DeploymentConfig& config);

struct MetricsRow {
  int day = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double precision_allow = 0.0, recall_allow = 0.0, f1_allow = 0.0;
  double precision_refuse = 0.0, recall_refuse = 0.0, f1_refuse = 0.0;
  bool degenerate_f1 = false;  // some per-class F1 was undefined and taken as 0
  double mean_latency = 0.0;
  int broad_count = 0;
  int local_count = 0;
  double amortized_tokens_in = 0.0;
  double amortized_tokens_out = 0.0;
};

// Label-flip noise on reported corrections; held-out labels are never
// touched. Flips are independent with probability rho and marked on the
// report for evaluation bookkeeping only.
std::vector<memory::Report> apply_noise(std::vector<memory::Report> reports, double rho,
                                        util::Rng& rng);

// Offline induction cost arithmetic: per-reported-failure token costs
// amortized over reuse_k subsequent guarded decisions.
std::pair<double, double> amortized_cost(double tokens_in, double tokens_out,
                                         std::int64_t reuse_k);

inline constexpr double kInduceTokensIn = 427.0;
inline constexpr double kInduceTokensOut = 2300.0;

// Metrics over a prediction/truth pairing (macro-F1 = unweighted mean of the
// two per-class F1 scores; an undefined per-class F1 counts as 0 and sets
// the degenerate flag).
MetricsRow compute_metrics(const std::vector<Label>& predicted, const std::vector<Label>& truth);

struct ExperimentResult {
  DeploymentConfig config;
  std::vector<MetricsRow> rows;           // one per day
  memory::MemorySnapshot final_snapshot;
  std::vector<memory::Report> reports;    // cumulative bank at end of run
  std::string csv;                        // pinned per-day format
};

ExperimentResult run_experiment(const DeploymentConfig& config);

// Runs `seeds` consecutive seeds starting at config.seed and aggregates
// per-day mean/std across them.
struct MultiSeedResult {
  std::vector<ExperimentResult> runs;
  std::string aggregate_csv;
  double final_macro_f1_mean = 0.0;
  double final_macro_f1_std = 0.0;
};

MultiSeedResult run_seeds(DeploymentConfig config, int seeds);

inline constexpr const char* kMetricsCsvHeader =
    "day,method,seed,accuracy,macro_f1,latency,broad_count,local_count";

}  // namespace lisa::sim
