// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "lisa/analysis.hpp"
#include "lisa/evidence.hpp"
#include "lisa/induction.hpp"
#include "lisa/memory.hpp"
#include "lisa/providers.hpp"
#include "lisa/retrieval.hpp"
#include "lisa/simulator.hpp"
#include "lisa/util.hpp"

using namespace lisa;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Criterion {
  const char* name;
  double budget_seconds;
  Clock::time_point start = Clock::now();

  Criterion(const char* n, double budget) : name(n), budget_seconds(budget) {}

  void report(bool pass, const std::string& detail) {
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_budget = elapsed < budget_seconds;
    if (!pass || !in_budget) ++failures;
    std::printf("%s %s: %s (%.2fs, budget %.0fs)\n",
                pass && in_budget ? "PASS" : "FAIL", name, detail.c_str(), elapsed,
                budget_seconds);
    std::fflush(stdout);
  }
};

// Reference values produced by the pinned reference run (seeds 1..5, stub
// providers, default world). Regenerate by rerunning this suite after any
// intentional change to the adaptation stack.
constexpr double kRefFinalF1[4] = {
    0.741256,  // lisa
    0.707199,  // broad_only
    0.671001,  // case_memory
    0.666370,  // pure
};
constexpr double kRefNoisyF1[3] = {
    0.693281,  // lisa
    0.679589,  // gate_accuracy
    0.591759,  // lisa_no_gate
};

sim::DeploymentConfig reference_config(sim::Method method, double rho) {
  sim::DeploymentConfig cfg;
  cfg.days = 10;
  cfg.stream_per_day = 50;
  cfg.heldout_size = 500;
  cfg.noise_rho = rho;
  cfg.seed = 1;
  cfg.method = method;
  return cfg;
}

void criterion1_calibration() {
  Criterion c("criterion 1 (calibration table)", 1.0);
  const double delta = 0.05, tau = 0.55;
  const std::vector<std::pair<std::int64_t, std::int64_t>> expected = {
      {0, 5}, {1, 7}, {2, 9}, {3, 11}, {5, 15}};
  bool pass = true;
  std::string detail = "minimal supports";
  for (const auto& [contradictions, want] : expected) {
    std::int64_t s = 0;
    while (evidence::beta_lower_quantile(s, contradictions, delta) < tau) ++s;
    detail += " c" + std::to_string(contradictions) + "=" + std::to_string(s);
    if (s != want) pass = false;
  }
  c.report(pass, detail);
}

void criterion2_quantile_oracle() {
  Criterion c("criterion 2 (quantile oracle agreement)", 5.0);
  bool pass = true;
  double worst_closed = 0.0;
  for (double delta : {0.01, 0.05, 0.1}) {
    for (std::int64_t s = 0; s <= 100; ++s) {
      const double got = evidence::beta_lower_quantile(s, 0, delta);
      const double want = std::pow(delta, 1.0 / static_cast<double>(s + 1));
      worst_closed = std::max(worst_closed, std::fabs(got - want));
    }
  }
  if (worst_closed > 1e-8) pass = false;

  util::Rng rng(20260810);
  double worst_residual = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = static_cast<std::int64_t>(util::next_index(rng, 80));
    const auto k = static_cast<std::int64_t>(util::next_index(rng, 80));
    const double delta = 0.005 + 0.99 * util::next_double(rng);
    const double x = evidence::beta_lower_quantile(s, k, delta);
    worst_residual = std::max(
        worst_residual,
        std::fabs(evidence::regularized_incomplete_beta(x, 1.0 + s, 1.0 + k) - delta));
  }
  if (worst_residual > 1e-8) pass = false;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "closed-form err %.2e, inverse-CDF residual %.2e",
                worst_closed, worst_residual);
  c.report(pass, buf);
}

void criterion3_posterior_surfacing() {
  Criterion c("criterion 3 (posterior surfacing Monte Carlo)", 60.0);
  const double tau = 0.55, delta = 0.05;
  util::Rng rng(99);
  std::mt19937_64 sampler(101);
  constexpr int kDraws = 1000000;

  int tested = 0;
  bool pass = true;
  double worst_p = 0.0, worst_loss = 0.0;
  while (tested < 50) {
    const auto s = static_cast<std::int64_t>(util::next_index(rng, 60));
    const auto k = static_cast<std::int64_t>(util::next_index(rng, 10));
    if (evidence::beta_lower_quantile(s, k, delta) < tau) continue;
    ++tested;
    std::gamma_distribution<double> ga(1.0 + s, 1.0), gb(1.0 + k, 1.0);
    std::int64_t below = 0;
    double loss = 0.0;
    for (int d = 0; d < kDraws; ++d) {
      const double x = ga(sampler), y = gb(sampler);
      const double theta = x / (x + y);
      if (theta < tau) ++below;
      loss += 1.0 - theta;
    }
    const double p = static_cast<double>(below) / kDraws;
    const double se = std::sqrt(delta * (1.0 - delta) / kDraws);
    const double mean_loss = loss / kDraws;
    worst_p = std::max(worst_p, p);
    worst_loss = std::max(worst_loss, mean_loss);
    if (p > delta + 3.0 * se || mean_loss > (1.0 - tau) + delta) pass = false;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "50 gate-passing pairs, worst Pr(theta<tau)=%.5f, worst E[1-theta]=%.4f",
                worst_p, worst_loss);
  c.report(pass, buf);
}

void criterion4_conflict_mass_bound() {
  Criterion c("criterion 4 (conflict mass bounds gain)", 30.0);
  bool pass = true;
  util::Rng rng(424242);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto dist = analysis::random_distribution(rng);
    for (const auto& z : dist.states) {
      if (analysis::refinement_gain(z) > analysis::conflict_mass(z) + 1e-10) pass = false;
    }
  }
  // Constructed tight case: eta = 1/2 split into pure halves.
  analysis::BroadState tight;
  tight.id = "tight";
  tight.mass = 1.0;
  tight.refinement = {{0.5, 0.0}, {0.5, 1.0}};
  tight.refuse_rate = 0.5;
  const double gain = analysis::refinement_gain(tight);
  const double bound = analysis::conflict_mass(tight);
  if (std::fabs(gain - 0.5) > 1e-15 || std::fabs(gain - bound) > 1e-15) pass = false;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "10^4 random instances bounded; tight case gain=%.3f=bound",
                gain);
  c.report(pass, buf);
}

void criterion5_refinement_inequality() {
  Criterion c("criterion 5 (refinement inequality)", 30.0);
  bool pass = true;
  util::Rng rng(171717);
  int strict = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto dist = analysis::random_distribution(rng);
    const double broad = analysis::bayes_risk(dist, analysis::Level::Broad);
    const double refined = analysis::bayes_risk(dist, analysis::Level::Refined);
    if (refined > broad + 1e-12) pass = false;
    bool straddles = false;
    for (const auto& z : dist.states)
      if (z.mass > 1e-6 && analysis::has_straddling_substate(z, 1e-6)) straddles = true;
    if (straddles) {
      ++strict;
      if (!(refined < broad - 1e-12)) pass = false;
    }
  }
  c.report(pass, "10^4 instances, strict on " + std::to_string(strict) +
                     " straddling instances");
}

void criterion6_monotonicity() {
  Criterion c("criterion 6 (confidence monotonicity sweep)", 5.0);
  int violations = 0;
  for (std::int64_t s = 0; s <= 50; ++s) {
    for (std::int64_t k = 0; k <= 50; ++k) {
      const double base = evidence::beta_lower_quantile(s, k, 0.05);
      if (evidence::beta_lower_quantile(s + 1, k, 0.05) < base) ++violations;
      if (evidence::beta_lower_quantile(s, k + 1, 0.05) > base) ++violations;
    }
  }
  c.report(violations == 0,
           "grid [0,50]^2, " + std::to_string(violations) + " violations");
}

void criterion7_adaptation_ordering() {
  Criterion c("criterion 7 (end-to-end adaptation ordering)", 300.0);
  const sim::Method methods[4] = {sim::Method::Lisa, sim::Method::BroadOnly,
                                  sim::Method::CaseMemory, sim::Method::Pure};
  double f1[4];
  for (int i = 0; i < 4; ++i) {
    const auto multi = sim::run_seeds(reference_config(methods[i], 0.0), 5);
    f1[i] = multi.final_macro_f1_mean;
  }
  bool pass = f1[0] >= f1[1] && f1[1] >= f1[2] && f1[2] >= f1[3] && f1[0] - f1[3] >= 0.05;
  for (int i = 0; i < 4; ++i) {
    if (std::fabs(f1[i] - kRefFinalF1[i]) > 1e-6) pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "lisa=%.4f >= broad_only=%.4f >= case_memory=%.4f >= pure=%.4f, gap=%.3f",
                f1[0], f1[1], f1[2], f1[3], f1[0] - f1[3]);
  c.report(pass, buf);
}

void criterion8_noise_robustness() {
  Criterion c("criterion 8 (noise-robustness ordering)", 600.0);
  const sim::Method methods[3] = {sim::Method::Lisa, sim::Method::GateAccuracy,
                                  sim::Method::LisaNoGate};
  double f1[3];
  for (int i = 0; i < 3; ++i) {
    const auto multi = sim::run_seeds(reference_config(methods[i], 0.2), 5);
    f1[i] = multi.final_macro_f1_mean;
  }
  bool pass = f1[0] >= f1[1] && f1[1] >= f1[2];
  for (int i = 0; i < 3; ++i) {
    if (std::fabs(f1[i] - kRefNoisyF1[i]) > 1e-6) pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "rho=0.2: lisa=%.4f >= gate_accuracy=%.4f >= lisa_no_gate=%.4f", f1[0], f1[1],
                f1[2]);
  c.report(pass, buf);
}

void criterion9_determinism() {
  Criterion c("criterion 9 (determinism)", 120.0);
  sim::DeploymentConfig cfg = reference_config(sim::Method::Lisa, 0.2);
  cfg.days = 6;
  cfg.heldout_size = 200;
  const auto a = sim::run_experiment(cfg);
  const auto b = sim::run_experiment(cfg);
  const bool pass = a.csv == b.csv &&
                    memory::snapshot_to_json(a.final_snapshot) ==
                        memory::snapshot_to_json(b.final_snapshot);
  c.report(pass, pass ? "byte-identical CSV and snapshot across two runs"
                      : "artifacts differ between identical runs");
}

void criterion10_refresh_mechanics() {
  Criterion c("criterion 10 (refresh mechanics)", 5.0);
  bool pass = true;
  std::string detail;

  // Identical-statement merge sums evidence exactly.
  retrieval::HashEmbedder embedder;
  memory::BroadPolicy a;
  a.policy_id = "a";
  a.statement = "data=credentials situation indicates inappropriate.";
  a.recommended_label = Label::Refuse;
  a.evidence = {3, 0};
  memory::BroadPolicy b = a;
  b.policy_id = "b";
  b.evidence = {2, 1};
  const auto merged = induction::merge_broad({a, b}, embedder);
  if (merged.size() != 1 || !(merged[0].evidence == evidence::EvidenceCounts{5, 1})) {
    pass = false;
    detail += "merge-sum failed; ";
  }

  // Conflict score for labels {A,R,R} is 1/3; pure clusters are discarded.
  std::vector<induction::LabeledCase> cases(5);
  const char* summaries[5] = {
      "scenario ns=health action=share data=schedule audience=public purpose=gossip",
      "scenario ns=health action=share data=schedule audience=fringe purpose=gossip",
      "scenario ns=health action=share data=schedule audience=manager purpose=gossip",
      "scenario ns=files action=post data=opinion audience=friend purpose=research",
      "scenario ns=files action=post data=opinion audience=friend purpose=marketing"};
  const Label labels[5] = {Label::Allow, Label::Refuse, Label::Refuse, Label::Refuse,
                           Label::Refuse};
  for (int i = 0; i < 5; ++i) {
    cases[i].record.case_id = "c" + std::to_string(i);
    cases[i].record.domain = i < 3 ? "health" : "files";
    cases[i].record.scenario_summary = summaries[i];
    cases[i].corrected_label = labels[i];
  }
  const auto regions = induction::detect_mixed_regions(cases, embedder);
  if (regions.size() != 1 || std::fabs(regions[0].conflict_score - 1.0 / 3.0) > 1e-12) {
    pass = false;
    detail += "mixed-region detection failed; ";
  } else {
    // Local rules only from mixed clusters, and snapshots round-trip.
    std::vector<induction::LabeledCase> members(cases.begin(), cases.begin() + 3);
    const auto rules = induction::render_local_rules(regions[0], members);
    memory::MemorySnapshot snap;
    snap.version = 12;
    snap.broad = merged;
    snap.local = rules;
    if (rules.size() != 2) pass = false;
    for (const auto& rule : rules) {
      if (rule.source_cluster_id != regions[0].cluster_id) pass = false;
    }
    if (!(memory::snapshot_from_json(memory::snapshot_to_json(snap)) == snap)) {
      pass = false;
      detail += "round-trip failed; ";
    }
  }
  c.report(pass, detail.empty() ? "merge sums, conflict score 1/3, mixed-only locals, "
                                  "lossless round-trip"
                                : detail);
}

void criterion11_amortized_cost() {
  Criterion c("criterion 11 (amortized cost arithmetic)", 1.0);
  const auto k100 = sim::amortized_cost(427, 2300, 100);
  const bool pass = k100.first == 4.27 && k100.second == 23.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "amortized_cost(427,2300,100) = (%.2f, %g)", k100.first,
                k100.second);
  c.report(pass, buf);
}

}  // namespace

int main() {
  criterion1_calibration();
  criterion2_quantile_oracle();
  criterion3_posterior_surfacing();
  criterion4_conflict_mass_bound();
  criterion5_refinement_inequality();
  criterion6_monotonicity();
  criterion7_adaptation_ordering();
  criterion8_noise_robustness();
  criterion9_determinism();
  criterion10_refresh_mechanics();
  criterion11_amortized_cost();
  std::printf("%s: %d of 11 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED",
              failures);
  return failures;
}
