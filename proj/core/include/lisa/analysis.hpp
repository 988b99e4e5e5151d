#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lisa/util.hpp"

namespace lisa::analysis {

// A discrete two-level labeled state space: broad states with mass and
// refuse rate, each optionally refined into sub-states with conditional
// masses. The broad refuse rate must be consistent with its refinement.
struct SubState {
  double conditional_mass = 0.0;
  double refuse_rate = 0.0;
};

struct BroadState {
  std::string id;
  double mass = 0.0;
  double refuse_rate = 0.0;
  std::vector<SubState> refinement;  // may be empty (unrefined state)
};

struct LabeledStateDistribution {
  std::vector<BroadState> states;

  // Checks mass normalization, conditional normalization, and the
  // consistency identity refuse_rate(z) = sum_u Pr(u|z) * refuse_rate(u).
  void validate(double tol = 1e-12) const;
};

// Random instance with every broad state refined; refuse rates are uniform
// and the broad rate is derived from the refinement, so validate() holds
// exactly.
LabeledStateDistribution random_distribution(util::Rng& rng, int max_states = 6,
                                             int max_substates = 5);

// Pr(Z=z) * min(eta, 1-eta): the mass of minority-label errors any
// refinement of z could recover.
double conflict_mass(const BroadState& state);

enum class Level { Broad, Refined };

// Bayes 0-1 risk at the requested granularity: sum of mass * min(eta, 1-eta).
double bayes_risk(const LabeledStateDistribution& dist, Level level);

// Risk reduction achieved by the state's refinement; nonnegative and
// bounded by conflict_mass(state).
double refinement_gain(const BroadState& state);

// True when the refinement has sub-states strictly on both sides of 1/2,
// which makes the refinement inequality strict on this state.
bool has_straddling_substate(const BroadState& state, double margin = 1e-9);

struct GapRow {
  std::int64_t n = 0;
  double theta_hat = 0.0;
  double beta_bound = 0.0;
  double hoeffding_bound = 0.0;
};

// Lower-bound comparison grid: for each (n, theta) the Beta-quantile bound
// with s = round(theta * n) successes versus the Hoeffding bound.
std::vector<GapRow> gap_curves(const std::vector<std::int64_t>& n_values,
                               const std::vector<double>& theta_values, double delta);
std::string gap_curves_csv(const std::vector<GapRow>& rows);

// Numerical verification suite over the formal results (confidence
// monotonicity, closed-form quantile agreement, posterior surfacing budget,
// conflict-mass bound, refinement inequality, Beta-vs-Hoeffding tightness).
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> run_verification_suite(std::uint64_t seed);

}  // namespace lisa::analysis
