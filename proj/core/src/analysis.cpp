#include "lisa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lisa/evidence.hpp"

namespace lisa::analysis {

namespace {

double g(double p) { return std::min(p, 1.0 - p); }

}  // namespace

void LabeledStateDistribution::validate(double tol) const {
  double total = 0.0;
  for (const auto& state : states) {
    if (state.mass < 0.0) throw std::invalid_argument("state mass must be nonnegative");
    if (state.refuse_rate < 0.0 || state.refuse_rate > 1.0)
      throw std::invalid_argument("refuse rate must lie in [0,1]");
    total += state.mass;
    if (state.refinement.empty()) continue;
    double cond = 0.0, derived = 0.0;
    for (const auto& sub : state.refinement) {
      if (sub.conditional_mass < 0.0)
        throw std::invalid_argument("conditional mass must be nonnegative");
      if (sub.refuse_rate < 0.0 || sub.refuse_rate > 1.0)
        throw std::invalid_argument("sub-state refuse rate must lie in [0,1]");
      cond += sub.conditional_mass;
      derived += sub.conditional_mass * sub.refuse_rate;
    }
    if (std::fabs(cond - 1.0) > tol)
      throw std::invalid_argument("conditional masses must sum to 1 for state " + state.id);
    if (std::fabs(derived - state.refuse_rate) > tol)
      throw std::invalid_argument("broad refuse rate inconsistent with refinement for state " +
                                  state.id);
  }
  if (std::fabs(total - 1.0) > tol)
    throw std::invalid_argument("state masses must sum to 1");
}

LabeledStateDistribution random_distribution(util::Rng& rng, int max_states, int max_substates) {
  if (max_states < 1 || max_substates < 1)
    throw std::invalid_argument("random_distribution: invalid bounds");
  LabeledStateDistribution dist;
  const int n_states = 1 + static_cast<int>(util::next_index(rng, max_states));
  std::vector<double> masses(n_states);
  double mass_total = 0.0;
  for (auto& m : masses) {
    m = 0.05 + util::next_double(rng);
    mass_total += m;
  }
  for (int i = 0; i < n_states; ++i) {
    BroadState state;
    state.id = "z" + std::to_string(i);
    state.mass = masses[i] / mass_total;
    const int n_sub = 1 + static_cast<int>(util::next_index(rng, max_substates));
    std::vector<double> cond(n_sub);
    double cond_total = 0.0;
    for (auto& c : cond) {
      c = 0.05 + util::next_double(rng);
      cond_total += c;
    }
    double eta = 0.0;
    for (int u = 0; u < n_sub; ++u) {
      SubState sub;
      sub.conditional_mass = cond[u] / cond_total;
      sub.refuse_rate = util::next_double(rng);
      eta += sub.conditional_mass * sub.refuse_rate;
      state.refinement.push_back(sub);
    }
    state.refuse_rate = eta;
    dist.states.push_back(std::move(state));
  }
  return dist;
}

double conflict_mass(const BroadState& state) { return state.mass * g(state.refuse_rate); }

double bayes_risk(const LabeledStateDistribution& dist, Level level) {
  double risk = 0.0;
  for (const auto& state : dist.states) {
    if (level == Level::Broad || state.refinement.empty()) {
      risk += state.mass * g(state.refuse_rate);
    } else {
      for (const auto& sub : state.refinement)
        risk += state.mass * sub.conditional_mass * g(sub.refuse_rate);
    }
  }
  return risk;
}

double refinement_gain(const BroadState& state) {
  if (state.refinement.empty()) return 0.0;
  double refined = 0.0;
  for (const auto& sub : state.refinement) refined += sub.conditional_mass * g(sub.refuse_rate);
  return state.mass * (g(state.refuse_rate) - refined);
}

bool has_straddling_substate(const BroadState& state, double margin) {
  bool below = false, above = false;
  for (const auto& sub : state.refinement) {
    if (sub.refuse_rate < 0.5 - margin) below = true;
    if (sub.refuse_rate > 0.5 + margin) above = true;
  }
  return below && above;
}

std::vector<GapRow> gap_curves(const std::vector<std::int64_t>& n_values,
                               const std::vector<double>& theta_values, double delta) {
  std::vector<GapRow> rows;
  for (std::int64_t n : n_values) {
    if (n < 1) throw std::invalid_argument("gap_curves: n must be >= 1");
    for (double theta : theta_values) {
      if (theta < 0.0 || theta > 1.0)
        throw std::invalid_argument("gap_curves: theta must lie in [0,1]");
      const auto s = static_cast<std::int64_t>(std::llround(theta * static_cast<double>(n)));
      GapRow row;
      row.n = n;
      row.theta_hat = static_cast<double>(s) / static_cast<double>(n);
      row.beta_bound = evidence::beta_lower_quantile(s, n - s, delta);
      row.hoeffding_bound = evidence::hoeffding_lower(s, n - s, delta);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string gap_curves_csv(const std::vector<GapRow>& rows) {
  std::ostringstream out;
  out << "n,theta_hat,beta_bound,hoeffding_bound\n";
  for (const auto& row : rows) {
    out << row.n << ',' << util::format_fixed(row.theta_hat, 6) << ','
        << util::format_fixed(row.beta_bound, 6) << ','
        << util::format_fixed(row.hoeffding_bound, 6) << "\n";
  }
  return out.str();
}

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
  std::vector<CheckResult> results;
  const double delta = 0.05;
  const double tau = 0.55;

  {
    CheckResult check{"confidence-monotonicity", true, ""};
    for (std::int64_t s = 0; s <= 50 && check.pass; ++s) {
      for (std::int64_t c = 0; c <= 50 && check.pass; ++c) {
        const double base = evidence::beta_lower_quantile(s, c, delta);
        if (evidence::beta_lower_quantile(s + 1, c, delta) < base ||
            evidence::beta_lower_quantile(s, c + 1, delta) > base) {
          check.pass = false;
          check.detail = "violation at s=" + std::to_string(s) + ", c=" + std::to_string(c);
        }
      }
    }
    if (check.pass) check.detail = "nondecreasing in s, nonincreasing in c on [0,50]^2";
    results.push_back(check);
  }

  {
    CheckResult check{"closed-form-quantile", true, ""};
    double worst = 0.0;
    for (std::int64_t s = 0; s <= 100; ++s) {
      const double got = evidence::beta_lower_quantile(s, 0, delta);
      const double want = std::pow(delta, 1.0 / static_cast<double>(s + 1));
      worst = std::max(worst, std::fabs(got - want));
    }
    check.pass = worst <= 1e-8;
    check.detail = "max |quantile - delta^(1/(s+1))| = " + util::format_fixed(worst, 12);
    results.push_back(check);
  }

  {
    CheckResult check{"posterior-surfacing-budget", true, ""};
    util::Rng rng(util::derive_seed(seed, "surfacing"));
    std::mt19937_64 sampler(util::derive_seed(seed, "surfacing-draws"));
    const int n_pairs = 20;
    const int draws = 200000;
    int tested = 0;
    for (int i = 0; i < 200 && tested < n_pairs && check.pass; ++i) {
      const auto s = static_cast<std::int64_t>(util::next_index(rng, 40));
      const auto c = static_cast<std::int64_t>(util::next_index(rng, 8));
      const double conf = evidence::beta_lower_quantile(s, c, delta);
      if (conf < tau) continue;
      ++tested;
      std::gamma_distribution<double> ga(static_cast<double>(1 + s), 1.0);
      std::gamma_distribution<double> gb(static_cast<double>(1 + c), 1.0);
      std::int64_t below = 0;
      double loss_sum = 0.0;
      for (int d = 0; d < draws; ++d) {
        const double x = ga(sampler);
        const double y = gb(sampler);
        const double theta = x / (x + y);
        if (theta < tau) ++below;
        loss_sum += 1.0 - theta;
      }
      const double p_below = static_cast<double>(below) / draws;
      const double se = std::sqrt(delta * (1.0 - delta) / draws);
      if (p_below > delta + 3.0 * se || loss_sum / draws > (1.0 - tau) + delta) {
        check.pass = false;
        check.detail = "budget exceeded at (s,c)=(" + std::to_string(s) + "," +
                       std::to_string(c) + "), Pr(theta<tau)=" + util::format_fixed(p_below, 5);
      }
    }
    if (check.pass)
      check.detail = std::to_string(tested) + " gate-passing pairs within the posterior budget";
    results.push_back(check);
  }

  {
    CheckResult check{"conflict-mass-bound", true, ""};
    util::Rng rng(util::derive_seed(seed, "conflict"));
    for (int t = 0; t < 2000 && check.pass; ++t) {
      const auto dist = random_distribution(rng);
      dist.validate();
      for (const auto& state : dist.states) {
        if (refinement_gain(state) > conflict_mass(state) + 1e-10) {
          check.pass = false;
          check.detail = "gain exceeds conflict mass on a random instance";
        }
      }
    }
    if (check.pass) check.detail = "refinement gain <= conflict mass on 2000 random instances";
    results.push_back(check);
  }

  {
    CheckResult check{"refinement-inequality", true, ""};
    util::Rng rng(util::derive_seed(seed, "refinement"));
    for (int t = 0; t < 2000 && check.pass; ++t) {
      const auto dist = random_distribution(rng);
      const double broad = bayes_risk(dist, Level::Broad);
      const double refined = bayes_risk(dist, Level::Refined);
      if (refined > broad + 1e-12) {
        check.pass = false;
        check.detail = "refined risk exceeded broad risk";
      }
    }
    if (check.pass) check.detail = "refined risk <= broad risk on 2000 random instances";
    results.push_back(check);
  }

  {
    CheckResult check{"beta-vs-hoeffding-tightness", true, ""};
    for (std::int64_t n = 30; n <= 120 && check.pass; n += 10) {
      for (std::int64_t s = (9 * n + 9) / 10; s <= n && check.pass; ++s) {
        const double beta = evidence::beta_lower_quantile(s, n - s, delta);
        const double hoeff = evidence::hoeffding_lower(s, n - s, delta);
        if (beta <= hoeff) {
          check.pass = false;
          check.detail = "Beta bound not tighter at n=" + std::to_string(n) +
                         ", s=" + std::to_string(s);
        }
      }
    }
    if (check.pass)
      check.detail = "Beta quantile tighter than Hoeffding for n>=30, accuracy>=0.9";
    results.push_back(check);
  }

  return results;
}

}  // namespace lisa::analysis
