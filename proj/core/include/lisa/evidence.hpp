#pragma once

#include <cstdint>

namespace lisa {

// Binary guardrail decision space. ALLOW = 0, REFUSE = 1.
enum class Label : int { Allow = 0, Refuse = 1 };

inline Label opposite(Label l) { return l == Label::Allow ? Label::Refuse : Label::Allow; }

namespace evidence {

// Support/contradiction counts backing the Beta posterior over a policy's
// latent transfer reliability.
struct EvidenceCounts {
  std::int64_t support = 0;
  std::int64_t contradiction = 0;

  std::int64_t total() const { return support + contradiction; }
  bool operator==(const EvidenceCounts&) const = default;
};

struct GatingConfig {
  double delta = 0.05;
  double tau_refuse = 0.55;
  double tau_allow = 0.55;

  double threshold(Label l) const { return l == Label::Refuse ? tau_refuse : tau_allow; }
  // Throws std::domain_error when delta or a threshold is out of range.
  void validate() const;
  bool operator==(const GatingConfig&) const = default;
};

// Regularized incomplete beta function I_x(a, b), evaluated by continued
// fraction with the usual symmetry switch. a, b > 0; x in [0, 1].
double regularized_incomplete_beta(double x, double a, double b);

// Lower delta-quantile of Beta(1+s, 1+c): the x with I_x(1+s, 1+c) = delta.
// Bisection on (0, 1); residual well below 1e-9. Throws std::domain_error
// unless 0 < delta < 1 and s, c >= 0.
double beta_lower_quantile(std::int64_t s, std::int64_t c, double delta);

// Confidence score of an evidence pair: beta_lower_quantile over its counts.
double confidence(const EvidenceCounts& ev, double delta);

// Label-sensitive surfacing rule; the comparison is inclusive.
bool gate(Label label, double conf, const GatingConfig& cfg);

// s / (s + c). Throws std::domain_error on zero total evidence; callers must
// treat that as ungateable.
double empirical_accuracy(const EvidenceCounts& ev);

// One-sided Hoeffding lower bound s/n - sqrt(ln(1/delta) / (2n)). Not
// clamped, so it can be negative. Throws std::domain_error when n = 0.
double hoeffding_lower(std::int64_t s, std::int64_t c, double delta);

}  // namespace evidence
}  // namespace lisa
