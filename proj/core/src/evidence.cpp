#include "lisa/evidence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lisa::evidence {

namespace {

// Continued fraction for I_x(a,b) (modified Lentz). Valid for
// x < (a+1)/(a+b+2); the caller applies the symmetry switch.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = std::numeric_limits<double>::min() / eps;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

void GatingConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("GatingConfig: delta must lie in (0,1)");
  if (!(tau_refuse >= 0.0 && tau_refuse <= 1.0))
    throw std::domain_error("GatingConfig: tau_refuse must lie in [0,1]");
  if (!(tau_allow >= 0.0 && tau_allow <= 1.0))
    throw std::domain_error("GatingConfig: tau_allow must lie in [0,1]");
}

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("regularized_incomplete_beta: a, b must be > 0");
  if (std::isnan(x)) throw std::domain_error("regularized_incomplete_beta: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(log_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_lower_quantile(std::int64_t s, std::int64_t c, double delta) {
  if (s < 0 || c < 0)
    throw std::domain_error("beta_lower_quantile: counts must be non-negative");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("beta_lower_quantile: delta must lie in (0,1)");

  const double a = 1.0 + static_cast<double>(s);
  const double b = 1.0 + static_cast<double>(c);

  double lo = 0.0, hi = 1.0, mid = 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(mid, a, b) < delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double confidence(const EvidenceCounts& ev, double delta) {
  return beta_lower_quantile(ev.support, ev.contradiction, delta);
}

bool gate(Label label, double conf, const GatingConfig& cfg) {
  return conf >= cfg.threshold(label);
}

double empirical_accuracy(const EvidenceCounts& ev) {
  const std::int64_t n = ev.total();
  if (n < 1)
    throw std::domain_error("empirical_accuracy: zero total evidence is ungateable");
  return static_cast<double>(ev.support) / static_cast<double>(n);
}

double hoeffding_lower(std::int64_t s, std::int64_t c, double delta) {
  const std::int64_t n = s + c;
  if (n < 1) throw std::domain_error("hoeffding_lower: requires s + c >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("hoeffding_lower: delta must lie in (0,1)");
  const double mean = static_cast<double>(s) / static_cast<double>(n);
  return mean - std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

}  // namespace lisa::evidence
