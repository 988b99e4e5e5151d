#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lisa/evidence.hpp"
#include "lisa/util.hpp"

using namespace lisa;
using namespace lisa::evidence;

namespace {

// Independent oracle for Beta(8,2)-style quantiles: bisection on the closed
// polynomial CDF of Beta(a, 2), which is a*x^(a-1)*... reduced to
// (a+1)x^a - a*x^(a+1) for integer a = s+1, c = 1.
double bisect_poly(double (*cdf)(double), double target) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("regularized incomplete beta basics") {
  CHECK(regularized_incomplete_beta(0.0, 3, 4) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 3, 4) == 1.0);
  // I_x(1,1) = x for the uniform distribution.
  for (double x : {0.1, 0.25, 0.5, 0.9}) {
    CHECK(regularized_incomplete_beta(x, 1, 1) == doctest::Approx(x).epsilon(1e-12));
  }
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  for (double x : {0.12, 0.37, 0.66, 0.93}) {
    CHECK(regularized_incomplete_beta(x, 5, 9) ==
          doctest::Approx(1.0 - regularized_incomplete_beta(1.0 - x, 9, 5)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(regularized_incomplete_beta(0.5, 0.0, 1.0), std::domain_error);
}

TEST_CASE("beta_lower_quantile matches spec examples") {
  // Beta(1,1) is uniform, so the quantile equals delta.
  CHECK(beta_lower_quantile(0, 0, 0.05) == doctest::Approx(0.05).epsilon(1e-9));
  // Closed form delta^(1/(s+1)) when c = 0.
  CHECK(beta_lower_quantile(4, 0, 0.05) ==
        doctest::Approx(std::pow(0.05, 1.0 / 5.0)).epsilon(1e-9));
  CHECK(beta_lower_quantile(5, 0, 0.05) ==
        doctest::Approx(std::pow(0.05, 1.0 / 6.0)).epsilon(1e-9));
  CHECK(beta_lower_quantile(5, 0, 0.05) == doctest::Approx(0.6070).epsilon(1e-4));

  // (7,1): bisection oracle on the Beta(8,2) CDF, 9x^8 - 8x^9.
  const double q71 = bisect_poly(
      [](double x) { return 9.0 * std::pow(x, 8) - 8.0 * std::pow(x, 9); }, 0.05);
  CHECK(beta_lower_quantile(7, 1, 0.05) == doctest::Approx(q71).epsilon(1e-8));
  CHECK(beta_lower_quantile(7, 1, 0.05) >= 0.55);
  CHECK(beta_lower_quantile(7, 1, 0.05) == doctest::Approx(0.571).epsilon(1e-3));

  // (6,1): oracle on 8x^7 - 7x^8; stays below the threshold.
  const double q61 = bisect_poly(
      [](double x) { return 8.0 * std::pow(x, 7) - 7.0 * std::pow(x, 8); }, 0.05);
  CHECK(confidence({6, 1}, 0.05) == doctest::Approx(q61).epsilon(1e-8));
  CHECK(confidence({6, 1}, 0.05) < 0.55);

  CHECK(confidence({15, 5}, 0.05) >= 0.55);
  CHECK(confidence({0, 0}, 0.05) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("quantile domain errors") {
  CHECK_THROWS_AS(beta_lower_quantile(1, 1, 0.0), std::domain_error);
  CHECK_THROWS_AS(beta_lower_quantile(1, 1, 1.0), std::domain_error);
  CHECK_THROWS_AS(beta_lower_quantile(1, 1, -0.3), std::domain_error);
  CHECK_THROWS_AS(beta_lower_quantile(1, 1, 1.7), std::domain_error);
  CHECK_THROWS_AS(beta_lower_quantile(-1, 0, 0.05), std::domain_error);
}

TEST_CASE("closed-form agreement for c = 0") {
  for (double delta : {0.01, 0.05, 0.1}) {
    for (std::int64_t s = 0; s <= 100; ++s) {
      const double want = std::pow(delta, 1.0 / static_cast<double>(s + 1));
      CHECK(std::fabs(beta_lower_quantile(s, 0, delta) - want) <= 1e-8);
    }
  }
}

TEST_CASE("quantile correctness: inverse-CDF residual") {
  util::Rng rng(12345);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = static_cast<std::int64_t>(util::next_index(rng, 60));
    const auto c = static_cast<std::int64_t>(util::next_index(rng, 60));
    const double delta = 0.01 + 0.98 * util::next_double(rng);
    const double x = beta_lower_quantile(s, c, delta);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    const double residual = regularized_incomplete_beta(x, 1.0 + s, 1.0 + c) - delta;
    CHECK(std::fabs(residual) <= 1e-8);
  }
}

TEST_CASE("confidence monotone in support and contradiction") {
  for (std::int64_t s = 0; s <= 50; ++s) {
    for (std::int64_t c = 0; c <= 50; ++c) {
      const double base = beta_lower_quantile(s, c, 0.05);
      CHECK(beta_lower_quantile(s + 1, c, 0.05) >= base);
      CHECK(beta_lower_quantile(s, c + 1, 0.05) <= base);
    }
  }
}

TEST_CASE("gate comparison is inclusive and label-sensitive") {
  GatingConfig cfg;  // delta 0.05, thresholds 0.55
  CHECK(gate(Label::Refuse, 0.6070, cfg));
  CHECK_FALSE(gate(Label::Allow, 0.5493, cfg));
  CHECK(gate(Label::Allow, 0.55, cfg));
  CHECK(gate(Label::Refuse, 0.55, cfg));

  GatingConfig split{0.05, 0.9, 0.3};
  CHECK_FALSE(gate(Label::Refuse, 0.5, split));
  CHECK(gate(Label::Allow, 0.5, split));
  const GatingConfig invalid{1.5, 0.5, 0.5};
  CHECK_THROWS_AS(invalid.validate(), std::domain_error);
}

TEST_CASE("empirical accuracy") {
  CHECK(empirical_accuracy({1, 0}) == 1.0);
  CHECK(empirical_accuracy({1, 1}) == 0.5);
  CHECK(empirical_accuracy({9, 2}) == doctest::Approx(9.0 / 11.0));
  CHECK_THROWS_AS(empirical_accuracy({0, 0}), std::domain_error);
}

TEST_CASE("hoeffding lower bound, unclamped") {
  CHECK(hoeffding_lower(5, 0, 0.05) ==
        doctest::Approx(1.0 - std::sqrt(std::log(20.0) / 10.0)).epsilon(1e-12));
  CHECK(hoeffding_lower(5, 0, 0.05) == doctest::Approx(0.4527).epsilon(1e-3));
  CHECK(hoeffding_lower(0, 5, 0.05) == doctest::Approx(-0.5473).epsilon(1e-3));
  CHECK(hoeffding_lower(2, 2, 0.05) ==
        doctest::Approx(0.5 - std::sqrt(std::log(20.0) / 8.0)).epsilon(1e-12));
  CHECK(hoeffding_lower(2, 2, 0.05) < 0.0);
  CHECK_THROWS_AS(hoeffding_lower(0, 0, 0.05), std::domain_error);
}

TEST_CASE("posterior surfacing budget by Monte Carlo") {
  // Smaller than the acceptance version; same statistical content.
  std::mt19937_64 sampler(777);
  util::Rng rng(778);
  const double tau = 0.55, delta = 0.05;
  const int draws = 100000;
  int tested = 0;
  for (int i = 0; i < 100 && tested < 8; ++i) {
    const auto s = static_cast<std::int64_t>(util::next_index(rng, 40));
    const auto c = static_cast<std::int64_t>(util::next_index(rng, 6));
    if (beta_lower_quantile(s, c, delta) < tau) continue;
    ++tested;
    std::gamma_distribution<double> ga(1.0 + s, 1.0), gb(1.0 + c, 1.0);
    int below = 0;
    double loss = 0.0;
    for (int d = 0; d < draws; ++d) {
      const double x = ga(sampler), y = gb(sampler);
      const double theta = x / (x + y);
      if (theta < tau) ++below;
      loss += 1.0 - theta;
    }
    const double p = static_cast<double>(below) / draws;
    const double se = std::sqrt(delta * (1 - delta) / draws);
    CHECK(p <= delta + 3 * se);
    CHECK(loss / draws <= (1.0 - tau) + delta);
  }
  CHECK(tested == 8);
}

TEST_CASE("adaptive tightness: Beta beats Hoeffding at high accuracy") {
  for (std::int64_t n = 30; n <= 200; n += 17) {
    for (std::int64_t s = (9 * n + 9) / 10; s <= n; ++s) {
      CHECK(beta_lower_quantile(s, n - s, 0.05) > hoeffding_lower(s, n - s, 0.05));
    }
  }
}

TEST_CASE("evidence volume separates equal empirical accuracy") {
  CHECK(empirical_accuracy({1, 0}) == empirical_accuracy({20, 0}));
  CHECK(confidence({1, 0}, 0.05) < confidence({20, 0}, 0.05));
  CHECK(confidence({1, 0}, 0.05) == doctest::Approx(std::sqrt(0.05)).epsilon(1e-9));
}
