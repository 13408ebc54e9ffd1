#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "truncnoise/exact_oracle.hpp"
#include "truncnoise/rng.hpp"
#include "truncnoise/worst_case.hpp"

using namespace truncnoise;

namespace {

WorstCasePair raw_pair(std::vector<double> a, std::vector<double> b) {
  WorstCasePair p;
  p.support.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p.support[i] = static_cast<double>(i);
  p.a = std::move(a);
  p.b = std::move(b);
  p.step = 1.0;
  return p;
}

const WorstCasePair kWorked = raw_pair({0.25, 0.5, 0.25, 0.0}, {0.0, 0.25, 0.5, 0.25});

// Small random pair with bounded ratios and optional structural zeros.
WorstCasePair random_pair(Rng& rng, std::size_t max_support = 12) {
  const std::size_t n = 3 + static_cast<std::size_t>(rng.raw() % (max_support - 2));
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double kind = rng.uniform();
    if (kind < 0.15) {
      a[i] = rng.uniform(0.05, 1.0);
      b[i] = 0.0;
    } else if (kind < 0.3) {
      a[i] = 0.0;
      b[i] = rng.uniform(0.05, 1.0);
    } else {
      a[i] = rng.uniform(0.05, 1.0);
      b[i] = a[i] * std::exp(rng.uniform(-1.2, 1.2));
    }
  }
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += a[i];
    sb += b[i];
  }
  if (sa == 0.0 || sb == 0.0) return random_pair(rng, max_support);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] /= sa;
    b[i] /= sb;
  }
  return raw_pair(std::move(a), std::move(b));
}

}  // namespace

TEST_CASE("loss distribution of the worked pair") {
  const auto ld = loss_distribution(kWorked);
  CHECK(ld.inf_mass == Catch::Approx(0.25).margin(1e-15));
  REQUIRE(ld.finite.size() == 2);
  CHECK(ld.finite[0].first == Catch::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(ld.finite[0].second == Catch::Approx(0.25).margin(1e-15));
  CHECK(ld.finite[1].first == Catch::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(ld.finite[1].second == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("identical distributions have a single zero loss") {
  const auto pair = raw_pair({0.3, 0.7}, {0.3, 0.7});
  const auto ld = loss_distribution(pair);
  CHECK(ld.inf_mass == 0.0);
  REQUIRE(ld.finite.size() == 1);
  CHECK(ld.finite[0].first == 0.0);
  CHECK(ld.finite[0].second == Catch::Approx(1.0).margin(1e-15));
  CHECK(exact_delta(pair, 0.0) == 0.0);
  CHECK(exact_delta(pair, 1.0) == 0.0);
}

TEST_CASE("half-overlap pair groups its single finite loss") {
  const auto pair = raw_pair({0.5, 0.5, 0.0}, {0.0, 0.5, 0.5});
  const auto ld = loss_distribution(pair);
  CHECK(ld.inf_mass == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(ld.finite.size() == 1);
  CHECK(ld.finite[0].first == 0.0);
  CHECK(ld.finite[0].second == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("exact delta spot values") {
  CHECK(exact_delta(kWorked, 0.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(exact_delta(kWorked, std::log(2.0)) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("exact pdp delta thresholds on the loss values") {
  CHECK(exact_pdp_delta(kWorked, 0.1) == Catch::Approx(0.75).margin(1e-15));
  CHECK(exact_pdp_delta(kWorked, 0.7) == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("two-fold composition of the worked loss distribution") {
  const auto ld = loss_distribution(kWorked);
  const auto composed = exact_compose(ld, 2);
  CHECK(composed.inf_mass == Catch::Approx(0.4375).margin(1e-15));
  REQUIRE(composed.finite.size() == 3);
  const double l2 = 2.0 * std::log(2.0);
  CHECK(composed.finite[0].first == Catch::Approx(-l2).epsilon(1e-15));
  CHECK(composed.finite[0].second == Catch::Approx(0.0625).margin(1e-15));
  CHECK(composed.finite[1].first == 0.0);
  CHECK(composed.finite[1].second == Catch::Approx(0.25).margin(1e-15));
  CHECK(composed.finite[2].first == Catch::Approx(l2).epsilon(1e-15));
  CHECK(composed.finite[2].second == Catch::Approx(0.25).margin(1e-15));

  const auto d = delta_from_loss(composed, 0.0);
  CHECK(d.adp == Catch::Approx(0.625).margin(1e-15));
  CHECK(d.pdp == Catch::Approx(0.6875).margin(1e-15));
}

TEST_CASE("composition is the identity at n = 1") {
  const auto ld = loss_distribution(kWorked);
  const auto same = exact_compose(ld, 1);
  CHECK(same.inf_mass == ld.inf_mass);
  CHECK(same.finite == ld.finite);
}

TEST_CASE("composition enforces its term budget") {
  LossDistribution ld;
  for (int i = 0; i < 100; ++i) ld.finite.push_back({static_cast<double>(i) * 0.01, 0.01});
  CHECK_THROWS_AS(exact_compose(ld, 5, 1000), resource_limit_error);
  try {
    exact_compose(ld, 5, 1000);
  } catch (const resource_limit_error& e) {
    CHECK(e.budget() == 1000);
    CHECK(std::string(e.what()).find("1000") != std::string::npos);
  }
}

TEST_CASE("delta_from_loss agrees with the direct formula on random pairs") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pair = random_pair(rng);
    const auto ld = loss_distribution(pair);
    for (double eps : {0.0, 0.1, 0.5, 1.0}) {
      CHECK(delta_from_loss(ld, eps).adp == Catch::Approx(exact_delta(pair, eps)).margin(1e-12));
    }
  }
}

TEST_CASE("degenerate all-distinguishing distribution saturates") {
  LossDistribution ld;
  ld.inf_mass = 1.0;
  const auto d = delta_from_loss(ld, 0.3);
  CHECK(d.adp == 1.0);
  CHECK(d.pdp == 1.0);
}

TEST_CASE("delta curves are monotone and ordered") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto pair = random_pair(rng);
    const auto ld = loss_distribution(pair);
    double prev_adp = 2.0, prev_pdp = 2.0;
    for (double eps : {0.0, 0.1, 0.3, 0.7, 1.5}) {
      const auto d = delta_from_loss(ld, eps);
      CHECK(d.adp <= prev_adp + 1e-15);
      CHECK(d.pdp <= prev_pdp + 1e-15);
      CHECK(d.pdp >= d.adp - 1e-15);
      CHECK(d.adp >= ld.inf_mass - 1e-15);
      CHECK(d.adp <= 1.0 + 1e-12);
      prev_adp = d.adp;
      prev_pdp = d.pdp;
    }
  }
}

TEST_CASE("composed adp delta never decreases with n") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pair = random_pair(rng, 8);
    const auto ld = loss_distribution(pair);
    double prev = -1.0;
    for (long n : {1L, 2L, 4L}) {
      const double d = delta_from_loss(exact_compose(ld, n), 0.3).adp;
      CHECK(d >= prev - 1e-12);
      prev = d;
    }
  }
}
