#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kw/expfam.hpp"
#include "oracles.hpp"

using kw::family_model;
using Catch::Approx;

TEST_CASE("natural parameter maps") {
  CHECK(family_model::poisson().natural_param(0.5) == Approx(-0.6931472).epsilon(1e-6));
  CHECK(family_model::binomial(3).natural_param(0.5) == Approx(0.0).margin(1e-15));
  CHECK(family_model::negative_binomial(1).natural_param(1.0) ==
        Approx(-0.6931472).epsilon(1e-6));

  // round trip
  for (family_model fam : {family_model::poisson(), family_model::binomial(5),
                           family_model::negative_binomial(3)}) {
    const double user = fam.kind() == kw::family_kind::binomial ? 0.37 : 1.82;
    CHECK(fam.user_param(fam.natural_param(user)) == Approx(user).epsilon(1e-12));
  }

  CHECK_THROWS_AS(family_model::poisson().natural_param(0.0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::poisson().natural_param(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::binomial(3).natural_param(1.0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::binomial(3).natural_param(0.0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::negative_binomial(2).natural_param(0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(family_model::binomial(0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::negative_binomial(0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::from_name("cauchy", 0), std::invalid_argument);
}

TEST_CASE("log_c closed forms") {
  CHECK(family_model::poisson().log_c(2, 3) == Approx(std::log(8.0 / 6.0)));
  CHECK(family_model::binomial(3).log_c(2, 7) == kw::kNegInf);
  CHECK(family_model::negative_binomial(1).log_c(3, 2) == Approx(std::log(6.0)));
  // n = 0 is the empty convolution: point mass at 0
  CHECK(family_model::poisson().log_c(0, 0) == 0.0);
  CHECK(family_model::poisson().log_c(0, 1) == kw::kNegInf);
}

TEST_CASE("log_c equals brute-force convolution") {
  for (family_model fam : {family_model::poisson(), family_model::binomial(3),
                           family_model::negative_binomial(2)}) {
    for (long long n : {1LL, 2LL, 3LL, 5LL}) {
      const long long top = fam.support_max(n) >= 0 ? fam.support_max(n) : 25;
      for (long long s = 0; s <= top; ++s) {
        const double ours = fam.log_c(n, s);
        const double ref = oracle::convolved_log_c(fam, n, s);
        if (ref == kw::kNegInf) {
          CHECK(ours == kw::kNegInf);
        } else {
          CHECK(ours == Approx(ref).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("sufficient-statistic pmf") {
  const family_model poi = family_model::poisson();
  const double th_half = poi.natural_param(0.5);
  CHECK(poi.suff_pmf(th_half, 1, 0) == Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(poi.suff_pmf(th_half, 4, 2) ==
        Approx(std::exp(-2.0) * 4.0 / 2.0).epsilon(1e-14));
  const family_model geo = family_model::negative_binomial(1);
  CHECK(geo.suff_pmf(geo.natural_param(2.0), 2, 1) ==
        Approx(4.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("suff_pmf sums to one") {
  for (family_model fam : {family_model::poisson(), family_model::binomial(3),
                           family_model::negative_binomial(2)}) {
    const double th = fam.natural_param(fam.kind() == kw::family_kind::binomial ? 0.3 : 1.4);
    for (long long n : {1LL, 4LL, 9LL}) {
      long double acc = 0.0L;
      const long long top = fam.support_max(n) >= 0
                                ? fam.support_max(n)
                                : fam.stage_state_bound(n, {th});
      for (long long s = 0; s <= top; ++s) acc += fam.suff_pmf(th, n, s);
      CHECK(static_cast<double>(acc) == Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("transition weights") {
  const family_model poi = family_model::poisson();
  CHECK(poi.transition_weight(2, 0, 0) == Approx(1.0));
  CHECK(poi.transition_weight(2, 1, 1) == Approx(0.5));
  CHECK(family_model::binomial(1).transition_weight(2, 1, 1) == Approx(1.0));
  CHECK_THROWS_AS(poi.transition_weight(1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(family_model::binomial(1).transition_weight(2, 2, 1),
                  std::invalid_argument);  // s + x beyond support
}

TEST_CASE("convolution identity: transition weights sum to one") {
  for (family_model fam : {family_model::poisson(), family_model::binomial(3),
                           family_model::negative_binomial(2)}) {
    for (long long n = 2; n <= 20; n += 6) {
      const long long cap = fam.support_max(n);
      for (long long t = 0; t <= 200; t += 13) {
        if (cap >= 0 && t > cap) break;
        long double acc = 0.0L;
        for (long long x = 0; x <= t; ++x) {
          if (fam.log_h(x) == kw::kNegInf) continue;
          if (fam.log_c(n - 1, t - x) == kw::kNegInf) continue;
          acc += fam.transition_weight(n, x, t - x);
        }
        CHECK(static_cast<double>(acc) == Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("reproduction identity links stages") {
  // g^{n-1}(s) f(x) = g^n(s+x) d_n(x, s)
  for (family_model fam : {family_model::poisson(), family_model::binomial(3),
                           family_model::negative_binomial(2)}) {
    const double th = fam.natural_param(fam.kind() == kw::family_kind::binomial ? 0.21 : 0.9);
    for (long long n : {2LL, 5LL, 11LL}) {
      for (long long s = 0; s <= 12; ++s) {
        for (long long x = 0; x <= 6; ++x) {
          if (fam.log_c(n - 1, s) == kw::kNegInf || fam.log_h(x) == kw::kNegInf)
            continue;
          const double lhs = fam.suff_pmf(th, n - 1, s) * fam.obs_pmf(th, x);
          const double rhs =
              fam.suff_pmf(th, n, s + x) * fam.transition_weight(n, x, s);
          CHECK(lhs == Approx(rhs).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("observation cdf") {
  const family_model poi = family_model::poisson();
  const double th = poi.natural_param(0.5);
  CHECK(poi.obs_cdf(th, -1) == 0.0);
  CHECK(poi.obs_cdf(th, 0) == Approx(std::exp(-0.5)).epsilon(1e-14));
  const family_model bin = family_model::binomial(3);
  CHECK(bin.obs_cdf(bin.natural_param(0.05), 3) == 1.0);
  // cdf + sf partition
  for (long long k = -1; k <= 12; ++k)
    CHECK(poi.obs_cdf(th, k) + poi.obs_sf(th, k) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("monotone likelihood ratio in s") {
  // g_theta'(s) / g_theta(s) increases in s whenever theta' > theta
  for (family_model fam : {family_model::poisson(), family_model::binomial(3),
                           family_model::negative_binomial(2)}) {
    const bool binom = fam.kind() == kw::family_kind::binomial;
    const double lo = fam.natural_param(binom ? 0.2 : 0.8);
    const double hi = fam.natural_param(binom ? 0.4 : 1.7);
    const long long n = 6;
    double prev = -1.0;
    const long long top = fam.support_max(n) >= 0 ? fam.support_max(n) : 30;
    for (long long s = 0; s <= top; ++s) {
      const double ratio = fam.suff_pmf(hi, n, s) / fam.suff_pmf(lo, n, s);
      CHECK(ratio > prev);
      prev = ratio;
    }
  }
}

TEST_CASE("log partition stays finite far out") {
  // the binomial branch must not overflow exp for large natural parameters
  const family_model bin = family_model::binomial(3);
  CHECK(std::isfinite(bin.log_partition(40.0)));
  CHECK(bin.log_partition(40.0) == Approx(3.0 * 40.0).epsilon(1e-10));
  CHECK_THROWS_AS(family_model::negative_binomial(1).log_partition(0.0),
                  std::invalid_argument);
}
