#pragma once

// Neyman-Pearson fixed-sample tests on the sufficient statistic and the
// (fractionally interpolated) sample size needed to meet a beta target at
// exact size alpha.  By monotone likelihood ratio in S_n, the most powerful
// level-alpha test rejects H0 when S_n > c, randomizing with probability
// gamma at S_n = c.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kw/expfam.hpp"

namespace kw {

struct np_test {
  long long n = 0;
  long long c = 0;      // accept H0 outright when S_n < c
  double gamma = 0.0;   // rejection probability at S_n == c
};

// critical value and randomization weight of the exact size-alpha test
inline np_test np_critical(const family_model& model, double theta0_user,
                           double alpha, long long n) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("np_critical: alpha must lie in (0, 1)");
  if (n < 1) throw std::invalid_argument("np_critical: n must be at least 1");
  const double th0 = model.natural_param(theta0_user);
  const long long smax = model.support_max(n);
  long double cum = 0.0L;
  long long c = 0;
  double pc = 0.0;
  for (long long s = 0;; ++s) {
    pc = model.suff_pmf(th0, n, s);
    cum += pc;
    if (static_cast<double>(cum) >= 1.0 - alpha || (smax >= 0 && s >= smax)) {
      c = s;
      break;
    }
  }
  const double sf_c = static_cast<double>(std::max(1.0L - cum, 0.0L));  // P0(S > c)
  double gamma = pc > 0.0 ? (alpha - sf_c) / pc : 0.0;
  gamma = std::clamp(gamma, 0.0, 1.0);
  return {n, c, gamma};
}

// type II error probability of the exact size-alpha test with n observations
inline double np_beta(const family_model& model, double theta0_user,
                      double theta1_user, double alpha, long long n) {
  const np_test t = np_critical(model, theta0_user, alpha, n);
  const double th1 = model.natural_param(theta1_user);
  long double cum1 = 0.0L;  // P1(S <= c - 1)
  for (long long s = 0; s < t.c; ++s) cum1 += model.suff_pmf(th1, n, s);
  const double p1c = model.suff_pmf(th1, n, t.c);
  const long double b = cum1 + (1.0L - static_cast<long double>(t.gamma)) * p1c;
  return b >= 1.0L ? 1.0 : static_cast<double>(b);
}

struct fss_result {
  double value = kNaN;        // interpolated sample size
  long long n_star = 0;       // largest n with beta(n) >= beta (0 if none)
  double beta_at_n_star = kNaN;
  bool degenerate = false;    // already at n = 1 the test is better than required
};

// fractional sample size solving beta(n) = beta, by linear interpolation
// between the last insufficient n and its successor; beta(0) is taken as
// 1 - alpha (the randomized no-data test of exact size alpha)
inline fss_result fss(const family_model& model, double theta0_user,
                      double theta1_user, double alpha, double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("fss: beta must lie in (0, 1)");
  const double th0 = model.natural_param(theta0_user);
  const double th1 = model.natural_param(theta1_user);
  if (!(th0 < th1))
    throw std::invalid_argument("fss: theta0 must be less than theta1");
  auto b_at = [&](long long n) { return np_beta(model, theta0_user, theta1_user, alpha, n); };

  fss_result out;
  const double b1 = b_at(1);
  if (b1 < beta) {
    const double b0 = 1.0 - alpha;
    out.value = (b0 - beta) / (b0 - b1);
    out.n_star = 0;
    out.beta_at_n_star = b0;
    out.degenerate = true;
    return out;
  }
  long long lo = 1, hi = 2;  // beta(lo) >= beta; find hi with beta(hi) < beta
  double b_lo = b1;
  while (b_at(hi) >= beta) {
    lo = hi;
    b_lo = b_at(lo);
    hi *= 2;
    if (hi > (1LL << 40))
      throw std::runtime_error("fss: required sample size exceeds any sensible range");
  }
  while (hi - lo > 1) {  // invariant: beta(lo) >= beta > beta(hi)
    const long long mid = lo + (hi - lo) / 2;
    const double bm = b_at(mid);
    if (bm >= beta) {
      lo = mid;
      b_lo = bm;
    } else {
      hi = mid;
    }
  }
  out.n_star = lo;
  out.beta_at_n_star = b_lo;
  const double b_next = b_at(lo + 1);
  out.value = static_cast<double>(lo) + (b_lo - beta) / (b_lo - b_next);
  return out;
}

struct efficiency_ratios_t {
  double r = kNaN;   // fss / asn at the design theta
  double r0 = kNaN;  // fss / asn at theta0
  double r1 = kNaN;  // fss / asn at theta1
  double qr = kNaN;  // fss / 0.99-quantile of the sample number
};

inline efficiency_ratios_t efficiency_ratios(double fss_value, double asn_theta,
                                             double asn_theta0, double asn_theta1,
                                             long long quantile_99) {
  return {fss_value / asn_theta, fss_value / asn_theta0, fss_value / asn_theta1,
          fss_value / static_cast<double>(quantile_99)};
}

}  // namespace kw
