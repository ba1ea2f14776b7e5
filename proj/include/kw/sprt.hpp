#pragma once

// Wald sequential probability ratio tests expressed as truncated plans on
// the sufficient-statistic lattice, plus a fit routine that tunes the two
// log boundaries until the achieved error probabilities match their targets
// as closely as the discreteness allows.
//
// With Z_n = log(f_theta1 / f_theta0)(X_1..X_n) = dth * S_n - n * db, the
// continuation condition log_a < Z_n < log_b becomes an integer band in S_n:
// the test keeps sampling while a_n <= S_n <= b_n with
//
//   a_n = max(0, floor((log_a + n db) / dth) + 1),
//   b_n = ceil((log_b + n db) / dth) - 1,
//
// and boundary hits decide by which side was crossed (Z_n <= log_a accepts
// H0).  The truncation stage decides by the sign of Z_n.  All of OC, ASN and
// the stopping-time law then come from the plan evaluator unchanged.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kw/design.hpp"
#include "kw/evaluate.hpp"
#include "kw/expfam.hpp"
#include "kw/simplex.hpp"

namespace kw {

struct sprt_design {
  double log_a = kNaN, log_b = kNaN;  // natural-log boundaries, log_a < log_b
  double achieved_alpha = kNaN, achieved_beta = kNaN;
  double rel_deviation = kNaN;  // max relative miss of the two targets
  bool converged = true;
};

// Wald's closed-form starting boundaries for given error targets
inline sprt_design wald_start(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("wald_start: alpha and beta must lie in (0, 1)");
  sprt_design d;
  d.log_a = std::log(beta / (1.0 - alpha));
  d.log_b = std::log((1.0 - beta) / alpha);
  return d;
}

// materialize the SPRT with boundaries (log_a, log_b) as a plan truncated at
// `cap` stages
inline test_plan sprt_plan(const sprt_design& d, const family_model& model,
                           double theta0_user, double theta1_user, long long cap) {
  if (!(d.log_a < d.log_b))
    throw std::invalid_argument("sprt_plan: requires log_a < log_b");
  if (cap < 1) throw std::invalid_argument("sprt_plan: cap must be at least 1");
  const double th0 = model.natural_param(theta0_user);
  const double th1 = model.natural_param(theta1_user);
  if (!(th0 < th1))
    throw std::invalid_argument("sprt_plan: theta0 must be less than theta1");
  const double dth = th1 - th0;
  const double db = model.log_partition(th1) - model.log_partition(th0);

  test_plan plan(model);
  plan.theta0 = theta0_user;
  plan.theta1 = theta1_user;
  plan.horizon = cap;
  plan.stages.resize(static_cast<std::size_t>(cap - 1));
  plan.accept_thresholds.resize(static_cast<std::size_t>(cap));
  for (long long n = 1; n <= cap; ++n) {
    const double lo = (d.log_a + static_cast<double>(n) * db) / dth;
    const double hi = (d.log_b + static_cast<double>(n) * db) / dth;
    long long t;
    if (n < cap) {
      long long a = detail::checked_floor(lo, "sprt_plan") + 1;
      if (a < 0) a = 0;
      long long b = static_cast<long long>(std::ceil(hi)) - 1;
      const long long smax = model.support_max(n);
      if (smax >= 0) b = std::min(b, smax);
      plan.stages[static_cast<std::size_t>(n - 1)] =
          (b < a) ? stage_interval{} : stage_interval{a, b};
      t = detail::checked_floor(lo, "sprt_plan");
    } else {
      // forced stop: accept H0 iff the log likelihood ratio is <= 0
      t = detail::checked_floor(static_cast<double>(n) * db / dth, "sprt_plan");
    }
    plan.accept_thresholds[static_cast<std::size_t>(n - 1)] = t;
  }
  return plan;
}

// truncate where the running probability is negligible under every theta of
// interest: double the cap until P(tau > cap - 1) < 1e-12 for each of them
inline test_plan sprt_plan_auto(const sprt_design& d, const family_model& model,
                                double theta0_user, double theta1_user,
                                std::vector<double> eval_thetas = {},
                                double mass_tol = 1e-12) {
  eval_thetas.push_back(theta0_user);
  eval_thetas.push_back(theta1_user);
  for (long long cap = 256;; cap *= 2) {
    if (cap > (1LL << 22))
      throw std::runtime_error("sprt_plan_auto: no finite truncation found; "
                               "the band may be unbounded");
    test_plan plan = sprt_plan(d, model, theta0_user, theta1_user, cap);
    bool ok = true;
    for (double t : eval_thetas) {
      const std::vector<double> tails = tail_distribution(plan, t);
      if (!tails.empty() && tails.back() >= mass_tol) {
        ok = false;
        break;
      }
    }
    if (ok) return plan;
  }
}

// tune (log_a, log_b) so the achieved error pair matches (alpha, beta)
inline sprt_design fit_sprt(const family_model& model, double theta0_user,
                            double theta1_user, double alpha, double beta,
                            const simplex_config& cfg = {}) {
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("fit_sprt: alpha and beta must lie in (0, 1)");
  auto objective = [&](const std::vector<double>& x) {
    if (!(x[0] < x[1])) return 1e300;  // boundaries out of order
    sprt_design d;
    d.log_a = x[0];
    d.log_b = x[1];
    const test_plan plan = sprt_plan_auto(d, model, theta0_user, theta1_user);
    const error_pair e = error_probabilities(plan);
    return std::max(std::abs(e.alpha - alpha) / alpha,
                    std::abs(e.beta - beta) / beta);
  };
  const sprt_design w = wald_start(alpha, beta);
  const simplex_result r =
      simplex_minimize(objective, {w.log_a, w.log_b}, {0.15, 0.15}, cfg);

  sprt_design d;
  d.log_a = r.x[0];
  d.log_b = r.x[1];
  const test_plan plan = sprt_plan_auto(d, model, theta0_user, theta1_user);
  const error_pair e = error_probabilities(plan);
  d.achieved_alpha = e.alpha;
  d.achieved_beta = e.beta;
  d.rel_deviation = r.value;
  d.converged = r.converged;
  return d;
}

}  // namespace kw
