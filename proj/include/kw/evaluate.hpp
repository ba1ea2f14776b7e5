#pragma once

// Exact evaluation of a truncated plan's operating characteristic, average
// sample number, and stopping-time distribution at an arbitrary parameter
// point.  All recursions run over the plan's continuation intervals only;
// states outside them are folded into per-observation cdf terms, so nothing
// here depends on support truncation.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kw/design.hpp"
#include "kw/expfam.hpp"

namespace kw {

struct performance_report {
  double theta = kNaN;  // user-scale evaluation point
  double oc = kNaN;     // probability of accepting H0
  double asn = kNaN;
  std::vector<double> tail;  // tail[k-1] = P(tau > k), k = 1..horizon-1
  long long quantile_99 = 1;
  long long max_n = 1;
};

namespace detail {

class evaluator {
 public:
  evaluator(const test_plan& plan, double theta_user)
      : plan_(&plan),
        th_(plan.model.natural_param(theta_user)),
        bth_(plan.model.log_partition(th_)),
        F_(plan.model, th_) {
    // observation pmf by offset, up to the largest stage-to-stage jump
    long long maxoff = 0;
    const long long h = plan.horizon;
    for (long long n = 1; n + 1 <= h - 1; ++n) {
      const stage_interval& cur = plan.stage(n);
      const stage_interval& nxt = plan.stage(n + 1);
      if (!cur.empty() && !nxt.empty())
        maxoff = std::max(maxoff, nxt.b - cur.a);
    }
    const long long cap = plan.model.support_max(1);
    if (cap >= 0) maxoff = std::min(maxoff, cap);
    f_.resize(static_cast<std::size_t>(maxoff + 1));
    for (long long x = 0; x <= maxoff; ++x)
      f_[static_cast<std::size_t>(x)] = plan.model.obs_pmf(th_, x);
  }

  double obs(long long x) const {
    if (x < 0 || x >= static_cast<long long>(f_.size()))
      return plan_->model.obs_pmf(th_, x);
    return f_[static_cast<std::size_t>(x)];
  }

  // g_theta^1(t) is the observation pmf itself
  double g1(long long t) const { return plan_->model.obs_pmf(th_, t); }

  // p(accept H0) when h0_side, else p(accept H1); the two recursions are
  // mirror images and must sum to one
  double acceptance(bool h0_side) {
    const test_plan& plan = *plan_;
    stage_interval next_int{};  // stage `horizon` continues nowhere
    std::vector<double> next_vals;
    for (long long n = plan.horizon - 1; n >= 1; --n) {
      const stage_interval cur_int = plan.stage(n);
      const long long t_next = plan.threshold(n + 1);
      std::vector<double> cur;
      if (!cur_int.empty()) {
        cur.resize(static_cast<std::size_t>(cur_int.b - cur_int.a + 1));
        for (long long s = cur_int.a; s <= cur_int.b; ++s) {
          long double acc = h0_side ? F_.cdf(t_next - s) : F_.sf(t_next - s);
          for (long long t = std::max(next_int.a, s); t <= next_int.b; ++t) {
            const bool dec = h0_side ? (t <= t_next) : (t > t_next);
            acc += (next_vals[static_cast<std::size_t>(t - next_int.a)] -
                    (dec ? 1.0 : 0.0)) *
                   obs(t - s);
          }
          cur[static_cast<std::size_t>(s - cur_int.a)] = static_cast<double>(acc);
        }
      }
      next_int = cur_int;
      next_vals = std::move(cur);
    }
    const long long t1 = plan.threshold(1);
    long double acc = h0_side ? F_.cdf(t1) : F_.sf(t1);
    for (long long t = std::max(next_int.a, 0LL); t <= next_int.b; ++t) {
      const bool dec = h0_side ? (t <= t1) : (t > t1);
      acc += (next_vals[static_cast<std::size_t>(t - next_int.a)] -
              (dec ? 1.0 : 0.0)) *
             g1(t);
    }
    return static_cast<double>(acc);
  }

  double asn() {
    const test_plan& plan = *plan_;
    if (plan.horizon <= 1) return 1.0;
    stage_interval next_int{};
    std::vector<double> next_vals;  // expected remaining stages from (n+1, t)
    for (long long n = plan.horizon - 1; n >= 1; --n) {
      const stage_interval cur_int = plan.stage(n);
      std::vector<double> cur;
      if (!cur_int.empty()) {
        cur.resize(static_cast<std::size_t>(cur_int.b - cur_int.a + 1));
        for (long long s = cur_int.a; s <= cur_int.b; ++s) {
          long double acc = 1.0L;
          for (long long t = std::max(next_int.a, s); t <= next_int.b; ++t)
            acc += next_vals[static_cast<std::size_t>(t - next_int.a)] * obs(t - s);
          cur[static_cast<std::size_t>(s - cur_int.a)] = static_cast<double>(acc);
        }
      }
      next_int = cur_int;
      next_vals = std::move(cur);
    }
    long double acc = 1.0L;
    for (long long t = std::max(next_int.a, 0LL); t <= next_int.b; ++t)
      acc += next_vals[static_cast<std::size_t>(t - next_int.a)] * g1(t);
    return static_cast<double>(acc);
  }

  // full vector of P(tau > k), k = 1..horizon-1, by forward propagation of
  // the reachable-state masses
  std::vector<double> tail_distribution() {
    const test_plan& plan = *plan_;
    std::vector<double> tails(
        static_cast<std::size_t>(plan.horizon > 0 ? plan.horizon - 1 : 0), 0.0);
    if (plan.horizon <= 1) return tails;
    stage_interval cur_int = plan.stage(1);
    std::vector<double> rho;  // mass still running, over the stage interval
    if (!cur_int.empty()) {
      rho.resize(static_cast<std::size_t>(cur_int.b - cur_int.a + 1));
      long double tot = 0.0L;
      for (long long t = cur_int.a; t <= cur_int.b; ++t) {
        const double m = g1(t);
        rho[static_cast<std::size_t>(t - cur_int.a)] = m;
        tot += m;
      }
      tails[0] = static_cast<double>(tot);
    }
    for (long long n = 2; n <= plan.horizon - 1; ++n) {
      if (cur_int.empty() || tails[static_cast<std::size_t>(n - 2)] == 0.0) break;
      const stage_interval nxt_int = plan.stage(n);
      std::vector<double> nxt;
      if (!nxt_int.empty()) {
        nxt.resize(static_cast<std::size_t>(nxt_int.b - nxt_int.a + 1));
        long double tot = 0.0L;
        for (long long t = nxt_int.a; t <= nxt_int.b; ++t) {
          long double acc = 0.0L;
          for (long long s = cur_int.a; s <= std::min(cur_int.b, t); ++s)
            acc += rho[static_cast<std::size_t>(s - cur_int.a)] * obs(t - s);
          nxt[static_cast<std::size_t>(t - nxt_int.a)] = static_cast<double>(acc);
          tot += acc;
        }
        tails[static_cast<std::size_t>(n - 1)] = static_cast<double>(tot);
      }
      cur_int = nxt_int;
      rho = std::move(nxt);
    }
    return tails;
  }

  // single P(tau > k) by the backward route: propagate the constant 1 from
  // stage k's continuation interval down to stage 1
  double tail_probability(long long k) {
    const test_plan& plan = *plan_;
    if (k >= plan.horizon) return 0.0;
    stage_interval next_int = plan.stage(k);
    if (next_int.empty()) return 0.0;
    std::vector<double> next_vals(
        static_cast<std::size_t>(next_int.b - next_int.a + 1), 1.0);
    for (long long n = k - 1; n >= 1; --n) {
      const stage_interval cur_int = plan.stage(n);
      std::vector<double> cur;
      if (!cur_int.empty()) {
        cur.resize(static_cast<std::size_t>(cur_int.b - cur_int.a + 1));
        for (long long s = cur_int.a; s <= cur_int.b; ++s) {
          long double acc = 0.0L;
          for (long long t = std::max(next_int.a, s); t <= next_int.b; ++t)
            acc += next_vals[static_cast<std::size_t>(t - next_int.a)] * obs(t - s);
          cur[static_cast<std::size_t>(s - cur_int.a)] = static_cast<double>(acc);
        }
      }
      next_int = cur_int;
      next_vals = std::move(cur);
      if (next_int.empty()) return 0.0;
    }
    long double acc = 0.0L;
    for (long long t = std::max(next_int.a, 0LL); t <= next_int.b; ++t)
      acc += next_vals[static_cast<std::size_t>(t - next_int.a)] * g1(t);
    return static_cast<double>(acc);
  }

 private:
  const test_plan* plan_;
  double th_, bth_;
  cdf_table F_;
  std::vector<double> f_;
};

}  // namespace detail

// probability of accepting H0 under theta (user scale)
inline double oc(const test_plan& plan, double theta_user) {
  detail::evaluator ev(plan, theta_user);
  return ev.acceptance(true);
}

// probability of accepting H1; oc + accept_h1_probability == 1 exactly in
// the underlying recursion, up to floating-point reduction error
inline double accept_h1_probability(const test_plan& plan, double theta_user) {
  detail::evaluator ev(plan, theta_user);
  return ev.acceptance(false);
}

inline double asn(const test_plan& plan, double theta_user) {
  detail::evaluator ev(plan, theta_user);
  return ev.asn();
}

// P(tau > k); zero whenever k >= horizon
inline double tail_probability(const test_plan& plan, double theta_user, long long k) {
  if (k < 1) throw std::invalid_argument("tail_probability: k must be at least 1");
  detail::evaluator ev(plan, theta_user);
  return ev.tail_probability(k);
}

inline std::vector<double> tail_distribution(const test_plan& plan, double theta_user) {
  detail::evaluator ev(plan, theta_user);
  return ev.tail_distribution();
}

// largest stage the plan can actually reach: the first empty continuation
// stage cuts the test off regardless of the nominal horizon
inline long long max_sample_size(const test_plan& plan) {
  for (long long n = 1; n <= plan.horizon - 1; ++n)
    if (plan.stage(n).empty()) return n;
  return plan.horizon;
}

// smallest k with P(tau <= k) >= level
inline long long quantile(const test_plan& plan, double theta_user, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("quantile: level must lie in (0, 1)");
  detail::evaluator ev(plan, theta_user);
  const std::vector<double> tails = ev.tail_distribution();
  for (std::size_t i = 0; i < tails.size(); ++i)
    if (1.0 - tails[i] >= level) return static_cast<long long>(i + 1);
  return plan.horizon;
}

inline performance_report evaluate_plan(const test_plan& plan, double theta_user,
                                        double quantile_level = 0.99) {
  if (!(quantile_level > 0.0 && quantile_level < 1.0))
    throw std::invalid_argument("evaluate_plan: quantile level must lie in (0, 1)");
  detail::evaluator ev(plan, theta_user);
  performance_report r;
  r.theta = theta_user;
  r.oc = ev.acceptance(true);
  r.asn = ev.asn();
  r.tail = ev.tail_distribution();
  r.quantile_99 = plan.horizon;
  for (std::size_t i = 0; i < r.tail.size(); ++i) {
    if (1.0 - r.tail[i] >= quantile_level) {
      r.quantile_99 = static_cast<long long>(i + 1);
      break;
    }
  }
  r.max_n = max_sample_size(plan);
  return r;
}

struct error_pair {
  double alpha = kNaN;  // p(accept H1 | theta0)
  double beta = kNaN;   // p(accept H0 | theta1)
};

inline error_pair error_probabilities(const test_plan& plan) {
  return {1.0 - oc(plan, plan.theta0), oc(plan, plan.theta1)};
}

struct asn_curve_result {
  std::vector<std::pair<double, double>> points;  // (theta, asn) over the grid
  double sup_theta = kNaN;
  double sup_asn = kNaN;
};

// ASN as a function of theta over a user-scale grid, with a golden-section
// refinement of the maximum between the grid neighbours of the best point
inline asn_curve_result asn_curve(const test_plan& plan,
                                  const std::vector<double>& theta_grid,
                                  double refine_tol = 1e-6) {
  if (theta_grid.empty())
    throw std::invalid_argument("asn_curve: theta grid must be non-empty");
  asn_curve_result out;
  out.points.reserve(theta_grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const double v = asn(plan, theta_grid[i]);
    out.points.emplace_back(theta_grid[i], v);
    if (v > out.points[best].second) best = i;
  }
  double lo = out.points[best == 0 ? 0 : best - 1].first;
  double hi = out.points[best + 1 < out.points.size() ? best + 1 : best].first;
  double best_t = out.points[best].first;
  double best_v = out.points[best].second;
  if (hi - lo > refine_tol) {
    const double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = asn(plan, x1);
    double f2 = asn(plan, x2);
    while (hi - lo > refine_tol) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = asn(plan, x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = asn(plan, x1);
      }
      const double xm = f1 > f2 ? x1 : x2;
      const double fm = std::max(f1, f2);
      if (fm > best_v) {
        best_v = fm;
        best_t = xm;
      }
    }
  }
  out.sup_theta = best_t;
  out.sup_asn = best_v;
  return out;
}

}  // namespace kw
