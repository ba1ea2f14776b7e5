#pragma once

// Backward-induction construction of optimal truncated sequential plans.
//
// A plan stops at stage n outside the continuation interval [a_n, b_n] and
// then accepts H0 exactly when s <= T_n.  Working from the horizon downward,
// the value of stopping at (n, s) with the better decision is
//
//   M_n(s) = min{ lambda0 * g_{theta0}^n(s),  lambda1 * g_{theta1}^n(s) },
//
// which switches branch at the closed-form threshold T_n.  Continuing from
// (n-1, s) is worth
//
//   g_theta^{n-1}(s) + c * g_{theta1}^{n-1}(s) + J_n(s),
//
// with J_n(s) = sum_x U_n(s + x) * d_n(x, s) and U_n = min{continue, stop};
// the state continues exactly when this is strictly below M_{n-1}(s).
// Outside the stage-n continuation interval U_n equals M_n, and the identity
// g_theta^{n-1}(s) * f_theta(x) = g_theta^n(s + x) * d_n(x, s) collapses the
// two stopped tails of the sum into per-observation cdf terms:
//
//   J_n(s) = lambda1 * g1^{n-1}(s) * F_{theta1}(T_n - s)
//          + lambda0 * g0^{n-1}(s) * (1 - F_{theta0}(T_n - s))
//          + sum_{t in [a_n, b_n], t >= s} (U_n(t) - M_n(t)) * d_n(t - s, s),
//
// so J_n carries no support-truncation error and the correction sum only
// runs over the stored continuation states.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kw/expfam.hpp"

namespace kw {

struct design_problem {
  family_model model;
  double theta0, theta1, theta;  // user scale
  double lambda0, lambda1;
  double penalty_c;

  design_problem(family_model m, double t0, double t1, double t, double l0,
                 double l1, double c = 0.0)
      : model(m), theta0(t0), theta1(t1), theta(t), lambda0(l0), lambda1(l1),
        penalty_c(c) {
    model.natural_param(theta0);  // domain checks
    model.natural_param(theta1);
    model.natural_param(theta);
    if (!(theta0 < theta1))
      throw std::invalid_argument("design_problem: theta0 must be less than theta1");
    if (!(lambda0 > 0.0) || !(lambda1 > 0.0))
      throw std::invalid_argument("design_problem: lambda0 and lambda1 must be positive");
    if (!(penalty_c >= 0.0))
      throw std::invalid_argument("design_problem: penalty_c must be non-negative");
  }
};

struct stage_interval {
  long long a = 0;
  long long b = -1;  // b < a encodes an empty stage
  bool empty() const { return b < a; }
};

struct test_plan {
  family_model model;
  double theta0 = kNaN, theta1 = kNaN;  // user scale
  double theta = kNaN;                  // design point; NaN for SPRT-derived plans
  double lambda0 = kNaN, lambda1 = kNaN;
  double penalty_c = 0.0;
  long long horizon = 1;
  std::vector<stage_interval> stages;        // continuation intervals, n = 1..horizon-1
  std::vector<long long> accept_thresholds;  // T_1..T_horizon; accept H0 iff s <= T_n
  double lagrangian_value = kNaN;
  bool possibly_suboptimal = false;

  explicit test_plan(family_model m) : model(m) {}

  const stage_interval& stage(long long n) const { return stages[n - 1]; }
  long long threshold(long long n) const { return accept_thresholds[n - 1]; }
};

namespace detail {

// floor/ceil of closed-form bound expressions, guarded against values large
// enough to be meaningless as stage counts or state indices
inline long long checked_floor(double x, const char* what) {
  if (!(std::abs(x) < 9.0e15))
    throw std::runtime_error(std::string(what) + ": bound overflows the index range");
  return static_cast<long long>(std::floor(x));
}

inline long long upper_bound_raw(double log_lam0, double th0, double b0,
                                 double th, double bt, long long n) {
  return checked_floor(log_lam0 / (th - th0) +
                           static_cast<double>(n) * (bt - b0) / (th - th0),
                       "bound_upper");
}

inline long long lower_bound_raw(double log_lam1, double th1, double b1,
                                 double th, double bt, long long n) {
  const double v = -log_lam1 / (th1 - th) +
                   static_cast<double>(n) * (b1 - bt) / (th1 - th);
  if (!(std::abs(v) < 9.0e15))
    throw std::runtime_error("bound_lower: bound overflows the index range");
  const long long a = static_cast<long long>(std::ceil(v));
  return a < 0 ? 0 : a;
}

// per-observation cdf with incremental extension (theta fixed)
class cdf_table {
 public:
  cdf_table(const family_model& fam, double theta) : fam_(&fam), theta_(theta) {}

  double cdf(long long k) {
    if (k < 0) return 0.0;
    const long long cap = fam_->support_max(1);
    if (cap >= 0 && k > cap) k = cap;
    while (static_cast<long long>(cum_.size()) <= k) {
      acc_ += fam_->obs_pmf(theta_, static_cast<long long>(cum_.size()));
      cum_.push_back(acc_ >= 1.0L ? 1.0 : static_cast<double>(acc_));
    }
    return cum_[static_cast<std::size_t>(k)];
  }

  double sf(long long k) {
    if (k < 0) return 1.0;
    const double c = cdf(k);
    return c >= 1.0 ? 0.0 : 1.0 - c;
  }

 private:
  const family_model* fam_;
  double theta_;
  std::vector<double> cum_;
  long double acc_ = 0.0L;
};

// log h(x) with incremental extension
class log_h_table {
 public:
  explicit log_h_table(const family_model& fam) : fam_(&fam) {}

  double operator()(long long x) {
    while (static_cast<long long>(tab_.size()) <= x)
      tab_.push_back(fam_->log_h(static_cast<long long>(tab_.size())));
    return tab_[static_cast<std::size_t>(x)];
  }

 private:
  const family_model* fam_;
  std::vector<double> tab_;
};

enum class scan_mode { interior, at_theta1, above_theta1, at_theta0, below_theta0 };

class designer {
 public:
  explicit designer(const design_problem& p)
      : fam_(p.model),
        th0_(p.model.natural_param(p.theta0)),
        th1_(p.model.natural_param(p.theta1)),
        th_(p.model.natural_param(p.theta)),
        b0_(p.model.log_partition(th0_)),
        b1_(p.model.log_partition(th1_)),
        bt_(p.model.log_partition(th_)),
        lam0_(p.lambda0),
        lam1_(p.lambda1),
        penalty_c_(p.penalty_c),
        log_lam_ratio_(std::log(p.lambda0) - std::log(p.lambda1)),
        problem_(p),
        F0_(fam_, th0_),
        F1_(fam_, th1_),
        lh_(fam_) {
    if (th_ < th0_) mode_ = scan_mode::below_theta0;
    else if (th_ == th0_) mode_ = scan_mode::at_theta0;
    else if (th_ < th1_) mode_ = scan_mode::interior;
    else if (th_ == th1_) mode_ = scan_mode::at_theta1;
    else mode_ = scan_mode::above_theta1;
  }

  // accept-H0 threshold at stage n
  long long threshold(long long n) const {
    return checked_floor(
        (log_lam_ratio_ + static_cast<double>(n) * (b1_ - b0_)) / (th1_ - th0_),
        "accept threshold");
  }

  test_plan run(long long horizon) {
    long long h = std::max<long long>(horizon, 1);
    guard_memory(h);
    std::vector<stage_interval> stages(static_cast<std::size_t>(h - 1));
    stored_stage next;  // horizon stage: stops everywhere
    long long n = h;
    while (n >= 2) {
      const long long nm = n - 1;
      auto scanned = scan_stage(nm, threshold(n), next);
      if (!scanned) {
        // no continuation states at stage nm: the problem truncated at nm has
        // the all-stop stage as its base case, which is exactly the state of
        // `next` right now, so the pass simply restarts from the new horizon
        h = nm;
        stages.assign(static_cast<std::size_t>(h > 0 ? h - 1 : 0), {});
        next = stored_stage{};
        n = h;
        continue;
      }
      stages[static_cast<std::size_t>(nm - 1)] = {scanned->a, scanned->b};
      next = store_stage(nm, *scanned);
      n = nm;
    }

    test_plan plan(problem_.model);
    plan.theta0 = problem_.theta0;
    plan.theta1 = problem_.theta1;
    plan.theta = problem_.theta;
    plan.lambda0 = lam0_;
    plan.lambda1 = lam1_;
    plan.penalty_c = penalty_c_;
    plan.horizon = h;
    plan.stages = std::move(stages);
    plan.accept_thresholds.resize(static_cast<std::size_t>(h));
    for (long long k = 1; k <= h; ++k)
      plan.accept_thresholds[static_cast<std::size_t>(k - 1)] = threshold(k);
    // the stage-0 "state" has g^0 = 1 for every parameter, so the value of
    // continuing from it is 1 + c + J_1(0): the minimized Lagrangian itself
    plan.lagrangian_value = eval_state(0, 0, threshold(1), next).cont;
    plan.possibly_suboptimal = flagged_;
    return plan;
  }

 private:
  struct state_value {
    double cont;  // g_theta + c * g_theta1 + J
    double stop;  // min{lambda0 g0, lambda1 g1}
    double g_design;  // g_theta^{n}(s), used by the below-theta0 certificate
  };

  struct stored_stage {
    long long a = 0, b = -1;
    std::vector<double> slack;  // U_n(t) - M_n(t) on [a, b], all <= 0
    std::vector<double> logc;   // log C_n(t) on [a, b]
    bool empty() const { return b < a; }
  };

  struct scanned_stage {
    long long a = 0, b = -1;
    std::vector<state_value> vals;  // aligned to [a, b]
  };

  state_value eval_state(long long nm, long long s, long long t_next,
                         const stored_stage& next) {
    const double lcp = fam_.log_c(nm, s);
    const double nmd = static_cast<double>(nm);
    const double sd = static_cast<double>(s);
    const double g0 = std::exp(lcp + th0_ * sd - nmd * b0_);
    const double g1 = std::exp(lcp + th1_ * sd - nmd * b1_);
    const double gt = std::exp(lcp + th_ * sd - nmd * bt_);
    long double j = static_cast<long double>(lam1_) * g1 * F1_.cdf(t_next - s) +
                    static_cast<long double>(lam0_) * g0 * F0_.sf(t_next - s);
    if (!next.empty()) {
      // ascending t keeps the reduction order fixed and results reproducible
      for (long long t = std::max(next.a, s); t <= next.b; ++t) {
        const std::size_t i = static_cast<std::size_t>(t - next.a);
        j += next.slack[i] * std::exp(lh_(t - s) + lcp - next.logc[i]);
      }
    }
    return {gt + penalty_c_ * g1 + static_cast<double>(j),
            std::min(lam0_ * g0, lam1_ * g1), gt};
  }

  stored_stage store_stage(long long nm, const scanned_stage& sc) {
    stored_stage st;
    st.a = sc.a;
    st.b = sc.b;
    st.slack.resize(sc.vals.size());
    st.logc.resize(sc.vals.size());
    for (std::size_t i = 0; i < sc.vals.size(); ++i) {
      st.slack[i] = std::min(sc.vals[i].cont - sc.vals[i].stop, 0.0);
      st.logc[i] = fam_.log_c(nm, sc.a + static_cast<long long>(i));
    }
    return st;
  }

  long long scan_upper_bound(long long nm) const {
    long long hi = upper_bound_raw(std::log(lam0_), th0_, b0_, th_, bt_, nm);
    const long long cap = fam_.support_max(nm);
    if (cap >= 0) hi = std::min(hi, cap);
    return hi;
  }

  long long scan_lower_bound(long long nm) const {
    return lower_bound_raw(std::log(lam1_), th1_, b1_, th_, bt_, nm);
  }

  std::optional<scanned_stage> scan_stage(long long nm, long long t_next,
                                          const stored_stage& next) {
    // lazily filled buffer over the mode's scan range
    long long range_lo = 0, range_hi = -1;
    std::vector<state_value> buf;
    std::vector<char> have;
    auto val = [&](long long s) -> const state_value& {
      const std::size_t i = static_cast<std::size_t>(s - range_lo);
      if (!have[i]) {
        buf[i] = eval_state(nm, s, t_next, next);
        have[i] = 1;
      }
      return buf[i];
    };
    auto satisfied = [&](long long s) {
      const state_value& v = val(s);
      return v.cont < v.stop;  // strict: ties stop
    };
    auto init_range = [&](long long lo, long long hi) {
      range_lo = lo;
      range_hi = hi;
      buf.assign(static_cast<std::size_t>(hi >= lo ? hi - lo + 1 : 0), {});
      have.assign(buf.size(), 0);
    };

    long long a = -1, b = -1;
    switch (mode_) {
      case scan_mode::interior: {
        const long long lo = scan_lower_bound(nm);
        const long long hi = scan_upper_bound(nm);
        if (hi < lo) return std::nullopt;
        init_range(lo, hi);
        for (long long s = lo; s <= hi; ++s) {
          if (!satisfied(s)) continue;
          if (a < 0) a = s;
          else if (s != b + 1)
            throw std::logic_error("design: continuation region has a gap");
          b = s;
        }
        break;
      }
      case scan_mode::at_theta1:
      case scan_mode::above_theta1: {
        const long long hi = scan_upper_bound(nm);
        if (hi < 0) return std::nullopt;
        init_range(0, hi);
        long long s = hi;
        while (s >= 0 && !satisfied(s)) --s;
        if (s < 0) return std::nullopt;
        b = s;
        if (mode_ == scan_mode::at_theta1) {
          while (s >= 0 && satisfied(s)) --s;  // interval: walk to its bottom
          a = s + 1;
        } else {
          a = 0;
          while (!satisfied(a)) ++a;  // hull: first satisfying state from below
        }
        break;
      }
      case scan_mode::at_theta0: {
        const long long lo = scan_lower_bound(nm);
        const long long limit = state_limit(nm);
        long long s = lo;
        init_range(lo, std::max(limit, lo));
        while (s <= limit && !satisfied(s)) ++s;
        if (s > limit) return std::nullopt;
        a = s;
        while (s <= limit && satisfied(s)) ++s;  // interval: walk to its top
        b = s - 1;
        break;
      }
      case scan_mode::below_theta0: {
        // No two-sided bound exists here.  Scan upward and stop once s has
        // passed the decision crossing and reached a state where already the
        // one-step bound g_theta >= min{lambda0 g0, lambda1 g1} rules out
        // continuation; the monotone-decreasing ratio g_theta / g_theta0
        // makes further continuation states implausible but not impossible,
        // hence the plan is flagged.  The stage mass bound is a hard stop in
        // case the certificate never triggers.
        flagged_ = true;
        const long long lo = scan_lower_bound(nm);
        const long long limit = state_limit(nm);
        const long long crossing = threshold(nm);
        init_range(lo, std::max(limit, lo));
        for (long long s = lo; s <= limit; ++s) {
          const state_value& v = val(s);
          if (v.cont < v.stop) {
            if (a < 0) a = s;
            b = s;
          } else if (s > crossing && v.g_design >= v.stop && (b < 0 || s > b)) {
            break;
          }
        }
        break;
      }
    }
    if (a < 0) return std::nullopt;

    scanned_stage out;
    out.a = a;
    out.b = b;
    out.vals.reserve(static_cast<std::size_t>(b - a + 1));
    for (long long s = a; s <= b; ++s) out.vals.push_back(val(s));
    return out;
  }

  // hard per-stage state cap for the modes without a two-sided bound
  long long state_limit(long long nm) {
    return fam_.stage_state_bound(nm, {th0_, th1_, th_});
  }

  void guard_memory(long long h) const {
    // widest possible scan is bounded by the stage-h upper bound (or mean
    // scale for the below-theta0 modes); refuse plainly absurd requests
    double scale;
    if (mode_ == scan_mode::below_theta0 || mode_ == scan_mode::at_theta0) {
      const double mean1 = fam_.kind() == family_kind::binomial
                               ? static_cast<double>(fam_.shape())
                               : fam_.user_param(th1_);
      scale = static_cast<double>(h) * (mean1 + 10.0) + 1000.0;
    } else {
      scale = std::log(lam0_) / (th_ - th0_) +
              static_cast<double>(h) * (bt_ - b0_) / (th_ - th0_);
    }
    if (!(scale < 2.0e6))
      throw std::runtime_error(
          "design: horizon cap implies per-stage state ranges beyond the memory budget");
  }

  family_model fam_;
  double th0_, th1_, th_, b0_, b1_, bt_;
  double lam0_, lam1_, penalty_c_, log_lam_ratio_;
  design_problem problem_;
  cdf_table F0_, F1_;
  log_h_table lh_;
  scan_mode mode_ = scan_mode::interior;
  bool flagged_ = false;
};

}  // namespace detail

// B_n(lambda0, theta0, theta): largest integer s for which rejecting H0
// immediately can still be optimal; requires theta > theta0
inline long long bound_upper(const design_problem& p, long long n) {
  const double th0 = p.model.natural_param(p.theta0);
  const double th = p.model.natural_param(p.theta);
  if (!(th > th0))
    throw std::invalid_argument("bound_upper: requires theta > theta0");
  return detail::upper_bound_raw(std::log(p.lambda0), th0,
                                 p.model.log_partition(th0), th,
                                 p.model.log_partition(th), n);
}

// A_n(lambda1, theta1, theta), clamped below at 0; requires theta < theta1
inline long long bound_lower(const design_problem& p, long long n) {
  const double th1 = p.model.natural_param(p.theta1);
  const double th = p.model.natural_param(p.theta);
  if (!(th < th1))
    throw std::invalid_argument("bound_lower: requires theta < theta1");
  return detail::lower_bound_raw(std::log(p.lambda1), th1,
                                 p.model.log_partition(th1), th,
                                 p.model.log_partition(th), n);
}

// Last stage at which continuing can possibly pay, for theta strictly inside
// (theta0, theta1); the denominator is positive by convexity of the
// log-partition.  A value below 1 means no continuation ever pays.
inline long long horizon_bound(const design_problem& p) {
  const double th0 = p.model.natural_param(p.theta0);
  const double th1 = p.model.natural_param(p.theta1);
  const double th = p.model.natural_param(p.theta);
  if (!(th0 < th && th < th1))
    throw std::invalid_argument(
        "horizon_bound: theta must lie strictly inside (theta0, theta1); "
        "supply a horizon cap via design_truncated instead");
  const double b0 = p.model.log_partition(th0);
  const double b1 = p.model.log_partition(th1);
  const double bt = p.model.log_partition(th);
  const double denom = (b1 - bt) / (th1 - th) - (bt - b0) / (th - th0);
  const double num = std::log(p.lambda0) / (th - th0) + std::log(p.lambda1) / (th1 - th);
  return detail::checked_floor(num / denom, "horizon_bound");
}

// Optimal plan for theta strictly inside (theta0, theta1), truncated at the
// natural horizon bound (beyond which no optimal test continues).  Shrinks
// the horizon to the realized maximum stage; degenerates to horizon 1 when
// continuation never pays.
inline test_plan design_modified(const design_problem& p) {
  const double th0 = p.model.natural_param(p.theta0);
  const double th1 = p.model.natural_param(p.theta1);
  const double th = p.model.natural_param(p.theta);
  if (!(th0 < th && th < th1))
    throw std::invalid_argument(
        "design_modified: theta must lie strictly inside (theta0, theta1); "
        "use design_truncated for boundary or outside values");
  if (p.penalty_c != 0.0)
    throw std::invalid_argument(
        "design_modified: penalty_c must be zero; use design_truncated");
  detail::designer d(p);
  return d.run(horizon_bound(p));
}

// Optimal plan within the class of tests truncated at horizon_cap; theta may
// lie anywhere in the parameter space, and the per-stage search direction
// follows the position of theta relative to [theta0, theta1].  For
// theta < theta0 the result carries the possibly_suboptimal flag.
inline test_plan design_truncated(const design_problem& p, long long horizon_cap) {
  if (horizon_cap < 1)
    throw std::invalid_argument("design_truncated: horizon_cap must be at least 1");
  const double th0 = p.model.natural_param(p.theta0);
  const double th1 = p.model.natural_param(p.theta1);
  const double th = p.model.natural_param(p.theta);
  long long h = horizon_cap;
  if (th0 < th && th < th1)
    h = std::min(h, std::max<long long>(horizon_bound(p), 1));
  detail::designer d(p);
  return d.run(h);
}

}  // namespace kw
