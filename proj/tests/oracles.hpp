#pragma once

// Brute-force reference implementations used only by tests.  Deliberately
// naive: direct convolutions, full path enumeration, and exhaustive search
// over stop/decide rules.  Anything the library computes cleverly is checked
// against one of these on instances small enough for the naive route.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "kw/design.hpp"
#include "kw/evaluate.hpp"
#include "kw/expfam.hpp"

namespace oracle {

// log(exp(a) + exp(b)) without leaving the log scale
inline double log_add(double a, double b) {
  if (a == kw::kNegInf) return b;
  if (b == kw::kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// n-fold convolution of h computed term by term in log space
inline double convolved_log_c(const kw::family_model& fam, long long n, long long s) {
  std::vector<double> cur{0.0};  // C_0: point mass at 0
  for (long long k = 1; k <= n; ++k) {
    const long long top = s;  // states beyond s never feed log C_n(s)
    std::vector<double> nxt(static_cast<std::size_t>(top + 1), kw::kNegInf);
    for (long long t = 0; t <= top; ++t) {
      double acc = kw::kNegInf;
      for (long long u = 0; u < static_cast<long long>(cur.size()); ++u) {
        if (u > t) break;
        const double lh = fam.log_h(t - u);
        if (cur[static_cast<std::size_t>(u)] == kw::kNegInf || lh == kw::kNegInf)
          continue;
        acc = log_add(acc, cur[static_cast<std::size_t>(u)] + lh);
      }
      nxt[static_cast<std::size_t>(t)] = acc;
    }
    cur = std::move(nxt);
  }
  return s < static_cast<long long>(cur.size()) ? cur[static_cast<std::size_t>(s)]
                                                : kw::kNegInf;
}

struct path_result {
  double oc = 0.0;   // P(accept H0)
  double och1 = 0.0; // P(accept H1)
  double asn = 0.0;
  std::vector<double> tail;  // P(tau > k), k = 1..H-1
};

// exhaustive walk over observation sequences; only feasible for bounded
// observations (binomial) and small horizons
inline path_result enumerate_paths(const kw::test_plan& plan, double theta_user) {
  if (plan.model.support_max(1) < 0)
    throw std::invalid_argument("enumerate_paths: needs bounded observations");
  const long long m = plan.model.support_max(1);
  const double th = plan.model.natural_param(theta_user);
  std::vector<double> pmf(static_cast<std::size_t>(m + 1));
  for (long long x = 0; x <= m; ++x)
    pmf[static_cast<std::size_t>(x)] = plan.model.obs_pmf(th, x);

  path_result out;
  out.tail.assign(static_cast<std::size_t>(plan.horizon > 0 ? plan.horizon - 1 : 0),
                  0.0);
  // depth-first over (stage, running sum, path probability)
  struct frame {
    long long n, s;
    double prob;
  };
  std::vector<frame> stack{{0, 0, 1.0}};
  while (!stack.empty()) {
    const frame f = stack.back();
    stack.pop_back();
    for (long long x = 0; x <= m; ++x) {
      const double p = f.prob * pmf[static_cast<std::size_t>(x)];
      if (p == 0.0) continue;
      const long long n = f.n + 1;
      const long long s = f.s + x;
      const bool stop =
          n >= plan.horizon || plan.stage(n).empty() || s < plan.stage(n).a ||
          s > plan.stage(n).b;
      if (stop) {
        out.asn += p * static_cast<double>(n);
        if (s <= plan.threshold(n)) out.oc += p;
        else out.och1 += p;
      } else {
        out.tail[static_cast<std::size_t>(n - 1)] += p;
        stack.push_back({n, s, p});
      }
    }
  }
  return out;
}

// every truncated stop/decide rule on the binomial(1) lattice, evaluated for
// its Lagrangian; the optimum over this class is the global optimum over all
// non-randomized sequential tests with the given horizon
inline double best_lagrangian_binary(double p0, double p1, double pt, double lam0,
                                     double lam1, long long horizon) {
  if (horizon < 1 || horizon > 4)
    throw std::invalid_argument("best_lagrangian_binary: horizon must be in [1, 4]");
  // nodes (n, s) for n = 1..horizon, s = 0..n; internal nodes choose among
  // continue / stop-accept / stop-reject, last-stage nodes accept or reject
  std::vector<std::pair<long long, long long>> internal, last;
  for (long long n = 1; n <= horizon; ++n)
    for (long long s = 0; s <= n; ++s)
      (n == horizon ? last : internal).push_back({n, s});

  const std::size_t ni = internal.size(), nl = last.size();
  std::uint64_t tri = 1;
  for (std::size_t i = 0; i < ni; ++i) tri *= 3;
  const std::uint64_t dec = 1ULL << nl;

  auto node_choice = [&](std::uint64_t code, std::size_t idx) {
    for (std::size_t i = 0; i < idx; ++i) code /= 3;
    return static_cast<int>(code % 3);  // 0 continue, 1 accept, 2 reject
  };

  double best = 1e300;
  std::vector<double> reach0, reach1, reacht;
  for (std::uint64_t code = 0; code < tri; ++code) {
    for (std::uint64_t dcode = 0; dcode < dec; ++dcode) {
      // forward pass under the three parameter values at once
      double asn = 0.0, alpha = 0.0, beta = 0.0;
      reach0.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
      reach1 = reach0;
      reacht = reach0;
      reach0[0] = reach1[0] = reacht[0] = 1.0;
      long long width = 0;  // states 0..width reachable before this stage
      for (long long n = 1; n <= horizon; ++n) {
        // one more observation: propagate from s to s / s+1
        for (long long s = width + 1; s >= 1; --s) {
          const std::size_t i = static_cast<std::size_t>(s);
          reach0[i] = reach0[i] * (1 - p0) + reach0[i - 1] * p0;
          reach1[i] = reach1[i] * (1 - p1) + reach1[i - 1] * p1;
          reacht[i] = reacht[i] * (1 - pt) + reacht[i - 1] * pt;
        }
        reach0[0] *= (1 - p0);
        reach1[0] *= (1 - p1);
        reacht[0] *= (1 - pt);
        width += 1;
        for (long long s = 0; s <= width; ++s) {
          const std::size_t i = static_cast<std::size_t>(s);
          int choice;
          if (n == horizon) {
            std::size_t li = 0;
            while (last[li] != std::make_pair(n, s)) ++li;
            choice = ((dcode >> li) & 1) ? 2 : 1;
          } else {
            std::size_t ii = 0;
            while (internal[ii] != std::make_pair(n, s)) ++ii;
            choice = node_choice(code, ii);
          }
          if (choice == 0) continue;
          asn += reacht[i] * static_cast<double>(n);
          if (choice == 2) alpha += reach0[i];
          else beta += reach1[i];
          reach0[i] = reach1[i] = reacht[i] = 0.0;
        }
      }
      const double lag = asn + lam0 * alpha + lam1 * beta;
      if (lag < best) best = lag;
    }
  }
  return best;
}

struct mc_result {
  double oc = 0.0, asn = 0.0;
  double oc_se = 0.0, asn_se = 0.0;
};

// Monte-Carlo simulation of a plan by inverse-cdf sampling of observations
inline mc_result simulate(const kw::test_plan& plan, double theta_user,
                          long long paths, std::uint64_t seed) {
  const double th = plan.model.natural_param(theta_user);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // cached cdf; extended on demand
  std::vector<double> cdf;
  long double acc = 0.0L;
  auto draw = [&]() {
    const double u = unif(rng);
    std::size_t x = 0;
    for (;; ++x) {
      if (x >= cdf.size()) {
        acc += plan.model.obs_pmf(th, static_cast<long long>(x));
        cdf.push_back(static_cast<double>(acc));
      }
      if (u <= cdf[x] || cdf[x] >= 1.0) return static_cast<long long>(x);
    }
  };

  long double sum_n = 0.0L, sum_n2 = 0.0L, acc_h0 = 0.0L;
  for (long long i = 0; i < paths; ++i) {
    long long s = 0, n = 0;
    for (;;) {
      s += draw();
      n += 1;
      const bool stop = n >= plan.horizon || plan.stage(n).empty() ||
                        s < plan.stage(n).a || s > plan.stage(n).b;
      if (stop) break;
    }
    sum_n += n;
    sum_n2 += static_cast<long double>(n) * n;
    if (s <= plan.threshold(n)) acc_h0 += 1.0L;
  }
  mc_result r;
  const double np = static_cast<double>(paths);
  r.oc = static_cast<double>(acc_h0) / np;
  r.asn = static_cast<double>(sum_n) / np;
  r.oc_se = std::sqrt(std::max(r.oc * (1.0 - r.oc), 1e-12) / np);
  const double var_n = static_cast<double>(sum_n2) / np - r.asn * r.asn;
  r.asn_se = std::sqrt(std::max(var_n, 1e-12) / np);
  return r;
}

}  // namespace oracle
