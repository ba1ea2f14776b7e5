#pragma once

// Discrete one-parameter exponential families on {0, 1, 2, ...}:
//
//   f_theta(x) = exp(theta * x - b(theta)) * h(x)
//
// with natural parameter theta and log-partition b.  The running sum S_n of
// n observations is sufficient, with pmf
//
//   g_theta^n(s) = C_n(s) * exp(theta * s - n * b(theta)),
//
// where C_n is the n-fold convolution of C_1 = h.  All three supported
// families admit closed forms for log C_n, so no convolution is carried out
// at runtime.  Everything is kept on the log scale until exponentiation at
// the use site; stage indices run into the thousands and raw factorials
// would overflow long before that.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace kw {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log C(n, k) via log-gamma; -inf outside 0 <= k <= n
inline double log_choose(double n, double k) {
  if (k < 0.0 || k > n) return kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

enum class family_kind { binomial, poisson, negative_binomial };

class family_model {
 public:
  static family_model binomial(long long m) {
    if (m < 1) throw std::invalid_argument("binomial: m must be a positive integer");
    return family_model(family_kind::binomial, m);
  }
  static family_model poisson() { return family_model(family_kind::poisson, 0); }
  static family_model negative_binomial(long long r) {
    if (r < 1) throw std::invalid_argument("negative_binomial: r must be a positive integer");
    return family_model(family_kind::negative_binomial, r);
  }
  // geometric = negative binomial with one success
  static family_model geometric() { return negative_binomial(1); }

  static family_model from_name(const std::string& name, long long shape) {
    if (name == "binomial") return binomial(shape);
    if (name == "poisson") return poisson();
    if (name == "negative_binomial") return negative_binomial(shape);
    if (name == "geometric") return geometric();
    throw std::invalid_argument("unknown family: " + name);
  }

  family_kind kind() const { return kind_; }
  // m for binomial, r for negative_binomial, 0 for poisson
  long long shape() const { return shape_; }

  std::string name() const {
    switch (kind_) {
      case family_kind::binomial: return "binomial";
      case family_kind::poisson: return "poisson";
      case family_kind::negative_binomial: return "negative_binomial";
    }
    return "";
  }

  // User-scale parameter: success probability for binomial, mean for poisson
  // and negative_binomial.  The map to the natural parameter is strictly
  // increasing, so hypothesis ordering is preserved.
  double natural_param(double user) const {
    switch (kind_) {
      case family_kind::binomial:
        if (user <= 0.0 || user >= 1.0)
          throw std::invalid_argument("binomial: p must lie in (0, 1)");
        return std::log(user / (1.0 - user));
      case family_kind::poisson:
        if (user <= 0.0)
          throw std::invalid_argument("poisson: mean must be positive");
        return std::log(user);
      case family_kind::negative_binomial:
        if (user <= 0.0)
          throw std::invalid_argument("negative_binomial: mean must be positive");
        return std::log(user / (user + static_cast<double>(shape_)));
    }
    return kNaN;
  }

  double user_param(double theta) const {
    switch (kind_) {
      case family_kind::binomial: return 1.0 / (1.0 + std::exp(-theta));
      case family_kind::poisson: return std::exp(theta);
      case family_kind::negative_binomial: {
        const double q = std::exp(theta);  // q = mu / (mu + r) < 1
        return static_cast<double>(shape_) * q / (1.0 - q);
      }
    }
    return kNaN;
  }

  // b(theta), the log-partition function (strictly convex)
  double log_partition(double theta) const {
    switch (kind_) {
      case family_kind::binomial:
        return static_cast<double>(shape_) *
               (theta > 30.0 ? theta + std::log1p(std::exp(-theta))
                             : std::log1p(std::exp(theta)));
      case family_kind::poisson:
        return std::exp(theta);
      case family_kind::negative_binomial:
        if (theta >= 0.0)
          throw std::invalid_argument("negative_binomial: natural parameter must be negative");
        return -static_cast<double>(shape_) * std::log1p(-std::exp(theta));
    }
    return kNaN;
  }

  // log h(x) = log C_1(x)
  double log_h(long long x) const {
    if (x < 0) return kNegInf;
    switch (kind_) {
      case family_kind::binomial:
        return log_choose(static_cast<double>(shape_), static_cast<double>(x));
      case family_kind::poisson:
        return -std::lgamma(static_cast<double>(x) + 1.0);
      case family_kind::negative_binomial:
        return log_choose(static_cast<double>(x + shape_ - 1),
                          static_cast<double>(shape_ - 1));
    }
    return kNaN;
  }

  // log C_n(s); -inf encodes zero support.  n = 0 is the empty convolution
  // (point mass at s = 0), an internal extension used by the design layer.
  double log_c(long long n, long long s) const {
    if (n < 0 || s < 0) return kNegInf;
    if (n == 0) return s == 0 ? 0.0 : kNegInf;
    switch (kind_) {
      case family_kind::binomial:
        return log_choose(static_cast<double>(n * shape_), static_cast<double>(s));
      case family_kind::poisson:
        return static_cast<double>(s) * std::log(static_cast<double>(n)) -
               std::lgamma(static_cast<double>(s) + 1.0);
      case family_kind::negative_binomial:
        return log_choose(static_cast<double>(s + n * shape_ - 1),
                          static_cast<double>(n * shape_ - 1));
    }
    return kNaN;
  }

  double suff_log_pmf(double theta, long long n, long long s) const {
    const double lc = log_c(n, s);
    if (lc == kNegInf) return kNegInf;
    return lc + theta * static_cast<double>(s) -
           static_cast<double>(n) * log_partition(theta);
  }

  double suff_pmf(double theta, long long n, long long s) const {
    const double lp = suff_log_pmf(theta, n, s);
    return lp == kNegInf ? 0.0 : std::exp(lp);
  }

  // d_n(x, s) = C_1(x) * C_{n-1}(s) / C_n(s + x): the conditional probability
  // of the n-th increment being x given S_{n-1} = s and S_n' landing where it
  // may -- free of theta, and satisfying
  //   g_theta^{n-1}(s) * f_theta(x) = g_theta^n(s + x) * d_n(x, s).
  double transition_weight(long long n, long long x, long long s) const {
    if (n < 2) throw std::invalid_argument("transition_weight: stage must be at least 2");
    const double denom = log_c(n, s + x);
    if (denom == kNegInf)
      throw std::invalid_argument("transition_weight: state has zero support");
    const double num = log_h(x) + log_c(n - 1, s);
    return num == kNegInf ? 0.0 : std::exp(num - denom);
  }

  double obs_log_pmf(double theta, long long x) const {
    const double lh = log_h(x);
    if (lh == kNegInf) return kNegInf;
    return theta * static_cast<double>(x) - log_partition(theta) + lh;
  }

  double obs_pmf(double theta, long long x) const {
    const double lp = obs_log_pmf(theta, x);
    return lp == kNegInf ? 0.0 : std::exp(lp);
  }

  // P_theta(X <= k) for one observation; k = -1 gives 0
  double obs_cdf(double theta, long long k) const {
    if (k < 0) return 0.0;
    if (kind_ == family_kind::binomial && k >= shape_) return 1.0;
    long double acc = 0.0L;
    for (long long x = 0; x <= k; ++x) acc += obs_pmf(theta, x);
    return acc >= 1.0L ? 1.0 : static_cast<double>(acc);
  }

  // P_theta(X > k)
  double obs_sf(double theta, long long k) const {
    if (k < 0) return 1.0;
    const double c = obs_cdf(theta, k);
    return c >= 1.0 ? 0.0 : 1.0 - c;
  }

  // Largest reachable sufficient-statistic value after n observations;
  // -1 means unbounded.
  long long support_max(long long n) const {
    return kind_ == family_kind::binomial ? n * shape_ : -1;
  }

  // Smallest s such that the cumulative mass of g_theta^n exceeds 1 - 1e-15
  // under every theta given; bounds state loops when no analytic bound exists.
  // Rounding can leave an accumulated double mass a few ulps short of the
  // cutoff forever, so each theta is also finished once its own (unimodal)
  // pmf has passed the mode and decayed to numerical dust.
  long long stage_state_bound(long long n, const std::vector<double>& thetas) const {
    const long long cap = support_max(n);
    if (cap >= 0) return cap;
    std::vector<long double> acc(thetas.size(), 0.0L);
    std::vector<double> prev(thetas.size(), -1.0);
    for (long long s = 0;; ++s) {
      bool all_done = true;
      for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double term = suff_pmf(thetas[i], n, s);
        acc[i] += term;
        const bool spent = term < prev[i] && term < 1e-18;
        if (acc[i] <= 1.0L - 1e-15L && !spent) all_done = false;
        prev[i] = term;
      }
      if (all_done) return s;
    }
  }

 private:
  family_model(family_kind kind, long long shape) : kind_(kind), shape_(shape) {}

  family_kind kind_;
  long long shape_;
};

}  // namespace kw
