#pragma once

// Fitting the Lagrange multipliers to error-probability targets, and the
// outer search over the design point that solves the original problem: pick
// theta so that the fitted plan's ASN maximum over the whole parameter
// interval is attained (numerically) at theta itself, making the plan
// minimax.  The certificate is delta = sup_theta ASN - ASN(design theta),
// which the search drives to zero.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kw/design.hpp"
#include "kw/evaluate.hpp"
#include "kw/expfam.hpp"
#include "kw/simplex.hpp"

namespace kw {

struct fit_config {
  int max_iterations = 300;  // simplex budget per run
  int restarts = 1;
  double target_rel = 0.002;  // accepted relative miss of alpha and beta
  int curve_points = 33;      // asn grid behind the delta certificate
  bool with_curve = true;
};

struct solve_result {
  test_plan plan;
  double lambda0 = kNaN, lambda1 = kNaN;
  double theta = kNaN;  // user scale
  double achieved_alpha = kNaN, achieved_beta = kNaN;
  double rel_deviation = kNaN;
  double delta = kNaN;  // sup asn - asn(theta); >= 0 up to refinement error
  double sup_theta = kNaN, sup_asn = kNaN;
  bool converged = false;
  performance_report at_theta0, at_theta1, at_theta;

  explicit solve_result(test_plan p) : plan(std::move(p)) {}
};

namespace detail {

inline std::vector<double> theta_grid_for_curve(double theta0, double theta1,
                                                double theta, int points) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points) + 1);
  for (int i = 0; i < points; ++i)
    grid.push_back(theta0 + (theta1 - theta0) * static_cast<double>(i) /
                                static_cast<double>(points - 1));
  grid.push_back(theta);  // the design point itself must be a candidate
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace detail

// tune (lambda0, lambda1) at a fixed design theta until the plan's error
// probabilities hit the targets; optionally certify with the asn curve
inline solve_result fit_multipliers(
    const family_model& model, double theta0_user, double theta1_user,
    double theta_user, double alpha, double beta, const fit_config& cfg = {},
    std::optional<std::pair<double, double>> lambda_init = std::nullopt) {
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("fit_multipliers: alpha and beta must lie in (0, 1)");
  auto make_plan = [&](double l0, double l1) {
    return design_modified(
        design_problem(model, theta0_user, theta1_user, theta_user, l0, l1));
  };
  auto objective = [&](const std::vector<double>& x) {
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || std::abs(x[0]) > 50.0 ||
        std::abs(x[1]) > 50.0)
      return 1e300;
    const test_plan plan = make_plan(std::exp(x[0]), std::exp(x[1]));
    if (plan.horizon <= 1) return 1e300;  // multipliers too small to test at all
    const error_pair e = error_probabilities(plan);
    return std::max(std::abs(e.alpha - alpha) / alpha,
                    std::abs(e.beta - beta) / beta);
  };

  std::vector<double> x0, steps;
  if (lambda_init) {
    x0 = {std::log(lambda_init->first), std::log(lambda_init->second)};
    steps = {0.15, 0.15};
  } else {
    x0 = {std::log(30.0 / alpha), std::log(30.0 / beta)};
    steps = {0.7, 0.7};
  }
  simplex_config scfg;
  scfg.max_iterations = cfg.max_iterations;
  scfg.restarts = cfg.restarts;
  scfg.accept_below = cfg.target_rel;
  const simplex_result r = simplex_minimize(objective, x0, steps, scfg);

  solve_result out(make_plan(std::exp(r.x[0]), std::exp(r.x[1])));
  out.lambda0 = std::exp(r.x[0]);
  out.lambda1 = std::exp(r.x[1]);
  out.theta = theta_user;
  out.at_theta0 = evaluate_plan(out.plan, theta0_user);
  out.at_theta1 = evaluate_plan(out.plan, theta1_user);
  out.at_theta = evaluate_plan(out.plan, theta_user);
  out.achieved_alpha = 1.0 - out.at_theta0.oc;
  out.achieved_beta = out.at_theta1.oc;
  out.rel_deviation = r.value;
  out.converged = r.value <= cfg.target_rel;
  if (cfg.with_curve) {
    const asn_curve_result curve = asn_curve(
        out.plan, detail::theta_grid_for_curve(theta0_user, theta1_user,
                                               theta_user, cfg.curve_points));
    out.sup_theta = curve.sup_theta;
    out.sup_asn = curve.sup_asn;
    out.delta = curve.sup_asn - out.at_theta.asn;
  }
  return out;
}

struct solve_config {
  fit_config fit;            // applied to the final refit at the chosen theta
  int search_curve_points = 17;  // coarser certificate during the search
  double theta_tol = 1e-5;   // user-scale width of the final golden bracket
  int grid_points = 9;       // interior seed grid
};

// solve the original problem: find the design theta whose fitted plan
// maximizes its own asn exactly at theta
inline solve_result solve_kiefer_weiss(const family_model& model,
                                       double theta0_user, double theta1_user,
                                       double alpha, double beta,
                                       const solve_config& cfg = {}) {
  model.natural_param(theta0_user);
  model.natural_param(theta1_user);
  if (!(model.natural_param(theta0_user) < model.natural_param(theta1_user)))
    throw std::invalid_argument("solve_kiefer_weiss: theta0 must be less than theta1");

  fit_config search_cfg = cfg.fit;
  search_cfg.curve_points = cfg.search_curve_points;
  search_cfg.with_curve = true;

  std::vector<std::pair<double, std::pair<double, double>>> lam_cache;
  auto warm_start = [&](double theta) -> std::optional<std::pair<double, double>> {
    const std::pair<double, double>* nearest = nullptr;
    double dist = 0.0;
    for (const auto& [t, lams] : lam_cache) {
      const double d = std::abs(t - theta);
      if (!nearest || d < dist) {
        nearest = &lams;
        dist = d;
      }
    }
    if (!nearest) return std::nullopt;
    return *nearest;
  };

  std::optional<solve_result> best;
  auto eval_delta = [&](double theta) {
    solve_result r = fit_multipliers(model, theta0_user, theta1_user, theta,
                                     alpha, beta, search_cfg, warm_start(theta));
    lam_cache.emplace_back(theta, std::make_pair(r.lambda0, r.lambda1));
    const double delta = r.delta;
    if (!best || delta < best->delta) best = std::move(r);
    return delta;
  };

  const double span = theta1_user - theta0_user;
  const double step = span / static_cast<double>(cfg.grid_points + 1);
  double best_theta = theta0_user + step;
  double best_delta = kNaN;
  for (int i = 1; i <= cfg.grid_points; ++i) {
    const double t = theta0_user + step * static_cast<double>(i);
    const double d = eval_delta(t);
    if (!(d >= best_delta)) {  // also catches the first NaN comparison
      best_delta = d;
      best_theta = t;
    }
  }

  double lo = std::max(theta0_user + step * 0.5, best_theta - step);
  double hi = std::min(theta1_user - step * 0.5, best_theta + step);
  const double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = eval_delta(x1);
  double f2 = eval_delta(x2);
  while (hi - lo > cfg.theta_tol) {
    if (f1 > f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = eval_delta(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = eval_delta(x1);
    }
  }

  // final refit at the incumbent with the full-resolution certificate
  solve_result out = fit_multipliers(
      model, theta0_user, theta1_user, best->theta, alpha, beta, cfg.fit,
      std::make_pair(best->lambda0, best->lambda1));
  if (best->delta < out.delta) out = std::move(*best);
  return out;
}

}  // namespace kw
