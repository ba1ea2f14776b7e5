#pragma once

// Derivative-free Nelder-Mead minimization with the standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2), restarts around
// the incumbent, and an optional early-accept level for objectives that only
// need to reach a target rather than a stationary point.  Deterministic: no
// randomness anywhere, so repeated runs from the same start coincide.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace kw {

struct simplex_config {
  int max_iterations = 400;   // per run (restarts each get a fresh budget)
  double f_tol_abs = 1e-12;   // spread of objective values across the simplex
  double f_tol_rel = 1e-9;
  double x_tol = 1e-8;        // simplex diameter
  double accept_below = -1e300;  // stop as soon as the best value reaches this
  int restarts = 1;           // extra runs re-seeded at the incumbent
  double restart_shrink = 0.2;  // step scale applied at each restart
};

struct simplex_result {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;  // total across restarts
  bool converged = false;
};

namespace detail {

struct simplex_run_out {
  std::vector<double> x;
  double value;
  int iterations;
  bool converged;
};

inline simplex_run_out simplex_single_run(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& steps,
    const simplex_config& cfg) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> pts(d + 1, x0);
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += steps[i];
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(pts[i]);

  std::vector<std::size_t> ord(d + 1);
  int it = 0;
  bool converged = false;
  for (; it < cfg.max_iterations; ++it) {
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::sort(ord.begin(), ord.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t ib = ord[0], iw = ord[d];
    if (fv[ib] <= cfg.accept_below) {
      converged = true;
      break;
    }
    double diam = 0.0;
    for (std::size_t i = 1; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        diam = std::max(diam, std::abs(pts[ord[i]][k] - pts[ib][k]));
    const double spread = fv[iw] - fv[ib];
    if (spread <= cfg.f_tol_abs + cfg.f_tol_rel * std::abs(fv[ib]) ||
        diam <= cfg.x_tol) {
      converged = true;
      break;
    }

    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == iw) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k];
    }
    for (std::size_t k = 0; k < d; ++k) centroid[k] /= static_cast<double>(d);

    auto blend = [&](double coef) {
      std::vector<double> p(d);
      for (std::size_t k = 0; k < d; ++k)
        p[k] = centroid[k] + coef * (centroid[k] - pts[iw][k]);
      return p;
    };

    std::vector<double> xr = blend(1.0);
    const double fr = f(xr);
    if (fr < fv[ib]) {
      std::vector<double> xe = blend(2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[iw] = std::move(xe);
        fv[iw] = fe;
      } else {
        pts[iw] = std::move(xr);
        fv[iw] = fr;
      }
      continue;
    }
    if (fr < fv[ord[d - 1]]) {  // better than the second worst: keep it
      pts[iw] = std::move(xr);
      fv[iw] = fr;
      continue;
    }
    if (fr < fv[iw]) {  // outside contraction
      std::vector<double> xc = blend(0.5);
      const double fc = f(xc);
      if (fc <= fr) {
        pts[iw] = std::move(xc);
        fv[iw] = fc;
        continue;
      }
    } else {  // inside contraction
      std::vector<double> xc = blend(-0.5);
      const double fc = f(xc);
      if (fc < fv[iw]) {
        pts[iw] = std::move(xc);
        fv[iw] = fc;
        continue;
      }
    }
    for (std::size_t i = 0; i <= d; ++i) {  // shrink toward the best vertex
      if (i == ib) continue;
      for (std::size_t k = 0; k < d; ++k)
        pts[i][k] = pts[ib][k] + 0.5 * (pts[i][k] - pts[ib][k]);
      fv[i] = f(pts[i]);
    }
  }

  std::size_t ib = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (fv[i] < fv[ib]) ib = i;
  return {pts[ib], fv[ib], it, converged};
}

}  // namespace detail

inline simplex_result simplex_minimize(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, std::vector<double> steps,
    const simplex_config& cfg = {}) {
  if (x0.empty()) throw std::invalid_argument("simplex_minimize: empty start point");
  if (steps.size() != x0.size())
    throw std::invalid_argument("simplex_minimize: steps must match the dimension");
  for (double s : steps)
    if (!(s != 0.0) || !std::isfinite(s))
      throw std::invalid_argument("simplex_minimize: steps must be finite and non-zero");

  simplex_result out;
  out.x = std::move(x0);
  out.value = f(out.x);
  std::vector<double> cur_steps = std::move(steps);
  for (int r = 0; r <= cfg.restarts; ++r) {
    if (r > 0)
      for (double& s : cur_steps) s *= cfg.restart_shrink;
    detail::simplex_run_out run = detail::simplex_single_run(f, out.x, cur_steps, cfg);
    out.iterations += run.iterations;
    out.converged = run.converged;
    if (run.value < out.value) {
      out.value = run.value;
      out.x = run.x;
    }
    if (out.value <= cfg.accept_below) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace kw
