// Design an optimal sequential test for poisson observations and look at its
// exact operating characteristics.
//
//   build/demo_design

#include <cstdio>

#include <kw/kw.hpp>

int main() {
  using namespace kw;

  // testing mu <= 0.5 against mu >= 0.7, with multipliers that put the error
  // probabilities near 10% each; the design point 0.58464 is the parameter
  // where sampling is hardest
  const family_model fam = family_model::poisson();
  const design_problem problem(fam, 0.5, 0.7, 0.58464, 305.94, 326.39);

  std::printf("upper bound on the useful horizon: %lld\n",
              horizon_bound(problem));

  const test_plan plan = design_modified(problem);
  std::printf("realized horizon: %lld stages\n", plan.horizon);
  std::printf("first stages:    ");
  for (long long n = 1; n <= 5; ++n)
    std::printf(" [%lld, %lld]", plan.stage(n).a, plan.stage(n).b);
  std::printf("\n\n");

  const error_pair err = error_probabilities(plan);
  std::printf("achieved alpha: %.6f\n", err.alpha);
  std::printf("achieved beta:  %.6f\n\n", err.beta);

  for (double mu : {0.5, 0.58464, 0.7}) {
    const performance_report r = evaluate_plan(plan, mu);
    std::printf("mu = %-8.5f  E[n] = %7.3f   P(accept H0) = %.4f   "
                "99%% quantile = %lld\n",
                mu, r.asn, r.oc, r.quantile_99);
  }

  // where is sampling most expensive for this plan?
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.5 + 0.01 * i);
  const asn_curve_result curve = asn_curve(plan, grid);
  std::printf("\nworst-case E[n] = %.3f at mu = %.5f\n", curve.sup_asn,
              curve.sup_theta);
  return 0;
}
