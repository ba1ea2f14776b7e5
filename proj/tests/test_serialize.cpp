#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include <kw/design.hpp>
#include <kw/serialize.hpp>
#include <kw/sprt.hpp>

using Catch::Approx;
using namespace kw;

namespace {

// serialize to text and back, exercising the real round trip
test_plan round_trip(const test_plan& plan) {
  const std::string text = to_json(plan).dump();
  return plan_from_json(nlohmann::json::parse(text));
}

void check_equal(const test_plan& a, const test_plan& b) {
  CHECK(a.model.name() == b.model.name());
  CHECK(a.model.shape() == b.model.shape());
  auto same = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  CHECK(same(a.theta0, b.theta0));
  CHECK(same(a.theta1, b.theta1));
  CHECK(same(a.theta, b.theta));
  CHECK(same(a.lambda0, b.lambda0));
  CHECK(same(a.lambda1, b.lambda1));
  CHECK(a.penalty_c == b.penalty_c);
  CHECK(a.horizon == b.horizon);
  CHECK(same(a.lagrangian_value, b.lagrangian_value));
  CHECK(a.possibly_suboptimal == b.possibly_suboptimal);
  REQUIRE(a.stages.size() == b.stages.size());
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    CHECK(a.stages[i].empty() == b.stages[i].empty());
    if (!a.stages[i].empty()) {
      CHECK(a.stages[i].a == b.stages[i].a);
      CHECK(a.stages[i].b == b.stages[i].b);
    }
  }
  REQUIRE(a.accept_thresholds == b.accept_thresholds);
}

}  // namespace

TEST_CASE("family models round trip") {
  for (const family_model& fam :
       {family_model::poisson(), family_model::binomial(7),
        family_model::geometric(), family_model::negative_binomial(4)}) {
    const family_model back = family_from_json(to_json(fam));
    CHECK(back.name() == fam.name());
    CHECK(back.shape() == fam.shape());
    CHECK((back.kind() == fam.kind()));
  }
}

TEST_CASE("designed plans round trip bit-identically") {
  design_problem p(family_model::geometric(), 1.0, 2.0, 1.27794, 69.00, 84.38);
  const test_plan plan = design_modified(p);
  check_equal(plan, round_trip(plan));
}

TEST_CASE("penalized and flagged plans keep their extras") {
  SECTION("penalty") {
    design_problem p(family_model::poisson(), 0.5, 0.7, 0.6, 30.0, 30.0, 0.5);
    const test_plan plan = design_truncated(p, 40);
    REQUIRE(plan.penalty_c == 0.5);
    const nlohmann::json j = to_json(plan);
    CHECK(j.contains("penalty_c"));
    check_equal(plan, round_trip(plan));
  }
  SECTION("possibly suboptimal flag") {
    design_problem p(family_model::binomial(1), 0.4, 0.7, 0.2, 6.0, 6.0);
    const test_plan plan = design_truncated(p, 4);
    REQUIRE(plan.possibly_suboptimal);
    CHECK(to_json(plan)["possibly_suboptimal"] == true);
    check_equal(plan, round_trip(plan));
  }
  SECTION("no spurious keys on plain plans") {
    design_problem p(family_model::binomial(1), 0.3, 0.7, 0.5, 9.5, 9.5);
    const nlohmann::json j = to_json(design_modified(p));
    CHECK_FALSE(j.contains("penalty_c"));
    CHECK_FALSE(j.contains("possibly_suboptimal"));
  }
}

TEST_CASE("empty stages are omitted from the document and restored") {
  test_plan plan(family_model::binomial(2));
  plan.horizon = 5;
  plan.stages = {{0, 2}, {1, 3}, {1, 0}, {0, 8}};
  plan.accept_thresholds = {1, 2, 3, 4, 5};
  const nlohmann::json j = to_json(plan);
  CHECK(j["stages"].size() == 3);  // the empty third stage is not written
  const test_plan back = round_trip(plan);
  check_equal(plan, back);
  CHECK(back.stage(3).empty());
}

TEST_CASE("sprt-derived plans carry no design metadata") {
  sprt_design d;
  d.log_a = -2.1;
  d.log_b = 2.0;
  const test_plan plan = sprt_plan(d, family_model::poisson(), 0.5, 0.7, 64);
  const nlohmann::json j = to_json(plan);
  CHECK_FALSE(j.contains("theta"));
  CHECK_FALSE(j.contains("lambda0"));
  CHECK_FALSE(j.contains("lambda1"));
  CHECK_FALSE(j.contains("lagrangian_value"));
  const test_plan back = round_trip(plan);
  check_equal(plan, back);
  CHECK(std::isnan(back.theta));
  CHECK(std::isnan(back.lambda0));
}

TEST_CASE("boundary designs round trip") {
  sprt_design d;
  d.log_a = -0.5;
  d.log_b = 1.25;
  const nlohmann::json fresh = to_json(d);
  CHECK_FALSE(fresh.contains("achieved_alpha"));  // not evaluated yet
  const sprt_design back = sprt_from_json(fresh);
  CHECK(back.log_a == d.log_a);
  CHECK(back.log_b == d.log_b);
  CHECK(std::isnan(back.achieved_alpha));
  CHECK(back.converged);

  d.achieved_alpha = 0.0998;
  d.achieved_beta = 0.1002;
  d.rel_deviation = 0.002;
  d.converged = false;
  const sprt_design full = sprt_from_json(to_json(d));
  CHECK(full.achieved_alpha == d.achieved_alpha);
  CHECK(full.achieved_beta == d.achieved_beta);
  CHECK(full.rel_deviation == d.rel_deviation);
  CHECK_FALSE(full.converged);
}

TEST_CASE("report and fit documents expose the expected shape") {
  design_problem p(family_model::binomial(1), 0.3, 0.7, 0.5, 9.5, 9.5);
  const test_plan plan = design_modified(p);
  const performance_report rep = evaluate_plan(plan, 0.5);
  const nlohmann::json j = to_json(rep);
  CHECK(j["theta"] == 0.5);
  CHECK(j["asn"].get<double>() == Approx(rep.asn));
  CHECK(j["oc"].get<double>() == Approx(rep.oc));
  CHECK(j["quantile_99"].get<long long>() == rep.quantile_99);
  CHECK(j["max_n"].get<long long>() == rep.max_n);
  CHECK(j["tail"].size() == rep.tail.size());

  solve_result fit(plan);
  fit.lambda0 = 9.5;
  fit.lambda1 = 9.5;
  fit.theta = 0.5;
  fit.achieved_alpha = 0.2;
  fit.achieved_beta = 0.2;
  fit.rel_deviation = 0.001;
  fit.converged = true;
  fit.at_theta0 = evaluate_plan(plan, 0.3);
  fit.at_theta1 = evaluate_plan(plan, 0.7);
  fit.at_theta = rep;
  const nlohmann::json js = to_json(fit);
  CHECK(js["plan"]["horizon"].get<long long>() == plan.horizon);
  CHECK(js["report_at"]["theta0"]["theta"] == 0.3);
  CHECK(js["report_at"]["theta1"]["theta"] == 0.7);
  CHECK(js["report_at"]["theta"]["theta"] == 0.5);
  CHECK_FALSE(js.contains("delta"));  // no certificate was computed
}

TEST_CASE("malformed plan documents are rejected") {
  design_problem p(family_model::binomial(1), 0.3, 0.7, 0.5, 9.5, 9.5);
  const nlohmann::json good = to_json(design_modified(p));

  nlohmann::json bad = good;
  bad["horizon"] = 0;
  CHECK_THROWS_AS(plan_from_json(bad), std::invalid_argument);

  bad = good;
  bad["stages"].push_back({{"n", 99}, {"a", 0}, {"b", 1}});
  CHECK_THROWS_AS(plan_from_json(bad), std::invalid_argument);

  bad = good;
  bad["accept_thresholds"].push_back(7);
  CHECK_THROWS_AS(plan_from_json(bad), std::invalid_argument);

  bad = good;
  bad.erase("family");
  CHECK_THROWS_AS(plan_from_json(bad), nlohmann::json::exception);
}
