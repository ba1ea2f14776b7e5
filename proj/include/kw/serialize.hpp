#pragma once

// JSON encodings of plans, reports, and fit results.  Plans round-trip; the
// reports are write-only artifacts.  NaN-valued fields are omitted on write
// (JSON has no NaN) and read back as NaN when absent.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kw/design.hpp"
#include "kw/evaluate.hpp"
#include "kw/expfam.hpp"
#include "kw/solve.hpp"
#include "kw/sprt.hpp"

namespace kw {

inline nlohmann::json to_json(const family_model& model) {
  nlohmann::json params = nlohmann::json::object();
  if (model.kind() == family_kind::binomial) params["m"] = model.shape();
  if (model.kind() == family_kind::negative_binomial) params["r"] = model.shape();
  return {{"family", model.name()}, {"family_params", params}};
}

inline family_model family_from_json(const nlohmann::json& j) {
  const std::string name = j.at("family").get<std::string>();
  long long shape = 0;
  if (j.contains("family_params")) {
    const nlohmann::json& p = j["family_params"];
    if (p.contains("m")) shape = p["m"].get<long long>();
    if (p.contains("r")) shape = p["r"].get<long long>();
  }
  return family_model::from_name(name, shape);
}

namespace detail {

inline void put_finite(nlohmann::json& j, const char* key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

inline double get_or_nan(const nlohmann::json& j, const char* key) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : kNaN;
}

}  // namespace detail

inline nlohmann::json to_json(const test_plan& plan) {
  nlohmann::json j = to_json(plan.model);
  detail::put_finite(j, "theta0", plan.theta0);
  detail::put_finite(j, "theta1", plan.theta1);
  detail::put_finite(j, "theta", plan.theta);
  detail::put_finite(j, "lambda0", plan.lambda0);
  detail::put_finite(j, "lambda1", plan.lambda1);
  if (plan.penalty_c != 0.0) j["penalty_c"] = plan.penalty_c;
  j["horizon"] = plan.horizon;
  nlohmann::json stages = nlohmann::json::array();
  for (long long n = 1; n <= plan.horizon - 1; ++n) {
    const stage_interval& st = plan.stage(n);
    if (!st.empty()) stages.push_back({{"n", n}, {"a", st.a}, {"b", st.b}});
  }
  j["stages"] = std::move(stages);
  j["accept_thresholds"] = plan.accept_thresholds;
  detail::put_finite(j, "lagrangian_value", plan.lagrangian_value);
  if (plan.possibly_suboptimal) j["possibly_suboptimal"] = true;
  return j;
}

inline test_plan plan_from_json(const nlohmann::json& j) {
  test_plan plan(family_from_json(j));
  plan.theta0 = detail::get_or_nan(j, "theta0");
  plan.theta1 = detail::get_or_nan(j, "theta1");
  plan.theta = detail::get_or_nan(j, "theta");
  plan.lambda0 = detail::get_or_nan(j, "lambda0");
  plan.lambda1 = detail::get_or_nan(j, "lambda1");
  plan.penalty_c = j.contains("penalty_c") ? j["penalty_c"].get<double>() : 0.0;
  plan.horizon = j.at("horizon").get<long long>();
  if (plan.horizon < 1)
    throw std::invalid_argument("plan_from_json: horizon must be at least 1");
  plan.stages.assign(static_cast<std::size_t>(plan.horizon - 1), {});
  for (const nlohmann::json& st : j.at("stages")) {
    const long long n = st.at("n").get<long long>();
    if (n < 1 || n > plan.horizon - 1)
      throw std::invalid_argument("plan_from_json: stage index out of range");
    plan.stages[static_cast<std::size_t>(n - 1)] = {st.at("a").get<long long>(),
                                                    st.at("b").get<long long>()};
  }
  plan.accept_thresholds = j.at("accept_thresholds").get<std::vector<long long>>();
  if (static_cast<long long>(plan.accept_thresholds.size()) != plan.horizon)
    throw std::invalid_argument(
        "plan_from_json: accept_thresholds must have one entry per stage");
  plan.lagrangian_value = detail::get_or_nan(j, "lagrangian_value");
  plan.possibly_suboptimal =
      j.contains("possibly_suboptimal") && j["possibly_suboptimal"].get<bool>();
  return plan;
}

inline nlohmann::json to_json(const performance_report& r) {
  nlohmann::json j;
  j["theta"] = r.theta;
  j["oc"] = r.oc;
  j["asn"] = r.asn;
  j["quantile_99"] = r.quantile_99;
  j["max_n"] = r.max_n;
  j["tail"] = r.tail;
  return j;
}

inline nlohmann::json to_json(const sprt_design& d) {
  nlohmann::json j;
  j["log_a"] = d.log_a;
  j["log_b"] = d.log_b;
  detail::put_finite(j, "achieved_alpha", d.achieved_alpha);
  detail::put_finite(j, "achieved_beta", d.achieved_beta);
  detail::put_finite(j, "rel_deviation", d.rel_deviation);
  j["converged"] = d.converged;
  return j;
}

inline sprt_design sprt_from_json(const nlohmann::json& j) {
  sprt_design d;
  d.log_a = j.at("log_a").get<double>();
  d.log_b = j.at("log_b").get<double>();
  d.achieved_alpha = detail::get_or_nan(j, "achieved_alpha");
  d.achieved_beta = detail::get_or_nan(j, "achieved_beta");
  d.rel_deviation = detail::get_or_nan(j, "rel_deviation");
  d.converged = !j.contains("converged") || j["converged"].get<bool>();
  return d;
}

inline nlohmann::json to_json(const solve_result& r) {
  nlohmann::json j;
  j["lambda0"] = r.lambda0;
  j["lambda1"] = r.lambda1;
  detail::put_finite(j, "theta", r.theta);
  j["achieved_alpha"] = r.achieved_alpha;
  j["achieved_beta"] = r.achieved_beta;
  j["rel_deviation"] = r.rel_deviation;
  detail::put_finite(j, "delta", r.delta);
  detail::put_finite(j, "sup_theta", r.sup_theta);
  detail::put_finite(j, "sup_asn", r.sup_asn);
  j["converged"] = r.converged;
  j["plan"] = to_json(r.plan);
  j["report_at"] = {{"theta0", to_json(r.at_theta0)},
                    {"theta1", to_json(r.at_theta1)},
                    {"theta", to_json(r.at_theta)}};
  return j;
}

}  // namespace kw
