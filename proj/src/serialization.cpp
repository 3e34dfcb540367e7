#include "roughvol/serialization.hpp"

#include "roughvol/errors.hpp"

namespace roughvol {

namespace {

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(Json& j, const ModelParams& p) {
  j = Json{{"sigma0", p.sigma0}, {"rho", p.rho}, {"H", p.hurst}, {"xi", p.xi}, {"alpha", p.alpha}};
}

void from_json(const Json& j, ModelParams& p) {
  j.at("sigma0").get_to(p.sigma0);
  j.at("rho").get_to(p.rho);
  j.at("H").get_to(p.hurst);
  j.at("xi").get_to(p.xi);
  j.at("alpha").get_to(p.alpha);
}

void to_json(Json& j, const MarketEnv& e) { j = Json{{"spot", e.spot}, {"rate", e.rate}}; }

void from_json(const Json& j, MarketEnv& e) {
  j.at("spot").get_to(e.spot);
  read_if(j, "rate", e.rate);
}

void to_json(Json& j, const ParamBounds& b) { j = Json{{"lower", b.lower}, {"upper", b.upper}}; }

void from_json(const Json& j, ParamBounds& b) {
  j.at("lower").get_to(b.lower);
  j.at("upper").get_to(b.upper);
}

void to_json(Json& j, const CalibrationConfig& c) {
  j = Json{{"bounds", c.bounds},
           {"ga_population", c.ga_population},
           {"ga_generations", c.ga_generations},
           {"obj_tol", c.obj_tol},
           {"step_tol", c.step_tol},
           {"max_iterations", c.max_iterations},
           {"path_count", c.path_count},
           {"steps_per_year", c.steps_per_year},
           {"seed", c.seed},
           {"weight_rule", to_string(c.weight_rule)},
           {"model_variant", to_string(c.model_variant)},
           {"estimator", to_string(c.estimator)}};
}

void from_json(const Json& j, CalibrationConfig& c) {
  read_if(j, "bounds", c.bounds);
  read_if(j, "ga_population", c.ga_population);
  read_if(j, "ga_generations", c.ga_generations);
  read_if(j, "obj_tol", c.obj_tol);
  read_if(j, "step_tol", c.step_tol);
  read_if(j, "max_iterations", c.max_iterations);
  read_if(j, "path_count", c.path_count);
  read_if(j, "steps_per_year", c.steps_per_year);
  read_if(j, "seed", c.seed);
  if (j.contains("weight_rule")) c.weight_rule = weight_rule_from_string(j.at("weight_rule").get<std::string>());
  if (j.contains("model_variant")) {
    c.model_variant = model_variant_from_string(j.at("model_variant").get<std::string>());
  }
  if (j.contains("estimator")) c.estimator = estimator_from_string(j.at("estimator").get<std::string>());
}

void to_json(Json& j, const PricingSettings& s) {
  j = Json{{"path_count", s.path_count},
           {"steps_per_year", s.steps_per_year},
           {"seed", s.seed},
           {"estimator", to_string(s.estimator)}};
}

void from_json(const Json& j, PricingSettings& s) {
  read_if(j, "path_count", s.path_count);
  read_if(j, "steps_per_year", s.steps_per_year);
  read_if(j, "seed", s.seed);
  if (j.contains("estimator")) s.estimator = estimator_from_string(j.at("estimator").get<std::string>());
}

void to_json(Json& j, const FitMetrics& m) {
  j = Json{{"aare", m.aare}, {"mare", m.mare}, {"arfv", m.arfv}, {"mrfv", m.mrfv}};
}

void from_json(const Json& j, FitMetrics& m) {
  j.at("aare").get_to(m.aare);
  j.at("mare").get_to(m.mare);
  j.at("arfv").get_to(m.arfv);
  j.at("mrfv").get_to(m.mrfv);
}

void to_json(Json& j, const CalibrationDiagnostics& d) {
  j = Json{{"ga_evaluations", d.ga_evaluations},
           {"ga_best_by_generation", d.ga_best_by_generation},
           {"start_objective", d.start_objective},
           {"local_iterations", d.local_iterations},
           {"local_evaluations", d.local_evaluations},
           {"stop_reason", d.stop_reason}};
}

void from_json(const Json& j, CalibrationDiagnostics& d) {
  read_if(j, "ga_evaluations", d.ga_evaluations);
  read_if(j, "ga_best_by_generation", d.ga_best_by_generation);
  read_if(j, "start_objective", d.start_objective);
  read_if(j, "local_iterations", d.local_iterations);
  read_if(j, "local_evaluations", d.local_evaluations);
  read_if(j, "stop_reason", d.stop_reason);
}

void to_json(Json& j, const CalibrationResult& r) {
  j = Json{{"theta", r.theta},         {"objective", r.objective}, {"metrics", r.metrics},
           {"diagnostics", r.diagnostics}, {"seed", r.seed},           {"model_prices", r.model_prices}};
}

void from_json(const Json& j, CalibrationResult& r) {
  j.at("theta").get_to(r.theta);
  j.at("objective").get_to(r.objective);
  read_if(j, "metrics", r.metrics);
  read_if(j, "diagnostics", r.diagnostics);
  read_if(j, "seed", r.seed);
  read_if(j, "model_prices", r.model_prices);
}

void to_json(Json& j, const BootstrapReport& r) {
  Json rel = Json::object();
  Json free = Json::object();
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    rel[std::string(ModelParams::kNames[k])] = r.rel_iqr[k];
    free[std::string(ModelParams::kNames[k])] = r.free_parameter[k];
  }
  j = Json{{"sample_count", r.sample_count},
           {"theta_hat", r.theta_hat},
           {"theta_samples", r.theta_samples},
           {"arfv", r.arfv},
           {"aare", r.aare},
           {"price_hat", r.price_hat},
           {"bre", r.bre},
           {"v", r.v},
           {"rel_iqr", rel},
           {"free_parameter", free},
           {"rel_iqr_avg", r.rel_iqr_avg},
           {"rel_iqr_max", r.rel_iqr_max},
           {"boot_are", {{"range", r.boot_are_range}, {"iqr", r.boot_are_iqr}, {"std", r.boot_are_std}}}};
}

void from_json(const Json& j, BootstrapReport& r) {
  j.at("sample_count").get_to(r.sample_count);
  j.at("theta_hat").get_to(r.theta_hat);
  j.at("theta_samples").get_to(r.theta_samples);
  j.at("arfv").get_to(r.arfv);
  j.at("aare").get_to(r.aare);
  j.at("price_hat").get_to(r.price_hat);
  j.at("bre").get_to(r.bre);
  j.at("v").get_to(r.v);
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    const std::string name(ModelParams::kNames[k]);
    j.at("rel_iqr").at(name).get_to(r.rel_iqr[k]);
    if (j.contains("free_parameter")) j.at("free_parameter").at(name).get_to(r.free_parameter[k]);
  }
  j.at("rel_iqr_avg").get_to(r.rel_iqr_avg);
  j.at("rel_iqr_max").get_to(r.rel_iqr_max);
  j.at("boot_are").at("range").get_to(r.boot_are_range);
  j.at("boot_are").at("iqr").get_to(r.boot_are_iqr);
  j.at("boot_are").at("std").get_to(r.boot_are_std);
  if (r.theta_samples.size() != r.sample_count || r.arfv.size() != r.sample_count) {
    throw InvalidInput("bootstrap report: sample arrays do not match sample_count");
  }
}

void to_json(Json& j, const KsResult& r) {
  j = Json{{"statistic", r.statistic}, {"p_value", r.p_value}, {"n1", r.n1}, {"n2", r.n2}};
}

void to_json(Json& j, const TTestResult& r) {
  j = Json{{"statistic", r.statistic}, {"p_value", r.p_value}, {"dof", r.dof}};
}

void to_json(Json& j, const SensitivityResult& r) {
  Json params = Json::array();
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    params.push_back(Json{{"parameter", ModelParams::kNames[k]}, {"ks", r.tests[k]}, {"reject", r.reject[k]}});
  }
  j = Json{{"alpha_level", r.alpha_level},
           {"group_sizes", {r.grouping.group_i.size(), r.grouping.group_ii.size(), r.grouping.group_iii.size()}},
           {"parameters", params}};
}

void to_json(Json& j, const SignificanceResult& r) {
  j = Json{{"test", r.test},
           {"mean_arfv_full", r.mean_arfv_full},
           {"mean_arfv_restricted", r.mean_arfv_restricted},
           {"arfv_full", r.arfv_full},
           {"arfv_restricted", r.arfv_restricted}};
}

}  // namespace roughvol
