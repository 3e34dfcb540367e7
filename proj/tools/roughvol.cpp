// roughvol: batch command-line front end for the rough-volatility pipeline.

#include "roughvol/bootstrap.hpp"
#include "roughvol/calibrator.hpp"
#include "roughvol/errors.hpp"
#include "roughvol/market_data.hpp"
#include "roughvol/mc_pricer.hpp"
#include "roughvol/parallel.hpp"
#include "roughvol/reports.hpp"
#include "roughvol/serialization.hpp"
#include "roughvol/stat_tests.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace roughvol;

namespace {

constexpr int kSchemaVersion = 1;

// Error carrying the file it is about.
struct PathError : std::runtime_error {
  PathError(const std::string& what, fs::path p) : std::runtime_error(what), path(std::move(p)) {}
  fs::path path;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out = ".";
  std::string log_level = "warn";
};

struct RunContext {
  Json config;
  fs::path base_dir;
  fs::path out_dir;
  std::optional<std::uint64_t> seed;
};

fs::path resolve(const RunContext& ctx, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : ctx.base_dir / path;
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw PathError(fmt::format("input file not found: {}", p.string()), p);
}

Json read_json(const fs::path& p) {
  require_file(p);
  std::ifstream in(p);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw PathError(fmt::format("{}: {}", p.string(), e.what()), p);
  }
}

// Temp file in the destination directory, then rename.
void write_atomic(const fs::path& target, const std::string& content) {
  const fs::path tmp = target.parent_path() / fmt::format(".{}.tmp{}", target.filename().string(), ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PathError(fmt::format("cannot write {}", tmp.string()), tmp);
    out << content;
    if (!out.flush()) throw PathError(fmt::format("cannot write {}", tmp.string()), tmp);
  }
  fs::rename(tmp, target);
}

void write_json(const fs::path& target, const Json& j) { write_atomic(target, j.dump(2) + "\n"); }

const Json& section(const RunContext& ctx, const char* name) {
  static const Json empty = Json::object();
  return ctx.config.contains(name) ? ctx.config.at(name) : empty;
}

PricingSettings pricing_settings(const RunContext& ctx, const Json& j) {
  PricingSettings s;
  from_json(j, s);
  if (ctx.seed) s.seed = *ctx.seed;
  return s;
}

CalibrationConfig calibration_config(const RunContext& ctx) {
  CalibrationConfig c;
  from_json(section(ctx, "calibration"), c);
  if (ctx.seed) c.seed = *ctx.seed;
  c.validate();
  return c;
}

OptionStructure load_structure(const RunContext& ctx, WeightRule rule) {
  if (!ctx.config.contains("chain")) throw InvalidInput("config is missing 'chain'");
  const fs::path chain = resolve(ctx, ctx.config.at("chain").get<std::string>());
  fs::path sidecar = chain;
  sidecar.replace_extension(".market.json");
  if (ctx.config.contains("market")) sidecar = resolve(ctx, ctx.config.at("market").get<std::string>());
  require_file(chain);
  require_file(sidecar);
  return load_chain(chain, sidecar, rule);
}

// Inline "params" object, or "params_file" pointing to JSON holding the
// parameters directly or under "theta".
ModelParams load_params(const RunContext& ctx, const Json& holder) {
  if (holder.contains("params")) return holder.at("params").get<ModelParams>();
  if (holder.contains("params_file")) {
    const Json j = read_json(resolve(ctx, holder.at("params_file").get<std::string>()));
    return j.contains("theta") ? j.at("theta").get<ModelParams>() : j.get<ModelParams>();
  }
  throw InvalidInput("config needs 'params' or 'params_file'");
}

ModelParams load_theta_file(const RunContext& ctx, const std::string& path) {
  const Json j = read_json(resolve(ctx, path));
  return j.contains("theta") ? j.at("theta").get<ModelParams>() : j.get<ModelParams>();
}

std::array<bool, ModelParams::kSize> free_mask(const ParamBounds& b) {
  const auto lo = b.lower.to_array(), hi = b.upper.to_array();
  std::array<bool, ModelParams::kSize> mask{};
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) mask[k] = hi[k] > lo[k];
  return mask;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_synth_chain(const RunContext& ctx) {
  const Json& s = section(ctx, "synth");
  const std::string trade_date = s.value("trade_date", std::string("2015-04-01"));
  const auto strikes = s.at("strikes").get<std::vector<double>>();
  const auto expiry_days = s.at("expiry_days").get<std::vector<long>>();
  const double spread_abs = s.value("spread_abs", 0.0);
  const double spread_rel = s.value("spread_rel", 0.0);
  if (spread_abs < 0.0 || spread_rel < 0.0) throw InvalidInput("synthetic spreads must be non-negative");
  MarketSidecar sidecar;
  if (s.contains("market")) s.at("market").get_to(sidecar.env);
  sidecar.env.validate();
  const ModelParams truth = load_params(ctx, s);
  truth.validate();
  PricingSettings pricing = pricing_settings(ctx, s.value("pricing", Json::object()));
  if (!s.contains("pricing") || !s.at("pricing").contains("path_count")) pricing.path_count = 150000;

  OptionStructure chain;
  chain.env = sidecar.env;
  chain.trade_date = trade_date;
  for (long days : expiry_days) {
    if (days <= 0) throw InvalidInput("expiry_days must be positive");
    for (double k : strikes) {
      OptionQuote q;
      q.expiry_date = add_days(trade_date, days);
      q.maturity = year_fraction(trade_date, q.expiry_date, chain.day_count);
      q.strike = k;
      chain.quotes.push_back(q);
    }
  }
  const ChainPricer pricer(chain.maturities(), pricing);
  const auto estimates = pricer.price(truth, chain.env, chain.option_specs());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    auto& q = chain.quotes[i];
    q.close = estimates[i].price;
    if (!(q.close > 0.0)) {
      throw PricingError(fmt::format("synthetic price of option {} is not positive", i), i);
    }
    const double spread = std::max(spread_abs, spread_rel * q.close);
    q.bid = std::max(q.close - 0.5 * spread, 0.0);
    q.ask = q.close + 0.5 * spread;
  }

  fs::create_directories(ctx.out_dir);
  write_atomic(ctx.out_dir / "chain.csv", chain_to_csv(chain));
  Json side{{"spot", sidecar.env.spot}, {"rate", sidecar.env.rate}, {"day_count", sidecar.day_count}};
  write_json(ctx.out_dir / "chain.market.json", side);
  Json truth_json{{"schema_version", kSchemaVersion}, {"theta", truth}, {"pricing", pricing}};
  write_json(ctx.out_dir / "truth.json", truth_json);
}

void cmd_price(const RunContext& ctx, const std::string& dump_dir) {
  const Json& p = section(ctx, "price");
  const OptionStructure chain = load_structure(ctx, WeightRule::inv_spread_sq);
  const ModelParams theta = load_params(ctx, p.empty() ? ctx.config : p);
  const PricingSettings pricing = pricing_settings(ctx, p.value("pricing", section(ctx, "pricing")));
  const ChainPricer pricer(chain.maturities(), pricing);
  const auto estimates = pricer.price(theta, chain.env, chain.option_specs());

  fs::create_directories(ctx.out_dir);
  std::string csv = "strike,maturity,price,std_error,estimator,path_count\n";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", chain.quotes[i].strike, chain.quotes[i].maturity,
                       estimates[i].price, estimates[i].std_error, to_string(estimates[i].estimator),
                       estimates[i].path_count);
  }
  write_atomic(ctx.out_dir / "prices.csv", csv);
  if (!dump_dir.empty()) {
    JointCovariance::build(pricer.grid(), theta.hurst).write_csv(ctx.out_dir / dump_dir);
  }
}

void cmd_calibrate(const RunContext& ctx) {
  const CalibrationConfig config = calibration_config(ctx);
  const OptionStructure chain = load_structure(ctx, config.weight_rule);
  const CalibrationResult result = calibrate(chain, config);

  fs::create_directories(ctx.out_dir);
  Json j{{"schema_version", kSchemaVersion}, {"model_variant", to_string(config.model_variant)}};
  Json body = result;
  j.update(body);
  j["config"] = config;
  write_json(ctx.out_dir / "calibration.json", j);
  const std::string day = ctx.config.value("day", chain.trade_date);
  write_atomic(ctx.out_dir / "fit_row.csv", fit_table_header() + "\n" + fit_table_row(day, result) + "\n");
}

void cmd_bootstrap(const RunContext& ctx) {
  const CalibrationConfig config = calibration_config(ctx);
  const OptionStructure chain = load_structure(ctx, config.weight_rule);
  const Json& b = section(ctx, "bootstrap");
  BootstrapPlan plan;
  plan.sample_count = b.value("sample_count", plan.sample_count);
  plan.base_seed = ctx.seed ? *ctx.seed : b.value("base_seed", config.seed);
  plan.config = config;
  plan.validate();

  fs::create_directories(ctx.out_dir);
  ModelParams overall;
  if (b.contains("overall")) {
    overall = load_theta_file(ctx, b.at("overall").get<std::string>());
  } else {
    const CalibrationResult result = calibrate(chain, config);
    overall = result.theta;
    Json j{{"schema_version", kSchemaVersion}, {"model_variant", to_string(config.model_variant)}};
    Json body = result;
    j.update(body);
    j["config"] = config;
    write_json(ctx.out_dir / "calibration.json", j);
  }

  const BootcalibrationRun run = run_bootcalibrations(chain, overall, plan);
  const BootstrapReport report = bootstrap_statistics(run.results, chain, free_mask(config.effective_bounds()));

  Json j{{"schema_version", kSchemaVersion}, {"model_variant", to_string(config.model_variant)}};
  Json body = report;
  j.update(body);
  j["overall_theta"] = overall;
  j["base_seed"] = plan.base_seed;
  j["failed"] = run.failed;
  j["failure_messages"] = run.failure_messages;
  write_json(ctx.out_dir / "bootstrap_report.json", j);
  write_atomic(ctx.out_dir / "per_option.csv", per_option_csv(chain, report));
  write_atomic(ctx.out_dir / "theta_samples.csv", theta_samples_csv(report));
  write_atomic(ctx.out_dir / "scatter_matrix.csv",
               export_scatter_matrix(report.theta_samples, report.theta_hat, overall));
}

void cmd_sensitivity(const RunContext& ctx) {
  const Json& s = section(ctx, "sensitivity");
  const fs::path report_path = resolve(ctx, s.value("report", std::string("bootstrap_report.json")));
  const BootstrapReport report = read_json(report_path).get<BootstrapReport>();
  const double level = s.value("alpha_level", 0.05);
  const SensitivityResult result = sensitivity_analysis(report.theta_samples, report.arfv, level);

  fs::create_directories(ctx.out_dir);
  Json j{{"schema_version", kSchemaVersion}};
  Json body = result;
  j.update(body);
  write_json(ctx.out_dir / "sensitivity.json", j);
  write_atomic(ctx.out_dir / "sensitivity.csv", sensitivity_csv(result));
}

void cmd_significance(const RunContext& ctx) {
  const Json& s = section(ctx, "significance");
  const OptionStructure chain = load_structure(ctx, WeightRule::inv_spread_sq);
  const ModelParams full = load_theta_file(ctx, s.at("full").get<std::string>());
  const ModelParams restricted = load_theta_file(ctx, s.at("restricted").get<std::string>());
  const std::size_t reps = s.value("repetitions", std::size_t{100});
  const PricingSettings pricing = pricing_settings(ctx, s.value("pricing", section(ctx, "pricing")));
  const SignificanceResult result = significance_test(chain, full, restricted, reps, pricing);

  fs::create_directories(ctx.out_dir);
  Json j{{"schema_version", kSchemaVersion}};
  Json body = result;
  j.update(body);
  j["theta_full"] = full;
  j["theta_restricted"] = restricted;
  write_json(ctx.out_dir / "significance.json", j);
}

void cmd_report(const RunContext& ctx) {
  const Json& r = section(ctx, "report");
  if (!r.contains("inputs") || r.at("inputs").empty()) throw InvalidInput("report needs a non-empty 'inputs' list");
  std::vector<std::pair<std::string, BootstrapReport>> reports;
  std::vector<std::optional<SensitivityResult>> sens;
  for (const auto& in : r.at("inputs")) {
    const std::string label = in.at("label").get<std::string>();
    BootstrapReport rep = read_json(resolve(ctx, in.at("report").get<std::string>())).get<BootstrapReport>();
    std::optional<SensitivityResult> s;
    if (in.value("sensitivity", false)) s = sensitivity_analysis(rep.theta_samples, rep.arfv);
    reports.emplace_back(label, std::move(rep));
    sens.push_back(std::move(s));
  }

  std::string md = "# Robustness report\n\n## Model comparison\n\nBootARE columns are in percentage points.\n\n";
  std::vector<RobustnessRow> rows;
  for (const auto& [label, rep] : reports) rows.push_back({label, &rep});
  md += robustness_table_markdown(rows);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::string section_md = report_markdown(reports[i].first, reports[i].second, sens[i] ? &*sens[i] : nullptr);
    // Demote the per-model headings one level.
    std::string demoted;
    std::istringstream lines(section_md);
    for (std::string line; std::getline(lines, line);) demoted += (line.starts_with("#") ? "#" + line : line) + "\n";
    md += "\n" + demoted;
  }
  fs::create_directories(ctx.out_dir);
  write_atomic(ctx.out_dir / "report.md", md);
}

Json error_json(const std::string& type, const std::string& message, const std::optional<fs::path>& path) {
  Json j{{"status", "error"}, {"type", type}, {"message", message}};
  if (path) j["path"] = path->string();
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rough-volatility option pricing, calibration and robustness analysis", "roughvol"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "roughvol 1.0.0");

  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON with schema_version)")->required();
  app.add_option("--seed", g.seed, "Base seed; overrides every seed in the config");
  app.add_option("--threads", g.threads, "Worker threads (default: ROUGHVOL_THREADS or all cores)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string dump_dir;
  auto* synth = app.add_subcommand("synth-chain", "Price a strike/expiry lattice at known parameters into a chain");
  auto* price = app.add_subcommand("price", "Price every option of a chain at given parameters");
  price->add_option("--dump-covariance", dump_dir, "Also write sigma.csv and cholesky.csv into this subdirectory");
  auto* cal = app.add_subcommand("calibrate", "Calibrate a model variant to a chain");
  auto* boot = app.add_subcommand("bootstrap", "Bootcalibrations and robustness statistics");
  auto* sens = app.add_subcommand("sensitivity", "KS tests of best vs worst bootcalibrations by ARFV");
  auto* sig = app.add_subcommand("significance", "t-test of ARFV samples of two calibrated parameter sets");
  auto* rep = app.add_subcommand("report", "Markdown summary of bootstrap reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto sink = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    spdlog::set_default_logger(std::make_shared<spdlog::logger>("roughvol", sink));
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    std::size_t threads = 0;
    if (g.threads) {
      threads = *g.threads;
    } else if (const char* env = std::getenv("ROUGHVOL_THREADS")) {
      threads = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
    }
    set_thread_count(threads);

    RunContext ctx;
    const fs::path config_path(g.config);
    ctx.config = read_json(config_path);
    if (!ctx.config.contains("schema_version")) throw PathError("config lacks schema_version", config_path);
    if (ctx.config.at("schema_version").get<int>() != kSchemaVersion) {
      throw PathError(fmt::format("unsupported schema_version (expected {})", kSchemaVersion), config_path);
    }
    ctx.base_dir = fs::absolute(config_path).parent_path();
    ctx.out_dir = fs::path(g.out);
    ctx.seed = g.seed;

    if (*synth) cmd_synth_chain(ctx);
    else if (*price) cmd_price(ctx, dump_dir);
    else if (*cal) cmd_calibrate(ctx);
    else if (*boot) cmd_bootstrap(ctx);
    else if (*sens) cmd_sensitivity(ctx);
    else if (*sig) cmd_significance(ctx);
    else if (*rep) cmd_report(ctx);
    return 0;
  } catch (const PathError& e) {
    std::cerr << error_json("path", e.what(), e.path).dump() << '\n';
    return 2;
  } catch (const ChainFormatError& e) {
    std::cerr << error_json("chain_format", e.what(), std::nullopt).dump() << '\n';
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << error_json("config", e.what(), fs::path(g.config)).dump() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << error_json("invalid_input", e.what(), std::nullopt).dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_json("runtime", e.what(), std::nullopt).dump() << '\n';
    return 1;
  }
}
