#include "roughvol/bootstrap.hpp"

#include "roughvol/errors.hpp"
#include "roughvol/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <random>

namespace roughvol {

void BootstrapPlan::validate() const {
  if (sample_count < 2) throw InvalidInput("bootstrap needs at least 2 samples");
  config.validate();
}

BootSample make_boot_sample(const OptionStructure& structure, std::vector<std::size_t> indices) {
  BootSample s;
  s.structure.env = structure.env;
  s.structure.trade_date = structure.trade_date;
  s.structure.day_count = structure.day_count;
  s.structure.weight_rule = structure.weight_rule;
  for (std::size_t i : indices) {
    if (i >= structure.size()) throw InvalidInput(fmt::format("bootstrap index {} outside the chain", i));
    s.structure.quotes.push_back(structure.quotes[i]);
    s.structure.weights.push_back(structure.weights[i]);
  }
  s.indices = std::move(indices);
  return s;
}

BootSample bootstrap_structure(const OptionStructure& structure, std::uint64_t seed) {
  const std::size_t n = structure.size();
  if (n == 0) throw InvalidInput("cannot resample an empty chain");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return make_boot_sample(structure, std::move(idx));
}

std::uint64_t boot_sample_seed(std::uint64_t base_seed, std::size_t j) { return derive_seed(base_seed, j, 1); }
std::uint64_t boot_pricing_seed(std::uint64_t base_seed, std::size_t j) { return derive_seed(base_seed, j, 2); }

BootcalibrationRun run_bootcalibrations(const OptionStructure& structure, const ModelParams& overall_theta,
                                        const BootstrapPlan& plan) {
  plan.config.validate();
  if (plan.sample_count == 0) throw InvalidInput("bootstrap needs at least 1 sample");
  const ParamBounds bounds = plan.config.effective_bounds();
  LocalSettings local;
  local.obj_tol = plan.config.obj_tol;
  local.step_tol = plan.config.step_tol;
  local.max_iterations = plan.config.max_iterations;
  const auto original_maturities = structure.maturities();
  const auto original_specs = structure.option_specs();

  std::vector<std::optional<Bootcalibration>> slots(plan.sample_count);
  std::vector<std::string> errors(plan.sample_count);
  parallel_for(plan.sample_count, [&](std::size_t j) {
    try {
      const BootSample sample = bootstrap_structure(structure, boot_sample_seed(plan.base_seed, j));
      PricingSettings pricing = plan.config.pricing();
      pricing.seed = boot_pricing_seed(plan.base_seed, j);
      const ChainObjective model(sample.structure, pricing, original_maturities);
      const LocalResult fit = local_refine(model, overall_theta, bounds, local);
      Bootcalibration b;
      b.index = j;
      b.theta = fit.theta;
      b.objective = fit.objective;
      b.iterations = fit.iterations;
      b.original_prices = model.pricer().prices(fit.theta, structure.env, original_specs);
      b.original_metrics = fit_metrics(b.original_prices, structure);
      slots[j] = std::move(b);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  });

  BootcalibrationRun run;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (slots[j]) {
      run.results.push_back(std::move(*slots[j]));
    } else {
      run.failed.push_back(j);
      run.failure_messages.push_back(errors[j]);
      spdlog::warn("bootcalibration {} failed: {}", j, errors[j]);
    }
  }
  return run;
}

double relative_iqr(std::span<const double> sample) {
  std::vector<double> v(sample.begin(), sample.end());
  const double iqr = quantile_linear(v, 0.75) - quantile_linear(v, 0.25);
  const double mean = std::abs(sample_mean(sample));
  if (iqr == 0.0) return 0.0;
  return iqr / mean;
}

BootstrapReport bootstrap_statistics(std::span<const Bootcalibration> results, const OptionStructure& structure,
                                     std::array<bool, ModelParams::kSize> free_parameter) {
  const std::size_t m = results.size();
  const std::size_t n = structure.size();
  if (m < 2) throw InvalidInput("bootstrap statistics need at least 2 bootcalibrations");
  for (const auto& r : results) {
    if (r.original_prices.size() != n) throw InvalidInput("bootcalibration price vector does not match the chain");
  }

  BootstrapReport rep;
  rep.sample_count = m;
  rep.free_parameter = free_parameter;
  const double md = static_cast<double>(m);

  ThetaSample mean{};
  for (const auto& r : results) {
    const auto t = r.theta.to_array();
    rep.theta_samples.push_back(t);
    rep.arfv.push_back(r.original_metrics.arfv);
    rep.aare.push_back(r.original_metrics.aare);
    for (std::size_t k = 0; k < ModelParams::kSize; ++k) mean[k] += t[k];
  }
  for (double& x : mean) x /= md;
  rep.theta_hat = ModelParams::from_array(mean);

  rep.price_hat.assign(n, 0.0);
  rep.bre.resize(n);
  rep.v.resize(n);
  std::vector<double> rel(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double mkt = structure.quotes[i].close;
    for (std::size_t j = 0; j < m; ++j) {
      rep.price_hat[i] += results[j].original_prices[i];
      rel[j] = std::abs(results[j].original_prices[i] - mkt) / mkt;
    }
    rep.price_hat[i] /= md;
    rep.bre[i] = std::abs(rep.price_hat[i] - mkt) / mkt;
    rep.v[i] = sample_variance(rel);
  }

  std::vector<double> column(m);
  std::size_t counted = 0;
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    for (std::size_t j = 0; j < m; ++j) column[j] = rep.theta_samples[j][k];
    rep.rel_iqr[k] = relative_iqr(column);
    if (!free_parameter[k]) continue;
    rep.rel_iqr_avg += rep.rel_iqr[k];
    rep.rel_iqr_max = std::max(rep.rel_iqr_max, rep.rel_iqr[k]);
    ++counted;
  }
  if (counted > 0) rep.rel_iqr_avg /= static_cast<double>(counted);

  const auto [lo, hi] = std::minmax_element(rep.aare.begin(), rep.aare.end());
  rep.boot_are_range = *hi - *lo;
  rep.boot_are_iqr = quantile_linear(rep.aare, 0.75) - quantile_linear(rep.aare, 0.25);
  rep.boot_are_std = std::sqrt(sample_variance(rep.aare));
  return rep;
}

std::size_t histogram_bins(std::span<const double> sample) {
  if (sample.empty()) throw InvalidInput("histogram of an empty sample");
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return 1;
  std::vector<double> v(sample.begin(), sample.end());
  const double iqr = quantile_linear(v, 0.75) - quantile_linear(v, 0.25);
  const double count = static_cast<double>(sample.size());
  if (iqr > 0.0) {
    const double width = 2.0 * iqr / std::cbrt(count);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(range / width)), 1, sample.size());
  }
  return static_cast<std::size_t>(std::ceil(std::log2(count))) + 1;
}

std::string export_scatter_matrix(std::span<const ThetaSample> theta_samples, const ModelParams& theta_hat,
                                  const ModelParams& overall_theta) {
  const std::size_t m = theta_samples.size();
  if (m < 2) throw InvalidInput("scatter matrix needs at least 2 samples");
  constexpr std::size_t d = ModelParams::kSize;
  const auto& names = ModelParams::kNames;

  std::string out = "block,param_x,param_y,x,y,value\n";
  const auto hat = theta_hat.to_array();
  const auto overall = overall_theta.to_array();
  for (std::size_t k = 0; k < d; ++k) {
    out += fmt::format("marker_theta_hat,{},{},{:.17g},,\n", names[k], names[k], hat[k]);
    out += fmt::format("marker_overall,{},{},{:.17g},,\n", names[k], names[k], overall[k]);
  }

  std::vector<double> column(m);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0; j < m; ++j) column[j] = theta_samples[j][k];
    const std::size_t bins = histogram_bins(column);
    const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    std::vector<std::size_t> counts(bins, 0);
    for (double x : column) {
      std::size_t b = 0;
      if (range > 0.0) {
        b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / range * static_cast<double>(bins)));
      }
      ++counts[b];
    }
    for (std::size_t b = 0; b < bins; ++b) {
      const double left = lo + range * static_cast<double>(b) / static_cast<double>(bins);
      const double right = b + 1 == bins ? *hi_it : lo + range * static_cast<double>(b + 1) / static_cast<double>(bins);
      out += fmt::format("hist,{},{},{:.17g},{:.17g},{}\n", names[k], names[k], left, right, counts[b]);
    }
  }

  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      for (std::size_t j = 0; j < m; ++j) {
        out += fmt::format("pair,{},{},{:.17g},{:.17g},{}\n", names[a], names[b], theta_samples[j][a],
                           theta_samples[j][b], j);
      }
    }
  }
  return out;
}

}  // namespace roughvol
