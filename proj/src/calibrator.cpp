#include "roughvol/calibrator.hpp"

#include "roughvol/errors.hpp"
#include "roughvol/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace roughvol {

namespace {

using Array5 = std::array<double, ModelParams::kSize>;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> free_indices(const ParamBounds& b) {
  const Array5 lo = b.lower.to_array(), hi = b.upper.to_array();
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    if (hi[k] > lo[k]) out.push_back(k);
  }
  return out;
}

double finite_or_inf(double x) { return std::isfinite(x) ? x : kInf; }

}  // namespace

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::rfsv:
      return "RFSV";
    case ModelVariant::rbergomi:
      return "rBergomi";
    case ModelVariant::alpha_rfsv:
      return "alphaRFSV";
    case ModelVariant::fixed_h:
      return "fixed_H";
  }
  return "alphaRFSV";
}

ModelVariant model_variant_from_string(const std::string& name) {
  if (name == "RFSV" || name == "rfsv") return ModelVariant::rfsv;
  if (name == "rBergomi" || name == "rbergomi") return ModelVariant::rbergomi;
  if (name == "alphaRFSV" || name == "alpha_rfsv") return ModelVariant::alpha_rfsv;
  if (name == "fixed_H" || name == "fixed_h") return ModelVariant::fixed_h;
  throw InvalidInput(fmt::format("unknown model variant '{}'", name));
}

// ---------------------------------------------------------------------------
// Bounds and config

void ParamBounds::validate() const {
  lower.validate();
  upper.validate();
  const Array5 lo = lower.to_array(), hi = upper.to_array();
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    if (!(lo[k] <= hi[k])) {
      throw InvalidInput(fmt::format("bounds for {}: lower {} exceeds upper {}", ModelParams::kNames[k], lo[k], hi[k]));
    }
  }
}

bool ParamBounds::contains(const ModelParams& theta) const {
  const Array5 lo = lower.to_array(), hi = upper.to_array(), v = theta.to_array();
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    if (!(v[k] >= lo[k] && v[k] <= hi[k])) return false;
  }
  return true;
}

ModelParams ParamBounds::clamp(const ModelParams& theta) const {
  const Array5 lo = lower.to_array(), hi = upper.to_array();
  Array5 v = theta.to_array();
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) v[k] = std::clamp(v[k], lo[k], hi[k]);
  return ModelParams::from_array(v);
}

ModelParams ParamBounds::midpoint() const {
  const Array5 lo = lower.to_array(), hi = upper.to_array();
  Array5 v{};
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) v[k] = 0.5 * (lo[k] + hi[k]);
  return ModelParams::from_array(v);
}

ParamBounds ParamBounds::for_variant(ModelVariant variant) const {
  ParamBounds b = *this;
  switch (variant) {
    case ModelVariant::rfsv:
      b.lower.alpha = b.upper.alpha = 0.0;
      break;
    case ModelVariant::rbergomi:
      b.lower.alpha = b.upper.alpha = 1.0;
      break;
    case ModelVariant::fixed_h:
      b.lower.hurst = b.upper.hurst = 0.5;
      break;
    case ModelVariant::alpha_rfsv:
      break;
  }
  return b;
}

void CalibrationConfig::validate() const {
  bounds.validate();
  if (ga_population == 0) throw InvalidInput("ga_population must be positive");
  if (!(obj_tol > 0.0) || !(step_tol > 0.0)) throw InvalidInput("obj_tol and step_tol must be positive");
  if (max_iterations == 0) throw InvalidInput("max_iterations must be positive");
  if (path_count == 0) throw InvalidInput("path_count must be positive");
  if (steps_per_year <= 0) throw InvalidInput("steps_per_year must be positive");
}

// ---------------------------------------------------------------------------
// Objective

FitMetrics fit_metrics(std::span<const double> model_prices, const OptionStructure& structure) {
  if (structure.size() == 0) throw InvalidInput("fit metrics of an empty chain");
  if (model_prices.size() != structure.size()) throw InvalidInput("fit metrics: price count differs from chain size");
  FitMetrics m;
  double sum_rel = 0.0, sum_fv = 0.0;
  for (std::size_t i = 0; i < model_prices.size(); ++i) {
    const double err = std::abs(model_prices[i] - structure.quotes[i].close);
    const double rel = err / structure.quotes[i].close;
    const double fv = err / structure.env.spot;
    sum_rel += rel;
    sum_fv += fv;
    m.mare = std::max(m.mare, rel);
    m.mrfv = std::max(m.mrfv, fv);
  }
  const auto n = static_cast<double>(model_prices.size());
  m.aare = sum_rel / n;
  m.arfv = sum_fv / n;
  return m;
}

ChainObjective::ChainObjective(const OptionStructure& structure, const PricingSettings& settings,
                               std::span<const double> grid_maturities)
    : structure_(structure), specs_(structure.option_specs()) {
  if (structure.size() == 0) throw InvalidInput("calibration on an empty chain");
  if (structure.weights.size() != structure.size()) throw InvalidInput("chain weights missing");
  std::vector<double> maturities = structure.maturities();
  maturities.insert(maturities.end(), grid_maturities.begin(), grid_maturities.end());
  pricer_ = std::make_unique<ChainPricer>(maturities, settings);
}

std::vector<double> ChainObjective::model_prices(const ModelParams& theta) const {
  return pricer_->prices(theta, structure_.env, specs_);
}

Eigen::VectorXd ChainObjective::residuals(const ModelParams& theta) const {
  const auto prices = model_prices(theta);
  Eigen::VectorXd r(static_cast<Eigen::Index>(prices.size()));
  for (std::size_t i = 0; i < prices.size(); ++i) {
    r(static_cast<Eigen::Index>(i)) = std::sqrt(structure_.weights[i]) * (prices[i] - structure_.quotes[i].close);
  }
  return r;
}

double objective(const ModelParams& theta, const OptionStructure& structure, const PricingSettings& settings) {
  return ChainObjective(structure, settings).objective(theta);
}

// ---------------------------------------------------------------------------
// Genetic search

ModelParams global_search(const ResidualModel& model, const ParamBounds& bounds, const GaSettings& ga,
                          std::uint64_t seed, CalibrationDiagnostics* diagnostics) {
  bounds.validate();
  if (ga.population == 0) throw InvalidInput("GA population must be positive");
  const Array5 lo = bounds.lower.to_array(), hi = bounds.upper.to_array();
  const auto free = free_indices(bounds);

  std::mt19937_64 rng(derive_seed(seed, 0x6761));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto clamp_gene = [&](Array5& v) {
    for (std::size_t k = 0; k < ModelParams::kSize; ++k) v[k] = std::clamp(v[k], lo[k], hi[k]);
  };

  std::vector<Array5> pop(ga.population);
  for (std::size_t i = 0; i < ga.population; ++i) {
    Array5 v = lo;
    for (std::size_t k : free) v[k] = lo[k] + unit(rng) * (hi[k] - lo[k]);
    pop[i] = v;
  }
  // The box centre joins any population large enough to spare a slot.
  if (ga.population >= 2) pop[0] = bounds.midpoint().to_array();

  std::vector<double> fit(ga.population, kInf);
  std::size_t evaluations = 0;
  auto evaluate = [&](std::size_t from) {
    parallel_for(pop.size() - from, [&](std::size_t i) {
      fit[from + i] = finite_or_inf(model.objective(ModelParams::from_array(pop[from + i])));
    });
    evaluations += pop.size() - from;
  };
  evaluate(0);

  auto ranked = [&]() {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
    return order;
  };

  Array5 best = pop[ranked().front()];
  double best_fit = fit[ranked().front()];
  std::vector<double> history{best_fit};

  auto tournament = [&]() {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t winner = pick(rng);
    for (std::size_t t = 1; t < ga.tournament; ++t) {
      const std::size_t c = pick(rng);
      if (fit[c] < fit[winner] || (fit[c] == fit[winner] && c < winner)) winner = c;
    }
    return winner;
  };

  for (std::size_t gen = 0; gen < ga.generations; ++gen) {
    const auto order = ranked();
    const std::size_t elite = std::min(ga.elite, pop.size());
    std::vector<Array5> next;
    std::vector<double> next_fit;
    next.reserve(pop.size());
    for (std::size_t e = 0; e < elite; ++e) {
      next.push_back(pop[order[e]]);
      next_fit.push_back(fit[order[e]]);
    }
    while (next.size() < pop.size()) {
      const Array5& a = pop[tournament()];
      const Array5& b = pop[tournament()];
      Array5 child = lo;
      for (std::size_t k : free) {
        const double u = -ga.blend + (1.0 + 2.0 * ga.blend) * unit(rng);
        child[k] = a[k] + u * (b[k] - a[k]) + ga.mutation_scale * (hi[k] - lo[k]) * gauss(rng);
      }
      clamp_gene(child);
      next.push_back(child);
    }
    pop = std::move(next);
    fit.assign(pop.size(), kInf);
    std::copy(next_fit.begin(), next_fit.end(), fit.begin());
    evaluate(elite);

    const std::size_t top = ranked().front();
    if (fit[top] < best_fit) {
      best_fit = fit[top];
      best = pop[top];
    }
    history.push_back(best_fit);
  }

  if (diagnostics) {
    diagnostics->ga_evaluations = evaluations;
    diagnostics->ga_best_by_generation = history;
  }
  return ModelParams::from_array(best);
}

ModelParams global_search(const OptionStructure& structure, const CalibrationConfig& config) {
  config.validate();
  const ChainObjective model(structure, config.pricing());
  GaSettings ga;
  ga.population = config.ga_population;
  ga.generations = config.ga_generations;
  return global_search(model, config.effective_bounds(), ga, config.seed);
}

// ---------------------------------------------------------------------------
// Local refinement

LocalResult local_refine(const ResidualModel& model, const ModelParams& start, const ParamBounds& bounds,
                         const LocalSettings& settings) {
  bounds.validate();
  const Array5 lo = bounds.lower.to_array(), hi = bounds.upper.to_array();
  const auto free = free_indices(bounds);
  const auto d = static_cast<Eigen::Index>(free.size());

  // Work in unit coordinates u = (theta - lower) / width over the free components.
  auto to_theta = [&](const Eigen::VectorXd& u) {
    Array5 v = lo;
    for (Eigen::Index j = 0; j < d; ++j) {
      const std::size_t k = free[static_cast<std::size_t>(j)];
      v[k] = std::clamp(lo[k] + u(j) * (hi[k] - lo[k]), lo[k], hi[k]);
    }
    return ModelParams::from_array(v);
  };

  const ModelParams start_theta = bounds.clamp(start);
  Eigen::VectorXd u(d);
  {
    const Array5 v = start_theta.to_array();
    for (Eigen::Index j = 0; j < d; ++j) {
      const std::size_t k = free[static_cast<std::size_t>(j)];
      u(j) = (v[k] - lo[k]) / (hi[k] - lo[k]);
    }
  }

  LocalResult res;
  // The start is evaluated as given: mapping to unit coordinates and back need not round-trip exactly.
  ModelParams current = start_theta;
  Eigen::VectorXd r = model.residuals(current);
  double f = r.squaredNorm();
  res.evaluations = 1;
  if (!std::isfinite(f)) throw DomainError("local refinement: objective is not finite at the start point");
  res.start_objective = f;
  res.theta = current;
  res.objective = f;
  if (d == 0) {
    res.stop_reason = "no_free_parameters";
    return res;
  }

  const auto m = r.size();
  double lambda = 1e-3;
  res.stop_reason = "max_iterations";
  for (std::size_t iter = 0; iter < settings.max_iterations; ++iter) {
    if (f == 0.0) {
      res.stop_reason = "zero_objective";
      break;
    }
    // Forward differences, backward where the forward point would leave the box.
    Eigen::MatrixXd jac(m, d);
    std::vector<Eigen::VectorXd> shifted(static_cast<std::size_t>(d));
    std::vector<double> steps(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
      steps[static_cast<std::size_t>(j)] = u(j) + settings.fd_step <= 1.0 ? settings.fd_step : -settings.fd_step;
    }
    parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
      Eigen::VectorXd up = u;
      up(static_cast<Eigen::Index>(j)) += steps[j];
      shifted[j] = model.residuals(to_theta(up));
    });
    res.evaluations += static_cast<std::size_t>(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      jac.col(j) = (shifted[static_cast<std::size_t>(j)] - r) / steps[static_cast<std::size_t>(j)];
    }
    if (!jac.allFinite()) throw DomainError("local refinement: non-finite Jacobian");

    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    Eigen::VectorXd diag = a.diagonal();
    const double floor = std::max(diag.maxCoeff() * 1e-12, std::numeric_limits<double>::min());
    diag = diag.cwiseMax(floor);

    bool accepted = false;
    bool tiny_step = false;
    double step_norm = 0.0, f_new = f;
    Eigen::VectorXd u_new, r_new;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * diag;
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      u_new = (u + delta).cwiseMax(0.0).cwiseMin(1.0);
      step_norm = (u_new - u).norm();
      if (!(step_norm >= settings.step_tol)) {
        tiny_step = true;
        break;
      }
      r_new = model.residuals(to_theta(u_new));
      ++res.evaluations;
      f_new = r_new.squaredNorm();
      if (std::isfinite(f_new) && f_new < f) {
        accepted = true;
        lambda = std::max(lambda / 3.0, 1e-12);
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      res.stop_reason = tiny_step ? "step_tol" : "no_descent";
      break;
    }
    ++res.iterations;
    const double improvement = (f - f_new) / f;
    u = u_new;
    current = to_theta(u);
    r = r_new;
    f = f_new;
    if (improvement < settings.obj_tol) {
      res.stop_reason = "obj_tol";
      break;
    }
    if (step_norm < settings.step_tol) {
      res.stop_reason = "step_tol";
      break;
    }
  }
  res.theta = current;
  res.objective = f;
  return res;
}

namespace {

LocalSettings local_settings(const CalibrationConfig& config) {
  LocalSettings s;
  s.obj_tol = config.obj_tol;
  s.step_tol = config.step_tol;
  s.max_iterations = config.max_iterations;
  return s;
}

CalibrationResult finish(const ChainObjective& model, const LocalResult& local, CalibrationDiagnostics diag,
                         std::uint64_t seed) {
  CalibrationResult out;
  out.theta = local.theta;
  out.model_prices = model.model_prices(local.theta);
  // Same formula as every evaluation during the search, so the descent ordering is exact.
  out.objective = model.objective(local.theta);
  out.metrics = fit_metrics(out.model_prices, model.structure());
  diag.start_objective = local.start_objective;
  diag.local_iterations = local.iterations;
  diag.local_evaluations = local.evaluations;
  diag.stop_reason = local.stop_reason;
  out.diagnostics = std::move(diag);
  out.seed = seed;
  return out;
}

}  // namespace

CalibrationResult local_refine(const ModelParams& start, const OptionStructure& structure,
                               const CalibrationConfig& config) {
  config.validate();
  const ChainObjective model(structure, config.pricing());
  const auto local = local_refine(model, start, config.effective_bounds(), local_settings(config));
  return finish(model, local, {}, config.seed);
}

CalibrationResult calibrate(const ChainObjective& model, const CalibrationConfig& config) {
  config.validate();
  const ParamBounds bounds = config.effective_bounds();
  GaSettings ga;
  ga.population = config.ga_population;
  ga.generations = config.ga_generations;
  CalibrationDiagnostics diag;
  const ModelParams start = global_search(model, bounds, ga, config.seed, &diag);
  spdlog::debug("global stage done: {} evaluations, best objective {:.6g}", diag.ga_evaluations,
                diag.ga_best_by_generation.back());
  const auto local = local_refine(model, start, bounds, local_settings(config));
  spdlog::debug("local stage done: {} iterations, objective {:.6g} ({})", local.iterations, local.objective,
                local.stop_reason);
  return finish(model, local, std::move(diag), config.seed);
}

CalibrationResult calibrate(const OptionStructure& structure, const CalibrationConfig& config) {
  config.validate();
  const ChainObjective model(structure, config.pricing());
  return calibrate(model, config);
}

// ---------------------------------------------------------------------------
// Formatting

std::string format_percent(double fraction, int decimals) {
  return fmt::format("{:.{}f}%", 100.0 * fraction, decimals);
}

std::string fit_table_header() { return "day,sigma0,rho,H,xi,alpha,AARE,MARE,WRSS,ARFV"; }

std::string fit_table_row(const std::string& day, const CalibrationResult& result) {
  const auto& t = result.theta;
  const std::string alpha = (t.alpha == 0.0 || t.alpha == 1.0) ? fmt::format("{:.0f}", t.alpha)
                                                               : fmt::format("{:.4f}", t.alpha);
  return fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{},{},{},{:.4f},{}", day, t.sigma0, t.rho, t.hurst, t.xi, alpha,
                     format_percent(result.metrics.aare), format_percent(result.metrics.mare), result.objective,
                     format_percent(result.metrics.arfv, 4));
}

}  // namespace roughvol
