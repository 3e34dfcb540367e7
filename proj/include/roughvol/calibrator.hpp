#pragma once

// Weighted least-squares calibration of alpha-RFSV to an option chain: a
// genetic global search followed by a bounded Levenberg-Marquardt refinement,
// both on a frozen-noise Monte-Carlo objective.

#include "roughvol/alpha_rfsv.hpp"
#include "roughvol/market_data.hpp"
#include "roughvol/mc_pricer.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roughvol {

enum class ModelVariant { rfsv, rbergomi, alpha_rfsv, fixed_h };

std::string to_string(ModelVariant v);
ModelVariant model_variant_from_string(const std::string& name);

struct ParamBounds {
  ModelParams lower{0.01, -1.0, 0.05, 0.01, 0.0};
  ModelParams upper{0.20, -0.05, 0.25, 3.0, 1.0};

  // lower <= upper componentwise and both ends valid model parameters.
  // A component with lower == upper is fixed.
  void validate() const;
  bool contains(const ModelParams& theta) const;
  ModelParams clamp(const ModelParams& theta) const;
  ModelParams midpoint() const;
  // The bounds with the variant's fixed parameter collapsed (alpha = 0 or 1, H = 1/2).
  ParamBounds for_variant(ModelVariant variant) const;
  bool operator==(const ParamBounds&) const = default;
};

struct CalibrationConfig {
  ParamBounds bounds;
  std::size_t ga_population = 150;
  std::size_t ga_generations = 5;
  double obj_tol = 1e-6;
  double step_tol = 1e-7;
  std::size_t max_iterations = 200;
  std::size_t path_count = 20000;
  int steps_per_year = 4 * 252;
  std::uint64_t seed = 0;
  WeightRule weight_rule = WeightRule::inv_spread_sq;
  ModelVariant model_variant = ModelVariant::alpha_rfsv;
  Estimator estimator = Estimator::conditional_mixed;

  void validate() const;
  ParamBounds effective_bounds() const { return bounds.for_variant(model_variant); }
  PricingSettings pricing() const { return {path_count, steps_per_year, seed, estimator}; }
};

struct FitMetrics {
  double aare = 0.0;
  double mare = 0.0;
  double arfv = 0.0;
  double mrfv = 0.0;
};

// AARE/MARE relative to each market price, ARFV/MRFV relative to the spot.
FitMetrics fit_metrics(std::span<const double> model_prices, const OptionStructure& structure);

struct CalibrationDiagnostics {
  std::size_t ga_evaluations = 0;
  std::vector<double> ga_best_by_generation;  // entry 0 is the initial population
  double start_objective = 0.0;               // objective where the local stage started
  std::size_t local_iterations = 0;
  std::size_t local_evaluations = 0;
  std::string stop_reason;
};

struct CalibrationResult {
  ModelParams theta;
  double objective = 0.0;  // WRSS
  FitMetrics metrics;
  CalibrationDiagnostics diagnostics;
  std::uint64_t seed = 0;
  std::vector<double> model_prices;
};

// Residual vector r(theta) whose squared norm is the objective.
class ResidualModel {
 public:
  virtual ~ResidualModel() = default;
  virtual std::size_t residual_count() const = 0;
  virtual Eigen::VectorXd residuals(const ModelParams& theta) const = 0;
  virtual double objective(const ModelParams& theta) const { return residuals(theta).squaredNorm(); }
};

// sqrt(w_i) (C_i(theta) - C_i^mkt) over the chain, all model prices coming
// from one frozen path set. `grid_maturities` may list extra maturities to
// include in the simulation grid (defaults to the chain's own).
class ChainObjective final : public ResidualModel {
 public:
  ChainObjective(const OptionStructure& structure, const PricingSettings& settings,
                 std::span<const double> grid_maturities = {});

  std::size_t residual_count() const override { return specs_.size(); }
  Eigen::VectorXd residuals(const ModelParams& theta) const override;

  std::vector<double> model_prices(const ModelParams& theta) const;
  const ChainPricer& pricer() const { return *pricer_; }
  const OptionStructure& structure() const { return structure_; }

 private:
  const OptionStructure& structure_;
  std::vector<OptionSpec> specs_;
  std::unique_ptr<ChainPricer> pricer_;
};

// G(theta) with a freshly simulated frozen path set for the given settings.
double objective(const ModelParams& theta, const OptionStructure& structure, const PricingSettings& settings);

struct GaSettings {
  std::size_t population = 150;
  std::size_t generations = 5;
  std::size_t tournament = 3;
  std::size_t elite = 2;
  double mutation_scale = 0.05;  // Gaussian sigma as a fraction of the bound width
  double blend = 0.5;            // BLX-alpha extension
};

// Best individual found. Deterministic given the seed.
ModelParams global_search(const ResidualModel& model, const ParamBounds& bounds, const GaSettings& ga,
                          std::uint64_t seed, CalibrationDiagnostics* diagnostics = nullptr);
ModelParams global_search(const OptionStructure& structure, const CalibrationConfig& config);

struct LocalSettings {
  double obj_tol = 1e-6;
  double step_tol = 1e-7;
  std::size_t max_iterations = 200;
  double fd_step = 1e-4;  // fraction of the bound width
};

// Bounded Levenberg-Marquardt from `start` (projected into the bounds).
// Only decreasing steps are accepted, so the result never exceeds the start objective.
struct LocalResult {
  ModelParams theta;
  double objective = 0.0;
  double start_objective = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::string stop_reason;
};

LocalResult local_refine(const ResidualModel& model, const ModelParams& start, const ParamBounds& bounds,
                         const LocalSettings& settings);
CalibrationResult local_refine(const ModelParams& start, const OptionStructure& structure,
                               const CalibrationConfig& config);

// Global search then local refinement on a single frozen path set.
CalibrationResult calibrate(const OptionStructure& structure, const CalibrationConfig& config);
// Same, reusing an existing objective (its pricing settings take precedence).
CalibrationResult calibrate(const ChainObjective& objective, const CalibrationConfig& config);

// "6.46%" style.
std::string format_percent(double fraction, int decimals = 2);

// Header and one row: day,sigma0,rho,H,xi,alpha,AARE,MARE,WRSS,ARFV.
std::string fit_table_header();
std::string fit_table_row(const std::string& day, const CalibrationResult& result);

}  // namespace roughvol
