#pragma once

// Monte-Carlo pricing of European calls under alpha-RFSV.

#include "roughvol/alpha_rfsv.hpp"
#include "roughvol/fbm_engine.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace roughvol {

enum class Estimator { plain, conditional_mixed };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct PriceEstimate {
  double price = 0.0;
  double std_error = 0.0;
  Estimator estimator = Estimator::conditional_mixed;
  std::size_t path_count = 0;
};

struct OptionSpec {
  double strike = 0.0;
  double maturity = 0.0;
};

// Black-Scholes call. vol = 0 or maturity = 0 gives max(spot - strike e^{-rT}, 0).
double black_scholes_call(double spot, double strike, double rate, double vol, double maturity);

// Black-Scholes call from total variance v = vol^2 T and discount factor.
double black_scholes_call_total_variance(double spot, double strike, double discount, double total_variance);

// e^{-rT} mean[(S_T - K)^+] over rows of `log_prices` (columns = grid times).
PriceEstimate price_call_plain(const Eigen::MatrixXd& log_prices, const TimeGrid& grid, double strike,
                               double maturity, const MarketEnv& env);

// Conditional (mixed) estimator: per path, with V = \int sigma^2 dt and
// I = \int sigma dW (left-endpoint sums on the grid), averages
//   BS(S_0 exp(rho I - rho^2 V / 2), K, r, total variance (1 - rho^2) V).
PriceEstimate price_call_conditional(const VolPathSet& vols, const Eigen::MatrixXd& w_paths, double strike,
                                     double maturity, const MarketEnv& env, const ModelParams& params);

struct PricingSettings {
  std::size_t path_count = 20000;
  int steps_per_year = 4 * 252;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::conditional_mixed;
};

// Prices many options from one simulated path set on the grid made of the
// regular nodes and every requested maturity. The random numbers are fixed by
// settings.seed, so repeated calls with different parameters reuse them
// (common random numbers); only H changes the Gaussian paths themselves.
// Thread-safe.
class ChainPricer {
 public:
  ChainPricer(std::span<const double> maturities, PricingSettings settings);
  ~ChainPricer();
  ChainPricer(const ChainPricer&) = delete;
  ChainPricer& operator=(const ChainPricer&) = delete;

  const TimeGrid& grid() const { return grid_; }
  const PricingSettings& settings() const { return settings_; }

  std::vector<PriceEstimate> price(const ModelParams& params, const MarketEnv& env,
                                   std::span<const OptionSpec> options) const;
  std::vector<double> prices(const ModelParams& params, const MarketEnv& env,
                             std::span<const OptionSpec> options) const;

 private:
  struct Frozen;
  struct HurstPaths;
  std::shared_ptr<const HurstPaths> paths_for(double hurst) const;

  TimeGrid grid_;
  PricingSettings settings_;
  std::unique_ptr<Frozen> frozen_;
  mutable std::mutex mutex_;
  mutable std::vector<std::shared_ptr<const HurstPaths>> cache_;
};

struct ChainPricingRequest {
  std::vector<OptionSpec> options;
  MarketEnv env;
  ModelParams params;
  std::size_t path_count = 20000;
  int steps_per_year = 4 * 252;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::conditional_mixed;
};

std::vector<PriceEstimate> price_chain(const ChainPricingRequest& request);

}  // namespace roughvol
