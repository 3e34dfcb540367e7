#pragma once

// The alpha-RFSV model: sigma_t = sigma0 * exp(xi B^H_t - alpha xi^2 t^{2H} / 2),
// dX_t = (r - sigma_t^2 / 2) dt + sigma_t (rho dW_t + sqrt(1 - rho^2) dW~_t).
// alpha = 0 gives RFSV, alpha = 1 gives rough Bergomi.

#include "roughvol/fbm_engine.hpp"

#include <Eigen/Dense>

#include <array>
#include <string_view>

namespace roughvol {

struct ModelParams {
  double sigma0 = 0.1;
  double rho = -0.5;
  double hurst = 0.1;
  double xi = 1.0;
  double alpha = 1.0;

  static constexpr std::size_t kSize = 5;
  static constexpr std::array<std::string_view, kSize> kNames = {"sigma0", "rho", "H", "xi", "alpha"};

  std::array<double, kSize> to_array() const { return {sigma0, rho, hurst, xi, alpha}; }
  static ModelParams from_array(const std::array<double, kSize>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

  // Throws DomainError unless sigma0 > 0, |rho| <= 1, H in (0,1), xi >= 0, alpha in [0,1].
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

struct MarketEnv {
  double spot = 100.0;
  double rate = 0.0;

  void validate() const;
  bool operator==(const MarketEnv&) const = default;
};

struct VolPathSet {
  Eigen::MatrixXd sigma_paths;  // one row per path, one column per grid time
  ModelParams params;
  TimeGrid grid;
};

// The deterministic part alpha xi^2 t^{2H} / 2 of the log-volatility at each grid time.
Eigen::VectorXd vol_compensator(const TimeGrid& grid, const ModelParams& params);

VolPathSet volatility_paths(const PathBundle& bundle, const ModelParams& params, const TimeGrid& grid);

// Euler scheme on the log-price with left-endpoint volatility; X_0 = ln S_0 is
// implicit (column k holds X at grid time k).
Eigen::MatrixXd log_price_paths(const PathBundle& bundle, const VolPathSet& vols, const MarketEnv& env,
                                const ModelParams& params);

}  // namespace roughvol
