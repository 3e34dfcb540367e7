#include "roughvol/alpha_rfsv.hpp"

#include "roughvol/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace roughvol {

void ModelParams::validate() const {
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw DomainError(fmt::format("sigma0 = {} must be positive", sigma0));
  if (!(std::abs(rho) <= 1.0)) throw DomainError(fmt::format("rho = {} outside [-1,1]", rho));
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError(fmt::format("H = {} outside (0,1)", hurst));
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw DomainError(fmt::format("xi = {} must be non-negative", xi));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError(fmt::format("alpha = {} outside [0,1]", alpha));
}

void MarketEnv::validate() const {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw DomainError(fmt::format("spot = {} must be positive", spot));
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError(fmt::format("rate = {} must be non-negative", rate));
}

Eigen::VectorXd vol_compensator(const TimeGrid& grid, const ModelParams& params) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    c(static_cast<Eigen::Index>(k)) =
        0.5 * params.alpha * params.xi * params.xi * std::pow(grid.times[k], 2.0 * params.hurst);
  }
  return c;
}

VolPathSet volatility_paths(const PathBundle& bundle, const ModelParams& params, const TimeGrid& grid) {
  params.validate();
  if (!(bundle.grid == grid)) throw InvalidInput("volatility_paths: bundle grid differs from the requested grid");
  const Eigen::VectorXd comp = vol_compensator(grid, params);
  VolPathSet out{Eigen::MatrixXd(bundle.fbm_paths.rows(), bundle.fbm_paths.cols()), params, grid};
  for (Eigen::Index k = 0; k < bundle.fbm_paths.cols(); ++k) {
    for (Eigen::Index p = 0; p < bundle.fbm_paths.rows(); ++p) {
      out.sigma_paths(p, k) = params.sigma0 * std::exp(params.xi * bundle.fbm_paths(p, k) - comp(k));
    }
  }
  return out;
}

Eigen::MatrixXd log_price_paths(const PathBundle& bundle, const VolPathSet& vols, const MarketEnv& env,
                                const ModelParams& params) {
  env.validate();
  params.validate();
  const Eigen::Index paths = bundle.w_paths.rows();
  const Eigen::Index n = bundle.w_paths.cols();
  if (vols.sigma_paths.rows() != paths || vols.sigma_paths.cols() != n || bundle.w_tilde_increments.rows() != paths ||
      bundle.w_tilde_increments.cols() != n || !(vols.grid == bundle.grid)) {
    throw InvalidInput("log_price_paths: shape mismatch between bundle and volatility paths");
  }
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  const double x0 = std::log(env.spot);
  Eigen::MatrixXd x(paths, n);
  for (Eigen::Index p = 0; p < paths; ++p) {
    double xk = x0;
    double sigma_left = params.sigma0;
    double w_left = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double dt = bundle.grid.dt(static_cast<std::size_t>(k));
      const double dw = bundle.w_paths(p, k) - w_left;
      xk += (env.rate - 0.5 * sigma_left * sigma_left) * dt +
            sigma_left * (params.rho * dw + rho_bar * bundle.w_tilde_increments(p, k));
      x(p, k) = xk;
      sigma_left = vols.sigma_paths(p, k);
      w_left = bundle.w_paths(p, k);
    }
  }
  return x;
}

}  // namespace roughvol
