#include "roughvol/mc_pricer.hpp"

#include "roughvol/errors.hpp"
#include "roughvol/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace roughvol {

namespace {

// Frozen draws and paths are kept in memory only below this size.
constexpr double kCacheBudgetBytes = 768.0 * 1024 * 1024;
constexpr std::size_t kHurstCacheSize = 2;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Running mean / sum of squared deviations, mergeable in a fixed order.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  static Moments merge(const Moments& a, const Moments& b) {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    Moments m;
    m.count = a.count + b.count;
    const double delta = b.mean - a.mean;
    m.mean = a.mean + delta * (b.count / m.count);
    m.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / m.count);
    return m;
  }
};

Moments pairwise_merge(std::span<const Moments> parts) {
  if (parts.empty()) return {};
  if (parts.size() == 1) return parts[0];
  const std::size_t half = parts.size() / 2;
  return Moments::merge(pairwise_merge(parts.first(half)), pairwise_merge(parts.subspan(half)));
}

PriceEstimate to_estimate(const Moments& m, Estimator estimator) {
  PriceEstimate e;
  e.price = m.mean;
  e.std_error = m.count > 1.0 ? std::sqrt(m.m2 / (m.count - 1.0) / m.count) : 0.0;
  e.estimator = estimator;
  e.path_count = static_cast<std::size_t>(m.count);
  return e;
}

// Per-path value of the conditional estimator.
inline double conditional_value(double log_spot, double rho, double var_int, double vol_int, double strike,
                                double discount) {
  const double spot_eff = std::exp(log_spot + rho * vol_int - 0.5 * rho * rho * var_int);
  return black_scholes_call_total_variance(spot_eff, strike, discount, (1.0 - rho * rho) * var_int);
}

}  // namespace

std::string to_string(Estimator e) { return e == Estimator::plain ? "plain" : "conditional_mixed"; }

Estimator estimator_from_string(const std::string& name) {
  if (name == "plain") return Estimator::plain;
  if (name == "conditional_mixed" || name == "conditional") return Estimator::conditional_mixed;
  throw InvalidInput(fmt::format("unknown estimator '{}'", name));
}

double black_scholes_call_total_variance(double spot, double strike, double discount, double total_variance) {
  if (strike <= 0.0) return spot;
  if (!(total_variance > 0.0)) return std::max(spot - strike * discount, 0.0);
  const double sd = std::sqrt(total_variance);
  const double d1 = (std::log(spot / (strike * discount)) + 0.5 * total_variance) / sd;
  return spot * normal_cdf(d1) - strike * discount * normal_cdf(d1 - sd);
}

double black_scholes_call(double spot, double strike, double rate, double vol, double maturity) {
  if (!(spot > 0.0)) throw DomainError("black_scholes_call: spot must be positive");
  if (!(strike > 0.0)) throw DomainError("black_scholes_call: strike must be positive");
  if (!(vol >= 0.0) || !(maturity >= 0.0)) throw DomainError("black_scholes_call: vol and maturity must be >= 0");
  return black_scholes_call_total_variance(spot, strike, std::exp(-rate * maturity), vol * vol * maturity);
}

PriceEstimate price_call_plain(const Eigen::MatrixXd& log_prices, const TimeGrid& grid, double strike,
                               double maturity, const MarketEnv& env) {
  env.validate();
  if (strike < 0.0) throw DomainError("price_call_plain: strike must be non-negative");
  if (log_prices.cols() != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidInput("price_call_plain: log-price matrix does not match the grid");
  }
  const auto k = static_cast<Eigen::Index>(grid.index_of(maturity));
  const double discount = std::exp(-env.rate * maturity);
  Moments m;
  for (Eigen::Index p = 0; p < log_prices.rows(); ++p) {
    m.add(discount * std::max(std::exp(log_prices(p, k)) - strike, 0.0));
  }
  return to_estimate(m, Estimator::plain);
}

PriceEstimate price_call_conditional(const VolPathSet& vols, const Eigen::MatrixXd& w_paths, double strike,
                                     double maturity, const MarketEnv& env, const ModelParams& params) {
  env.validate();
  params.validate();
  if (strike < 0.0) throw DomainError("price_call_conditional: strike must be non-negative");
  if (w_paths.rows() != vols.sigma_paths.rows() || w_paths.cols() != vols.sigma_paths.cols()) {
    throw InvalidInput("price_call_conditional: W paths and volatility paths differ in shape");
  }
  const auto last = static_cast<Eigen::Index>(vols.grid.index_of(maturity));
  const double discount = std::exp(-env.rate * maturity);
  const double log_spot = std::log(env.spot) + env.rate * maturity;
  Moments m;
  for (Eigen::Index p = 0; p < w_paths.rows(); ++p) {
    double var_int = 0.0, vol_int = 0.0, sigma_left = params.sigma0, w_left = 0.0;
    for (Eigen::Index k = 0; k <= last; ++k) {
      var_int += sigma_left * sigma_left * vols.grid.dt(static_cast<std::size_t>(k));
      vol_int += sigma_left * (w_paths(p, k) - w_left);
      sigma_left = vols.sigma_paths(p, k);
      w_left = w_paths(p, k);
    }
    // Spot grows at the risk-free rate, so discounting is folded into the effective spot.
    m.add(conditional_value(log_spot, params.rho, var_int, vol_int, strike, 1.0) * discount);
  }
  return to_estimate(m, Estimator::conditional_mixed);
}

// ---------------------------------------------------------------------------
// ChainPricer

struct ChainPricer::Frozen {
  bool cached = false;
  std::vector<Eigen::MatrixXd> z;  // 2n x b joint draws per block
  std::vector<Eigen::MatrixXd> w;  // n x b Brownian paths per block
};

struct ChainPricer::HurstPaths {
  double hurst = 0.0;
  JointCovariance cov;
  std::vector<Eigen::MatrixXd> fbm;  // empty when not cached
};

ChainPricer::ChainPricer(std::span<const double> maturities, PricingSettings settings)
    : grid_(TimeGrid::with_maturities(maturities, settings.steps_per_year)),
      settings_(settings),
      frozen_(std::make_unique<Frozen>()) {
  if (settings_.path_count == 0) throw InvalidInput("path_count must be at least 1");
  const double n = static_cast<double>(grid_.size());
  const double bytes = 8.0 * n * static_cast<double>(settings_.path_count) * (3.0 + kHurstCacheSize);
  // Pricers built inside a worker share the budget with their siblings.
  const double budget = kCacheBudgetBytes / (in_parallel_region() ? static_cast<double>(thread_count()) : 1.0);
  frozen_->cached = bytes <= budget;
  if (frozen_->cached) {
    const std::size_t blocks = block_count(settings_.path_count);
    frozen_->z.resize(blocks);
    frozen_->w.resize(blocks);
    const auto rows = static_cast<Eigen::Index>(grid_.size());
    parallel_for(blocks, [&](std::size_t b) {
      const auto cols = static_cast<Eigen::Index>(block_size(settings_.path_count, b));
      frozen_->z[b] = block_normals(settings_.seed, NormalStream::joint, b, 2 * rows, cols);
      auto& w = frozen_->w[b];
      w.resize(rows, cols);
      for (Eigen::Index c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < rows; ++k) {
          acc += std::sqrt(grid_.dt(static_cast<std::size_t>(k))) * frozen_->z[b](k, c);
          w(k, c) = acc;
        }
      }
    });
  }
}

ChainPricer::~ChainPricer() = default;

std::shared_ptr<const ChainPricer::HurstPaths> ChainPricer::paths_for(double hurst) const {
  {
    std::lock_guard lock(mutex_);
    for (const auto& entry : cache_) {
      if (entry->hurst == hurst) return entry;
    }
  }
  auto entry = std::make_shared<HurstPaths>();
  entry->hurst = hurst;
  entry->cov = JointCovariance::build(grid_, hurst);
  if (frozen_->cached) {
    entry->fbm.resize(frozen_->z.size());
    parallel_for(frozen_->z.size(), [&](std::size_t b) { entry->cov.fbm_from(frozen_->z[b], entry->fbm[b]); });
  }
  std::lock_guard lock(mutex_);
  for (const auto& existing : cache_) {
    if (existing->hurst == hurst) return existing;
  }
  cache_.push_back(entry);
  if (cache_.size() > kHurstCacheSize) cache_.erase(cache_.begin());
  return entry;
}

std::vector<double> ChainPricer::prices(const ModelParams& params, const MarketEnv& env,
                                        std::span<const OptionSpec> options) const {
  const auto estimates = price(params, env, options);
  std::vector<double> out(estimates.size());
  std::transform(estimates.begin(), estimates.end(), out.begin(), [](const PriceEstimate& e) { return e.price; });
  return out;
}

std::vector<PriceEstimate> ChainPricer::price(const ModelParams& params, const MarketEnv& env,
                                              std::span<const OptionSpec> options) const {
  params.validate();
  env.validate();
  if (options.empty()) return {};

  // Group options by maturity node.
  std::vector<std::size_t> node_of(options.size());
  for (std::size_t o = 0; o < options.size(); ++o) {
    if (!(options[o].strike >= 0.0)) {
      throw PricingError(fmt::format("option {}: strike must be non-negative", o), o);
    }
    auto k = grid_.find(options[o].maturity);
    if (!k) throw PricingError(fmt::format("option {}: maturity {} not on grid", o, options[o].maturity), o);
    node_of[o] = *k;
  }
  std::vector<std::size_t> nodes = node_of;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<std::size_t> group_of(options.size());
  for (std::size_t o = 0; o < options.size(); ++o) {
    group_of[o] = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), node_of[o]) - nodes.begin());
  }
  const std::size_t groups = nodes.size();
  const auto last_node = static_cast<Eigen::Index>(nodes.back());
  std::vector<double> discount(groups), log_fwd(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const double t = grid_.times[nodes[g]];
    discount[g] = std::exp(-env.rate * t);
    log_fwd[g] = std::log(env.spot) + env.rate * t;
  }

  const auto hp = paths_for(params.hurst);
  const Eigen::VectorXd comp = vol_compensator(grid_, params);
  const auto n = static_cast<Eigen::Index>(grid_.size());
  std::vector<double> dt(grid_.size());
  for (std::size_t k = 0; k < dt.size(); ++k) dt[k] = grid_.dt(k);

  const std::size_t blocks = block_count(settings_.path_count);
  std::vector<std::vector<Moments>> stats(blocks, std::vector<Moments>(options.size()));
  const bool plain = settings_.estimator == Estimator::plain;
  const double rho = params.rho;
  const double rho_bar = std::sqrt(1.0 - rho * rho);

  parallel_for(blocks, [&](std::size_t b) {
    const auto cols = static_cast<Eigen::Index>(block_size(settings_.path_count, b));
    Eigen::MatrixXd w_local, fbm_local;
    const Eigen::MatrixXd* w = nullptr;
    const Eigen::MatrixXd* fbm = nullptr;
    if (frozen_->cached) {
      w = &frozen_->w[b];
      fbm = &hp->fbm[b];
    } else {
      hp->cov.transform(block_normals(settings_.seed, NormalStream::joint, b, 2 * n, cols), w_local, fbm_local);
      w = &w_local;
      fbm = &fbm_local;
    }
    Eigen::MatrixXd w_tilde;
    if (plain) w_tilde = block_normals(settings_.seed, NormalStream::w_tilde, b, n, cols);

    const Eigen::ArrayXXd sigma =
        ((params.xi * fbm->topRows(last_node + 1).array()).colwise() - comp.head(last_node + 1).array()).exp() *
        params.sigma0;

    std::vector<double> var_at(groups), vol_at(groups), x_at(groups);
    auto& out = stats[b];
    for (Eigen::Index c = 0; c < cols; ++c) {
      double var_int = 0.0, vol_int = 0.0, x = 0.0;
      double sigma_left = params.sigma0, w_left = 0.0;
      std::size_t g = 0;
      for (Eigen::Index k = 0; k <= last_node; ++k) {
        const double dw = (*w)(k, c) - w_left;
        const double s2dt = sigma_left * sigma_left * dt[static_cast<std::size_t>(k)];
        if (plain) {
          x += -0.5 * s2dt + sigma_left * (rho * dw + rho_bar * std::sqrt(dt[static_cast<std::size_t>(k)]) *
                                                           w_tilde(k, c));
        } else {
          var_int += s2dt;
          vol_int += sigma_left * dw;
        }
        sigma_left = sigma(k, c);
        w_left = (*w)(k, c);
        if (static_cast<std::size_t>(k) == nodes[g]) {
          var_at[g] = var_int;
          vol_at[g] = vol_int;
          x_at[g] = x;
          ++g;
        }
      }
      for (std::size_t o = 0; o < options.size(); ++o) {
        const std::size_t gi = group_of[o];
        double value;
        if (plain) {
          value = discount[gi] * std::max(std::exp(log_fwd[gi] + x_at[gi]) - options[o].strike, 0.0);
        } else {
          value = discount[gi] *
                  conditional_value(log_fwd[gi], rho, var_at[gi], vol_at[gi], options[o].strike, 1.0);
        }
        out[o].add(value);
      }
    }
  });

  std::vector<PriceEstimate> result(options.size());
  std::vector<Moments> column(blocks);
  for (std::size_t o = 0; o < options.size(); ++o) {
    for (std::size_t b = 0; b < blocks; ++b) column[b] = stats[b][o];
    result[o] = to_estimate(pairwise_merge(column), settings_.estimator);
  }
  return result;
}

std::vector<PriceEstimate> price_chain(const ChainPricingRequest& request) {
  std::vector<double> maturities;
  maturities.reserve(request.options.size());
  for (const auto& o : request.options) maturities.push_back(o.maturity);
  PricingSettings settings{request.path_count, request.steps_per_year, request.seed, request.estimator};
  ChainPricer pricer(maturities, settings);
  return pricer.price(request.params, request.env, request.options);
}

}  // namespace roughvol
