#pragma once

// Option-chain ingestion, representation and calibration weights.
//
// Chain CSV (header required, column order fixed):
//   trade_date,expiry_date,strike,bid,ask,close,volume
// Dates are ISO (YYYY-MM-DD); volume may be empty. A JSON sidecar carries
//   {"spot": ..., "rate": ..., "day_count": "ACT/365"}.

#include "roughvol/alpha_rfsv.hpp"
#include "roughvol/mc_pricer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace roughvol {

enum class WeightRule { inv_spread_sq, inv_spread_abs, inv_spread_sqrt };

std::string to_string(WeightRule rule);
WeightRule weight_rule_from_string(const std::string& name);

struct OptionQuote {
  std::string expiry_date;
  double strike = 0.0;
  double maturity = 0.0;  // years from the trade date
  double bid = 0.0;
  double ask = 0.0;
  double close = 0.0;  // market price used for calibration
  std::optional<std::int64_t> volume;

  double spread() const { return ask - bid; }
};

struct OptionStructure {
  std::vector<OptionQuote> quotes;
  MarketEnv env;
  std::string trade_date;
  std::string day_count = "ACT/365";
  WeightRule weight_rule = WeightRule::inv_spread_sq;
  std::vector<double> weights;

  std::size_t size() const { return quotes.size(); }
  std::vector<OptionSpec> option_specs() const;
  std::vector<double> maturities() const;
  std::vector<double> market_prices() const;
};

struct MarketSidecar {
  MarketEnv env;
  std::string day_count = "ACT/365";
};

MarketSidecar load_market_sidecar(const std::filesystem::path& path);
void write_market_sidecar(const MarketSidecar& sidecar, const std::filesystem::path& path);

// Days between two ISO dates.
long days_between(const std::string& from, const std::string& to);
std::string add_days(const std::string& date, long days);
double year_fraction(const std::string& from, const std::string& to, const std::string& day_count = "ACT/365");

// Parses, validates and weights a chain. Row order is preserved. Violations
// raise ChainFormatError naming the first offending data row and listing all.
OptionStructure load_chain(const std::filesystem::path& csv, const MarketSidecar& sidecar,
                           WeightRule rule = WeightRule::inv_spread_sq);
OptionStructure load_chain(const std::filesystem::path& csv, const std::filesystem::path& sidecar,
                           WeightRule rule = WeightRule::inv_spread_sq);

std::string chain_to_csv(const OptionStructure& structure);
void write_chain(const OptionStructure& structure, const std::filesystem::path& csv);

// g(spread) per rule. Rows whose spread is not positive get the 99th
// percentile of the finite weights (1.0 when there are none) and a warning.
std::vector<double> compute_weights(const OptionStructure& structure, WeightRule rule);

}  // namespace roughvol
