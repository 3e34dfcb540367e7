#pragma once

// Tabular and Markdown renderings of calibration and bootstrap outputs.

#include "roughvol/bootstrap.hpp"
#include "roughvol/market_data.hpp"
#include "roughvol/stat_tests.hpp"

#include <span>
#include <string>

namespace roughvol {

// strike,maturity,market,price_hat,bre,v
std::string per_option_csv(const OptionStructure& structure, const BootstrapReport& report);

// index,sigma0,rho,H,xi,alpha,aare,arfv
std::string theta_samples_csv(const BootstrapReport& report);

// parameter,D,p,reject_5pct
std::string sensitivity_csv(const SensitivityResult& result);

struct RobustnessRow {
  std::string label;
  const BootstrapReport* report = nullptr;
};

// BootARE range/IQR/std (percentage points) and relative IQR avg/max of the
// calibrated coefficients, one row per model.
std::string robustness_table_markdown(std::span<const RobustnessRow> rows);

// Full Markdown summary of one bootstrap report.
std::string report_markdown(const std::string& label, const BootstrapReport& report,
                            const SensitivityResult* sensitivity = nullptr);

}  // namespace roughvol
