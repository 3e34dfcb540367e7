#include "roughvol/reports.hpp"

#include "roughvol/errors.hpp"

#include <fmt/format.h>

namespace roughvol {

std::string per_option_csv(const OptionStructure& structure, const BootstrapReport& report) {
  if (report.bre.size() != structure.size()) throw InvalidInput("report and chain sizes differ");
  std::string out = "strike,maturity,market,price_hat,bre,v\n";
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const auto& q = structure.quotes[i];
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", q.strike, q.maturity, q.close,
                       report.price_hat[i], report.bre[i], report.v[i]);
  }
  return out;
}

std::string theta_samples_csv(const BootstrapReport& report) {
  std::string out = "index,sigma0,rho,H,xi,alpha,aare,arfv\n";
  for (std::size_t j = 0; j < report.theta_samples.size(); ++j) {
    const auto& t = report.theta_samples[j];
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", j, t[0], t[1], t[2], t[3], t[4],
                       report.aare[j], report.arfv[j]);
  }
  return out;
}

std::string sensitivity_csv(const SensitivityResult& result) {
  std::string out = "parameter,D,p,reject_5pct\n";
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    out += fmt::format("{},{:.17g},{:.17g},{}\n", ModelParams::kNames[k], result.tests[k].statistic,
                       result.tests[k].p_value, result.tests[k].p_value < 0.05 ? "yes" : "no");
  }
  return out;
}

std::string robustness_table_markdown(std::span<const RobustnessRow> rows) {
  std::string out =
      "|          | BootARE Range | BootARE IQR | BootARE Std | Rel IQR Avg | Rel IQR Max |\n"
      "|----------|--------------:|------------:|------------:|------------:|------------:|\n";
  for (const auto& row : rows) {
    const auto& r = *row.report;
    out += fmt::format("| {} | {:.3f} | {:.3f} | {:.3f} | {:.2E} | {:.2E} |\n", row.label, 100.0 * r.boot_are_range,
                       100.0 * r.boot_are_iqr, 100.0 * r.boot_are_std, r.rel_iqr_avg, r.rel_iqr_max);
  }
  return out;
}

std::string report_markdown(const std::string& label, const BootstrapReport& report,
                            const SensitivityResult* sensitivity) {
  std::string out = fmt::format("# Robustness summary: {}\n\n", label);
  out += fmt::format("Bootcalibrations: {}\n\n", report.sample_count);

  out += "## Robustness\n\nBootARE columns are in percentage points.\n\n";
  const RobustnessRow row{label, &report};
  out += robustness_table_markdown(std::span(&row, 1));

  out += "\n## Coefficients\n\n| Coefficient | Bootstrap mean | Rel IQR | Calibrated |\n|---|--:|--:|:-:|\n";
  const auto hat = report.theta_hat.to_array();
  for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
    out += fmt::format("| {} | {:.6f} | {:.3E} | {} |\n", ModelParams::kNames[k], hat[k], report.rel_iqr[k],
                       report.free_parameter[k] ? "yes" : "no");
  }

  if (sensitivity) {
    out += fmt::format(
        "\n## Sensitivity (KS, best 3/8 vs worst 3/8 by ARFV; groups {}/{}/{})\n\n"
        "| Coefficient | D | p-value | Reject at {:g}% |\n|---|--:|--:|:-:|\n",
        sensitivity->grouping.group_i.size(), sensitivity->grouping.group_ii.size(),
        sensitivity->grouping.group_iii.size(), 100.0 * sensitivity->alpha_level);
    for (std::size_t k = 0; k < ModelParams::kSize; ++k) {
      out += fmt::format("| {} | {:.4f} | {:.4f} | {} |\n", ModelParams::kNames[k], sensitivity->tests[k].statistic,
                         sensitivity->tests[k].p_value, sensitivity->reject[k] ? "yes" : "no");
    }
  }
  return out;
}

}  // namespace roughvol
