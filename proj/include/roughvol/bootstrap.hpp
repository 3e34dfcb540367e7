#pragma once

// Bootstrap of option structures: resampling, bootcalibrations and the
// robustness statistics built from them.

#include "roughvol/calibrator.hpp"
#include "roughvol/market_data.hpp"
#include "roughvol/stat_tests.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace roughvol {

struct BootstrapPlan {
  std::size_t sample_count = 200;
  std::uint64_t base_seed = 0;
  CalibrationConfig config;

  void validate() const;
};

// Indices are 0-based positions into the original chain.
struct BootSample {
  std::vector<std::size_t> indices;
  OptionStructure structure;
};

BootSample make_boot_sample(const OptionStructure& structure, std::vector<std::size_t> indices);
// N indices drawn uniformly with replacement.
BootSample bootstrap_structure(const OptionStructure& structure, std::uint64_t seed);

// Seeds of bootcalibration j: one for the resampling, one for the frozen paths.
std::uint64_t boot_sample_seed(std::uint64_t base_seed, std::size_t j);
std::uint64_t boot_pricing_seed(std::uint64_t base_seed, std::size_t j);

struct Bootcalibration {
  std::size_t index = 0;
  ModelParams theta;
  double objective = 0.0;              // on the resampled chain
  std::vector<double> original_prices;  // theta priced on the original chain
  FitMetrics original_metrics;
  std::size_t iterations = 0;
};

struct BootcalibrationRun {
  std::vector<Bootcalibration> results;  // successful ones, in index order
  std::vector<std::size_t> failed;
  std::vector<std::string> failure_messages;
};

// Local refinement only, starting from the overall calibration. Each sample
// gets its own frozen path set on the grid of the original chain.
BootcalibrationRun run_bootcalibrations(const OptionStructure& structure, const ModelParams& overall_theta,
                                        const BootstrapPlan& plan);

struct BootstrapReport {
  std::size_t sample_count = 0;
  std::vector<ThetaSample> theta_samples;
  std::vector<double> arfv;  // per bootcalibration, on the original chain
  std::vector<double> aare;  // same, the boot-AREs
  ModelParams theta_hat;
  std::vector<double> price_hat;
  std::vector<double> bre;
  std::vector<double> v;
  std::array<double, ModelParams::kSize> rel_iqr{};
  std::array<bool, ModelParams::kSize> free_parameter{true, true, true, true, true};
  double rel_iqr_avg = 0.0;
  double rel_iqr_max = 0.0;
  double boot_are_range = 0.0;
  double boot_are_iqr = 0.0;
  double boot_are_std = 0.0;
};

// Relative IQR = IQR / |mean| (0 when both vanish).
double relative_iqr(std::span<const double> sample);

// `free_parameter` restricts the relative-IQR aggregates to calibrated components.
BootstrapReport bootstrap_statistics(std::span<const Bootcalibration> results, const OptionStructure& structure,
                                     std::array<bool, ModelParams::kSize> free_parameter = {true, true, true, true,
                                                                                             true});

// Long-format CSV with columns block,param_x,param_y,x,y,value:
//   hist rows:   x = bin lower edge, y = bin upper edge, value = count
//   pair rows:   x, y = paired estimates, value = sample index
//   marker rows: theta_hat / overall per parameter in x.
// Histograms use Freedman-Diaconis bins (Sturges when the IQR is 0).
std::string export_scatter_matrix(std::span<const ThetaSample> theta_samples, const ModelParams& theta_hat,
                                  const ModelParams& overall_theta);

// Number of histogram bins chosen for a sample.
std::size_t histogram_bins(std::span<const double> sample);

}  // namespace roughvol
