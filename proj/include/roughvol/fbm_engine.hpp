#pragma once

// Exact joint simulation of fractional Brownian motion B^H and the Wiener
// process W that drives it through the Molchan-Golosov kernel.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace roughvol {

// Simulation times in years. t = 0 is never stored: every process starts at 0
// there and including it would make the covariance singular.
struct TimeGrid {
  std::vector<double> times;
  int steps_per_year = 0;
  double horizon = 0.0;

  // Regular nodes k / steps_per_year strictly below the largest maturity,
  // merged with the maturities themselves (each exactly once). A regular node
  // closer than 1% of a step to a maturity is dropped in favour of it.
  static TimeGrid with_maturities(std::span<const double> maturities, int steps_per_year);

  // Validates and wraps an explicit list of times.
  static TimeGrid from_times(std::vector<double> times, int steps_per_year = 0);

  std::size_t size() const { return times.size(); }
  double dt(std::size_t k) const { return k == 0 ? times[0] : times[k] - times[k - 1]; }

  // Exact lookup (relative tolerance 1e-12).
  std::optional<std::size_t> find(double t) const;
  // Same, throwing InvalidInput when t is not a grid node.
  std::size_t index_of(double t) const;

  void validate() const;
  bool operator==(const TimeGrid&) const = default;
};

// r(t, s) = E[B^H_t B^H_s] = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2.
double fbm_autocovariance(double t, double s, double hurst);

// Normalizing constant C_H of the Molchan-Golosov kernel.
double molchan_constant(double hurst);

// E[B^H_t W_s] = \int_0^{min(t,s)} K_H(t, u) du.
//
// Evaluated through the incomplete-beta reduction of the kernel integral:
//   C_H t^{H+1/2} / (H+1/2) * [B(x; 3/2-H, H+1/2) - (H-1/2) x^{H+1/2} J(x)],
//   x = min(s,t)/t,  J(x) = \int_x^1 v^{-2H} (1-v)^{H-1/2} dv.
// J is closed form for H < 1/2; for H > 1/2 it is integrated numerically and
// `tol` bounds the absolute error (QuadratureError otherwise).
double fbm_wiener_cross_covariance(double t, double s, double hurst, double tol = 1e-10);

struct FactorDiagnostics {
  double jitter = 0.0;  // absolute diagonal shift that was applied
  int jitter_steps = 0;
};

// Lower Cholesky factor of a symmetric PSD matrix. On failure, retries with a
// diagonal shift of 1e-14, 1e-13, ..., 1e-10 times the largest diagonal entry
// of `scale_reference` (or of `cov` when it is empty) before giving up with a
// FactorizationError carrying the smallest eigenvalue.
Eigen::MatrixXd factorize_covariance(const Eigen::MatrixXd& cov, FactorDiagnostics* diagnostics = nullptr,
                                     double jitter_scale = 0.0);

// Covariance of (W_{t_1..t_n}, B^H_{t_1..t_n}) and its Cholesky factor.
//
// With W ordered first the factor has the block form
//   [ L_W  0  ]
//   [ A    L_c]
// where L_W is the Brownian cumulative-sum factor, A = Cov(B^H, W) L_W^{-T} and
// L_c factors the conditional covariance of B^H given the W grid values. Only
// A and L_c are stored. Immutable after construction.
class JointCovariance {
 public:
  static JointCovariance build(const TimeGrid& grid, double hurst, double tol = 1e-10);

  const TimeGrid& grid() const { return grid_; }
  double hurst() const { return hurst_; }
  std::size_t size() const { return grid_.size(); }
  const FactorDiagnostics& diagnostics() const { return diagnostics_; }

  // Dense 2n x 2n matrices in (W, B^H) ordering.
  Eigen::MatrixXd sigma_matrix() const;
  Eigen::MatrixXd cholesky_factor() const;

  // z holds 2n x b independent standard normals (rows [0, n) drive W).
  // Produces W and B^H at the grid times, one path per column.
  void transform(const Eigen::MatrixXd& z, Eigen::MatrixXd& w, Eigen::MatrixXd& fbm) const;
  // B^H part of transform() only.
  void fbm_from(const Eigen::MatrixXd& z, Eigen::MatrixXd& fbm) const;

  // Debug dump of sigma.csv and cholesky.csv into `dir`.
  void write_csv(const std::filesystem::path& dir) const;

 private:
  TimeGrid grid_;
  double hurst_ = 0.5;
  Eigen::VectorXd sqrt_dt_;
  Eigen::MatrixXd cross_cov_;  // Cov(B^H_{t_i}, W_{t_j})
  Eigen::MatrixXd cross_factor_;
  Eigen::MatrixXd cond_factor_;
  FactorDiagnostics diagnostics_;
};

// Paths are simulated in fixed-size blocks, each with its own RNG stream, so
// results do not depend on how blocks are spread over threads.
inline constexpr std::size_t kPathBlock = 256;

enum class NormalStream : std::uint64_t { joint = 1, w_tilde = 2 };

std::size_t block_count(std::size_t path_count);
std::size_t block_size(std::size_t path_count, std::size_t block);

// rows x cols standard normals for one block of one stream.
Eigen::MatrixXd block_normals(std::uint64_t seed, NormalStream stream, std::size_t block, Eigen::Index rows,
                              Eigen::Index cols);

// One row per path.
struct PathBundle {
  TimeGrid grid;
  Eigen::MatrixXd fbm_paths;
  Eigen::MatrixXd w_paths;
  Eigen::MatrixXd w_tilde_increments;  // already scaled by sqrt(dt)
  std::uint64_t seed = 0;
  std::size_t path_count = 0;
};

PathBundle sample_paths(const JointCovariance& cov, std::size_t path_count, std::uint64_t seed);

}  // namespace roughvol
