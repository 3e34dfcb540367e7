#include "roughvol/fbm_engine.hpp"

#include "roughvol/errors.hpp"
#include "roughvol/parallel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace roughvol {

namespace {

void check_hurst(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError(fmt::format("Hurst index {} outside (0,1)", hurst));
}

// \int_0^x K_H(1, u) du / C_H for x in [0, 1].
double unit_cross(double x, double hurst, double tol) {
  if (x <= 0.0) return 0.0;
  const double p = 1.5 - hurst;
  const double q = hurst + 0.5;
  const double bx = boost::math::beta(p, q, x);
  double j = 0.0;
  if (hurst < 0.5) {
    j = boost::math::betac(1.0 - 2.0 * hurst, q, x);
  } else if (x < 1.0) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    double err = 0.0;
    j = integrator.integrate([&](double v) { return std::pow(v, -2.0 * hurst) * std::pow(1.0 - v, hurst - 0.5); },
                             x, 1.0, 1e-13, &err);
    if (!(err <= tol * std::max(1.0, std::abs(j)))) {
      throw QuadratureError(fmt::format("cross-covariance quadrature did not converge (error estimate {:.3e})", err),
                            err);
    }
  }
  return (bx - (hurst - 0.5) * std::pow(x, q) * j) / q;
}

double max_diagonal(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.diagonal().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid TimeGrid::with_maturities(std::span<const double> maturities, int steps_per_year) {
  if (maturities.empty()) throw InvalidInput("time grid needs at least one maturity");
  if (steps_per_year <= 0) throw InvalidInput("steps_per_year must be positive");
  std::vector<double> mats(maturities.begin(), maturities.end());
  for (double m : mats) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput(fmt::format("maturity {} must be positive", m));
  }
  std::sort(mats.begin(), mats.end());
  mats.erase(std::unique(mats.begin(), mats.end()), mats.end());

  const double step = 1.0 / steps_per_year;
  const double t_max = mats.back();
  std::vector<double> times;
  std::size_t m = 0;
  for (long k = 1;; ++k) {
    const double node = static_cast<double>(k) / steps_per_year;
    if (node >= t_max - 0.01 * step) break;
    while (m < mats.size() && mats[m] <= node + 0.01 * step) {
      times.push_back(mats[m]);
      ++m;
    }
    if (!times.empty() && std::abs(times.back() - node) < 0.01 * step) continue;
    times.push_back(node);
  }
  for (; m < mats.size(); ++m) times.push_back(mats[m]);
  return from_times(std::move(times), steps_per_year);
}

TimeGrid TimeGrid::from_times(std::vector<double> times, int steps_per_year) {
  TimeGrid grid;
  grid.times = std::move(times);
  grid.steps_per_year = steps_per_year;
  grid.horizon = grid.times.empty() ? 0.0 : grid.times.back();
  grid.validate();
  return grid;
}

void TimeGrid::validate() const {
  if (times.empty()) throw InvalidInput("time grid is empty");
  if (!(times.front() > 0.0)) throw InvalidInput("time grid must start after t = 0");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidInput("time grid must be strictly increasing");
  }
  if (horizon != times.back()) throw InvalidInput("grid horizon must equal the last grid time");
}

std::optional<std::size_t> TimeGrid::find(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t * (1.0 - 1e-12));
  if (it != times.end() && std::abs(*it - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
    return static_cast<std::size_t>(it - times.begin());
  }
  return std::nullopt;
}

std::size_t TimeGrid::index_of(double t) const {
  if (auto k = find(t)) return *k;
  throw InvalidInput(fmt::format("maturity {} is not a node of the simulation grid", t));
}

// ---------------------------------------------------------------------------
// Covariance functions

double fbm_autocovariance(double t, double s, double hurst) {
  check_hurst(hurst);
  if (t < 0.0 || s < 0.0) throw DomainError("fbm_autocovariance: times must be non-negative");
  const double h2 = 2.0 * hurst;
  if (t == s) return std::pow(t, h2);
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

double molchan_constant(double hurst) {
  check_hurst(hurst);
  using boost::math::tgamma;
  return std::sqrt(2.0 * hurst * tgamma(1.5 - hurst) / (tgamma(hurst + 0.5) * tgamma(2.0 - 2.0 * hurst)));
}

double fbm_wiener_cross_covariance(double t, double s, double hurst, double tol) {
  check_hurst(hurst);
  if (t < 0.0 || s < 0.0) throw DomainError("fbm_wiener_cross_covariance: times must be non-negative");
  if (!(tol > 0.0)) throw DomainError("fbm_wiener_cross_covariance: tol must be positive");
  if (t == 0.0 || s == 0.0) return 0.0;
  if (hurst == 0.5) return std::min(t, s);
  const double x = std::min(s, t) / t;
  return molchan_constant(hurst) * std::pow(t, hurst + 0.5) * unit_cross(x, hurst, tol);
}

// ---------------------------------------------------------------------------
// Factorization

Eigen::MatrixXd factorize_covariance(const Eigen::MatrixXd& cov, FactorDiagnostics* diagnostics,
                                     double jitter_scale) {
  if (cov.rows() != cov.cols()) throw InvalidInput("covariance must be square");
  FactorDiagnostics diag;
  const double scale = jitter_scale > 0.0 ? jitter_scale : std::max(max_diagonal(cov), 1.0e-300);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  double shift = 1e-14;
  while (llt.info() != Eigen::Success) {
    if (diag.jitter_steps == 5) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
      const double min_eig = eig.eigenvalues().minCoeff();
      throw FactorizationError(
          fmt::format("covariance factorization failed after maximum jitter; smallest eigenvalue {:.6e}", min_eig),
          min_eig);
    }
    ++diag.jitter_steps;
    diag.jitter = shift * scale;
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += diag.jitter;
    llt.compute(shifted);
    shift *= 10.0;
  }
  if (diagnostics) *diagnostics = diag;
  return llt.matrixL();
}

// ---------------------------------------------------------------------------
// JointCovariance

JointCovariance JointCovariance::build(const TimeGrid& grid, double hurst, double tol) {
  check_hurst(hurst);
  grid.validate();
  JointCovariance jc;
  jc.grid_ = grid;
  jc.hurst_ = hurst;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto& t = grid.times;

  jc.sqrt_dt_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) jc.sqrt_dt_(k) = std::sqrt(grid.dt(static_cast<std::size_t>(k)));

  // Cov(B^H_{t_i}, W_{t_j}) depends on t_j only through min(t_i, t_j).
  jc.cross_cov_.resize(n, n);
  const double c_h = molchan_constant(hurst);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    const double ti = t[row];
    const double scale = hurst == 0.5 ? 1.0 : c_h * std::pow(ti, hurst + 0.5);
    for (Eigen::Index j = 0; j < i; ++j) {
      jc.cross_cov_(i, j) = hurst == 0.5 ? t[j] : scale * unit_cross(t[j] / ti, hurst, tol);
    }
    const double diag = hurst == 0.5 ? ti : scale * unit_cross(1.0, hurst, tol);
    for (Eigen::Index j = i; j < n; ++j) jc.cross_cov_(i, j) = diag;
  });

  jc.cross_factor_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = 0.0;
    for (Eigen::Index k = 0; k <= i; ++k) {
      jc.cross_factor_(i, k) = (jc.cross_cov_(i, k) - prev) / jc.sqrt_dt_(k);
      prev = jc.cross_cov_(i, k);
    }
  }

  Eigen::MatrixXd cond(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cond(i, j) = fbm_autocovariance(t[i], t[j], hurst);
      cond(j, i) = cond(i, j);
    }
  }
  cond.triangularView<Eigen::Lower>() -=
      jc.cross_factor_.triangularView<Eigen::Lower>() * jc.cross_factor_.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) cond(j, i) = cond(i, j);
  }

  const double jitter_scale = std::max(t.back(), std::pow(t.back(), 2.0 * hurst));
  jc.cond_factor_ = factorize_covariance(cond, &jc.diagnostics_, jitter_scale);
  return jc;
}

Eigen::MatrixXd JointCovariance::sigma_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  const auto& t = grid_.times;
  Eigen::MatrixXd sigma(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sigma(i, j) = std::min(t[i], t[j]);
      sigma(n + i, n + j) = fbm_autocovariance(t[i], t[j], hurst_);
      sigma(n + i, j) = cross_cov_(i, j);
      sigma(j, n + i) = cross_cov_(i, j);
    }
  }
  return sigma;
}

Eigen::MatrixXd JointCovariance::cholesky_factor() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k <= i; ++k) l(i, k) = sqrt_dt_(k);
  }
  l.bottomLeftCorner(n, n) = cross_factor_;
  l.bottomRightCorner(n, n) = cond_factor_;
  return l;
}

void JointCovariance::transform(const Eigen::MatrixXd& z, Eigen::MatrixXd& w, Eigen::MatrixXd& fbm) const {
  const auto n = static_cast<Eigen::Index>(size());
  if (z.rows() != 2 * n) throw InvalidInput("transform: normal draws have the wrong number of rows");
  const Eigen::Index cols = z.cols();
  w.resize(n, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      acc += sqrt_dt_(k) * z(k, c);
      w(k, c) = acc;
    }
  }
  fbm_from(z, fbm);
}

void JointCovariance::fbm_from(const Eigen::MatrixXd& z, Eigen::MatrixXd& fbm) const {
  const auto n = static_cast<Eigen::Index>(size());
  if (z.rows() != 2 * n) throw InvalidInput("fbm_from: normal draws have the wrong number of rows");
  fbm.noalias() = cross_factor_.triangularView<Eigen::Lower>() * z.topRows(n);
  fbm.noalias() += cond_factor_.triangularView<Eigen::Lower>() * z.bottomRows(n);
}

void JointCovariance::write_csv(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto dump = [](const std::filesystem::path& file, const Eigen::MatrixXd& m) {
    std::ofstream out(file);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt::format("{:.17g}", m(i, j));
      out << '\n';
    }
  };
  dump(dir / "sigma.csv", sigma_matrix());
  dump(dir / "cholesky.csv", cholesky_factor());
}

// ---------------------------------------------------------------------------
// Sampling

std::size_t block_count(std::size_t path_count) { return (path_count + kPathBlock - 1) / kPathBlock; }

std::size_t block_size(std::size_t path_count, std::size_t block) {
  return std::min(kPathBlock, path_count - block * kPathBlock);
}

Eigen::MatrixXd block_normals(std::uint64_t seed, NormalStream stream, std::size_t block, Eigen::Index rows,
                              Eigen::Index cols) {
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(stream), block));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(rows, cols);
  double* data = z.data();
  for (Eigen::Index i = 0; i < z.size(); ++i) data[i] = normal(rng);
  return z;
}

PathBundle sample_paths(const JointCovariance& cov, std::size_t path_count, std::uint64_t seed) {
  if (path_count == 0) throw InvalidInput("path_count must be at least 1");
  const auto n = static_cast<Eigen::Index>(cov.size());
  PathBundle bundle;
  bundle.grid = cov.grid();
  bundle.seed = seed;
  bundle.path_count = path_count;
  const auto rows = static_cast<Eigen::Index>(path_count);
  bundle.fbm_paths.resize(rows, n);
  bundle.w_paths.resize(rows, n);
  bundle.w_tilde_increments.resize(rows, n);

  Eigen::VectorXd sqrt_dt(n);
  for (Eigen::Index k = 0; k < n; ++k) sqrt_dt(k) = std::sqrt(cov.grid().dt(static_cast<std::size_t>(k)));

  parallel_for(block_count(path_count), [&](std::size_t b) {
    const auto cols = static_cast<Eigen::Index>(block_size(path_count, b));
    const auto first = static_cast<Eigen::Index>(b * kPathBlock);
    Eigen::MatrixXd w, fbm;
    cov.transform(block_normals(seed, NormalStream::joint, b, 2 * n, cols), w, fbm);
    Eigen::MatrixXd wt = block_normals(seed, NormalStream::w_tilde, b, n, cols);
    wt.array().colwise() *= sqrt_dt.array();
    bundle.fbm_paths.middleRows(first, cols) = fbm.transpose();
    bundle.w_paths.middleRows(first, cols) = w.transpose();
    bundle.w_tilde_increments.middleRows(first, cols) = wt.transpose();
  });
  return bundle;
}

}  // namespace roughvol
