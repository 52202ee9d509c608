#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bandwidth.hpp"
#include "covariance.hpp"
#include "estimator.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace lpcd {

enum class Sided
{
  two_sided_abs,
  one_sided_sup
};

struct CriticalValue
{
  double alpha{ 0.05 };
  double value{ 0.0 };
  int draws{ 0 };
  Sided sided{ Sided::two_sided_abs };
  std::uint64_t seed{ 0 };
};

namespace detail {

//! Simulated suprema of the conditionally Gaussian process, sorted
//! ascending. The correlation is factored in a canonical grid order
//! (sorted by y, then x) so the result is invariant to grid permutation.
struct SupSimulation
{
  std::vector<double> sorted_sups;
  int draws{ 0 };
  std::uint64_t seed{ 0 };
  Sided sided{ Sided::two_sided_abs };

  //! Conservative order statistic at ceil((1 - alpha) * draws).
  double quantile(double alpha) const
  {
    const int k = static_cast<int>(std::ceil((1.0 - alpha) * draws));
    return sorted_sups[std::min(std::max(k, 1), draws) - 1];
  }

  //! Fraction of simulated suprema at or above the observed statistic.
  double p_value(double statistic) const
  {
    const auto it = std::lower_bound(sorted_sups.begin(), sorted_sups.end(), statistic);
    return static_cast<double>(sorted_sups.end() - it) / draws;
  }
};

inline SupSimulation
simulate_sups(const CovarianceSurface& surface, Sided sided, int draws, std::uint64_t seed, int threads = 0)
{
  if (draws < 1000) {
    throw std::invalid_argument("simulate_sups: need draws >= 1000");
  }
  std::vector<int> active;
  for (int g = 0; g < surface.size(); ++g) {
    if (surface.usable[g]) {
      active.push_back(g);
    }
  }
  if (active.empty()) {
    throw degenerate_design("simulate_sups: no usable grid points");
  }
  // canonical order: by y, then x coordinates, then input position
  std::sort(active.begin(), active.end(), [&](int a, int b) {
    if (surface.grid[a].y != surface.grid[b].y) {
      return surface.grid[a].y < surface.grid[b].y;
    }
    for (Eigen::Index k = 0; k < surface.grid[a].x.size(); ++k) {
      if (surface.grid[a].x(k) != surface.grid[b].x(k)) {
        return surface.grid[a].x(k) < surface.grid[b].x(k);
      }
    }
    return a < b;
  });
  const int m = static_cast<int>(active.size());
  Eigen::MatrixXd corr(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      corr(a, b) = surface.corr(active[a], active[b]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(corr);
  if (eigen.info() != Eigen::Success) {
    throw std::runtime_error("simulate_sups: eigendecomposition failed after PSD repair");
  }
  const Eigen::MatrixXd root =
    eigen.eigenvectors() * eigen.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eigen.eigenvectors().transpose();

  SupSimulation sim;
  sim.draws = draws;
  sim.seed = seed;
  sim.sided = sided;
  sim.sorted_sups.resize(static_cast<std::size_t>(draws));
  parallel_for(static_cast<std::size_t>(draws), threads, [&](std::size_t i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Eigen::VectorXd z(m);
    for (int k = 0; k < m; ++k) {
      z(k) = rng.next_normal();
    }
    const Eigen::VectorXd values = root * z;
    double sup = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      sup = std::max(sup, sided == Sided::two_sided_abs ? std::abs(values(k)) : values(k));
    }
    sim.sorted_sups[i] = sup;
  });
  std::sort(sim.sorted_sups.begin(), sim.sorted_sups.end());
  return sim;
}

} // namespace detail

//! Critical value of sup |G| (or sup G) of the centered Gaussian process
//! with the surface's repaired correlation, by simulation with a
//! counter-seeded generator; bit-reproducible for fixed (seed, draws)
//! regardless of the thread count.
inline CriticalValue
simulate_sup_cv(const CovarianceSurface& surface,
                double alpha,
                Sided sided,
                int draws,
                std::uint64_t seed,
                int threads = 0)
{
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("simulate_sup_cv: alpha must be in (0, 1)");
  }
  const CovarianceSurface* repaired = &surface;
  CovarianceSurface storage;
  if (surface.corr.rows() != surface.cov.rows()) {
    storage = to_correlation_psd(surface);
    repaired = &storage;
  }
  const detail::SupSimulation sim = detail::simulate_sups(*repaired, sided, draws, seed, threads);
  CriticalValue cv;
  cv.alpha = alpha;
  cv.value = sim.quantile(alpha);
  cv.draws = draws;
  cv.sided = sided;
  cv.seed = seed;
  return cv;
}

enum class BwMode
{
  rot,
  mse,
  imse,
  fixed
};

//! Options shared by the band and test constructions.
struct InferenceOptions
{
  int p{ 2 };                      // base order used for bandwidth selection
  int q{ -1 };                     // default p - theta - 1
  bool rbc{ true };                // estimate at order p+1 (and q+1)
  BwMode bw{ BwMode::rot };
  double h_fixed{ 0.0 };
  CovMethod method{ CovMethod::jackknife };
  double alpha{ 0.05 };
  int draws{ 3000 };
  std::uint64_t seed{ 20240923ULL };
  KernelSpec kernel{};
  int threads{ 0 };
};

struct BandResult
{
  std::vector<EvalPoint> grid;
  Eigen::VectorXd estimates;
  Eigen::VectorXd se;
  CriticalValue cv;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool rbc{ true };
  double h_used{ 0.0 };
  BandwidthResult bandwidth;
  int p_used{ 0 };
  int q_used{ 0 };
  int theta{ 0 };
  std::vector<int> dropped; // grid indices excluded from the sup
  std::vector<bool> usable;
  CovarianceSurface surface;
};

struct TestResult
{
  double statistic{ 0.0 };
  CriticalValue cv;
  bool reject{ false };
  double p_value{ 1.0 };
  Eigen::VectorXd per_point;
  BandResult fit; // underlying estimates/ses/bandwidth
};

namespace detail {

struct FitPieces
{
  EstimatorConfig base_config;
  EstimatorConfig est_config;
  BandwidthResult bandwidth;
};

inline FitPieces
resolve_fit(const Sample& sample, const std::vector<EvalPoint>& grid, int theta, const InferenceOptions& options)
{
  if (grid.empty()) {
    throw std::invalid_argument("inference: empty grid");
  }
  FitPieces pieces;
  EstimatorConfig& base = pieces.base_config;
  base.p = options.p;
  base.q = options.q >= 0 ? options.q : options.p - theta - 1;
  base.mu = 1 + theta;
  base.nu = MultiIndex(static_cast<std::size_t>(sample.d()), 0);
  base.kernel = options.kernel;
  if (base.q < 0) {
    throw std::invalid_argument("inference: p - theta - 1 < 0; raise p or pass q explicitly");
  }

  switch (options.bw) {
    case BwMode::rot:
      base.h = 1.0; // validated below; selection ignores h
      pieces.bandwidth = rot_h_grid(sample, grid, base);
      break;
    case BwMode::mse:
      base.h = 1.0;
      pieces.bandwidth =
        mse_optimal_h(grid[(grid.size() - 1) / 2], base, normal_reference(sample), sample_range_support(sample),
                      sample.n(), sample_h_min(sample, grid[(grid.size() - 1) / 2], base));
      break;
    case BwMode::imse:
      base.h = 1.0;
      pieces.bandwidth =
        imse_optimal_h(sample, grid, base, normal_reference(sample), sample_range_support(sample), sample.n());
      break;
    case BwMode::fixed:
      if (!(options.h_fixed > 0.0)) {
        throw std::invalid_argument("inference: fixed bandwidth must be positive");
      }
      pieces.bandwidth = BandwidthResult{};
      pieces.bandwidth.h = options.h_fixed;
      break;
  }
  base.h = pieces.bandwidth.h;

  pieces.est_config = base;
  if (options.rbc) {
    pieces.est_config.p = base.p + 1;
    pieces.est_config.q = base.q + 1;
  }
  return pieces;
}

//! Estimates, standard errors and the PSD-repaired surface at the
//! estimation order; grid points whose windows cannot support twice the
//! basis size are dropped with a warning entry.
inline BandResult
fit_grid(const Sample& sample, const std::vector<EvalPoint>& grid, int theta, const InferenceOptions& options)
{
  const FitPieces pieces = resolve_fit(sample, grid, theta, options);
  const EstimatorConfig& config = pieces.est_config;
  const int g_count = static_cast<int>(grid.size());
  const int min_y = 2 * (config.p + 1);
  const int min_x = 2 * basis_size(sample.d(), config.q);

  BandResult band;
  band.grid = grid;
  band.rbc = options.rbc;
  band.h_used = config.h;
  band.bandwidth = pieces.bandwidth;
  band.p_used = config.p;
  band.q_used = config.q;
  band.theta = theta;
  band.estimates = Eigen::VectorXd::Constant(g_count, std::numeric_limits<double>::quiet_NaN());
  band.usable.assign(g_count, false);

  for (int g = 0; g < g_count; ++g) {
    try {
      const EstimateResult result = estimate(sample, grid[g], config);
      if (result.count_y >= min_y && result.count_x >= min_x) {
        band.estimates(g) = result.value;
        band.usable[g] = true;
      }
    } catch (const degenerate_design&) {
      // dropped below
    }
  }

  CovarianceSurface surface = estimate_covariance(sample, grid, config, options.method);
  for (int g = 0; g < g_count; ++g) {
    band.usable[g] = band.usable[g] && surface.usable[g] && surface.var(g) > 0.0;
    surface.usable[g] = band.usable[g];
  }
  if (std::count(band.usable.begin(), band.usable.end(), true) < std::min(2, g_count)) {
    throw degenerate_design("inference: fewer than two usable grid points (zero-variance or degenerate designs)");
  }
  band.surface = to_correlation_psd(std::move(surface));
  band.se = Eigen::VectorXd::Constant(g_count, std::numeric_limits<double>::quiet_NaN());
  for (int g = 0; g < g_count; ++g) {
    if (band.usable[g]) {
      band.se(g) = std::sqrt(band.surface.var(g));
    } else {
      band.dropped.push_back(g);
    }
  }
  return band;
}

} // namespace detail

//! Point estimates with standard errors over a grid, using the same
//! bandwidth selection and covariance machinery as the bands but without a
//! critical value.
inline BandResult
estimate_grid(const Sample& sample, const std::vector<EvalPoint>& grid, int theta, const InferenceOptions& options)
{
  return detail::fit_grid(sample, grid, theta, options);
}

//! Robust bias-corrected uniform confidence band: the bandwidth is selected
//! at order p, the estimate and covariance are formed at order p+1 (q+1)
//! with that same bandwidth, and the critical value is the simulated
//! two-sided supremum of the conditionally Gaussian process. rbc = false
//! gives the same-order band for comparison.
inline BandResult
confidence_band(const Sample& sample, const std::vector<EvalPoint>& grid, int theta, const InferenceOptions& options)
{
  BandResult band = detail::fit_grid(sample, grid, theta, options);
  band.cv = simulate_sup_cv(band.surface, options.alpha, Sided::two_sided_abs, options.draws, options.seed,
                            options.threads);
  const int g_count = static_cast<int>(grid.size());
  band.lower = Eigen::VectorXd::Constant(g_count, std::numeric_limits<double>::quiet_NaN());
  band.upper = Eigen::VectorXd::Constant(g_count, std::numeric_limits<double>::quiet_NaN());
  for (int g = 0; g < g_count; ++g) {
    if (band.usable[g]) {
      band.lower(g) = band.estimates(g) - band.cv.value * band.se(g);
      band.upper(g) = band.estimates(g) + band.cv.value * band.se(g);
    }
  }
  return band;
}

namespace detail {

inline TestResult
sup_test(const Sample& sample,
         const std::vector<EvalPoint>& grid,
         int theta,
         const Eigen::VectorXd& reference_values,
         Sided sided,
         const InferenceOptions& options)
{
  if (reference_values.size() != static_cast<Eigen::Index>(grid.size())) {
    throw std::invalid_argument("test: reference values and grid have different lengths");
  }
  TestResult result;
  result.fit = fit_grid(sample, grid, theta, options);
  const int g_count = static_cast<int>(grid.size());
  result.per_point = Eigen::VectorXd::Constant(g_count, std::numeric_limits<double>::quiet_NaN());
  double statistic = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < g_count; ++g) {
    if (!result.fit.usable[g]) {
      continue;
    }
    const double t = (result.fit.estimates(g) - reference_values(g)) / result.fit.se(g);
    result.per_point(g) = t;
    statistic = std::max(statistic, sided == Sided::two_sided_abs ? std::abs(t) : t);
  }
  result.statistic = statistic;
  const SupSimulation sim = simulate_sups(result.fit.surface, sided, options.draws, options.seed, options.threads);
  result.cv.alpha = options.alpha;
  result.cv.value = sim.quantile(options.alpha);
  result.cv.draws = options.draws;
  result.cv.sided = sided;
  result.cv.seed = options.seed;
  result.reject = statistic > result.cv.value;
  result.p_value = sim.p_value(statistic);
  result.fit.cv = result.cv;
  return result;
}

} // namespace detail

//! Parametric specification test: sup |(f-hat - f(.;gamma-hat)) / se| versus
//! the two-sided simulated critical value. Fitting gamma-hat is the
//! caller's job; this takes the parametric values on the grid.
inline TestResult
spec_test(const Sample& sample,
          const std::vector<EvalPoint>& grid,
          const Eigen::VectorXd& parametric_values,
          int theta,
          const InferenceOptions& options)
{
  return detail::sup_test(sample, grid, theta, parametric_values, Sided::two_sided_abs, options);
}

//! Shape restriction test: rejects H0: f^(theta) <= c when
//! sup (f-hat - c) / se exceeds the one-sided simulated critical value.
inline TestResult
shape_test(const Sample& sample,
           const std::vector<EvalPoint>& grid,
           const Eigen::VectorXd& c_values,
           int theta,
           const InferenceOptions& options)
{
  return detail::sup_test(sample, grid, theta, c_values, Sided::one_sided_sup, options);
}

//! Studentized process on the grid: (estimate - center) / se, with
//! non-finite entries where the surface was unusable.
inline Eigen::VectorXd
t_process(const Eigen::VectorXd& estimates,
          const Eigen::VectorXd& centering,
          const Eigen::VectorXd& se,
          const std::vector<bool>& usable)
{
  if (estimates.size() != centering.size() || estimates.size() != se.size()) {
    throw std::invalid_argument("t_process: length mismatch");
  }
  Eigen::VectorXd t = Eigen::VectorXd::Constant(estimates.size(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index g = 0; g < estimates.size(); ++g) {
    if (g < static_cast<Eigen::Index>(usable.size()) && usable[g] && se(g) > 0.0) {
      t(g) = (estimates(g) - centering(g)) / se(g);
    }
  }
  return t;
}

} // namespace lpcd
