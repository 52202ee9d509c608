#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "design.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace lpcd {

//! Reference model supplying the conditional CDF derivatives
//! theta_{ell,m}(y,x) and marginal densities that the bias/variance
//! constants need. The built-in choice is the jointly normal model with
//! independent coordinates fitted by sample moments.
struct ReferenceModel
{
  std::string kind{ "user_supplied" };
  //! theta_{ell,m}: ell-th y-derivative and m-th x-partials of F(y|x).
  std::function<double(int, const MultiIndex&, double, const Eigen::VectorXd&)> theta;
  std::function<double(double)> g_y;
  std::function<double(const Eigen::VectorXd&)> f_x;
};

namespace detail {

//! Probabilists' Hermite polynomial He_k(z).
inline double
hermite(int k, double z)
{
  double prev = 1.0, current = z;
  if (k == 0) {
    return prev;
  }
  for (int j = 1; j < k; ++j) {
    const double next = z * current - j * prev;
    prev = current;
    current = next;
  }
  return current;
}

//! k-th derivative of the N(m, s^2) density at y.
inline double
normal_density_derivative(int k, double y, double m, double s)
{
  const double z = (y - m) / s;
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * hermite(k, z) * normal_pdf(z) / std::pow(s, k + 1);
}

} // namespace detail

//! Jointly normal, independent reference fitted by sample moments. Under
//! independence every x-partial of F(y|x) vanishes, so only the y-side
//! derivatives survive; those are Hermite-polynomial derivatives of the
//! fitted normal density.
inline ReferenceModel
normal_reference(const Sample& sample)
{
  const int n = sample.n();
  const double mean_y = sample.y().mean();
  double var_y = 0.0;
  for (int i = 0; i < n; ++i) {
    var_y += (sample.y()(i) - mean_y) * (sample.y()(i) - mean_y);
  }
  var_y /= std::max(1, n - 1);
  const double sd_y = std::sqrt(var_y);
  Eigen::VectorXd mean_x = sample.x().colwise().mean().transpose();
  Eigen::VectorXd sd_x(sample.d());
  for (int k = 0; k < sample.d(); ++k) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = sample.x()(i, k) - mean_x(k);
      v += c * c;
    }
    sd_x(k) = std::sqrt(v / std::max(1, n - 1));
  }
  if (!(sd_y > 0.0) || !(sd_x.minCoeff() > 0.0)) {
    throw std::invalid_argument("normal_reference: degenerate sample moments");
  }

  ReferenceModel model;
  model.kind = "normal_independent";
  model.theta = [mean_y, sd_y](int ell, const MultiIndex& m, double y, const Eigen::VectorXd&) {
    if (total_degree(m) > 0) {
      return 0.0; // independence: F(y|x) does not vary with x
    }
    if (ell == 0) {
      return normal_cdf((y - mean_y) / sd_y);
    }
    return detail::normal_density_derivative(ell - 1, y, mean_y, sd_y);
  };
  model.g_y = [mean_y, sd_y](double y) { return normal_pdf((y - mean_y) / sd_y) / sd_y; };
  model.f_x = [mean_x, sd_x](const Eigen::VectorXd& x) {
    double value = 1.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      value *= normal_pdf((x(k) - mean_x(k)) / sd_x(k)) / sd_x(k);
    }
    return value;
  };
  return model;
}

//! Leading and higher-order bias constants plus the leading variance
//! constant at one evaluation point.
struct BiasVarianceConstants
{
  double b_i_q1{ 0.0 };   // sum_{|m|=q+1} theta_{mu,m} c_{x,m}^T S_x^-1 e_nu
  double b_ii_p1{ 0.0 };  // theta_{p+1,nu} c_{y,p+1}^T S_y^-1 e_mu
  double b_i_q2{ 0.0 };   // next-order x term
  double b_ii_p2{ 0.0 };  // next-order y term
  double b_iii{ 0.0 };    // cross term, present only when mu = p, |nu| = q
  double v{ 0.0 };        // leading variance constant (mu >= 1 branch)
  int case_id{ 0 };
  bool y_boundary{ false };
  bool x_boundary{ false };
};

//! Case dispatch from SA bandwidth selection. A coordinate counts as
//! boundary when the probe window truncates at the support.
inline int
classify_case(int p, int q, int mu, int nu_abs, bool y_boundary, bool x_boundary)
{
  const int dx = q - nu_abs;
  const int dy = p - mu;
  if (dx < 0 || dy < 0) {
    throw std::invalid_argument("classify_case: need |nu| <= q and mu <= p");
  }
  const bool dx_odd = (dx % 2) == 1;
  const bool dy_odd = (dy % 2) == 1;
  if (dx == dy) {
    if (dx_odd) {
      return 1;
    }
    if (y_boundary || x_boundary) {
      return 2;
    }
    return dx == 0 ? 4 : 3;
  }
  if (dx < dy) {
    if (dx_odd || x_boundary) {
      return 5;
    }
    return (dx + 1 == dy) ? 6 : 7;
  }
  if (dy_odd || y_boundary) {
    return 8;
  }
  return (dy + 1 == dx) ? 9 : 10;
}

namespace detail {

//! Bias-squared exponent beta for each case; the variance exponent is
//! gamma = d + 2|nu| + 2mu - 1 and h* = [gamma V / (beta B^2 n)]^(1/(gamma+beta)).
inline int
bias_exponent(int case_id, int p, int q, int mu, int nu_abs)
{
  switch (case_id) {
    case 1:
    case 2:
      return p + q + 2 - mu - nu_abs;
    case 3:
      return p + q + 4 - mu - nu_abs;
    case 4:
      return 4;
    case 5:
      return 2 * q + 2 - 2 * nu_abs;
    case 6:
      return p + q + 3 - mu - nu_abs;
    case 7:
      return 2 * q + 4 - 2 * nu_abs;
    case 8:
      return 2 * p + 2 - 2 * mu;
    case 9:
      return p + q + 3 - mu - nu_abs;
    case 10:
      return 2 * p + 4 - 2 * mu;
    default:
      throw std::invalid_argument("bias_exponent: unknown case");
  }
}

inline double
bias_total(int case_id, const BiasVarianceConstants& constants)
{
  switch (case_id) {
    case 1:
    case 2:
      return constants.b_i_q1 + constants.b_ii_p1;
    case 3:
      return constants.b_i_q2 + constants.b_ii_p2;
    case 4:
      return constants.b_i_q2 + constants.b_ii_p2 + constants.b_iii;
    case 5:
      return constants.b_i_q1;
    case 6:
      return constants.b_i_q2 + constants.b_ii_p1;
    case 7:
      return constants.b_i_q2;
    case 8:
      return constants.b_ii_p1;
    case 9:
      return constants.b_i_q1 + constants.b_ii_p2;
    case 10:
      return constants.b_ii_p2;
    default:
      throw std::invalid_argument("bias_total: unknown case");
  }
}

} // namespace detail

//! Evaluate every bias/variance constant with model-integrated matrices over
//! the (possibly truncated) standardized windows at config.h.
inline BiasVarianceConstants
bias_variance_constants(const EvalPoint& eval,
                        const EstimatorConfig& config,
                        const ReferenceModel& reference,
                        const SupportModel& support)
{
  if (config.mu < 1) {
    throw std::invalid_argument("bias_variance_constants: mu = 0 variance branch is not available");
  }
  SupportModel with_reference = support;
  with_reference.g = reference.g_y;
  with_reference.f_x = reference.f_x;
  const IntegratedMatrices mats = integrated_matrices(eval, config, with_reference);

  const int d = static_cast<int>(eval.x.size());
  const MultiIndexBasis basis(d, config.q);
  const MultiIndex nu = config.nu_or_zero(d);
  const DesignSolver solver_y(mats.s_y);
  const DesignSolver solver_x(mats.s_x);
  const Eigen::VectorXd zy = solver_y.solve(unit_vector(config.p + 1, config.mu));
  const Eigen::VectorXd zx = solver_x.solve(unit_vector(basis.size(), basis.position(nu)));

  BiasVarianceConstants constants;
  for (const auto& [m, c_x] : mats.c_x) {
    const int deg = total_degree(m);
    if (deg == config.q + 1) {
      constants.b_i_q1 += reference.theta(config.mu, m, eval.y, eval.x) * c_x.dot(zx);
      constants.b_iii += reference.theta(config.p + 1, m, eval.y, eval.x) * c_x.dot(zx);
    } else if (deg == config.q + 2) {
      constants.b_i_q2 += reference.theta(config.mu, m, eval.y, eval.x) * c_x.dot(zx);
    }
  }
  constants.b_ii_p1 = reference.theta(config.p + 1, nu, eval.y, eval.x) * mats.c_y[config.p + 1].dot(zy);
  constants.b_ii_p2 = reference.theta(config.p + 2, nu, eval.y, eval.x) * mats.c_y[config.p + 2].dot(zy);
  // cross term only enters when mu = p and |nu| = q
  if (config.mu == config.p && config.nu_abs() == config.q) {
    constants.b_iii *= mats.c_y[config.p + 1].dot(zy);
  } else {
    constants.b_iii = 0.0;
  }
  const MultiIndex zero_nu(static_cast<std::size_t>(d), 0);
  constants.v = reference.theta(1, zero_nu, eval.y, eval.x) * zy.dot(mats.t_y * zy) * zx.dot(mats.t_x * zx);
  return constants;
}

struct BandwidthResult
{
  double h{ 0.0 };
  int case_id{ 0 };
  BiasVarianceConstants constants;
  bool clamped{ false };
  double h_unclamped{ 0.0 };
  double h_probe{ 0.0 };
  double h_min{ 0.0 };
  double h_max{ 0.0 };
};

//! The dispatched case's closed form evaluated on given constants:
//! h* = [gamma V / (beta B^2 n)]^(1/(gamma+beta)) with
//! gamma = d + 2|nu| + 2mu - 1 and the case's bias exponent beta.
double
case_optimal_h(int case_id, const BiasVarianceConstants& constants, const EstimatorConfig& config, int d, double n);

//! Exponents of the case's MSE terms: variance h^-gamma / n and bias^2 h^beta.
inline std::pair<int, int>
case_exponents(int case_id, const EstimatorConfig& config, int d)
{
  const int gamma = d + 2 * config.nu_abs() + 2 * config.mu - 1;
  const int beta = detail::bias_exponent(case_id, config.p, config.q, config.mu, config.nu_abs());
  return { gamma, beta };
}

namespace detail {

inline double
case_formula(int case_id, const BiasVarianceConstants& constants, const EstimatorConfig& config, int d, double n)
{
  const int gamma = d + 2 * config.nu_abs() + 2 * config.mu - 1;
  const int beta = bias_exponent(case_id, config.p, config.q, config.mu, config.nu_abs());
  const double b = bias_total(case_id, constants);
  if (b == 0.0 || !std::isfinite(b)) {
    throw std::invalid_argument("bandwidth: zero leading bias constant after case dispatch; "
                                "use a higher-order case (change p or q) or supply h manually");
  }
  return std::pow(gamma * constants.v / (beta * b * b * n), 1.0 / (gamma + beta));
}

//! Stage-1 constants: untruncated window with densities frozen at the
//! evaluation point, which makes the matrices bandwidth-free interior
//! limits.
inline BiasVarianceConstants
interior_constants(const EvalPoint& eval, EstimatorConfig config, const ReferenceModel& reference)
{
  SupportModel wide;
  wide.y_lo = eval.y - 2.0;
  wide.y_hi = eval.y + 2.0;
  wide.x_lo = eval.x.array() - 2.0;
  wide.x_hi = eval.x.array() + 2.0;
  const double g_frozen = reference.g_y(eval.y);
  const double f_frozen = reference.f_x(eval.x);
  ReferenceModel frozen = reference;
  frozen.g_y = [g_frozen](double) { return g_frozen; };
  frozen.f_x = [f_frozen](const Eigen::VectorXd&) { return f_frozen; };
  config.h = 1.0;
  return bias_variance_constants(eval, config, frozen, wide);
}

} // namespace detail

inline double
case_optimal_h(int case_id, const BiasVarianceConstants& constants, const EstimatorConfig& config, int d, double n)
{
  return detail::case_formula(case_id, constants, config, d, n);
}

//! MSE-optimal bandwidth: probe with the interior-dispatched closed form,
//! re-classify boundary status from the probe window, recompute the
//! constants over the truncated windows, and apply the dispatched case's
//! closed form once. Clamps to [h_min, h_max] and records everything.
inline BandwidthResult
mse_optimal_h(const EvalPoint& eval,
              EstimatorConfig config,
              const ReferenceModel& reference,
              const SupportModel& support,
              double n,
              double h_min = 0.0,
              double h_max = 0.0)
{
  const int d = static_cast<int>(eval.x.size());
  if (h_max <= 0.0) {
    double range = support.y_hi - support.y_lo;
    for (Eigen::Index k = 0; k < support.x_lo.size(); ++k) {
      range = std::max(range, support.x_hi(k) - support.x_lo(k));
    }
    h_max = 0.5 * range;
  }

  BandwidthResult result;
  result.h_min = h_min;
  result.h_max = h_max;

  // stage 1: interior probe
  const BiasVarianceConstants probe_constants = detail::interior_constants(eval, config, reference);
  const int probe_case = classify_case(config.p, config.q, config.mu, config.nu_abs(), false, false);
  double h_probe;
  try {
    h_probe = detail::case_formula(probe_case, probe_constants, config, d, n);
  } catch (const std::invalid_argument&) {
    h_probe = h_max; // degenerate interior bias; classify at the widest window
  }
  h_probe = std::min(std::max(h_probe, std::max(h_min, 1e-8)), h_max);
  result.h_probe = h_probe;

  // stage 2: boundary-aware dispatch at the probe window
  const bool y_boundary = y_window(eval.y, h_probe, support).truncated();
  bool x_boundary = false;
  for (const Window& w : x_windows(eval.x, h_probe, support)) {
    x_boundary = x_boundary || w.truncated();
  }
  EstimatorConfig stage2 = config;
  stage2.h = h_probe;
  result.constants = bias_variance_constants(eval, stage2, reference, support);
  result.case_id = classify_case(config.p, config.q, config.mu, config.nu_abs(), y_boundary, x_boundary);
  result.constants.case_id = result.case_id;
  result.constants.y_boundary = y_boundary;
  result.constants.x_boundary = x_boundary;

  result.h_unclamped = detail::case_formula(result.case_id, result.constants, config, d, n);
  result.h = std::min(std::max(result.h_unclamped, h_min), h_max);
  result.clamped = result.h != result.h_unclamped;
  return result;
}

namespace detail {

//! Smallest h that puts at least `needed` observations inside the window.
inline double
kth_distance(std::vector<double> distances, int needed)
{
  if (needed <= 0) {
    return 0.0;
  }
  if (static_cast<int>(distances.size()) < needed) {
    return std::numeric_limits<double>::infinity();
  }
  std::nth_element(distances.begin(), distances.begin() + (needed - 1), distances.end());
  return distances[needed - 1];
}

} // namespace detail

//! Data-driven h_min: the smallest bandwidth leaving twice the basis size
//! inside each kernel window at the evaluation point.
inline double
sample_h_min(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config)
{
  std::vector<double> dist_y(static_cast<std::size_t>(sample.n()));
  std::vector<double> dist_x(static_cast<std::size_t>(sample.n()));
  for (int i = 0; i < sample.n(); ++i) {
    dist_y[i] = std::abs(sample.y()(i) - eval.y);
    dist_x[i] = (sample.x().row(i).transpose() - eval.x).cwiseAbs().maxCoeff();
  }
  const int need_y = 2 * (config.p + 1);
  const int need_x = 2 * basis_size(sample.d(), config.q);
  const double h = std::max(detail::kth_distance(std::move(dist_y), need_y),
                            detail::kth_distance(std::move(dist_x), need_x));
  return h * (1.0 + 1e-9); // strictly positive kernel weight at the k-th point
}

//! Rule-of-thumb bandwidth: normal-independent reference fitted by sample
//! moments over the sample-range support, dispatched through the Case 1/2
//! closed form. Requires p - mu = q - |nu| odd.
inline BandwidthResult
rot_h(const Sample& sample, const EvalPoint& eval, EstimatorConfig config)
{
  const int dx = config.q - config.nu_abs();
  const int dy = config.p - config.mu;
  if (dx != dy || dx % 2 != 1) {
    throw std::invalid_argument("rot_h: needs p - mu = q - |nu| odd "
                                "(adjust the polynomial orders or use the mse/imse selector)");
  }
  if (sample.d() > 3) {
    throw std::invalid_argument("rot_h: d <= 3 (tensor quadrature)");
  }
  const ReferenceModel reference = normal_reference(sample);
  const SupportModel support = sample_range_support(sample);
  const double h_min = sample_h_min(sample, eval, config);
  return mse_optimal_h(eval, config, reference, support, sample.n(), h_min);
}

//! IMSE-optimal bandwidth over a grid: integrates the squared leading bias
//! and the variance constant with trapezoid weights and minimizes the
//! two-term expansion, h = [(1+2t+d) Int V / ((2p-2t) n Int B^2)]^(1/(1+d+2p))
//! with t = mu - 1.
inline BandwidthResult
imse_optimal_h(const Sample& sample,
               const std::vector<EvalPoint>& grid,
               EstimatorConfig config,
               const ReferenceModel& reference,
               const SupportModel& support,
               double n)
{
  if (grid.empty()) {
    throw std::invalid_argument("imse_optimal_h: empty grid");
  }
  const int d = sample.d();
  const int theta = config.mu - 1;
  if (theta < 0) {
    throw std::invalid_argument("imse_optimal_h: needs mu >= 1");
  }

  // trapezoid weights along y when the grid shares one x; else uniform
  std::vector<double> weights(grid.size(), 1.0);
  bool common_x = true;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    common_x = common_x && grid[g].x == grid[0].x;
  }
  if (common_x && grid.size() > 1) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double lo = g == 0 ? grid[0].y : grid[g - 1].y;
      const double hi = g + 1 == grid.size() ? grid[g].y : grid[g + 1].y;
      weights[g] = 0.5 * std::abs(hi - lo);
    }
  }

  double int_b2 = 0.0, int_v = 0.0, h_probe = 0.0, h_min = 0.0;
  BiasVarianceConstants last;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const BiasVarianceConstants probe = detail::interior_constants(grid[g], config, reference);
    const int probe_case = classify_case(config.p, config.q, config.mu, config.nu_abs(), false, false);
    double hp;
    try {
      // window calibration always uses the data's own size, so the returned
      // bandwidth is exactly homogeneous in the n argument
      hp = detail::case_formula(probe_case, probe, config, d, sample.n());
    } catch (const std::invalid_argument&) {
      hp = 0.5 * (support.y_hi - support.y_lo);
    }
    hp = std::min(hp, 0.5 * (support.y_hi - support.y_lo));
    EstimatorConfig stage2 = config;
    stage2.h = std::max(hp, 1e-8);
    const BiasVarianceConstants constants = bias_variance_constants(grid[g], stage2, reference, support);
    const double b = constants.b_i_q1 + constants.b_ii_p1;
    int_b2 += weights[g] * b * b;
    int_v += weights[g] * constants.v;
    h_probe = std::max(h_probe, hp);
    h_min = std::max(h_min, sample_h_min(sample, grid[g], config));
    last = constants;
  }
  if (!(int_b2 > 0.0)) {
    throw std::invalid_argument("imse_optimal_h: integrated squared bias is zero");
  }

  BandwidthResult result;
  result.case_id = classify_case(config.p, config.q, config.mu, config.nu_abs(), false, false);
  result.constants = last;
  result.h_probe = h_probe;
  result.h_min = h_min;
  double range = support.y_hi - support.y_lo;
  for (Eigen::Index k = 0; k < support.x_lo.size(); ++k) {
    range = std::max(range, support.x_hi(k) - support.x_lo(k));
  }
  result.h_max = 0.5 * range;
  result.h_unclamped =
    std::pow((1 + 2 * theta + d) * int_v / ((2 * config.p - 2 * theta) * n * int_b2), 1.0 / (1 + d + 2 * config.p));
  result.h = std::min(std::max(result.h_unclamped, result.h_min), result.h_max);
  result.clamped = result.h != result.h_unclamped;
  return result;
}

//! Study-level rule of thumb for a whole grid: the median over grid points
//! of the interior-dispatched (probe) selections. The median is robust to
//! points where the reference bias constant changes sign, and the interior
//! constants keep edge points from inflating the shared bandwidth; the
//! boundary-aware refinement stays available through the pointwise rot_h.
inline BandwidthResult
rot_h_grid(const Sample& sample, const std::vector<EvalPoint>& grid, const EstimatorConfig& config)
{
  if (grid.empty()) {
    throw std::invalid_argument("rot_h_grid: empty grid");
  }
  std::vector<BandwidthResult> results;
  std::vector<double> hs;
  for (const EvalPoint& pt : grid) {
    results.push_back(rot_h(sample, pt, config));
    hs.push_back(results.back().h_probe);
  }
  std::vector<double> sorted = hs;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];
  for (std::size_t g = 0; g < results.size(); ++g) {
    if (hs[g] == median) {
      BandwidthResult chosen = results[g];
      chosen.h = median;
      chosen.clamped = false;
      return chosen;
    }
  }
  return results[0];
}

} // namespace lpcd
