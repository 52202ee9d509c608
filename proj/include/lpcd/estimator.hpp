#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "design.hpp"
#include "linalg.hpp"
#include "types.hpp"

namespace lpcd {

//! Point estimate with the diagnostics downstream consumers act on.
struct EstimateResult
{
  double value{ 0.0 };
  std::optional<double> se;
  double h_used{ 0.0 };
  int p{ 0 };
  int q{ 0 };
  int mu{ 0 };
  MultiIndex nu;
  double rcond_y{ 0.0 };
  double rcond_x{ 0.0 };
  int count_y{ 0 };  // observations with positive kernel weight in y
  int count_x{ 0 };  // observations with positive kernel weight in x
};

namespace detail {

inline void
fill_meta(EstimateResult& result, const EstimatorConfig& config, int d)
{
  result.h_used = config.h;
  result.p = config.p;
  result.q = config.q;
  result.mu = config.mu;
  result.nu = config.nu_or_zero(d);
}

inline void
require_counts(const DesignSystem& sys, int pdim, int qdim)
{
  if (sys.count_y < pdim || sys.count_x < qdim) {
    throw degenerate_design("kernel window holds fewer observations than the basis size (y: " +
                            std::to_string(sys.count_y) + "/" + std::to_string(pdim) + ", x: " +
                            std::to_string(sys.count_x) + "/" + std::to_string(qdim) + ")");
  }
}

} // namespace detail

//! theta-hat_{mu,nu}(y,x) = e_mu^T S_y-hat^-1 R-hat S_x-hat^-1 e_nu.
//! Equals the nested weighted-least-squares construction exactly: an inner
//! local polynomial regression of the indicators on the x-basis, followed by
//! a local polynomial regression of the fitted CDF values in y.
inline EstimateResult
estimate(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config)
{
  config.validate(sample.d());
  const MultiIndexBasis basis(sample.d(), config.q);
  const DesignSystem sys = build_design(sample, eval, config, basis);
  detail::require_counts(sys, config.p + 1, basis.size());

  const DesignSolver solver_y(sys.s_y);
  const DesignSolver solver_x(sys.s_x);
  const Eigen::VectorXd zy = solver_y.solve(unit_vector(config.p + 1, config.mu));
  const Eigen::VectorXd zx = solver_x.solve(unit_vector(basis.size(), basis.position(config.nu_or_zero(sample.d()))));

  EstimateResult result;
  result.value = zy.dot(sys.r * zx);
  detail::fill_meta(result, config, sample.d());
  result.rcond_y = solver_y.rcond();
  result.rcond_x = solver_x.rcond();
  result.count_y = sys.count_y;
  result.count_x = sys.count_x;
  return result;
}

//! f-hat^(theta)(y|x): the density (derivative) case mu = 1 + theta, nu = 0,
//! with the default q = p - theta - 1 when q is left negative.
inline EstimateResult
estimate_density(const Sample& sample, const EvalPoint& eval, int theta, EstimatorConfig config)
{
  if (theta < 0 || config.p < 1 + theta) {
    throw std::invalid_argument("estimate_density: need theta >= 0 and p >= 1 + theta");
  }
  config.mu = 1 + theta;
  config.nu = MultiIndex(static_cast<std::size_t>(sample.d()), 0);
  if (config.q < 0) {
    config.q = config.p - theta - 1;
  }
  return estimate(sample, eval, config);
}

//! F-hat(y|x): local polynomial regression of 1(y_i <= y) on the x-basis.
//! The raw projection is returned; it is not clipped to [0, 1] because the
//! covariance plug-in uses the unclipped value. Pass clip = true to clip.
inline EstimateResult
estimate_cdf(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, bool clip = false)
{
  if (config.q < 0 || !(config.h > 0.0)) {
    throw std::invalid_argument("estimate_cdf: need q >= 0 and h > 0");
  }
  const MultiIndexBasis basis(sample.d(), config.q);
  const Eigen::MatrixXd s_x = s_hat_x(sample, eval, config, basis);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.size());
  int count_x = 0;
  for (int i = 0; i < sample.n(); ++i) {
    const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
    const double l = product_kernel_value(config.kernel, v);
    if (l == 0.0) {
      continue;
    }
    ++count_x;
    if (sample.y()(i) <= eval.y) {
      rhs.noalias() += l * basis.eval(v);
    }
  }
  rhs /= sample.n() * std::pow(config.h, sample.d());
  if (count_x < basis.size()) {
    throw degenerate_design("estimate_cdf: kernel window holds fewer observations than the basis size");
  }
  const DesignSolver solver_x(s_x);
  EstimateResult result;
  result.value = solver_x.solve(unit_vector(basis.size(), 0)).dot(rhs);
  if (clip) {
    result.value = std::min(1.0, std::max(0.0, result.value));
  }
  detail::fill_meta(result, config, sample.d());
  result.mu = 0;
  result.rcond_x = solver_x.rcond();
  result.count_x = count_x;
  result.count_y = sample.n();
  return result;
}

//! theta-check: local smoothing in y against a weighting model G, using the
//! model-integrated S_y and R-bar. With the empirical weighting this
//! reproduces estimate() exactly.
inline EstimateResult
check_estimate(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, const SupportModel& support)
{
  config.validate(sample.d());
  const MultiIndexBasis basis(sample.d(), config.q);

  Eigen::MatrixXd s_y;
  if (config.weighting == Weighting::empirical) {
    s_y = s_hat_y(sample, eval, config);
  } else {
    s_y = integrated_s_y(eval, config, support);
  }
  const Eigen::MatrixXd s_x = s_hat_x(sample, eval, config, basis);
  const Eigen::MatrixXd r = r_bar(sample, eval, config, support, basis);

  EstimateResult result;
  detail::fill_meta(result, config, sample.d());
  result.count_y = effective_count_y(sample, eval, config);
  result.count_x = effective_count_x(sample, eval, config);

  const DesignSolver solver_y(s_y);
  const DesignSolver solver_x(s_x);
  result.rcond_y = solver_y.rcond();
  result.rcond_x = solver_x.rcond();
  if (!solver_y.usable() || !solver_x.usable() || result.count_x < basis.size()) {
    throw degenerate_design("check_estimate: degenerate design at the evaluation point");
  }
  const Eigen::VectorXd zy = solver_y.solve(unit_vector(config.p + 1, config.mu));
  const Eigen::VectorXd zx = solver_x.solve(unit_vector(basis.size(), basis.position(config.nu_or_zero(sample.d()))));
  result.value = zy.dot(r * zx);
  return result;
}

//! F-hat_y(y) = n^-1 sum 1(y_i <= y).
inline double
empirical_cdf_y(const Sample& sample, double y)
{
  int count = 0;
  for (int i = 0; i < sample.n(); ++i) {
    if (sample.y()(i) <= y) {
      ++count;
    }
  }
  return static_cast<double>(count) / sample.n();
}

} // namespace lpcd
