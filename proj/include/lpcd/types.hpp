#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kernels.hpp"
#include "multi_index.hpp"

namespace lpcd {

//! Observed data, with the ascending-in-y permutation cached once; the
//! rank-conditioned double sums in the design module walk this order.
class Sample
{
public:
  Sample(Eigen::VectorXd y, Eigen::MatrixXd x)
    : y_(std::move(y))
    , x_(std::move(x))
  {
    if (y_.size() < 1) {
      throw std::invalid_argument("Sample: need n >= 1");
    }
    if (x_.rows() != y_.size() || x_.cols() < 1) {
      throw std::invalid_argument("Sample: x must be n x d with d >= 1");
    }
    if (!y_.allFinite() || !x_.allFinite()) {
      throw std::invalid_argument("Sample: entries must be finite");
    }
    sort_perm_.resize(static_cast<std::size_t>(y_.size()));
    std::iota(sort_perm_.begin(), sort_perm_.end(), 0);
    std::sort(sort_perm_.begin(), sort_perm_.end(), [this](int a, int b) {
      return y_(a) < y_(b) || (y_(a) == y_(b) && a < b);
    });
  }

  int n() const { return static_cast<int>(y_.size()); }
  int d() const { return static_cast<int>(x_.cols()); }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<int>& sort_perm() const { return sort_perm_; }

  //! Exact ties in y. The prefix-sum rank uses <= semantics, so tied
  //! observations each receive the whole tied block.
  bool has_ties_in_y() const
  {
    for (std::size_t r = 1; r < sort_perm_.size(); ++r) {
      if (y_(sort_perm_[r]) == y_(sort_perm_[r - 1])) {
        return true;
      }
    }
    return false;
  }

private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
  std::vector<int> sort_perm_;
};

struct EvalPoint
{
  double y{ 0.0 };
  Eigen::VectorXd x;
};

inline EvalPoint
make_eval(double y, double x)
{
  EvalPoint pt;
  pt.y = y;
  pt.x = Eigen::VectorXd::Constant(1, x);
  return pt;
}

//! How the y-direction smoothing is weighted: the regression estimator uses
//! the empirical measure; the local-smoothing variant integrates against a
//! model G with density g.
enum class Weighting
{
  empirical,
  integrated
};

//! The knob set every operation reads.
struct EstimatorConfig
{
  int p{ 2 };                  // y polynomial order
  int q{ 1 };                  // x polynomial order
  int mu{ 1 };                 // y derivative order (density: 1 + theta)
  MultiIndex nu{};             // x derivative multi-index; empty = zero
  double h{ 0.0 };             // bandwidth, same in y and x
  KernelSpec kernel{};
  Weighting weighting{ Weighting::empirical };

  MultiIndex nu_or_zero(int d) const
  {
    if (nu.empty()) {
      return MultiIndex(static_cast<std::size_t>(d), 0);
    }
    return nu;
  }

  int nu_abs() const { return nu.empty() ? 0 : total_degree(nu); }

  void validate(int d) const
  {
    if (p < 0 || q < 0) {
      throw std::invalid_argument("config: polynomial orders must be nonnegative");
    }
    if (mu < 0 || mu > p) {
      throw std::invalid_argument("config: need 0 <= mu <= p");
    }
    if (!nu.empty() && static_cast<int>(nu.size()) != d) {
      throw std::invalid_argument("config: nu dimension mismatch");
    }
    if (nu_abs() > q) {
      throw std::invalid_argument("config: need |nu| <= q");
    }
    if (!(h > 0.0)) {
      throw std::invalid_argument("config: bandwidth must be positive");
    }
  }
};

//! Known or assumed support with marginal density callbacks; used only by
//! the model-integrated matrices. The estimator itself never reads it.
struct SupportModel
{
  double y_lo{ 0.0 };
  double y_hi{ 1.0 };
  Eigen::VectorXd x_lo;
  Eigen::VectorXd x_hi;
  std::function<double(double)> g;                        // y weighting/marginal density
  std::function<double(const Eigen::VectorXd&)> f_x;      // x marginal density

  void validate() const
  {
    if (!(y_lo < y_hi)) {
      throw std::invalid_argument("support: need y_lo < y_hi");
    }
    if (x_lo.size() != x_hi.size()) {
      throw std::invalid_argument("support: x bounds dimension mismatch");
    }
    for (Eigen::Index k = 0; k < x_lo.size(); ++k) {
      if (!(x_lo(k) < x_hi(k))) {
        throw std::invalid_argument("support: degenerate x box edge");
      }
    }
  }
};

//! Support spanning the sample range with unit weights; the pragmatic
//! default when no support model is supplied.
inline SupportModel
sample_range_support(const Sample& sample)
{
  SupportModel support;
  support.y_lo = sample.y().minCoeff();
  support.y_hi = sample.y().maxCoeff();
  support.x_lo = sample.x().colwise().minCoeff().transpose();
  support.x_hi = sample.x().colwise().maxCoeff().transpose();
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };
  return support;
}

} // namespace lpcd
