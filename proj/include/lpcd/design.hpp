#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kernels.hpp"
#include "linalg.hpp"
#include "multi_index.hpp"
#include "quadrature.hpp"
#include "types.hpp"

namespace lpcd {

//! Nodes per axis for every model-integrated matrix in this module.
inline constexpr int kQuadratureNodes = 50;

namespace detail {

inline Eigen::VectorXd
standardized_x(const Sample& sample, int i, const EvalPoint& eval, double h)
{
  return (sample.x().row(i).transpose() - eval.x) / h;
}

//! Integration panels split at the kernel's potential kink at 0, so the
//! integrand is smooth (polynomial, for the built-in kernels) on each panel.
inline std::vector<std::pair<double, double>>
kink_panels(double lo, double hi)
{
  if (lo < 0.0 && 0.0 < hi) {
    return { { lo, 0.0 }, { 0.0, hi } };
  }
  return { { lo, hi } };
}

//! Gauss-Legendre accumulation of a vector/matrix-valued integrand over
//! [lo, hi] with the kink split.
template<typename Body>
void
for_each_node(double lo, double hi, Body&& body)
{
  if (!(lo < hi)) {
    return;
  }
  const QuadratureRule& rule = gauss_legendre(kQuadratureNodes);
  for (const auto& [a, b] : kink_panels(lo, hi)) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t node = 0; node < rule.nodes.size(); ++node) {
      body(mid + half * rule.nodes[node], half * rule.weights[node]);
    }
  }
}

} // namespace detail

//! Observations with positive kernel weight in the y-window.
inline int
effective_count_y(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config)
{
  int count = 0;
  for (int i = 0; i < sample.n(); ++i) {
    if (kernel_value(config.kernel, (sample.y()(i) - eval.y) / config.h) > 0.0) {
      ++count;
    }
  }
  return count;
}

//! Observations with positive product-kernel weight in the x-window.
inline int
effective_count_x(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config)
{
  int count = 0;
  for (int i = 0; i < sample.n(); ++i) {
    if (product_kernel_value(config.kernel, detail::standardized_x(sample, i, eval, config.h)) > 0.0) {
      ++count;
    }
  }
  return count;
}

//! S_y-hat = (nh)^-1 sum p(u_i) P(u_i)^T with u_i = (y_i - y)/h.
inline Eigen::MatrixXd
s_hat_y(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config)
{
  const int dim = config.p + 1;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < sample.n(); ++i) {
    const double u = (sample.y()(i) - eval.y) / config.h;
    const double k = kernel_value(config.kernel, u);
    if (k == 0.0) {
      continue;
    }
    const Eigen::VectorXd basis = poly_basis_1d(config.p, u);
    s.noalias() += (k)*basis * basis.transpose();
  }
  return s / (sample.n() * config.h);
}

//! c_y-hat_ell = (nh)^-1 sum (u_i^ell / ell!) P(u_i); column ell of S_y-hat
//! whenever ell <= p.
inline Eigen::VectorXd
c_hat_y(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, int ell)
{
  const int dim = config.p + 1;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < sample.n(); ++i) {
    const double u = (sample.y()(i) - eval.y) / config.h;
    const double k = kernel_value(config.kernel, u);
    if (k == 0.0) {
      continue;
    }
    double monomial = 1.0;
    for (int r = 1; r <= ell; ++r) {
      monomial *= u / static_cast<double>(r);
    }
    c.noalias() += (k * monomial) * poly_basis_1d(config.p, u);
  }
  return c / (sample.n() * config.h);
}

//! S_x-hat = (nh^d)^-1 sum q(v_i) Q(v_i)^T with v_i = (x_i - x)/h.
inline Eigen::MatrixXd
s_hat_x(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, const MultiIndexBasis& basis)
{
  const int dim = basis.size();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < sample.n(); ++i) {
    const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
    const double l = product_kernel_value(config.kernel, v);
    if (l == 0.0) {
      continue;
    }
    const Eigen::VectorXd b = basis.eval(v);
    s.noalias() += l * b * b.transpose();
  }
  return s / (sample.n() * std::pow(config.h, sample.d()));
}

inline Eigen::VectorXd
c_hat_x(const Sample& sample,
        const EvalPoint& eval,
        const EstimatorConfig& config,
        const MultiIndexBasis& basis,
        const MultiIndex& m)
{
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.size());
  for (int i = 0; i < sample.n(); ++i) {
    const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
    const double l = product_kernel_value(config.kernel, v);
    if (l == 0.0) {
      continue;
    }
    double monomial = 1.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      for (int r = 1; r <= m[k]; ++r) {
        monomial *= v(static_cast<Eigen::Index>(k)) / static_cast<double>(r);
      }
    }
    c.noalias() += (l * monomial) * basis.eval(v);
  }
  return c / (sample.n() * std::pow(config.h, sample.d()));
}

//! T_x-hat = (nh^d)^-1 sum Q(v_i) Q(v_i)^T.
inline Eigen::MatrixXd
t_hat_x(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, const MultiIndexBasis& basis)
{
  const int dim = basis.size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < sample.n(); ++i) {
    const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
    const double l = product_kernel_value(config.kernel, v);
    if (l == 0.0) {
      continue;
    }
    const Eigen::VectorXd b = basis.eval(v) * l;
    t.noalias() += b * b.transpose();
  }
  return t / (sample.n() * std::pow(config.h, sample.d()));
}

//! T_y-hat = (n^2 h^2)^-1 sum_{i,j} (u_i ^ u_j) P(u_i) P(u_j)^T over all
//! pairs; computed with sorted suffix sums instead of the double loop.
inline Eigen::MatrixXd
t_hat_y(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config)
{
  const int dim = config.p + 1;
  std::vector<std::pair<double, Eigen::VectorXd>> local;
  for (int i = 0; i < sample.n(); ++i) {
    const double u = (sample.y()(i) - eval.y) / config.h;
    const double k = kernel_value(config.kernel, u);
    if (k == 0.0) {
      continue;
    }
    local.emplace_back(u, (poly_basis_1d(config.p, u) * k).eval());
  }
  std::sort(local.begin(), local.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd suffix = Eigen::VectorXd::Zero(dim);
  for (const auto& entry : local) {
    suffix += entry.second;
  }
  for (const auto& entry : local) {
    suffix -= entry.second;
    t.noalias() += entry.first * entry.second * entry.second.transpose();
    const Eigen::MatrixXd cross = entry.first * entry.second * suffix.transpose();
    t += cross + cross.transpose();
  }
  const double n = sample.n();
  return t / (n * n * config.h * config.h);
}

//! T_y,y'-hat: cross version over pairs i != j, with the first window at y
//! and the second at y'. Integrated as written, without extra truncation.
inline Eigen::MatrixXd
t_hat_y_cross(const Sample& sample, double y, double y_prime, const EstimatorConfig& config)
{
  const int dim = config.p + 1;
  std::vector<std::pair<int, Eigen::VectorXd>> left, right;
  std::vector<double> u_left(sample.n()), u_right(sample.n());
  for (int i = 0; i < sample.n(); ++i) {
    u_left[i] = (sample.y()(i) - y) / config.h;
    u_right[i] = (sample.y()(i) - y_prime) / config.h;
    const double kl = kernel_value(config.kernel, u_left[i]);
    if (kl > 0.0) {
      left.emplace_back(i, (poly_basis_1d(config.p, u_left[i]) * kl).eval());
    }
    const double kr = kernel_value(config.kernel, u_right[i]);
    if (kr > 0.0) {
      right.emplace_back(i, (poly_basis_1d(config.p, u_right[i]) * kr).eval());
    }
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [i, pi] : left) {
    for (const auto& [j, pj] : right) {
      if (i == j) {
        continue;
      }
      t.noalias() += std::min(u_left[i], u_right[j]) * pi * pj.transpose();
    }
  }
  const double n = sample.n();
  return t / (n * n * config.h * config.h);
}

//! R-hat: the rank-conditioned double sum
//!   (n^2 h^{1+d+mu+|nu|})^-1 sum_{i,j} 1(y_i <= y_j) P(u_j) Q(v_i)^T,
//! computed as a single pass over the y-order with prefix sums of Q.
//! Tied y values are processed block-wise so each tied observation sees the
//! whole block, matching the <= indicator.
inline Eigen::MatrixXd
r_hat(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, const MultiIndexBasis& basis)
{
  const int pdim = config.p + 1;
  const int qdim = basis.size();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(pdim, qdim);
  Eigen::VectorXd prefix = Eigen::VectorXd::Zero(qdim);
  const std::vector<int>& perm = sample.sort_perm();
  std::size_t block_start = 0;
  while (block_start < perm.size()) {
    std::size_t block_end = block_start + 1;
    const double y_block = sample.y()(perm[block_start]);
    while (block_end < perm.size() && sample.y()(perm[block_end]) == y_block) {
      ++block_end;
    }
    for (std::size_t r_idx = block_start; r_idx < block_end; ++r_idx) {
      const int i = perm[r_idx];
      const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
      const double l = product_kernel_value(config.kernel, v);
      if (l > 0.0) {
        prefix.noalias() += l * basis.eval(v);
      }
    }
    for (std::size_t r_idx = block_start; r_idx < block_end; ++r_idx) {
      const int j = perm[r_idx];
      const double u = (sample.y()(j) - eval.y) / config.h;
      const double k = kernel_value(config.kernel, u);
      if (k > 0.0) {
        r.noalias() += (k)*poly_basis_1d(config.p, u) * prefix.transpose();
      }
    }
    block_start = block_end;
  }
  const double n = sample.n();
  const double scale = n * n * std::pow(config.h, 1 + sample.d() + config.mu + config.nu_abs());
  return r / scale;
}

//! Standardized integration window (support - y)/h intersected with [-1, 1].
struct Window
{
  double lo{ 0.0 };
  double hi{ 0.0 };
  bool empty() const { return !(lo < hi); }
  //! Truncated on either side: the evaluation point is near a boundary.
  bool truncated() const { return lo > -1.0 || hi < 1.0; }
};

inline Window
y_window(double y, double h, const SupportModel& support)
{
  return Window{ std::max(-1.0, (support.y_lo - y) / h), std::min(1.0, (support.y_hi - y) / h) };
}

inline std::vector<Window>
x_windows(const Eigen::VectorXd& x, double h, const SupportModel& support)
{
  std::vector<Window> windows;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    windows.push_back(Window{ std::max(-1.0, (support.x_lo(k) - x(k)) / h), std::min(1.0, (support.x_hi(k) - x(k)) / h) });
  }
  return windows;
}

//! R-bar: the local-smoothing counterpart of R-hat. With a weighting density
//! g the inner indicator integral is evaluated by quadrature over the
//! truncated window; with the empirical weighting it is the atom sum, which
//! reproduces R-hat through an independent route.
inline Eigen::MatrixXd
r_bar(const Sample& sample,
      const EvalPoint& eval,
      const EstimatorConfig& config,
      const SupportModel& support,
      const MultiIndexBasis& basis)
{
  const int pdim = config.p + 1;
  const int qdim = basis.size();
  const double n = sample.n();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(pdim, qdim);

  if (config.weighting == Weighting::empirical) {
    for (int i = 0; i < sample.n(); ++i) {
      const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
      const double l = product_kernel_value(config.kernel, v);
      if (l == 0.0) {
        continue;
      }
      Eigen::VectorXd inner = Eigen::VectorXd::Zero(pdim);
      for (int j = 0; j < sample.n(); ++j) {
        if (sample.y()(i) > sample.y()(j)) {
          continue;
        }
        const double u = (sample.y()(j) - eval.y) / config.h;
        const double k = kernel_value(config.kernel, u);
        if (k > 0.0) {
          inner.noalias() += k * poly_basis_1d(config.p, u);
        }
      }
      r.noalias() += inner * (l * basis.eval(v)).transpose();
    }
    return r / (n * n * std::pow(config.h, 1 + sample.d() + config.mu + config.nu_abs()));
  }

  const Window w = y_window(eval.y, config.h, support);
  if (w.empty()) {
    return r; // evaluation window outside the weighting support
  }
  for (int i = 0; i < sample.n(); ++i) {
    const Eigen::VectorXd v = detail::standardized_x(sample, i, eval, config.h);
    const double l = product_kernel_value(config.kernel, v);
    if (l == 0.0) {
      continue;
    }
    const double lo = std::max(w.lo, (sample.y()(i) - eval.y) / config.h);
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(pdim);
    detail::for_each_node(lo, w.hi, [&](double t, double weight) {
      const double k = kernel_value(config.kernel, t);
      if (k > 0.0) {
        inner.noalias() += (weight * k * support.g(eval.y + config.h * t)) * poly_basis_1d(config.p, t);
      }
    });
    r.noalias() += inner * (l * basis.eval(v)).transpose();
  }
  return r / (n * std::pow(config.h, sample.d() + config.mu + config.nu_abs()));
}

//! Model-integrated matrices at one evaluation point.
struct IntegratedMatrices
{
  Eigen::MatrixXd s_y;
  std::vector<Eigen::VectorXd> c_y; // c_{y,ell} for ell = 0..p+2
  Eigen::MatrixXd t_y;
  Eigen::MatrixXd s_x;
  std::vector<std::pair<MultiIndex, Eigen::VectorXd>> c_x; // |m| <= q+2
  Eigen::MatrixXd t_x;
};

inline Eigen::MatrixXd
integrated_s_y(const EvalPoint& eval, const EstimatorConfig& config, const SupportModel& support)
{
  const Window w = y_window(eval.y, config.h, support);
  if (w.empty()) {
    throw std::invalid_argument("integrated_s_y: empty window (evaluation point outside support by more than h)");
  }
  const int dim = config.p + 1;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  detail::for_each_node(w.lo, w.hi, [&](double t, double weight) {
    const double k = weight * kernel_value(config.kernel, t) * support.g(eval.y + config.h * t);
    if (k != 0.0) {
      const Eigen::VectorXd basis = poly_basis_1d(config.p, t);
      s.noalias() += k * basis * basis.transpose();
    }
  });
  return s;
}

inline Eigen::VectorXd
integrated_c_y(const EvalPoint& eval, const EstimatorConfig& config, const SupportModel& support, int ell)
{
  const Window w = y_window(eval.y, config.h, support);
  if (w.empty()) {
    throw std::invalid_argument("integrated_c_y: empty window");
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(config.p + 1);
  detail::for_each_node(w.lo, w.hi, [&](double t, double weight) {
    double k = weight * kernel_value(config.kernel, t) * support.g(eval.y + config.h * t);
    if (k == 0.0) {
      return;
    }
    for (int r = 1; r <= ell; ++r) {
      k *= t / static_cast<double>(r);
    }
    c.noalias() += k * poly_basis_1d(config.p, t);
  });
  return c;
}

//! T_y: the double integral of (t ^ v) P(t) P(v)^T g g, split at the
//! diagonal so each triangle has a smooth integrand; inner limits follow
//! the outer node.
inline Eigen::MatrixXd
integrated_t_y(const EvalPoint& eval, const EstimatorConfig& config, const SupportModel& support)
{
  const Window w = y_window(eval.y, config.h, support);
  if (w.empty()) {
    throw std::invalid_argument("integrated_t_y: empty window");
  }
  const int dim = config.p + 1;
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(dim, dim);
  detail::for_each_node(w.lo, w.hi, [&](double v, double weight_v) {
    const double kv = kernel_value(config.kernel, v) * support.g(eval.y + config.h * v);
    if (kv == 0.0) {
      return;
    }
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(dim);
    detail::for_each_node(w.lo, v, [&](double t, double weight_t) {
      const double kt = kernel_value(config.kernel, t) * support.g(eval.y + config.h * t);
      if (kt != 0.0) {
        inner.noalias() += (weight_t * t * kt) * poly_basis_1d(config.p, t);
      }
    });
    lower.noalias() += (weight_v * kv) * inner * poly_basis_1d(config.p, v).transpose();
  });
  return lower + lower.transpose();
}

namespace detail {

//! Tensor-product quadrature over the truncated x-window; d <= 3.
template<typename Body>
void
for_each_x_node(const EvalPoint& eval, const EstimatorConfig& config, const SupportModel& support, Body&& body)
{
  const int d = static_cast<int>(eval.x.size());
  if (d > 3) {
    throw std::invalid_argument("integrated x-matrices support d <= 3 (tensor quadrature)");
  }
  const std::vector<Window> windows = x_windows(eval.x, config.h, support);
  std::vector<std::vector<double>> axis_nodes(d), axis_weights(d);
  for (int k = 0; k < d; ++k) {
    if (windows[k].empty()) {
      throw std::invalid_argument("integrated x-matrix: empty window");
    }
    for_each_node(windows[k].lo, windows[k].hi, [&](double t, double w) {
      axis_nodes[k].push_back(t);
      axis_weights[k].push_back(w);
    });
  }
  std::vector<std::size_t> idx(d, 0);
  Eigen::VectorXd v(d);
  while (true) {
    double weight = 1.0;
    for (int k = 0; k < d; ++k) {
      v(k) = axis_nodes[k][idx[k]];
      weight *= axis_weights[k][idx[k]];
    }
    body(v, weight);
    int k = 0;
    while (k < d && ++idx[k] == axis_nodes[k].size()) {
      idx[k] = 0;
      ++k;
    }
    if (k == d) {
      break;
    }
  }
}

} // namespace detail

inline Eigen::MatrixXd
integrated_s_x(const EvalPoint& eval,
               const EstimatorConfig& config,
               const SupportModel& support,
               const MultiIndexBasis& basis)
{
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  detail::for_each_x_node(eval, config, support, [&](const Eigen::VectorXd& v, double weight) {
    const double l = product_kernel_value(config.kernel, v) * support.f_x(eval.x + config.h * v);
    if (l != 0.0) {
      const Eigen::VectorXd b = basis.eval(v);
      s.noalias() += (weight * l) * b * b.transpose();
    }
  });
  return s;
}

inline Eigen::VectorXd
integrated_c_x(const EvalPoint& eval,
               const EstimatorConfig& config,
               const SupportModel& support,
               const MultiIndexBasis& basis,
               const MultiIndex& m)
{
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.size());
  detail::for_each_x_node(eval, config, support, [&](const Eigen::VectorXd& v, double weight) {
    const double l = product_kernel_value(config.kernel, v) * support.f_x(eval.x + config.h * v);
    if (l != 0.0) {
      double monomial = 1.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        for (int r = 1; r <= m[k]; ++r) {
          monomial *= v(static_cast<Eigen::Index>(k)) / static_cast<double>(r);
        }
      }
      c.noalias() += (weight * l * monomial) * basis.eval(v);
    }
  });
  return c;
}

inline Eigen::MatrixXd
integrated_t_x(const EvalPoint& eval,
               const EstimatorConfig& config,
               const SupportModel& support,
               const MultiIndexBasis& basis)
{
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  detail::for_each_x_node(eval, config, support, [&](const Eigen::VectorXd& v, double weight) {
    const double l = product_kernel_value(config.kernel, v);
    const double f = support.f_x(eval.x + config.h * v);
    if (l * f != 0.0) {
      const Eigen::VectorXd b = basis.eval(v) * l;
      t.noalias() += (weight * f) * b * b.transpose();
    }
  });
  return t;
}

//! All integrated matrices needed by the bandwidth selectors, in one pass:
//! c_{y,ell} for ell <= p+2 and c_{x,m} for |m| <= q+2.
inline IntegratedMatrices
integrated_matrices(const EvalPoint& eval, const EstimatorConfig& config, const SupportModel& support)
{
  support.validate();
  IntegratedMatrices out;
  out.s_y = integrated_s_y(eval, config, support);
  for (int ell = 0; ell <= config.p + 2; ++ell) {
    out.c_y.push_back(integrated_c_y(eval, config, support, ell));
  }
  out.t_y = integrated_t_y(eval, config, support);
  const MultiIndexBasis basis(static_cast<int>(eval.x.size()), config.q);
  out.s_x = integrated_s_x(eval, config, support, basis);
  const MultiIndexBasis extended(static_cast<int>(eval.x.size()), config.q + 2);
  for (const MultiIndex& m : extended.indices()) {
    out.c_x.emplace_back(m, integrated_c_x(eval, config, support, basis, m));
  }
  out.t_x = integrated_t_x(eval, config, support, basis);
  return out;
}

//! Assembled empirical system at one evaluation point with diagnostics.
struct DesignSystem
{
  Eigen::MatrixXd s_y;
  Eigen::MatrixXd s_x;
  Eigen::MatrixXd r;
  double rcond_y{ 0.0 };
  double rcond_x{ 0.0 };
  int count_y{ 0 };
  int count_x{ 0 };
};

inline DesignSystem
build_design(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, const MultiIndexBasis& basis)
{
  DesignSystem sys;
  sys.s_y = s_hat_y(sample, eval, config);
  sys.s_x = s_hat_x(sample, eval, config, basis);
  sys.r = r_hat(sample, eval, config, basis);
  sys.count_y = effective_count_y(sample, eval, config);
  sys.count_x = effective_count_x(sample, eval, config);
  sys.rcond_y = DesignSolver(sys.s_y).rcond();
  sys.rcond_x = DesignSolver(sys.s_x).rcond();
  return sys;
}

} // namespace lpcd
