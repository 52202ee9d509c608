#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "design.hpp"
#include "estimator.hpp"
#include "linalg.hpp"
#include "types.hpp"

namespace lpcd {

enum class CovMethod
{
  plugin,
  jackknife,
  asymptotic
};

inline std::string
cov_method_name(CovMethod method)
{
  switch (method) {
    case CovMethod::plugin:
      return "plugin";
    case CovMethod::jackknife:
      return "jackknife";
    case CovMethod::asymptotic:
      return "asymptotic";
  }
  return "unknown";
}

inline CovMethod
cov_method_from_name(const std::string& name)
{
  if (name == "plugin") {
    return CovMethod::plugin;
  }
  if (name == "jackknife") {
    return CovMethod::jackknife;
  }
  if (name == "asymptotic") {
    return CovMethod::asymptotic;
  }
  throw std::invalid_argument("unknown covariance method: " + name);
}

//! Estimated covariance of the estimator over an evaluation grid.
//! `usable` marks grid points whose design was non-degenerate; unusable
//! rows/columns hold zeros (identity on the correlation diagonal) and are
//! skipped by the simulation downstream.
struct CovarianceSurface
{
  std::vector<EvalPoint> grid;
  Eigen::MatrixXd cov;
  Eigen::VectorXd var;
  Eigen::MatrixXd corr;
  double psd_jitter{ 0.0 };
  CovMethod method{ CovMethod::jackknife };
  std::vector<bool> usable;

  int size() const { return static_cast<int>(grid.size()); }
  int usable_count() const { return static_cast<int>(std::count(usable.begin(), usable.end(), true)); }
};

namespace detail {

struct GridSolves
{
  std::vector<Eigen::VectorXd> zy; // S_y-hat^-1 e_mu per grid point
  std::vector<Eigen::VectorXd> zx; // S_x-hat^-1 e_nu per grid point
  std::vector<bool> usable;
};

inline GridSolves
solve_grid_designs(const Sample& sample,
                   const std::vector<EvalPoint>& grid,
                   const EstimatorConfig& config,
                   const MultiIndexBasis& basis)
{
  GridSolves out;
  const int nu_pos = basis.position(config.nu_or_zero(sample.d()));
  for (const EvalPoint& pt : grid) {
    const Eigen::MatrixXd sy = s_hat_y(sample, pt, config);
    const Eigen::MatrixXd sx = s_hat_x(sample, pt, config, basis);
    const DesignSolver solver_y(sy);
    const DesignSolver solver_x(sx);
    const bool ok = solver_y.usable() && solver_x.usable() &&
                    effective_count_y(sample, pt, config) >= config.p + 1 &&
                    effective_count_x(sample, pt, config) >= basis.size();
    out.usable.push_back(ok);
    if (ok) {
      out.zy.push_back(solver_y.solve(unit_vector(config.p + 1, config.mu)));
      out.zx.push_back(solver_x.solve(unit_vector(basis.size(), nu_pos)));
    } else {
      out.zy.emplace_back(Eigen::VectorXd::Zero(config.p + 1));
      out.zx.emplace_back(Eigen::VectorXd::Zero(basis.size()));
    }
  }
  return out;
}

//! A single-point grid may stand alone; larger grids need at least two
//! usable points to carry any covariance information.
inline void
require_two_usable(const std::vector<bool>& usable)
{
  const auto count = std::count(usable.begin(), usable.end(), true);
  const auto needed = std::min<std::ptrdiff_t>(2, static_cast<std::ptrdiff_t>(usable.size()));
  if (count < needed) {
    throw degenerate_design("covariance: fewer than " + std::to_string(needed) + " usable grid points");
  }
}

//! F-hat(y_j | x_i) for all needed pairs, evaluated with the same orders and
//! bandwidth as the main fit. Falls back to the local constant fit when the
//! window around x_i cannot support the full basis.
class ConditionalCdfTable
{
public:
  ConditionalCdfTable(const Sample& sample,
                      const EstimatorConfig& config,
                      const MultiIndexBasis& basis,
                      const std::vector<int>& i_index,  // conditioning observations
                      const std::vector<int>& j_index)  // CDF evaluation observations
    : values_(i_index.size(), std::vector<double>(j_index.size(), 0.0))
  {
    const int n = sample.n();
    const double hd = std::pow(config.h, sample.d());
    std::vector<int> j_slot(n, -1);
    for (std::size_t s = 0; s < j_index.size(); ++s) {
      j_slot[j_index[s]] = static_cast<int>(s);
    }
    const std::vector<int>& perm = sample.sort_perm();
    for (std::size_t a = 0; a < i_index.size(); ++a) {
      const int i = i_index[a];
      const Eigen::VectorXd x_i = sample.x().row(i).transpose();
      // weights and basis values around x_i
      Eigen::MatrixXd s_x = Eigen::MatrixXd::Zero(basis.size(), basis.size());
      std::vector<double> l_of(n, 0.0);
      std::vector<Eigen::VectorXd> lb_of(n);
      int window_count = 0;
      double total_weight = 0.0;
      for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd v = (sample.x().row(k).transpose() - x_i) / config.h;
        const double l = product_kernel_value(config.kernel, v);
        if (l == 0.0) {
          continue;
        }
        const Eigen::VectorXd b = basis.eval(v);
        s_x.noalias() += l * b * b.transpose();
        l_of[k] = l;
        lb_of[k] = l * b;
        ++window_count;
        total_weight += l;
      }
      s_x /= n * hd;
      Eigen::VectorXd alpha;
      bool constant_fit = false;
      const DesignSolver solver(s_x);
      if (solver.usable() && window_count >= basis.size()) {
        alpha = solver.solve(unit_vector(basis.size(), 0));
      } else {
        constant_fit = true; // weighted empirical CDF within the window
      }
      // walk the y-order once; record the prefix at each tie block end
      Eigen::VectorXd prefix = Eigen::VectorXd::Zero(basis.size());
      double prefix_weight = 0.0;
      std::size_t block_start = 0;
      while (block_start < perm.size()) {
        std::size_t block_end = block_start + 1;
        const double y_block = sample.y()(perm[block_start]);
        while (block_end < perm.size() && sample.y()(perm[block_end]) == y_block) {
          ++block_end;
        }
        for (std::size_t r = block_start; r < block_end; ++r) {
          const int k = perm[r];
          if (l_of[k] > 0.0) {
            prefix.noalias() += lb_of[k];
            prefix_weight += l_of[k];
          }
        }
        for (std::size_t r = block_start; r < block_end; ++r) {
          const int slot = j_slot[perm[r]];
          if (slot >= 0) {
            values_[a][slot] = constant_fit ? (total_weight > 0.0 ? prefix_weight / total_weight : 0.0)
                                            : alpha.dot(prefix) / (n * hd);
          }
        }
        block_start = block_end;
      }
    }
  }

  double operator()(std::size_t i_slot, std::size_t j_slot) const { return values_[i_slot][j_slot]; }

private:
  std::vector<std::vector<double>> values_;
};

inline CovarianceSurface
finish_surface(CovarianceSurface surface)
{
  surface.cov = 0.5 * (surface.cov + surface.cov.transpose()).eval();
  return surface;
}

} // namespace detail

//! Plug-in covariance: C-hat(g, g') = n^-2 sum_i K-hat-circ_i(g) K-hat-circ_i(g')
//! with the estimated equivalent kernel
//!   K-hat-circ(a, b; y, x) = h^{-(mu+|nu|)} e_mu^T S_y-hat^-1
//!     [ n^-1 sum_j (1(a <= y_j) - F-hat(y_j|b)) h^-1 P((y_j-y)/h) ]
//!     h^-d Q((b-x)/h)^T S_x-hat^-1 e_nu.
//! Inner sums run over kernel windows only; the cost is
//! O(G n_local(y) (n_local(x) + cost of F-hat)) with the conditional CDF
//! values shared across grid points.
inline CovarianceSurface
plugin_covariance(const Sample& sample, const std::vector<EvalPoint>& grid, const EstimatorConfig& config)
{
  config.validate(sample.d());
  const MultiIndexBasis basis(sample.d(), config.q);
  const int n = sample.n();
  const int g_count = static_cast<int>(grid.size());
  const double h = config.h;
  const double hd = std::pow(h, sample.d());

  detail::GridSolves solves = detail::solve_grid_designs(sample, grid, config, basis);
  detail::require_two_usable(solves.usable);

  // union windows across the grid
  std::vector<char> in_i(n, 0), in_j(n, 0);
  std::vector<std::vector<std::pair<int, double>>> x_weight(g_count); // (obs, h^-d Q^T zx)
  for (int g = 0; g < g_count; ++g) {
    if (!solves.usable[g]) {
      continue;
    }
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd v = (sample.x().row(i).transpose() - grid[g].x) / h;
      const double l = product_kernel_value(config.kernel, v);
      if (l > 0.0) {
        in_i[i] = 1;
        x_weight[g].emplace_back(i, l * basis.eval(v).dot(solves.zx[g]) / hd);
      }
    }
    for (int j = 0; j < n; ++j) {
      if (kernel_value(config.kernel, (sample.y()(j) - grid[g].y) / h) > 0.0) {
        in_j[j] = 1;
      }
    }
  }
  std::vector<int> i_index, j_index;
  std::vector<int> i_slot(n, -1), j_slot(n, -1);
  for (int i = 0; i < n; ++i) {
    if (in_i[i]) {
      i_slot[i] = static_cast<int>(i_index.size());
      i_index.push_back(i);
    }
    if (in_j[i]) {
      j_slot[i] = static_cast<int>(j_index.size());
      j_index.push_back(i);
    }
  }

  const detail::ConditionalCdfTable fhat(sample, config, basis, i_index, j_index);

  // influence values K-hat-circ_i(g) for i in the union window
  Eigen::MatrixXd influence = Eigen::MatrixXd::Zero(static_cast<int>(i_index.size()), g_count);
  const std::vector<int>& perm = sample.sort_perm();
  const double deriv_scale = std::pow(h, config.mu + config.nu_abs());
  for (int g = 0; g < g_count; ++g) {
    if (!solves.usable[g]) {
      continue;
    }
    // s_j = (nh)^-1 P((y_j-y)/h)^T zy, nonzero only in the y-window
    std::vector<double> s(n, 0.0);
    for (int j : j_index) {
      const double u = (sample.y()(j) - grid[g].y) / h;
      const double k = kernel_value(config.kernel, u);
      if (k > 0.0) {
        s[j] = k * poly_basis_1d(config.p, u).dot(solves.zy[g]) / (n * h);
      }
    }
    // suffix sums of s over the y-order, tie blocks included in full
    std::vector<double> suffix_from_block(n, 0.0);
    double suffix = 0.0;
    std::size_t block_end = perm.size();
    while (block_end > 0) {
      std::size_t block_start = block_end - 1;
      const double y_block = sample.y()(perm[block_start]);
      while (block_start > 0 && sample.y()(perm[block_start - 1]) == y_block) {
        --block_start;
      }
      for (std::size_t r = block_start; r < block_end; ++r) {
        suffix += s[perm[r]];
      }
      for (std::size_t r = block_start; r < block_end; ++r) {
        suffix_from_block[perm[r]] = suffix;
      }
      block_end = block_start;
    }
    for (const auto& [i, w] : x_weight[g]) {
      double dot = 0.0;
      for (int j : j_index) {
        if (s[j] != 0.0) {
          dot += s[j] * fhat(static_cast<std::size_t>(i_slot[i]), static_cast<std::size_t>(j_slot[j]));
        }
      }
      influence(i_slot[i], g) = (suffix_from_block[i] - dot) * w / deriv_scale;
    }
  }

  CovarianceSurface surface;
  surface.grid = grid;
  surface.method = CovMethod::plugin;
  surface.usable = solves.usable;
  surface.cov = influence.transpose() * influence / (static_cast<double>(n) * n);
  surface.var = surface.cov.diagonal();
  for (int g = 0; g < g_count; ++g) {
    if (surface.usable[g] && !(surface.var(g) > 0.0)) {
      surface.usable[g] = false;
    }
  }
  detail::require_two_usable(surface.usable);
  return detail::finish_surface(std::move(surface));
}

//! Jackknife covariance built on the estimator's V-statistic structure:
//! theta-hat_(-i) is the exact leave-one-out estimate, obtained by rank-one
//! downdates of S_y-hat and S_x-hat and prefix/suffix downdates of the
//! double sum R-hat, so no O(n) recomputation per observation is needed.
//! The pseudo-influences L_(i) = (n-1)(theta-hat_(-i) - mean theta-hat_(-.))
//! estimate the influence of observation i including the dependence of the
//! hat matrices on the data; the variance uses the (n-1) denominator.
//! Default method.
inline CovarianceSurface
jackknife_covariance(const Sample& sample, const std::vector<EvalPoint>& grid, const EstimatorConfig& config)
{
  config.validate(sample.d());
  if (sample.n() < 2) {
    throw std::invalid_argument("jackknife_covariance: need n >= 2");
  }
  const MultiIndexBasis basis(sample.d(), config.q);
  const int n = sample.n();
  const int pdim = config.p + 1;
  const int qdim = basis.size();
  const int g_count = static_cast<int>(grid.size());
  const double h = config.h;
  const double r_scale = std::pow(h, 1 + sample.d() + config.mu + config.nu_abs());
  const double hd = std::pow(h, sample.d());
  const Eigen::VectorXd e_mu = unit_vector(pdim, config.mu);
  const Eigen::VectorXd e_nu = unit_vector(qdim, basis.position(config.nu_or_zero(sample.d())));

  detail::GridSolves solves = detail::solve_grid_designs(sample, grid, config, basis);
  detail::require_two_usable(solves.usable);

  const std::vector<int>& perm = sample.sort_perm();
  Eigen::MatrixXd projections = Eigen::MatrixXd::Zero(n, g_count);

  for (int g = 0; g < g_count; ++g) {
    if (!solves.usable[g]) {
      continue;
    }
    // plain and kernel-weighted basis vectors at this grid point
    Eigen::VectorXd k_w(n), l_w(n);
    Eigen::MatrixXd p_plain = Eigen::MatrixXd::Zero(pdim, n);
    Eigen::MatrixXd q_plain = Eigen::MatrixXd::Zero(qdim, n);
    Eigen::MatrixXd p_w = Eigen::MatrixXd::Zero(pdim, n); // P(u_i) = p(u_i) K(u_i)
    Eigen::MatrixXd q_w = Eigen::MatrixXd::Zero(qdim, n); // Q(v_i) = q(v_i) L(v_i)
    Eigen::MatrixXd s_y_sum = Eigen::MatrixXd::Zero(pdim, pdim);
    Eigen::MatrixXd s_x_sum = Eigen::MatrixXd::Zero(qdim, qdim);
    for (int i = 0; i < n; ++i) {
      const double u = (sample.y()(i) - grid[g].y) / h;
      k_w(i) = kernel_value(config.kernel, u);
      if (k_w(i) > 0.0) {
        p_plain.col(i) = poly_basis_1d(config.p, u);
        p_w.col(i) = k_w(i) * p_plain.col(i);
        s_y_sum.noalias() += p_w.col(i) * p_plain.col(i).transpose();
      }
      const Eigen::VectorXd v = (sample.x().row(i).transpose() - grid[g].x) / h;
      l_w(i) = product_kernel_value(config.kernel, v);
      if (l_w(i) > 0.0) {
        q_plain.col(i) = basis.eval(v);
        q_w.col(i) = l_w(i) * q_plain.col(i);
        s_x_sum.noalias() += q_w.col(i) * q_plain.col(i).transpose();
      }
    }
    Eigen::MatrixXd q_prefix(qdim, n); // sum_k 1(y_k <= y_i) Q_k
    Eigen::MatrixXd p_suffix(pdim, n); // sum_j 1(y_i <= y_j) P_j
    {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(qdim);
      std::size_t block_start = 0;
      while (block_start < perm.size()) {
        std::size_t block_end = block_start + 1;
        const double y_block = sample.y()(perm[block_start]);
        while (block_end < perm.size() && sample.y()(perm[block_end]) == y_block) {
          ++block_end;
        }
        for (std::size_t r = block_start; r < block_end; ++r) {
          acc += q_w.col(perm[r]);
        }
        for (std::size_t r = block_start; r < block_end; ++r) {
          q_prefix.col(perm[r]) = acc;
        }
        block_start = block_end;
      }
      Eigen::VectorXd acc_p = Eigen::VectorXd::Zero(pdim);
      std::size_t block_end = perm.size();
      while (block_end > 0) {
        std::size_t bs = block_end - 1;
        const double y_block = sample.y()(perm[bs]);
        while (bs > 0 && sample.y()(perm[bs - 1]) == y_block) {
          --bs;
        }
        for (std::size_t r = bs; r < block_end; ++r) {
          acc_p += p_w.col(perm[r]);
        }
        for (std::size_t r = bs; r < block_end; ++r) {
          p_suffix.col(perm[r]) = acc_p;
        }
        block_end = bs;
      }
    }
    Eigen::MatrixXd r_sum = Eigen::MatrixXd::Zero(pdim, qdim);
    for (int j = 0; j < n; ++j) {
      if (k_w(j) > 0.0) {
        r_sum.noalias() += p_w.col(j) * q_prefix.col(j).transpose();
      }
    }

    // leave-one-out solves through rank-one downdates of the factored sums:
    // (A - k p p^T)^-1 e = A^-1 e + k (A^-1 p)(p^T A^-1 e) / (1 - k p^T A^-1 p)
    const DesignSolver full_y(s_y_sum);
    const DesignSolver full_x(s_x_sum);
    if (!full_y.usable() || !full_x.usable()) {
      solves.usable[g] = false;
      continue;
    }
    const Eigen::MatrixXd sy_inv = full_y.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(pdim, pdim)));
    const Eigen::MatrixXd sx_inv = full_x.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(qdim, qdim)));
    const Eigen::VectorXd sy_e = sy_inv * e_mu;
    const Eigen::VectorXd sx_e = sx_inv * e_nu;

    Eigen::VectorXd loo(n);
    bool ok = true;
    const double m = n - 1.0;
    Eigen::VectorXd zy(pdim), zx(qdim);
    for (int i = 0; i < n && ok; ++i) {
      zy = sy_e;
      if (k_w(i) > 0.0) {
        const Eigen::VectorXd siv = sy_inv * p_plain.col(i);
        const double denom = 1.0 - k_w(i) * p_plain.col(i).dot(siv);
        if (std::abs(denom) < 1e-12) {
          ok = false;
          break;
        }
        zy.noalias() += (k_w(i) * p_plain.col(i).dot(sy_e) / denom) * siv;
      }
      zx = sx_e;
      if (l_w(i) > 0.0) {
        const Eigen::VectorXd siv = sx_inv * q_plain.col(i);
        const double denom = 1.0 - l_w(i) * q_plain.col(i).dot(siv);
        if (std::abs(denom) < 1e-12) {
          ok = false;
          break;
        }
        zx.noalias() += (l_w(i) * q_plain.col(i).dot(sx_e) / denom) * siv;
      }
      // zy^T R_(-i) zx without materializing the downdated matrix; the
      // (n-1) and h^(1+d) normalization factors of the three pieces cancel
      // down to the derivative scale h^(mu+|nu|)
      const double full_term = zy.dot(r_sum * zx);
      const double row_term = zy.dot(p_w.col(i)) * q_prefix.col(i).dot(zx);
      const double col_term = zy.dot(p_suffix.col(i)) * q_w.col(i).dot(zx);
      const double diag_term = zy.dot(p_w.col(i)) * q_w.col(i).dot(zx);
      loo(i) = (full_term - row_term - col_term + diag_term) * h * hd / r_scale;
    }
    if (!ok) {
      solves.usable[g] = false;
      continue;
    }
    const double loo_mean = loo.mean();
    for (int i = 0; i < n; ++i) {
      projections(i, g) = m * (loo(i) - loo_mean);
    }
  }

  CovarianceSurface surface;
  surface.grid = grid;
  surface.method = CovMethod::jackknife;
  surface.usable = solves.usable;
  surface.cov = projections.transpose() * projections / (static_cast<double>(n) * n);
  surface.var = surface.cov.diagonal() * (static_cast<double>(n) / (n - 1));
  for (int g = 0; g < g_count; ++g) {
    if (surface.usable[g] && !(surface.var(g) > 0.0)) {
      surface.usable[g] = false;
    }
  }
  detail::require_two_usable(surface.usable);
  return detail::finish_surface(std::move(surface));
}

//! Sample analog of the asymptotic variance (mu >= 1 branch):
//!   V-hat = (n h^{d+2|nu|+2mu-1})^-1 theta-hat_{1,0}
//!           (e_mu^T S_y-hat^-1 T_y-hat S_y-hat^-1 e_mu)
//!           (e_nu^T S_x-hat^-1 T_x-hat S_x-hat^-1 e_nu),
//! with cross-grid terms through T-hat_{y,y'} for pairs sharing the same x;
//! pairs with different x fall back to the jackknife value unless their
//! x-windows are disjoint (then 0).
inline CovarianceSurface
asymptotic_covariance(const Sample& sample, const std::vector<EvalPoint>& grid, const EstimatorConfig& config)
{
  config.validate(sample.d());
  if (config.mu < 1) {
    throw std::invalid_argument("asymptotic_covariance: mu = 0 is not supported "
                                "(no closed-form boundary-degenerate variance)");
  }
  const MultiIndexBasis basis(sample.d(), config.q);
  const int n = sample.n();
  const int g_count = static_cast<int>(grid.size());
  const double h = config.h;
  const double rate = n * std::pow(h, sample.d() + 2 * config.nu_abs() + 2 * config.mu - 1);

  detail::GridSolves solves = detail::solve_grid_designs(sample, grid, config, basis);
  detail::require_two_usable(solves.usable);

  std::vector<double> density(g_count, 0.0), x_form(g_count, 0.0);
  EstimatorConfig density_config = config;
  density_config.mu = 1;
  density_config.nu = MultiIndex(static_cast<std::size_t>(sample.d()), 0);
  for (int g = 0; g < g_count; ++g) {
    if (!solves.usable[g]) {
      continue;
    }
    try {
      density[g] = estimate(sample, grid[g], density_config).value;
    } catch (const degenerate_design&) {
      solves.usable[g] = false;
      continue;
    }
    const Eigen::MatrixXd t_x = t_hat_x(sample, grid[g], config, basis);
    x_form[g] = solves.zx[g].dot(t_x * solves.zx[g]);
  }

  CovarianceSurface surface;
  surface.grid = grid;
  surface.method = CovMethod::asymptotic;
  surface.usable = solves.usable;
  surface.cov = Eigen::MatrixXd::Zero(g_count, g_count);
  surface.var = Eigen::VectorXd::Zero(g_count);

  CovarianceSurface jackknife_fallback;
  bool have_fallback = false;

  for (int g = 0; g < g_count; ++g) {
    if (!surface.usable[g]) {
      continue;
    }
    const Eigen::MatrixXd t_y = t_hat_y(sample, grid[g], config);
    const double v = density[g] * solves.zy[g].dot(t_y * solves.zy[g]) * x_form[g] / rate;
    surface.var(g) = v;
    surface.cov(g, g) = v;
    if (!(v > 0.0)) {
      surface.usable[g] = false;
    }
  }
  for (int g = 0; g < g_count; ++g) {
    for (int g2 = g + 1; g2 < g_count; ++g2) {
      if (!surface.usable[g] || !surface.usable[g2]) {
        continue;
      }
      if (grid[g].x == grid[g2].x) {
        const Eigen::MatrixXd t_cross = t_hat_y_cross(sample, grid[g].y, grid[g2].y, config);
        const double dens = 0.5 * (density[g] + density[g2]);
        const double value = dens * solves.zy[g].dot(t_cross * solves.zy[g2]) * x_form[g] / rate;
        surface.cov(g, g2) = value;
        surface.cov(g2, g) = value;
      } else {
        const double gap = (grid[g].x - grid[g2].x).cwiseAbs().maxCoeff();
        if (gap >= 2.0 * h) {
          continue; // disjoint x-windows share no observation
        }
        if (!have_fallback) {
          jackknife_fallback = jackknife_covariance(sample, grid, config);
          have_fallback = true;
        }
        surface.cov(g, g2) = jackknife_fallback.cov(g, g2);
        surface.cov(g2, g) = jackknife_fallback.cov(g, g2);
      }
    }
  }
  detail::require_two_usable(surface.usable);
  return detail::finish_surface(std::move(surface));
}

inline CovarianceSurface
estimate_covariance(const Sample& sample,
                    const std::vector<EvalPoint>& grid,
                    const EstimatorConfig& config,
                    CovMethod method)
{
  switch (method) {
    case CovMethod::plugin:
      return plugin_covariance(sample, grid, config);
    case CovMethod::jackknife:
      return jackknife_covariance(sample, grid, config);
    case CovMethod::asymptotic:
      return asymptotic_covariance(sample, grid, config);
  }
  throw std::invalid_argument("estimate_covariance: unknown method");
}

//! Correlation with a deterministic PSD repair: normalize by the diagonal,
//! symmetrize, and if the smallest eigenvalue is negative add
//! (-lambda_min + 1e-10) to the diagonal and renormalize back to unit
//! diagonal. The jitter actually added is recorded on the surface.
inline CovarianceSurface
to_correlation_psd(CovarianceSurface surface)
{
  const int g_count = surface.size();
  std::vector<int> active;
  for (int g = 0; g < g_count; ++g) {
    if (surface.usable[g] && surface.cov(g, g) > 0.0) {
      active.push_back(g);
    }
  }
  surface.corr = Eigen::MatrixXd::Identity(g_count, g_count);
  if (active.empty()) {
    surface.psd_jitter = 0.0;
    return surface;
  }
  const int m = static_cast<int>(active.size());
  Eigen::MatrixXd sub(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      sub(a, b) = surface.cov(active[a], active[b]) /
                  std::sqrt(surface.cov(active[a], active[a]) * surface.cov(active[b], active[b]));
    }
  }
  sub = 0.5 * (sub + sub.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(sub);
  const double lambda_min = eigen.eigenvalues().minCoeff();
  double jitter = 0.0;
  if (lambda_min < 0.0) {
    jitter = -lambda_min + 1e-10;
    sub.diagonal().array() += jitter;
    sub /= 1.0 + jitter;
  }
  surface.psd_jitter = jitter;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      surface.corr(active[a], active[b]) = sub(a, b);
    }
  }
  return surface;
}

} // namespace lpcd
