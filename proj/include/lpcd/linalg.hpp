#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lpcd {

//! Raised when a kernel window holds too few observations or a design
//! matrix is numerically singular. Never regularized away silently, so
//! that bandwidth selectors and grid loops can react.
struct degenerate_design : std::runtime_error
{
  explicit degenerate_design(const std::string& what)
    : std::runtime_error(what)
  {
  }
};

//! Factorization of a small symmetric design matrix with a reciprocal
//! condition estimate (1-norm based).
class DesignSolver
{
public:
  explicit DesignSolver(const Eigen::MatrixXd& m)
  {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("DesignSolver: matrix must be square");
    }
    lu_.compute(m);
    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
    if (!lu_.isInvertible() || norm <= 0.0) {
      rcond_ = 0.0;
      return;
    }
    const Eigen::MatrixXd inv = lu_.inverse();
    const double inv_norm = inv.cwiseAbs().colwise().sum().maxCoeff();
    rcond_ = 1.0 / (norm * inv_norm);
  }

  double rcond() const { return rcond_; }
  bool usable(double tol = 1e-12) const { return rcond_ >= tol; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double tol = 1e-12) const
  {
    require(tol);
    return lu_.solve(rhs);
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs, double tol = 1e-12) const
  {
    require(tol);
    return lu_.solve(rhs);
  }

private:
  void require(double tol) const
  {
    if (!usable(tol)) {
      throw degenerate_design("design matrix is numerically singular (rcond = " + std::to_string(rcond_) +
                              "); bandwidth too small or empty kernel window");
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  double rcond_{ 0.0 };
};

//! Solve M z = rhs for a symmetric design matrix; throws degenerate_design
//! when the reciprocal condition estimate falls below 1e-12.
inline Eigen::VectorXd
solve_design(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs)
{
  return DesignSolver(m).solve(rhs);
}

inline Eigen::VectorXd
unit_vector(int size, int position)
{
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
  e(position) = 1.0;
  return e;
}

} // namespace lpcd
