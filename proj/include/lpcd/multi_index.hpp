#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace lpcd {

using MultiIndex = std::vector<int>;

//! Number of multi-indices nu in N^d with |nu| <= q, i.e. C(d + q, d).
inline int
basis_size(int d, int q)
{
  if (d < 1 || q < 0) {
    throw std::invalid_argument("basis_size: need d >= 1, q >= 0");
  }
  // C(d+q, d) via incremental products, exact for the small orders used here.
  std::int64_t value = 1;
  for (int k = 1; k <= d; ++k) {
    value = value * (q + k) / k;
  }
  return static_cast<int>(value);
}

//! Ordered enumeration of multi-indices with total degree up to q.
//!
//! Ordering is total degree first, then lexicographic within a degree with
//! the first coordinate decreasing, e.g. for d = 2, q = 2:
//!   (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
//! Index 0 is always the zero multi-index. The position of a multi-index in
//! this list is what unit vectors e_nu refer to throughout the library, and
//! it is the column order used in all file outputs.
class MultiIndexBasis
{
public:
  MultiIndexBasis() = default;

  MultiIndexBasis(int d, int q)
    : d_(d)
    , q_(q)
  {
    if (d < 1 || q < 0) {
      throw std::invalid_argument("MultiIndexBasis: need d >= 1, q >= 0");
    }
    MultiIndex current(d, 0);
    for (int degree = 0; degree <= q; ++degree) {
      append_degree(degree, 0, degree, current);
    }
  }

  int dimension() const { return d_; }
  int max_degree() const { return q_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const MultiIndex& operator[](int i) const { return indices_[i]; }

  //! Position of nu in the enumeration; throws if |nu| > q or dim mismatch.
  int position(const MultiIndex& nu) const
  {
    if (static_cast<int>(nu.size()) != d_) {
      throw std::invalid_argument("MultiIndexBasis::position: dim mismatch");
    }
    for (int i = 0; i < size(); ++i) {
      if (indices_[i] == nu) {
        return i;
      }
    }
    throw std::invalid_argument("MultiIndexBasis::position: index not found");
  }

  //! Basis vector with entries u^nu / nu! in the enumeration order.
  Eigen::VectorXd eval(const Eigen::VectorXd& u) const
  {
    if (u.size() != d_) {
      throw std::invalid_argument("MultiIndexBasis::eval: dim mismatch");
    }
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i) {
      double value = 1.0;
      for (int k = 0; k < d_; ++k) {
        for (int r = 1; r <= indices_[i][k]; ++r) {
          value *= u(k) / static_cast<double>(r);
        }
      }
      out(i) = value;
    }
    return out;
  }

private:
  void append_degree(int remaining, int coord, int degree, MultiIndex& current)
  {
    if (coord == d_ - 1) {
      current[coord] = remaining;
      indices_.push_back(current);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      current[coord] = k;
      append_degree(remaining - k, coord + 1, degree, current);
    }
    current[coord] = 0;
  }

  int d_{ 1 };
  int q_{ 0 };
  std::vector<MultiIndex> indices_;
};

inline int
total_degree(const MultiIndex& nu)
{
  int s = 0;
  for (int k : nu) {
    s += k;
  }
  return s;
}

//! Univariate basis p(u) = (1, u, u^2/2!, ..., u^p/p!)^T.
inline Eigen::VectorXd
poly_basis_1d(int p, double u)
{
  if (p < 0) {
    throw std::invalid_argument("poly_basis_1d: need p >= 0");
  }
  Eigen::VectorXd out(p + 1);
  out(0) = 1.0;
  for (int ell = 1; ell <= p; ++ell) {
    out(ell) = out(ell - 1) * u / static_cast<double>(ell);
  }
  return out;
}

//! Multivariate basis with entries u^nu / nu! in the basis ordering.
inline Eigen::VectorXd
poly_basis(const MultiIndexBasis& basis, const Eigen::VectorXd& u)
{
  return basis.eval(u);
}

} // namespace lpcd
