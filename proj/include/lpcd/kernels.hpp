#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lpcd {

//! Kernel families available for the local polynomial weights.
//!
//! All three are symmetric probability densities supported on [-1, 1].
//! The uniform kernel is not Lipschitz at the endpoints; it is provided
//! for comparison runs and excluded from the acceptance checks.
enum class KernelFamily
{
  epanechnikov,
  triangular,
  uniform
};

struct KernelSpec
{
  KernelFamily family{ KernelFamily::epanechnikov };
};

//! K(u); zero outside [-1, 1]. Endpoint values are the formula values
//! (0 for Epanechnikov/triangular, 0.5 for uniform); support checks use
//! |u| <= 1 so prefix sums and quadrature agree at the closed endpoints.
inline double
kernel_value(const KernelSpec& spec, double u)
{
  if (std::abs(u) > 1.0) {
    return 0.0;
  }
  switch (spec.family) {
    case KernelFamily::epanechnikov:
      return 0.75 * (1.0 - u * u);
    case KernelFamily::triangular:
      return 1.0 - std::abs(u);
    case KernelFamily::uniform:
      return 0.5;
  }
  return 0.0;
}

//! Product kernel L(u) = K(u_1) ... K(u_d).
inline double
product_kernel_value(const KernelSpec& spec, const Eigen::VectorXd& u)
{
  double value = 1.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    value *= kernel_value(spec, u(k));
    if (value == 0.0) {
      return 0.0;
    }
  }
  return value;
}

inline double
product_kernel_value(const KernelSpec& spec, const Eigen::VectorXd& u, int d)
{
  if (u.size() != d) {
    throw std::invalid_argument("product_kernel_value: argument has length " +
                                std::to_string(u.size()) + ", expected " +
                                std::to_string(d));
  }
  return product_kernel_value(spec, u);
}

inline std::string
kernel_name(KernelFamily family)
{
  switch (family) {
    case KernelFamily::epanechnikov:
      return "epanechnikov";
    case KernelFamily::triangular:
      return "triangular";
    case KernelFamily::uniform:
      return "uniform";
  }
  return "unknown";
}

inline KernelFamily
kernel_from_name(const std::string& name)
{
  if (name == "epanechnikov") {
    return KernelFamily::epanechnikov;
  }
  if (name == "triangular") {
    return KernelFamily::triangular;
  }
  if (name == "uniform") {
    return KernelFamily::uniform;
  }
  throw std::invalid_argument("unknown kernel family: " + name);
}

} // namespace lpcd
