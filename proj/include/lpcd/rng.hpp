#pragma once

#include <cmath>
#include <cstdint>

namespace lpcd {

namespace detail {

inline std::uint64_t
splitmix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace detail

//! Derive an independent stream key from (seed, index); used so that draws,
//! replications and subcommands can be computed in any order or thread.
inline std::uint64_t
derive_stream(std::uint64_t seed, std::uint64_t index)
{
  std::uint64_t k = detail::splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  return detail::splitmix64(k + 0x9e3779b97f4a7c15ULL * (index + 1));
}

//! Counter-based generator: the i-th output is a pure function of
//! (key, i), so streams are reproducible bit-for-bit regardless of how
//! work is scheduled.
class CounterRng
{
public:
  explicit CounterRng(std::uint64_t key)
    : key_(key)
  {
  }

  CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(derive_stream(seed, stream))
  {
  }

  std::uint64_t next_u64() { return detail::splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_)); }

  //! Uniform on (0, 1), never exactly 0 or 1.
  double next_uniform()
  {
    const std::uint64_t bits = next_u64() >> 11; // 53 random bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return normal_quantile(next_uniform()); }

  //! Wichura's AS241 inverse normal CDF, accurate to ~1e-15.
  static double normal_quantile(double p)
  {
    const double q = p - 0.5;
    double r, value;
    if (std::abs(q) <= 0.425) {
      r = 0.180625 - q * q;
      value =
        q *
        (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
              45921.953931549871457) *
               r +
             13731.693765509461125) *
              r +
            1971.5909503065514427) *
             r +
           133.14166789178437745) *
            r +
          3.387132872796366608) /
        (((((((5226.495278852545703 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
             21213.794301586595867) *
              r +
            5394.1960214247511077) *
             r +
           687.1870074920579083) *
            r +
          42.313330701600911252) *
           r +
         1.0);
      return value;
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      value =
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
             1.27045825245236838258) *
              r +
            3.64784832476320460504) *
             r +
           5.7694972214606914055) *
            r +
          4.6303378461565452959) *
           r +
         1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
             0.14810397642748007459) *
              r +
            0.68976733498510000455) *
             r +
           1.6763848301838038494) *
            r +
          2.05319162663775882187) *
           r +
         1.0);
    } else {
      r -= 5.0;
      value =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
             0.026532189526576123093) *
              r +
            0.29656057182850489123) *
             r +
           1.7848265399172913358) *
            r +
          5.4637849111641143699) *
           r +
         6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
             7.868691311456132591e-4) *
              r +
            0.0148753612908506148525) *
             r +
           0.13692988092273580531) *
            r +
          0.59983220655588793769) *
           r +
         1.0);
    }
    return q < 0.0 ? -value : value;
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_{ 0 };
};

//! Standard normal density.
inline double
normal_pdf(double z)
{
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

//! Standard normal CDF via erfc.
inline double
normal_cdf(double z)
{
  return 0.5 * std::erfc(-z * M_SQRT1_2);
}

} // namespace lpcd
