#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inference.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace lpcd::sim {

//! Data generating processes for the Monte Carlo harness. The truncated
//! bivariate normal is the benchmark design; the uniform square stresses
//! boundary bias and the mixture gives the shape tests something to find.
enum class DgpKind
{
  truncated_normal,
  uniform_square,
  normal_mixture
};

struct Dgp
{
  DgpKind kind{ DgpKind::truncated_normal };
  // truncated normal parameters: mean 0, variance 2, covariance -0.1 on [-1,1]^2
  double var{ 2.0 };
  double cov{ -0.1 };
};

inline Dgp
dgp_from_name(const std::string& name)
{
  if (name == "truncated-normal") {
    return Dgp{ DgpKind::truncated_normal };
  }
  if (name == "uniform") {
    return Dgp{ DgpKind::uniform_square };
  }
  if (name == "mixture") {
    return Dgp{ DgpKind::normal_mixture };
  }
  throw std::invalid_argument("unknown dgp: " + name +
                              " (expected truncated-normal, uniform, or mixture)");
}

inline std::string
dgp_name(const Dgp& dgp)
{
  switch (dgp.kind) {
    case DgpKind::truncated_normal:
      return "truncated-normal";
    case DgpKind::uniform_square:
      return "uniform";
    case DgpKind::normal_mixture:
      return "mixture";
  }
  return "unknown";
}

namespace detail {

inline constexpr double kMixQ = 0.5;
inline constexpr double kMixMean = 0.4;
inline constexpr double kMixSd = 0.25;

inline double
mixture_density_raw(double y)
{
  return kMixQ * normal_pdf((y + kMixMean) / kMixSd) / kMixSd +
         (1.0 - kMixQ) * normal_pdf((y - kMixMean) / kMixSd) / kMixSd;
}

inline double
mixture_mass()
{
  // mass of the mixture on [-1, 1]
  const double a = (normal_cdf((1.0 + kMixMean) / kMixSd) - normal_cdf((-1.0 + kMixMean) / kMixSd));
  const double b = (normal_cdf((1.0 - kMixMean) / kMixSd) - normal_cdf((-1.0 - kMixMean) / kMixSd));
  return kMixQ * a + (1.0 - kMixQ) * b;
}

} // namespace detail

//! Draw n observations; rejection sampling keeps the law exact and the
//! counter generator keeps the draw reproducible for a given seed.
inline Sample
sample_dgp(const Dgp& dgp, int n, std::uint64_t seed)
{
  if (n < 1) {
    throw std::invalid_argument("sample_dgp: need n >= 1");
  }
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  CounterRng rng(seed, 0);
  switch (dgp.kind) {
    case DgpKind::truncated_normal: {
      const double l11 = std::sqrt(dgp.var);
      const double l21 = dgp.cov / l11;
      const double l22 = std::sqrt(dgp.var - l21 * l21);
      for (int i = 0; i < n; ++i) {
        double yi, xi;
        do {
          const double z1 = rng.next_normal();
          const double z2 = rng.next_normal();
          xi = l11 * z1;
          yi = l21 * z1 + l22 * z2;
        } while (std::abs(yi) > 1.0 || std::abs(xi) > 1.0);
        y(i) = yi;
        x(i, 0) = xi;
      }
      break;
    }
    case DgpKind::uniform_square: {
      for (int i = 0; i < n; ++i) {
        y(i) = rng.next_uniform();
        x(i, 0) = rng.next_uniform();
      }
      break;
    }
    case DgpKind::normal_mixture: {
      for (int i = 0; i < n; ++i) {
        double yi;
        do {
          const bool first = rng.next_uniform() < detail::kMixQ;
          yi = (first ? -detail::kMixMean : detail::kMixMean) + detail::kMixSd * rng.next_normal();
        } while (std::abs(yi) > 1.0);
        y(i) = yi;
        x(i, 0) = 2.0 * rng.next_uniform() - 1.0;
      }
      break;
    }
  }
  return Sample(y, x);
}

//! Analytic conditional density (theta = 0) or its y-derivative (theta = 1);
//! the oracle the coverage study scores against.
inline double
truth_density(const Dgp& dgp, double y, double x, int theta = 0)
{
  switch (dgp.kind) {
    case DgpKind::truncated_normal: {
      if (std::abs(y) > 1.0 || std::abs(x) > 1.0) {
        throw std::invalid_argument("truth_density: point outside [-1,1]^2");
      }
      const double m = (dgp.cov / dgp.var) * x;
      const double s2 = dgp.var - dgp.cov * dgp.cov / dgp.var;
      const double s = std::sqrt(s2);
      const double mass = normal_cdf((1.0 - m) / s) - normal_cdf((-1.0 - m) / s);
      const double f = normal_pdf((y - m) / s) / (s * mass);
      if (theta == 0) {
        return f;
      }
      if (theta == 1) {
        return -f * (y - m) / s2;
      }
      throw std::invalid_argument("truth_density: theta must be 0 or 1");
    }
    case DgpKind::uniform_square: {
      if (y < 0.0 || y > 1.0 || x < 0.0 || x > 1.0) {
        throw std::invalid_argument("truth_density: point outside [0,1]^2");
      }
      return theta == 0 ? 1.0 : 0.0;
    }
    case DgpKind::normal_mixture: {
      if (std::abs(y) > 1.0 || std::abs(x) > 1.0) {
        throw std::invalid_argument("truth_density: point outside [-1,1]^2");
      }
      const double mass = detail::mixture_mass();
      if (theta == 0) {
        return detail::mixture_density_raw(y) / mass;
      }
      if (theta == 1) {
        const double za = (y + detail::kMixMean) / detail::kMixSd;
        const double zb = (y - detail::kMixMean) / detail::kMixSd;
        const double da = -za * normal_pdf(za) / (detail::kMixSd * detail::kMixSd);
        const double db = -zb * normal_pdf(zb) / (detail::kMixSd * detail::kMixSd);
        return (detail::kMixQ * da + (1.0 - detail::kMixQ) * db) / mass;
      }
      throw std::invalid_argument("truth_density: theta must be 0 or 1");
    }
  }
  throw std::invalid_argument("truth_density: unknown dgp");
}

struct StudyOptions
{
  int p{ 2 };
  int q{ 1 };
  int theta{ 0 };
  double alpha{ 0.05 };
  CovMethod method{ CovMethod::jackknife };
  int draws{ 3000 };
  KernelSpec kernel{};
  int threads{ 0 };
};

//! One arm (without / with robust bias correction) of the study report.
struct McArm
{
  double uniform_coverage{ 0.0 };
  double mean_uniform_width{ 0.0 };
  double mean_cv{ 0.0 };
  Eigen::VectorXd pointwise_coverage;
  Eigen::VectorXd mean_bias;
  Eigen::VectorXd mean_se;
  Eigen::VectorXd mean_pointwise_width;
};

struct MCReport
{
  int n{ 0 };
  int reps{ 0 };
  std::vector<EvalPoint> grid;
  double mean_h{ 0.0 };
  Eigen::VectorXd mean_h_point; // pointwise rule-of-thumb means
  McArm wbc;
  McArm rbc;
  int failures{ 0 };
  double wall_clock_seconds{ 0.0 };
  std::uint64_t seed{ 0 };
  std::string dgp;
};

namespace detail {

struct RepOutcome
{
  bool failed{ true };
  double h{ 0.0 };
  Eigen::VectorXd h_point;
  struct Arm
  {
    bool uniform_covered{ false };
    double uniform_width{ 0.0 };
    double cv{ 0.0 };
    Eigen::VectorXd covered;  // pointwise CI indicator
    Eigen::VectorXd bias;
    Eigen::VectorXd se;
    Eigen::VectorXd width;    // pointwise CI width
  } wbc, rbc;
};

inline RepOutcome::Arm
score_band(const BandResult& band, const std::vector<double>& truth, double z)
{
  RepOutcome::Arm arm;
  const int g_count = static_cast<int>(band.grid.size());
  arm.covered = Eigen::VectorXd::Zero(g_count);
  arm.bias = Eigen::VectorXd::Zero(g_count);
  arm.se = Eigen::VectorXd::Zero(g_count);
  arm.width = Eigen::VectorXd::Zero(g_count);
  arm.cv = band.cv.value;
  bool uniform = true;
  double total_width = 0.0;
  int used = 0;
  for (int g = 0; g < g_count; ++g) {
    if (!band.usable[g]) {
      uniform = false;
      continue;
    }
    const double f = truth[g];
    arm.bias(g) = band.estimates(g) - f;
    arm.se(g) = band.se(g);
    arm.covered(g) = (std::abs(arm.bias(g)) <= z * band.se(g)) ? 1.0 : 0.0;
    arm.width(g) = 2.0 * z * band.se(g);
    uniform = uniform && band.lower(g) <= f && f <= band.upper(g);
    total_width += band.upper(g) - band.lower(g);
    ++used;
  }
  arm.uniform_covered = uniform;
  arm.uniform_width = used > 0 ? total_width / used : 0.0;
  return arm;
}

} // namespace detail

//! The Table-1 style coverage study: per replication draw a sample, select
//! the rule-of-thumb bandwidth at the base orders, then build the same-order
//! (WBC) and robust bias-corrected (RBC) bands with that bandwidth and score
//! them against the analytic truth. Replication seeds derive from
//! (seed, replication), so any subset reruns identically.
inline MCReport
run_coverage_study(const Dgp& dgp,
                   int n,
                   int reps,
                   const std::vector<EvalPoint>& grid,
                   const StudyOptions& options,
                   std::uint64_t seed)
{
  if (reps < 1 || grid.empty()) {
    throw std::invalid_argument("run_coverage_study: need reps >= 1 and a grid");
  }
  const auto start = std::chrono::steady_clock::now();
  const int g_count = static_cast<int>(grid.size());
  std::vector<double> truth(g_count);
  for (int g = 0; g < g_count; ++g) {
    truth[g] = truth_density(dgp, grid[g].y, grid[g].x(0), options.theta);
  }
  const double z = CounterRng::normal_quantile(1.0 - options.alpha / 2.0);

  std::vector<detail::RepOutcome> outcomes(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t r) {
    detail::RepOutcome& outcome = outcomes[r];
    try {
      const Sample sample = sample_dgp(dgp, n, derive_stream(seed, 3 * r));

      EstimatorConfig base;
      base.p = options.p;
      base.q = options.q;
      base.mu = 1 + options.theta;
      base.nu = MultiIndex(1, 0);
      base.kernel = options.kernel;
      base.h = 1.0;
      std::vector<double> hs;
      for (const EvalPoint& pt : grid) {
        hs.push_back(rot_h(sample, pt, base).h);
      }
      outcome.h_point = Eigen::Map<Eigen::VectorXd>(hs.data(), g_count);
      outcome.h = rot_h_grid(sample, grid, base).h;

      InferenceOptions wbc;
      wbc.p = options.p;
      wbc.q = options.q;
      wbc.rbc = false;
      wbc.bw = BwMode::fixed;
      wbc.h_fixed = outcome.h;
      wbc.method = options.method;
      wbc.alpha = options.alpha;
      wbc.draws = options.draws;
      wbc.kernel = options.kernel;
      wbc.threads = 1;
      wbc.seed = derive_stream(seed, 3 * r + 1);
      InferenceOptions rbc = wbc;
      rbc.rbc = true;
      rbc.seed = derive_stream(seed, 3 * r + 2);

      const BandResult wbc_band = confidence_band(sample, grid, options.theta, wbc);
      const BandResult rbc_band = confidence_band(sample, grid, options.theta, rbc);
      outcome.wbc = detail::score_band(wbc_band, truth, z);
      outcome.rbc = detail::score_band(rbc_band, truth, z);
      outcome.failed = false;
    } catch (const std::exception&) {
      outcome.failed = true;
    }
  });

  MCReport report;
  report.n = n;
  report.reps = reps;
  report.grid = grid;
  report.seed = seed;
  report.dgp = dgp_name(dgp);
  report.mean_h_point = Eigen::VectorXd::Zero(g_count);
  auto& wbc = report.wbc;
  auto& rbc = report.rbc;
  for (McArm* arm : { &wbc, &rbc }) {
    arm->pointwise_coverage = Eigen::VectorXd::Zero(g_count);
    arm->mean_bias = Eigen::VectorXd::Zero(g_count);
    arm->mean_se = Eigen::VectorXd::Zero(g_count);
    arm->mean_pointwise_width = Eigen::VectorXd::Zero(g_count);
  }
  int ok = 0;
  for (const detail::RepOutcome& outcome : outcomes) {
    if (outcome.failed) {
      ++report.failures;
      continue;
    }
    ++ok;
    report.mean_h += outcome.h;
    report.mean_h_point += outcome.h_point;
    for (auto [arm, rep_arm] : { std::pair{ &wbc, &outcome.wbc }, std::pair{ &rbc, &outcome.rbc } }) {
      arm->uniform_coverage += rep_arm->uniform_covered ? 1.0 : 0.0;
      arm->mean_uniform_width += rep_arm->uniform_width;
      arm->mean_cv += rep_arm->cv;
      arm->pointwise_coverage += rep_arm->covered;
      arm->mean_bias += rep_arm->bias;
      arm->mean_se += rep_arm->se;
      arm->mean_pointwise_width += rep_arm->width;
    }
  }
  if (ok == 0 || report.failures > reps / 20) {
    throw std::runtime_error("run_coverage_study: more than 5% of replications failed (" +
                             std::to_string(report.failures) + "/" + std::to_string(reps) + ")");
  }
  report.mean_h /= ok;
  report.mean_h_point /= ok;
  for (McArm* arm : { &wbc, &rbc }) {
    arm->uniform_coverage /= ok;
    arm->mean_uniform_width /= ok;
    arm->mean_cv /= ok;
    arm->pointwise_coverage /= ok;
    arm->mean_bias /= ok;
    arm->mean_se /= ok;
    arm->mean_pointwise_width /= ok;
  }
  report.wall_clock_seconds =
    std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start).count();
  return report;
}

} // namespace lpcd::sim
