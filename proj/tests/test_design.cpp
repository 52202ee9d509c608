#include <catch2/catch_amalgamated.hpp>

#include <lpcd/design.hpp>
#include <lpcd/rng.hpp>

using namespace lpcd;

namespace {

//! Brute-force O(n^2) double sum; the oracle the prefix-sum R-hat must match.
Eigen::MatrixXd
r_hat_naive(const Sample& sample, const EvalPoint& eval, const EstimatorConfig& config, const MultiIndexBasis& basis)
{
  const int pdim = config.p + 1;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(pdim, basis.size());
  for (int j = 0; j < sample.n(); ++j) {
    const double u = (sample.y()(j) - eval.y) / config.h;
    const double k = kernel_value(config.kernel, u);
    if (k == 0.0) {
      continue;
    }
    for (int i = 0; i < sample.n(); ++i) {
      if (sample.y()(i) > sample.y()(j)) {
        continue;
      }
      const Eigen::VectorXd v = (sample.x().row(i).transpose() - eval.x) / config.h;
      const double l = product_kernel_value(config.kernel, v);
      if (l == 0.0) {
        continue;
      }
      r.noalias() += (k * l) * poly_basis_1d(config.p, u) * basis.eval(v).transpose();
    }
  }
  const double n = sample.n();
  return r / (n * n * std::pow(config.h, 1 + sample.d() + config.mu + config.nu_abs()));
}

Sample
random_sample(CounterRng& rng, int n, int d, double lo = 0.0, double hi = 1.0)
{
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    y(i) = lo + (hi - lo) * rng.next_uniform();
    for (int k = 0; k < d; ++k) {
      x(i, k) = lo + (hi - lo) * rng.next_uniform();
    }
  }
  return Sample(y, x);
}

//! Values on a dyadic lattice so affine transforms with dyadic constants
//! are exact in floating point.
Sample
dyadic_sample(CounterRng& rng, int n, int d)
{
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    y(i) = std::floor(rng.next_uniform() * 1024.0) / 1024.0;
    for (int k = 0; k < d; ++k) {
      x(i, k) = std::floor(rng.next_uniform() * 1024.0) / 1024.0;
    }
  }
  return Sample(y, x);
}

} // namespace

TEST_CASE("s_hat_y small cases")
{
  EstimatorConfig config;
  config.p = 0;
  config.q = 0;
  config.mu = 0;
  config.h = 1.0;
  config.kernel.family = KernelFamily::uniform;

  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
  Sample sample(y, x);

  const Eigen::MatrixXd s = s_hat_y(sample, make_eval(0.0, 0.0), config);
  REQUIRE(s.rows() == 1);
  CHECK(s(0, 0) == Catch::Approx(0.5).epsilon(1e-15));

  // empty kernel window
  const Eigen::MatrixXd zero = s_hat_y(sample, make_eval(5.0, 0.0), config);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("s_hat_y approaches the integrated counterpart")
{
  CounterRng rng(11, 0);
  Sample sample = random_sample(rng, 2000, 1);
  EstimatorConfig config;
  config.p = 2;
  config.q = 0;
  config.mu = 1;
  config.h = 0.2;
  const EvalPoint eval = make_eval(0.5, 0.5);

  SupportModel support;
  support.y_lo = 0.0;
  support.y_hi = 1.0;
  support.x_lo = Eigen::VectorXd::Zero(1);
  support.x_hi = Eigen::VectorXd::Ones(1);
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };

  const Eigen::MatrixXd empirical = s_hat_y(sample, eval, config);
  const Eigen::MatrixXd integrated = integrated_s_y(eval, config, support);
  CHECK((empirical - integrated).cwiseAbs().maxCoeff() < 0.1); // n = 2000 sampling error
}

TEST_CASE("s_hat_x small cases")
{
  EstimatorConfig config;
  config.p = 0;
  config.q = 0;
  config.mu = 0;
  config.h = 1.0;

  Eigen::VectorXd y(1);
  y << 0.3;
  Eigen::MatrixXd x(1, 2);
  x << 0.2, 0.7;
  Sample sample(y, x);
  MultiIndexBasis basis(2, 0);

  EvalPoint eval;
  eval.y = 0.3;
  eval.x = x.row(0).transpose();
  const Eigen::MatrixXd s = s_hat_x(sample, eval, config, basis);
  CHECK(s(0, 0) == Catch::Approx(0.5625).epsilon(1e-14));

  eval.x << 5.0, 5.0;
  CHECK(s_hat_x(sample, eval, config, basis).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("s_hat_x with d = 1 reduces to the s_hat_y formula")
{
  CounterRng rng(13, 0);
  Sample sample = random_sample(rng, 60, 1);
  EstimatorConfig config;
  config.p = 2;
  config.q = 2;
  config.mu = 0;
  config.h = 0.4;

  // the same data vector smoothed once as x and once as y
  const Eigen::VectorXd data = sample.y();
  Sample as_x(Eigen::VectorXd::Zero(sample.n()), data);
  Sample as_y(data, Eigen::MatrixXd::Zero(sample.n(), 1));
  MultiIndexBasis basis(1, 2);
  EvalPoint eval;
  eval.y = 0.0;
  eval.x = Eigen::VectorXd::Constant(1, 0.5);
  const Eigen::MatrixXd sx = s_hat_x(as_x, eval, config, basis);
  const Eigen::MatrixXd sy = s_hat_y(as_y, make_eval(0.5, 0.0), config);
  CHECK((sx - sy).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("r_hat single point")
{
  EstimatorConfig config;
  config.p = 1;
  config.q = 0;
  config.mu = 1;
  config.h = 1.0;

  Eigen::VectorXd y(1);
  y << 0.5;
  Eigen::MatrixXd x(1, 1);
  x << 0.25;
  Sample sample(y, x);
  MultiIndexBasis basis(1, 0);

  EvalPoint eval = make_eval(0.5, 0.25);
  const Eigen::MatrixXd r = r_hat(sample, eval, config, basis);
  REQUIRE(r.rows() == 2);
  REQUIRE(r.cols() == 1);
  CHECK(r(0, 0) == Catch::Approx(0.5625).epsilon(1e-14));
  CHECK(r(1, 0) == 0.0);

  // P window empty
  const Eigen::MatrixXd zero = r_hat(sample, make_eval(-3.0, 0.25), config, basis);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prefix-sum r_hat equals the naive double sum")
{
  CounterRng rng(17, 0);
  for (int instance = 0; instance < 50; ++instance) {
    const int n = 20 + static_cast<int>(rng.next_uniform() * 180);
    const int d = 1 + static_cast<int>(rng.next_uniform() * 2.0);
    Sample sample = random_sample(rng, n, d);
    EstimatorConfig config;
    config.p = 1 + static_cast<int>(rng.next_uniform() * 3.0);
    config.q = static_cast<int>(rng.next_uniform() * 3.0);
    config.mu = 1;
    config.h = 0.2 + 0.5 * rng.next_uniform();
    MultiIndexBasis basis(d, config.q);
    EvalPoint eval;
    eval.y = rng.next_uniform();
    eval.x = Eigen::VectorXd::Constant(d, 0.5);

    const Eigen::MatrixXd fast = r_hat(sample, eval, config, basis);
    const Eigen::MatrixXd naive = r_hat_naive(sample, eval, config, basis);
    const double scale = std::max(1.0, naive.cwiseAbs().maxCoeff());
    CHECK((fast - naive).cwiseAbs().maxCoeff() / scale < 1e-12);
  }
}

TEST_CASE("r_hat handles tied y blocks with <= semantics")
{
  EstimatorConfig config;
  config.p = 1;
  config.q = 0;
  config.mu = 1;
  config.h = 1.0;
  Eigen::VectorXd y(3);
  y << 0.5, 0.5, 0.25;
  Eigen::MatrixXd x(3, 1);
  x << 0.1, 0.2, 0.3;
  Sample sample(y, x);
  CHECK(sample.has_ties_in_y());
  MultiIndexBasis basis(1, 0);
  const EvalPoint eval = make_eval(0.4, 0.2);
  const Eigen::MatrixXd fast = r_hat(sample, eval, config, basis);
  const Eigen::MatrixXd naive = r_hat_naive(sample, eval, config, basis);
  CHECK((fast - naive).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("ties_in_y flag")
{
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
  Eigen::VectorXd distinct(3);
  distinct << 1.0, 2.0, 3.0;
  CHECK_FALSE(Sample(distinct, x).has_ties_in_y());
  Eigen::VectorXd tied(3);
  tied << 1.0, 1.0, 2.0;
  CHECK(Sample(tied, x).has_ties_in_y());
  Eigen::VectorXd single(1);
  single << 4.0;
  CHECK_FALSE(Sample(single, Eigen::MatrixXd::Zero(1, 1)).has_ties_in_y());
}

TEST_CASE("sample order permutation invariance")
{
  CounterRng rng(19, 0);
  Sample sample = random_sample(rng, 80, 1);
  EstimatorConfig config;
  config.p = 2;
  config.q = 1;
  config.mu = 1;
  config.h = 0.35;
  MultiIndexBasis basis(1, 1);
  const EvalPoint eval = make_eval(0.5, 0.5);

  // reverse the rows
  Eigen::VectorXd y2 = sample.y().reverse();
  Eigen::MatrixXd x2 = sample.x().colwise().reverse();
  Sample shuffled(y2, x2);

  CHECK((s_hat_y(sample, eval, config) - s_hat_y(shuffled, eval, config)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s_hat_x(sample, eval, config, basis) - s_hat_x(shuffled, eval, config, basis)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r_hat(sample, eval, config, basis) - r_hat(shuffled, eval, config, basis)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("location equivariance is exact on dyadic data")
{
  CounterRng rng(23, 0);
  Sample sample = dyadic_sample(rng, 50, 1);
  EstimatorConfig config;
  config.p = 2;
  config.q = 1;
  config.mu = 1;
  config.h = 0.25;
  MultiIndexBasis basis(1, 1);
  const EvalPoint eval = make_eval(0.5, 0.5);

  const double shift = 3.0;
  Sample shifted(sample.y().array() + shift, sample.x().array() + shift);
  EvalPoint eval_shifted = make_eval(0.5 + shift, 0.5 + shift);

  CHECK((s_hat_y(sample, eval, config) - s_hat_y(shifted, eval_shifted, config)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r_hat(sample, eval, config, basis) - r_hat(shifted, eval_shifted, config, basis)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("scale homogeneity under joint dyadic rescaling")
{
  // scaling (y, x, h) by a multiplies S_y-hat by 1/a, R-hat by
  // a^-(1+d+mu+|nu|), and the estimate by a^-(mu+|nu|)
  CounterRng rng(29, 0);
  Sample sample = dyadic_sample(rng, 60, 1);
  EstimatorConfig config;
  config.p = 2;
  config.q = 1;
  config.mu = 1;
  config.h = 0.25;
  MultiIndexBasis basis(1, 1);
  const EvalPoint eval = make_eval(0.5, 0.5);

  const double a = 2.0;
  Sample scaled(sample.y() * a, sample.x() * a);
  EstimatorConfig scaled_config = config;
  scaled_config.h = config.h * a;
  EvalPoint scaled_eval = make_eval(0.5 * a, 0.5 * a);

  const Eigen::MatrixXd sy = s_hat_y(sample, eval, config);
  const Eigen::MatrixXd sy2 = s_hat_y(scaled, scaled_eval, scaled_config);
  CHECK((sy2 * a - sy).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd r = r_hat(sample, eval, config, basis);
  const Eigen::MatrixXd r2 = r_hat(scaled, scaled_eval, scaled_config, basis);
  const double power = 1 + 1 + config.mu + config.nu_abs();
  CHECK((r2 * std::pow(a, power) - r).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("r_bar with the empirical weighting reproduces r_hat")
{
  CounterRng rng(31, 0);
  Sample sample = random_sample(rng, 30, 1);
  EstimatorConfig config;
  config.p = 2;
  config.q = 1;
  config.mu = 1;
  config.h = 0.4;
  config.weighting = Weighting::empirical;
  MultiIndexBasis basis(1, 1);
  const EvalPoint eval = make_eval(0.5, 0.5);
  const SupportModel support = sample_range_support(sample);

  const Eigen::MatrixXd bar = r_bar(sample, eval, config, support, basis);
  const Eigen::MatrixXd hat = r_hat(sample, eval, config, basis);
  const double scale = std::max(1.0, hat.cwiseAbs().maxCoeff());
  CHECK((bar - hat).cwiseAbs().maxCoeff() / scale < 1e-12);
}

TEST_CASE("r_bar inner integral drops the indicator for low y_i")
{
  // single observation far below the window: the inner vector equals
  // column 0 of the integrated S_y
  EstimatorConfig config;
  config.p = 2;
  config.q = 0;
  config.mu = 1;
  config.h = 1.0;
  config.weighting = Weighting::integrated;

  Eigen::VectorXd y(1);
  y << -10.0;
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  Sample sample(y, x);

  SupportModel support;
  support.y_lo = -20.0;
  support.y_hi = 20.0;
  support.x_lo = Eigen::VectorXd::Zero(1);
  support.x_hi = Eigen::VectorXd::Ones(1);
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };

  EvalPoint eval = make_eval(0.0, 0.5);
  MultiIndexBasis basis(1, 0);
  const Eigen::MatrixXd bar = r_bar(sample, eval, config, support, basis);
  const Eigen::MatrixXd s_y = integrated_s_y(eval, config, support);
  // R-bar = J (L(0) q0)^T / (n h^(d+mu)); with n = 1, h = 1, q = 0 basis:
  const double l0 = kernel_value(config.kernel, 0.0);
  CHECK((bar.col(0) / l0 - s_y.col(0)).cwiseAbs().maxCoeff() < 1e-12);

  // and an observation above the window contributes nothing
  Eigen::VectorXd y_hi(1);
  y_hi << 10.0;
  Sample sample_hi(y_hi, x);
  CHECK(r_bar(sample_hi, eval, config, support, basis).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("integrated matrices at an interior point")
{
  EstimatorConfig config;
  config.p = 1;
  config.q = 0;
  config.mu = 1;
  config.h = 0.5;

  SupportModel support;
  support.y_lo = 0.0;
  support.y_hi = 1.0;
  support.x_lo = Eigen::VectorXd::Zero(1);
  support.x_hi = Eigen::VectorXd::Ones(1);
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };

  const EvalPoint eval = make_eval(0.5, 0.5);
  const Eigen::MatrixXd s_y = integrated_s_y(eval, config, support);
  CHECK(s_y(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(s_y(0, 1) == Catch::Approx(0.0).margin(1e-12));
  CHECK(s_y(1, 1) == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("integrated matrices at the boundary: one-sided moments")
{
  EstimatorConfig config;
  config.p = 1;
  config.q = 0;
  config.mu = 1;
  config.h = 0.5;

  SupportModel support;
  support.y_lo = 0.0;
  support.y_hi = 1.0;
  support.x_lo = Eigen::VectorXd::Zero(1);
  support.x_hi = Eigen::VectorXd::Ones(1);
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };

  // window truncates to [0, 1]; Epanechnikov one-sided moments:
  // int_0^1 K = 1/2, int_0^1 u K = 3/16, int_0^1 u^2 K = 1/10
  const EvalPoint eval = make_eval(0.0, 0.5);
  const Eigen::MatrixXd s_y = integrated_s_y(eval, config, support);
  CHECK(s_y(0, 0) == Catch::Approx(0.5).margin(1e-12));
  CHECK(s_y(0, 1) == Catch::Approx(0.1875).margin(1e-12));
  CHECK(s_y(1, 0) == Catch::Approx(0.1875).margin(1e-12));
  CHECK(s_y(1, 1) == Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("projection identities for integrated matrices")
{
  EstimatorConfig config;
  config.p = 3;
  config.q = 2;
  config.mu = 1;
  config.h = 0.5;

  SupportModel support;
  support.y_lo = 0.0;
  support.y_hi = 1.0;
  support.x_lo = Eigen::VectorXd::Zero(1);
  support.x_hi = Eigen::VectorXd::Ones(1);
  support.g = [](double y) { return 0.5 + y; }; // non-uniform weighting
  support.f_x = [](const Eigen::VectorXd& x) { return 0.8 + 0.4 * x(0); };

  for (double y : { 0.0, 0.5, 0.97 }) {
    const EvalPoint eval = make_eval(y, 0.5);
    const IntegratedMatrices mats = integrated_matrices(eval, config, support);
    DesignSolver solver(mats.s_y);
    for (int ell = 0; ell <= config.p; ++ell) {
      const Eigen::VectorXd e = solver.solve(mats.c_y[ell]);
      for (int a = 0; a <= config.p; ++a) {
        CHECK(e(a) == Catch::Approx(a == ell ? 1.0 : 0.0).margin(1e-9));
      }
    }
    DesignSolver solver_x(mats.s_x);
    MultiIndexBasis basis(1, config.q);
    for (const auto& [m, c] : mats.c_x) {
      if (total_degree(m) > config.q) {
        continue;
      }
      const Eigen::VectorXd e = solver_x.solve(c);
      const int pos = basis.position(m);
      for (int a = 0; a < basis.size(); ++a) {
        CHECK(e(a) == Catch::Approx(a == pos ? 1.0 : 0.0).margin(1e-9));
      }
    }
  }
}

TEST_CASE("integrated matrices reject unsupported dimensions and empty windows")
{
  EstimatorConfig config;
  config.p = 1;
  config.q = 1;
  config.mu = 1;
  config.h = 0.1;

  SupportModel support;
  support.y_lo = 0.0;
  support.y_hi = 1.0;
  support.x_lo = Eigen::VectorXd::Zero(4);
  support.x_hi = Eigen::VectorXd::Ones(4);
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };

  EvalPoint eval;
  eval.y = 0.5;
  eval.x = Eigen::VectorXd::Constant(4, 0.5);
  config.nu = MultiIndex(4, 0);
  CHECK_THROWS_AS(integrated_matrices(eval, config, support), std::invalid_argument);

  SupportModel support1 = support;
  support1.x_lo = Eigen::VectorXd::Zero(1);
  support1.x_hi = Eigen::VectorXd::Ones(1);
  EvalPoint outside = make_eval(5.0, 0.5);
  EstimatorConfig c1 = config;
  c1.nu = MultiIndex(1, 0);
  CHECK_THROWS_AS(integrated_matrices(outside, c1, support1), std::invalid_argument);
}

TEST_CASE("empirical c vectors satisfy the projection identities")
{
  CounterRng rng(37, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng.next_uniform() * 2.0);
    Sample sample = random_sample(rng, 150, d);
    EstimatorConfig config;
    config.p = 2;
    config.q = 2;
    config.mu = 1;
    config.h = 0.5 + 0.3 * rng.next_uniform();
    MultiIndexBasis basis(d, config.q);
    EvalPoint eval;
    eval.y = 0.3 + 0.4 * rng.next_uniform();
    eval.x = Eigen::VectorXd::Constant(d, 0.5);

    DesignSolver solver_y(s_hat_y(sample, eval, config));
    for (int ell = 0; ell <= config.p; ++ell) {
      const Eigen::VectorXd c = c_hat_y(sample, eval, config, ell);
      const Eigen::VectorXd e = solver_y.solve(c);
      for (int a = 0; a <= config.p; ++a) {
        CHECK(e(a) == Catch::Approx(a == ell ? 1.0 : 0.0).margin(1e-9));
      }
    }
    DesignSolver solver_x(s_hat_x(sample, eval, config, basis));
    for (int pos = 0; pos < basis.size(); ++pos) {
      const Eigen::VectorXd c = c_hat_x(sample, eval, config, basis, basis[pos]);
      const Eigen::VectorXd e = solver_x.solve(c);
      for (int a = 0; a < basis.size(); ++a) {
        CHECK(e(a) == Catch::Approx(a == pos ? 1.0 : 0.0).margin(1e-9));
      }
    }
  }
}

TEST_CASE("solve_design basics")
{
  CHECK((solve_design(Eigen::MatrixXd::Identity(3, 3), unit_vector(3, 0)) - unit_vector(3, 0))
          .cwiseAbs()
          .maxCoeff() < 1e-15);

  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.0, 0.0, 4.0;
  Eigen::VectorXd rhs(2);
  rhs << 1.0, 1.0;
  const Eigen::VectorXd z = solve_design(m, rhs);
  CHECK(z(0) == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(z(1) == Catch::Approx(0.25).epsilon(1e-14));

  CHECK_THROWS_AS(solve_design(Eigen::MatrixXd::Zero(2, 2), rhs), degenerate_design);
}

TEST_CASE("empirical matrices converge to integrated ones")
{
  // RMSE roughly halves when n quadruples
  EstimatorConfig config;
  config.p = 2;
  config.q = 0;
  config.mu = 1;
  config.h = 0.3;
  const EvalPoint eval = make_eval(0.5, 0.5);
  SupportModel support;
  support.y_lo = 0.0;
  support.y_hi = 1.0;
  support.x_lo = Eigen::VectorXd::Zero(1);
  support.x_hi = Eigen::VectorXd::Ones(1);
  support.g = [](double) { return 1.0; };
  support.f_x = [](const Eigen::VectorXd&) { return 1.0; };
  const Eigen::MatrixXd target = integrated_s_y(eval, config, support);

  auto rmse = [&](int n, int reps, std::uint64_t seed) {
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
      CounterRng rng(seed, r);
      Sample sample = random_sample(rng, n, 1);
      const Eigen::MatrixXd err = s_hat_y(sample, eval, config) - target;
      total += err.squaredNorm();
    }
    return std::sqrt(total / reps);
  };
  const double coarse = rmse(400, 40, 41);
  const double fine = rmse(1600, 40, 43);
  CHECK(fine < 0.75 * coarse);
}
