// Command-line front end: dataset ingestion, estimation, confidence bands,
// specification and shape tests, bandwidth selection, and the Monte Carlo
// coverage study. Outputs are CSV plus a JSON summary; every run is
// deterministic given the configuration and seed.

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lpcd/lpcd.hpp>

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonOpts
{
  std::string input;
  std::string y_col{ "y" };
  std::vector<std::string> x_cols{ "x1" };
  std::string grid{ "20:0,1" };
  std::string x_eval{ "0" };
  int theta{ 0 };
  int p{ 2 };
  int q{ -1 };
  std::string kernel{ "epanechnikov" };
  std::string bw{ "rot" };
  double alpha{ 0.05 };
  std::string cov_method{ "jackknife" };
  int draws{ 3000 };
  std::uint64_t seed{ 20240923ULL };
  int threads{ 0 };
  std::string out{ "lpcd_out" };
  bool rbc{ true };
  bool clip{ false };
};

void
add_common(CLI::App* cmd, CommonOpts& opts, bool needs_input)
{
  if (needs_input) {
    cmd->add_option("--input", opts.input, "input CSV with a header row")->required();
    cmd->add_option("--y-col", opts.y_col, "name of the y column");
    cmd->add_option("--x-cols", opts.x_cols, "names of the x columns")->delimiter(',');
  }
  cmd->add_option("--grid", opts.grid, "y grid: 'N:lo,hi' or explicit 'y1,y2,...'");
  cmd->add_option("--x-eval", opts.x_eval, "conditioning point, comma-separated");
  cmd->add_option("--theta", opts.theta, "derivative order of the conditional density");
  cmd->add_option("--p", opts.p, "y polynomial order used for bandwidth selection");
  cmd->add_option("--q", opts.q, "x polynomial order (default p - theta - 1)");
  cmd->add_option("--kernel", opts.kernel, "epanechnikov | triangular | uniform");
  cmd->add_option("--bw", opts.bw, "rot | mse | imse | fixed:<value>");
  cmd->add_option("--alpha", opts.alpha, "level for bands and tests");
  cmd->add_option("--cov-method", opts.cov_method, "jackknife | plugin | asymptotic");
  cmd->add_option("--draws", opts.draws, "Gaussian simulation draws");
  cmd->add_option("--seed", opts.seed, "seed for all randomized steps");
  cmd->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
  cmd->add_option("--out", opts.out, "output path prefix");
  cmd->add_flag("--rbc,!--no-rbc", opts.rbc, "robust bias correction (default on)");
}

std::vector<double>
parse_list(const std::string& text)
{
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    double value = 0.0;
    if (!lpcd::io::parse_double(cell, value)) {
      throw std::invalid_argument("cannot parse number '" + cell + "'");
    }
    values.push_back(value);
  }
  if (values.empty()) {
    throw std::invalid_argument("empty numeric list");
  }
  return values;
}

std::vector<lpcd::EvalPoint>
parse_grid(const CommonOpts& opts)
{
  const std::vector<double> x = parse_list(opts.x_eval);
  Eigen::VectorXd x_eval(static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    x_eval(static_cast<Eigen::Index>(k)) = x[k];
  }
  std::vector<double> ys;
  const auto colon = opts.grid.find(':');
  if (colon != std::string::npos) {
    const int count = std::stoi(opts.grid.substr(0, colon));
    const std::vector<double> range = parse_list(opts.grid.substr(colon + 1));
    if (count < 1 || range.size() != 2 || !(range[0] < range[1])) {
      throw std::invalid_argument("grid spec must be 'N:lo,hi' with lo < hi");
    }
    for (int g = 0; g < count; ++g) {
      ys.push_back(count == 1 ? 0.5 * (range[0] + range[1])
                              : range[0] + (range[1] - range[0]) * g / (count - 1.0));
    }
  } else {
    ys = parse_list(opts.grid);
  }
  std::vector<lpcd::EvalPoint> grid;
  for (double y : ys) {
    lpcd::EvalPoint pt;
    pt.y = y;
    pt.x = x_eval;
    grid.push_back(pt);
  }
  return grid;
}

lpcd::InferenceOptions
make_inference_options(const CommonOpts& opts)
{
  lpcd::InferenceOptions inference;
  inference.p = opts.p;
  inference.q = opts.q;
  inference.rbc = opts.rbc;
  inference.alpha = opts.alpha;
  inference.draws = opts.draws;
  inference.seed = opts.seed;
  inference.threads = opts.threads;
  inference.kernel.family = lpcd::kernel_from_name(opts.kernel);
  inference.method = lpcd::cov_method_from_name(opts.cov_method);
  if (opts.bw == "rot") {
    inference.bw = lpcd::BwMode::rot;
  } else if (opts.bw == "mse") {
    inference.bw = lpcd::BwMode::mse;
  } else if (opts.bw == "imse") {
    inference.bw = lpcd::BwMode::imse;
  } else if (opts.bw.rfind("fixed:", 0) == 0) {
    inference.bw = lpcd::BwMode::fixed;
    inference.h_fixed = std::stod(opts.bw.substr(6));
  } else {
    throw std::invalid_argument("--bw must be rot, mse, imse, or fixed:<value>");
  }
  return inference;
}

json
config_echo(const CommonOpts& opts, int n, int dropped)
{
  json config;
  config["input"] = opts.input;
  config["y_col"] = opts.y_col;
  config["x_cols"] = opts.x_cols;
  config["grid"] = opts.grid;
  config["x_eval"] = opts.x_eval;
  config["theta"] = opts.theta;
  config["p"] = opts.p;
  config["q"] = opts.q;
  config["kernel"] = opts.kernel;
  config["bw"] = opts.bw;
  config["alpha"] = opts.alpha;
  config["cov_method"] = opts.cov_method;
  config["draws"] = opts.draws;
  config["rbc"] = opts.rbc;
  config["n_used"] = n;
  config["rows_dropped"] = dropped;
  return config;
}

void
write_json(const std::string& path, const json& value)
{
  std::ofstream out(path);
  if (!out) {
    throw lpcd::io::io_error("cannot write " + path);
  }
  out << value.dump(2) << '\n';
}

json
summary_header(const CommonOpts& opts, std::uint64_t seed, double wall_clock)
{
  json summary;
  summary["version"] = LPCD_VERSION;
  summary["seed"] = seed;
  summary["wall_clock_seconds"] = wall_clock;
  summary["threads"] = opts.threads;
  return summary;
}

lpcd::Sample
load_input(const CommonOpts& opts, int& dropped)
{
  const lpcd::io::LoadResult loaded = lpcd::io::load_sample_csv(opts.input, opts.y_col, opts.x_cols);
  dropped = loaded.dropped_rows;
  return lpcd::Sample(loaded.y, loaded.x);
}

std::vector<std::string>
point_row(const lpcd::EvalPoint& pt)
{
  std::vector<std::string> cells{ lpcd::io::format_double(pt.y) };
  for (Eigen::Index k = 0; k < pt.x.size(); ++k) {
    cells.push_back(lpcd::io::format_double(pt.x(k)));
  }
  return cells;
}

std::vector<std::string>
point_header(int d)
{
  std::vector<std::string> cells{ "y" };
  for (int k = 1; k <= d; ++k) {
    cells.push_back("x" + std::to_string(k));
  }
  return cells;
}

int
cmd_estimate(const CommonOpts& opts)
{
  const auto start = std::chrono::steady_clock::now();
  int dropped = 0;
  const lpcd::Sample sample = load_input(opts, dropped);
  const std::vector<lpcd::EvalPoint> grid = parse_grid(opts);
  const lpcd::InferenceOptions inference = make_inference_options(opts);
  const lpcd::BandResult fit = lpcd::estimate_grid(sample, grid, opts.theta, inference);

  lpcd::io::CsvWriter csv(opts.out + ".csv");
  std::vector<std::string> header = point_header(sample.d());
  header.insert(header.end(), { "estimate", "se" });
  csv.row(header);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<std::string> row = point_row(grid[g]);
    row.push_back(lpcd::io::format_double(fit.estimates(static_cast<Eigen::Index>(g))));
    row.push_back(lpcd::io::format_double(fit.se(static_cast<Eigen::Index>(g))));
    csv.row(row);
  }

  const double wall =
    std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start).count();
  json summary = summary_header(opts, inference.seed, wall);
  summary["command"] = "estimate";
  summary["config"] = config_echo(opts, sample.n(), dropped);
  summary["h"] = fit.h_used;
  summary["p_used"] = fit.p_used;
  summary["q_used"] = fit.q_used;
  summary["cov_method"] = lpcd::cov_method_name(inference.method);
  summary["dropped_grid_points"] = fit.dropped;
  write_json(opts.out + ".json", summary);
  std::cout << "estimate: " << grid.size() << " grid points, h = " << fit.h_used << ", artifacts at " << opts.out
            << ".{csv,json}\n";
  return kExitOk;
}

void
write_band_artifacts(const CommonOpts& opts, const lpcd::Sample& sample, const lpcd::BandResult& band, int dropped,
                     double wall)
{
  lpcd::io::CsvWriter csv(opts.out + ".csv");
  std::vector<std::string> header = point_header(sample.d());
  header.insert(header.end(), { "estimate", "se", "lower", "upper" });
  csv.row(header);
  for (std::size_t g = 0; g < band.grid.size(); ++g) {
    const auto i = static_cast<Eigen::Index>(g);
    std::vector<std::string> row = point_row(band.grid[g]);
    row.push_back(lpcd::io::format_double(band.estimates(i)));
    row.push_back(lpcd::io::format_double(band.se(i)));
    row.push_back(lpcd::io::format_double(band.lower(i)));
    row.push_back(lpcd::io::format_double(band.upper(i)));
    csv.row(row);
  }

  // long-form plot data: one series per column group
  lpcd::io::CsvWriter plot(opts.out + "_plot.csv");
  plot.row({ "series", "y", "value" });
  for (const char* series : { "estimate", "lower", "upper" }) {
    for (std::size_t g = 0; g < band.grid.size(); ++g) {
      const auto i = static_cast<Eigen::Index>(g);
      const double value = std::string(series) == "estimate" ? band.estimates(i)
                           : std::string(series) == "lower"  ? band.lower(i)
                                                             : band.upper(i);
      plot.row({ series, lpcd::io::format_double(band.grid[g].y), lpcd::io::format_double(value) });
    }
  }

  json summary = summary_header(opts, band.cv.seed, wall);
  summary["command"] = "bands";
  summary["config"] = config_echo(opts, sample.n(), dropped);
  summary["cv"] = band.cv.value;
  summary["alpha"] = band.cv.alpha;
  summary["draws"] = band.cv.draws;
  summary["h"] = band.h_used;
  summary["bandwidth_case"] = band.bandwidth.case_id;
  summary["p_used"] = band.p_used;
  summary["q_used"] = band.q_used;
  summary["rbc"] = band.rbc;
  summary["cov_method"] = lpcd::cov_method_name(band.surface.method);
  summary["psd_jitter"] = band.surface.psd_jitter;
  summary["dropped_grid_points"] = band.dropped;
  write_json(opts.out + ".json", summary);
}

int
cmd_bands(const CommonOpts& opts)
{
  const auto start = std::chrono::steady_clock::now();
  int dropped = 0;
  const lpcd::Sample sample = load_input(opts, dropped);
  const std::vector<lpcd::EvalPoint> grid = parse_grid(opts);
  const lpcd::InferenceOptions inference = make_inference_options(opts);
  const lpcd::BandResult band = lpcd::confidence_band(sample, grid, opts.theta, inference);
  const double wall =
    std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start).count();
  write_band_artifacts(opts, sample, band, dropped, wall);
  std::cout << "bands: cv = " << band.cv.value << ", h = " << band.h_used << ", artifacts at " << opts.out
            << ".{csv,json}\n";
  return kExitOk;
}

int
cmd_test(const CommonOpts& opts, const std::string& values_path, bool shape)
{
  const auto start = std::chrono::steady_clock::now();
  int dropped = 0;
  const lpcd::Sample sample = load_input(opts, dropped);
  const std::vector<lpcd::EvalPoint> grid = parse_grid(opts);
  const lpcd::InferenceOptions inference = make_inference_options(opts);

  const lpcd::io::Table table = lpcd::io::read_csv(values_path);
  const int value_col = table.column("value");
  const int y_col = [&]() {
    try {
      return table.column("y");
    } catch (const lpcd::io::io_error&) {
      return -1;
    }
  }();
  if (table.rows.size() != grid.size()) {
    throw std::invalid_argument("values file has " + std::to_string(table.rows.size()) + " rows, grid has " +
                                std::to_string(grid.size()));
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double value = 0.0;
    if (!lpcd::io::parse_double(table.rows[g][value_col], value)) {
      throw std::invalid_argument("values row " + std::to_string(g + 1) + " is not numeric");
    }
    values(static_cast<Eigen::Index>(g)) = value;
    if (y_col >= 0) {
      double y = 0.0;
      if (!lpcd::io::parse_double(table.rows[g][y_col], y) || std::abs(y - grid[g].y) > 1e-6) {
        throw std::invalid_argument("values row " + std::to_string(g + 1) + " does not match the grid ordering");
      }
    }
  }

  const lpcd::TestResult result = shape ? lpcd::shape_test(sample, grid, values, opts.theta, inference)
                                        : lpcd::spec_test(sample, grid, values, opts.theta, inference);

  lpcd::io::CsvWriter csv(opts.out + ".csv");
  std::vector<std::string> header = point_header(sample.d());
  header.insert(header.end(), { "estimate", "se", "reference", "t" });
  csv.row(header);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto i = static_cast<Eigen::Index>(g);
    std::vector<std::string> row = point_row(grid[g]);
    row.push_back(lpcd::io::format_double(result.fit.estimates(i)));
    row.push_back(lpcd::io::format_double(result.fit.se(i)));
    row.push_back(lpcd::io::format_double(values(i)));
    row.push_back(lpcd::io::format_double(result.per_point(i)));
    csv.row(row);
  }

  const double wall =
    std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start).count();
  json summary = summary_header(opts, inference.seed, wall);
  summary["command"] = shape ? "test-shape" : "test-spec";
  summary["config"] = config_echo(opts, sample.n(), dropped);
  summary["statistic"] = result.statistic;
  summary["cv"] = result.cv.value;
  summary["alpha"] = result.cv.alpha;
  summary["sided"] = shape ? "one_sided_sup" : "two_sided_abs";
  summary["reject"] = result.reject;
  summary["p_value"] = result.p_value;
  summary["h"] = result.fit.h_used;
  summary["dropped_grid_points"] = result.fit.dropped;
  write_json(opts.out + ".json", summary);
  std::cout << (shape ? "test-shape" : "test-spec") << ": statistic = " << result.statistic
            << ", cv = " << result.cv.value << ", p = " << result.p_value << (result.reject ? " -> reject" : "")
            << "\n";
  return kExitOk;
}

int
cmd_bw(const CommonOpts& opts)
{
  const auto start = std::chrono::steady_clock::now();
  int dropped = 0;
  const lpcd::Sample sample = load_input(opts, dropped);
  const std::vector<lpcd::EvalPoint> grid = parse_grid(opts);
  const lpcd::InferenceOptions inference = make_inference_options(opts);

  lpcd::EstimatorConfig base;
  base.p = opts.p;
  base.q = opts.q >= 0 ? opts.q : opts.p - opts.theta - 1;
  base.mu = 1 + opts.theta;
  base.nu = lpcd::MultiIndex(static_cast<std::size_t>(sample.d()), 0);
  base.kernel = inference.kernel;
  base.h = 1.0;

  lpcd::io::CsvWriter csv(opts.out + ".csv");
  csv.row({ "y", "h", "case_id", "clamped" });
  json points = json::array();
  for (const lpcd::EvalPoint& pt : grid) {
    lpcd::BandwidthResult result;
    if (inference.bw == lpcd::BwMode::imse) {
      result = lpcd::imse_optimal_h(sample, grid, base, lpcd::normal_reference(sample),
                                    lpcd::sample_range_support(sample), sample.n());
    } else if (inference.bw == lpcd::BwMode::mse) {
      result = lpcd::mse_optimal_h(pt, base, lpcd::normal_reference(sample), lpcd::sample_range_support(sample),
                                   sample.n(), lpcd::sample_h_min(sample, pt, base));
    } else if (inference.bw == lpcd::BwMode::fixed) {
      result.h = inference.h_fixed;
    } else {
      result = lpcd::rot_h(sample, pt, base);
    }
    csv.row({ lpcd::io::format_double(pt.y), lpcd::io::format_double(result.h), std::to_string(result.case_id),
              result.clamped ? "1" : "0" });
    points.push_back({ { "y", pt.y }, { "h", result.h }, { "case_id", result.case_id } });
  }
  const lpcd::BandwidthResult study = inference.bw == lpcd::BwMode::rot
                                        ? lpcd::rot_h_grid(sample, grid, base)
                                        : lpcd::BandwidthResult{};

  const double wall =
    std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start).count();
  json summary = summary_header(opts, inference.seed, wall);
  summary["command"] = "bw";
  summary["config"] = config_echo(opts, sample.n(), dropped);
  summary["points"] = points;
  if (inference.bw == lpcd::BwMode::rot) {
    summary["grid_h"] = study.h;
    summary["grid_case_id"] = study.case_id;
    std::cout << "bw: grid h = " << study.h << " (case " << study.case_id << "), pointwise values at " << opts.out
              << ".csv\n";
  } else {
    std::cout << "bw: pointwise values at " << opts.out << ".csv\n";
  }
  write_json(opts.out + ".json", summary);
  return kExitOk;
}

int
cmd_simulate(const CommonOpts& opts, const std::string& dgp_name, int n, int reps)
{
  const lpcd::sim::Dgp dgp = lpcd::sim::dgp_from_name(dgp_name);
  const std::vector<lpcd::EvalPoint> grid = parse_grid(opts);
  lpcd::sim::StudyOptions study;
  study.p = opts.p;
  study.q = opts.q >= 0 ? opts.q : opts.p - opts.theta - 1;
  study.theta = opts.theta;
  study.alpha = opts.alpha;
  study.method = lpcd::cov_method_from_name(opts.cov_method);
  study.draws = opts.draws;
  study.kernel.family = lpcd::kernel_from_name(opts.kernel);
  study.threads = opts.threads;
  const lpcd::sim::MCReport report = lpcd::sim::run_coverage_study(dgp, n, reps, grid, study, opts.seed);

  auto mean_abs = [](const Eigen::VectorXd& v) { return v.cwiseAbs().mean(); };
  auto mean_of = [](const Eigen::VectorXd& v) { return v.mean(); };
  std::printf("                h     bias       se   |  cover pw   unif  |  width pw   unif\n");
  for (const auto& [label, arm] : { std::pair<const char*, const lpcd::sim::McArm*>{ "WBC", &report.wbc },
                                    { "RBC", &report.rbc } }) {
    std::printf("  %s      %7.3f  %7.3f  %7.3f  |    %5.1f   %5.1f  |   %6.3f  %6.3f\n", label, report.mean_h,
                mean_abs(arm->mean_bias), mean_of(arm->mean_se), 100.0 * arm->pointwise_coverage.mean(),
                100.0 * arm->uniform_coverage, mean_of(arm->mean_pointwise_width), arm->mean_uniform_width);
  }

  lpcd::io::CsvWriter csv(opts.out + ".csv");
  csv.row({ "arm", "y", "mean_h_point", "mean_bias", "mean_se", "pointwise_coverage", "mean_pointwise_width" });
  for (const auto& [label, arm] : { std::pair<const char*, const lpcd::sim::McArm*>{ "WBC", &report.wbc },
                                    { "RBC", &report.rbc } }) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto i = static_cast<Eigen::Index>(g);
      csv.row({ label, lpcd::io::format_double(grid[g].y), lpcd::io::format_double(report.mean_h_point(i)),
                lpcd::io::format_double(arm->mean_bias(i)), lpcd::io::format_double(arm->mean_se(i)),
                lpcd::io::format_double(arm->pointwise_coverage(i)),
                lpcd::io::format_double(arm->mean_pointwise_width(i)) });
    }
  }

  json summary = summary_header(opts, report.seed, report.wall_clock_seconds);
  summary["command"] = "simulate";
  summary["config"] = config_echo(opts, n, 0);
  summary["dgp"] = report.dgp;
  summary["n"] = report.n;
  summary["reps"] = report.reps;
  summary["failures"] = report.failures;
  summary["mean_h"] = report.mean_h;
  for (const auto& [label, arm] : { std::pair<const char*, const lpcd::sim::McArm*>{ "wbc", &report.wbc },
                                    { "rbc", &report.rbc } }) {
    summary[label] = { { "uniform_coverage", arm->uniform_coverage },
                       { "mean_uniform_width", arm->mean_uniform_width },
                       { "mean_cv", arm->mean_cv },
                       { "pointwise_coverage_mean", arm->pointwise_coverage.mean() },
                       { "mean_abs_bias", arm->mean_bias.cwiseAbs().mean() },
                       { "mean_se", arm->mean_se.mean() } };
  }
  write_json(opts.out + ".json", summary);
  std::cout << "simulate: " << reps << " replications done, artifacts at " << opts.out << ".{csv,json}\n";
  return kExitOk;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "boundary-adaptive local polynomial conditional density estimation" };
  app.set_config("--config", "", "flat key=value configuration file; flags take precedence");
  app.require_subcommand(1);

  CommonOpts opts;
  std::string values_path;
  std::string dgp_name{ "truncated-normal" };
  int sim_n = 1000;
  int sim_reps = 100;

  CLI::App* estimate = app.add_subcommand("estimate", "point estimates with standard errors");
  add_common(estimate, opts, true);
  CLI::App* bands = app.add_subcommand("bands", "uniform confidence bands");
  add_common(bands, opts, true);
  CLI::App* test_spec = app.add_subcommand("test-spec", "parametric specification test");
  add_common(test_spec, opts, true);
  test_spec->add_option("--values", values_path, "CSV of (y, value) rows matching the grid")->required();
  CLI::App* test_shape = app.add_subcommand("test-shape", "shape restriction test");
  add_common(test_shape, opts, true);
  test_shape->add_option("--values", values_path, "CSV of (y, value) rows matching the grid")->required();
  CLI::App* bw = app.add_subcommand("bw", "bandwidth selection");
  add_common(bw, opts, true);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study");
  add_common(simulate, opts, false);
  simulate->add_option("--dgp", dgp_name, "truncated-normal | uniform | mixture");
  simulate->add_option("--n", sim_n, "sample size per replication");
  simulate->add_option("--reps", sim_reps, "number of replications");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    if (error.get_exit_code() == 0) {
      return app.exit(error); // --help
    }
    std::cerr << json{ { "error", error.what() }, { "exit_code", kExitConfig } }.dump() << '\n';
    return kExitConfig;
  }

  try {
    if (estimate->parsed()) {
      return cmd_estimate(opts);
    }
    if (bands->parsed()) {
      return cmd_bands(opts);
    }
    if (test_spec->parsed()) {
      return cmd_test(opts, values_path, false);
    }
    if (test_shape->parsed()) {
      return cmd_test(opts, values_path, true);
    }
    if (bw->parsed()) {
      return cmd_bw(opts);
    }
    if (simulate->parsed()) {
      return cmd_simulate(opts, dgp_name, sim_n, sim_reps);
    }
  } catch (const lpcd::io::io_error& error) {
    std::cerr << json{ { "error", error.what() }, { "exit_code", kExitIo } }.dump() << '\n';
    return kExitIo;
  } catch (const lpcd::degenerate_design& error) {
    std::cerr << json{ { "error", error.what() }, { "exit_code", kExitNumeric } }.dump() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& error) {
    std::cerr << json{ { "error", error.what() }, { "exit_code", kExitConfig } }.dump() << '\n';
    return kExitConfig;
  } catch (const std::exception& error) {
    std::cerr << json{ { "error", error.what() }, { "exit_code", kExitNumeric } }.dump() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}
