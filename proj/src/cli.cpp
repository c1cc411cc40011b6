#include "lahm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lahm/analysis.hpp"
#include "lahm/distributions.hpp"
#include "lahm/gnss.hpp"
#include "lahm/simulation.hpp"
#include "text_io.hpp"

namespace lahm::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kMomentScaleAtUnitSigma = std::numbers::sqrt3 / std::numbers::pi;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto field : text::split(s)) {
    if (!field.empty()) out.emplace_back(field);
  }
  return out;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Pulls `--config FILE` out of args and appends every key=value it holds
// whose flag is not already on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string config_path;
  for (auto it = args.begin(); it != args.end();) {
    if (*it == "--config") {
      if (std::next(it) == args.end()) throw InputError("--config needs a file");
      config_path = *std::next(it);
      it = args.erase(it, std::next(it, 2));
    } else if (it->rfind("--config=", 0) == 0) {
      config_path = it->substr(9);
      it = args.erase(it);
    } else {
      ++it;
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in = open_input(config_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(config_path + ": " + text::where(line_no) + "expected key=value");
    }
    std::string key(text::trim(std::string_view(line).substr(0, eq)));
    const std::string value(text::trim(std::string_view(line).substr(eq + 1)));
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (has_flag(args, key)) continue;
    args.push_back(key);
    args.push_back(value);
  }
  return args;
}

// -- fit ----------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string distribution = "both";
  std::string out;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  std::ifstream in = open_input(a.input);
  const std::vector<double> samples = read_samples(in);

  std::ostringstream table;
  table << "distribution,location,scale\n" << std::setprecision(10);
  std::optional<GaussianParams> gauss;
  std::optional<LogisticParams> logistic;
  if (a.distribution != "logistic") {
    gauss = fit_gaussian_mle(samples);
    table << "gaussian," << gauss->mean_mu << ',' << gauss->std_sigma << '\n';
  }
  if (a.distribution != "gaussian") {
    logistic = fit_logistic_mle(samples);
    table << "logistic," << logistic->location_m << ',' << logistic->scale_s << '\n';
  }
  if (a.out.empty()) {
    out << table.str();
  } else {
    open_output(a.out) << table.str();
    out << "wrote " << a.out << '\n';
  }
  out << "samples: " << samples.size() << '\n';
  if (gauss && logistic) {
    const double moment = moment_scale_from_gaussian(gauss->std_sigma);
    out << std::setprecision(6) << "moment scale sqrt(3)/pi*sigma = " << moment
        << ", logistic s / moment scale = " << logistic->scale_s / moment << '\n';
    out << "sanity: logistic s " << logistic->scale_s
        << (logistic->scale_s < gauss->std_sigma / kMomentScaleAtUnitSigma ? " < " : " >= ")
        << "sigma*pi/sqrt(3) " << gauss->std_sigma / kMomentScaleAtUnitSigma << '\n';
  }
  return kSuccess;
}

// -- analyze ------------------------------------------------------------------

struct AnalyzeArgs {
  std::string sweep;
  double s_min = 0.05;
  std::optional<double> s_max;
  double step = 0.05;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const double s_hat = kMomentScaleAtUnitSigma;
  std::ostringstream table;
  out << std::setprecision(6);
  if (a.sweep == "efficiency") {
    const auto points = sweep_efficiency(a.s_min, a.s_max.value_or(3.0), a.step);
    write_efficiency_table(table, points);
    const double lqlc = efficiency_lqlc(s_hat);
    const double lah = efficiency_lah(s_hat);
    out << "# at s = sqrt(3)/pi = " << s_hat << ": efficiency_lqlc = " << lqlc
        << ", efficiency_lah = " << lah << ", are = " << lah / lqlc << '\n';
    out << "# conventional Huber c = 1.345: efficiency = " << efficiency_huber(1.345) << '\n';
  } else {
    const auto points = sweep_ges(a.s_min, a.s_max.value_or(6.0), a.step);
    write_ges_table(table, points);
    const double lqlc = residual_ges(KernelSpec::quasi_log_cosh(s_hat)).value();
    const double lah = residual_ges(KernelSpec::logistic_aided_huber(s_hat)).value();
    const auto min_it = std::min_element(points.begin(), points.end(),
                                         [](const auto& x, const auto& y) { return x.ratio < y.ratio; });
    out << "# at s = sqrt(3)/pi = " << s_hat << ": ges_lqlc = " << lqlc << ", ges_lah = " << lah
        << ", ratio = " << lah / lqlc << '\n';
    out << "# minimum ratio " << min_it->ratio << " at s = " << min_it->scale_s << '\n';
    out << "# ges_ls = inf; measurement breakdown point LAH/LQLC = "
        << measurement_bdp(KernelSpec::logistic_aided_huber(1.0)) << ", LS = "
        << measurement_bdp(KernelSpec::least_squares(1.0)) << '\n';
  }
  if (a.out.empty()) {
    out << table.str();
  } else {
    open_output(a.out) << table.str();
    out << "wrote " << a.out << '\n';
  }
  return kSuccess;
}

// -- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 0;
  std::size_t trials = 100000;
  std::size_t calibration_samples = 100000;
  std::string scales;
  unsigned workers = 1;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.trials == 0) throw InputError("--trials must be positive");
  std::vector<double> scales = default_anchor_scales();
  if (!a.scales.empty()) {
    scales.clear();
    for (const auto& field : split_list(a.scales)) scales.push_back(text::parse_double(field, 1));
  }
  const AnchorScenario scenario = build_default_scenario(scales);
  const ScaleCalibration calibration = calibrate_scales(scenario, a.calibration_samples, a.seed);
  const TrialReport report =
      run_monte_carlo(scenario, calibration, MonteCarloOptions{a.trials, a.seed, a.workers});

  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + a.out_dir + "'");
  {
    auto f = open_output(dir / "summary.csv");
    write_summary_table(f, report);
  }
  {
    auto f = open_output(dir / "scales.csv");
    write_scale_table(f, scenario, calibration);
  }
  for (Estimator e : kAllEstimators) {
    auto f = open_output(dir / (std::string("cdf_") + estimator_name(e) + ".csv"));
    write_cdf(f, report.of(e));
  }
  write_summary_table(out, report);
  out << "wrote " << dir.string() << "/{summary,scales,cdf_LS,cdf_CH,cdf_LAH}.csv\n";
  return kSuccess;
}

// -- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  std::size_t satellites = 10;
  std::string profile = "urban";
  std::string out;
  std::string truth_out;
  std::string training_out;
  std::size_t training_epochs = 2000;
};

// Training epochs come from a stream disjoint from the evaluation epochs.
constexpr std::uint64_t kTrainingStream = 0x747261696eULL;

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  gnss::SyntheticConfig config = a.profile == "clean" ? gnss::clean_profile() : gnss::urban_profile();
  config.seed = a.seed;
  config.n_epochs = a.epochs;
  config.satellite_count = a.satellites;
  const gnss::SyntheticDataset data = gnss::generate_synthetic_epochs(config);
  {
    auto f = open_output(a.out);
    gnss::write_epochs(f, data.epochs);
  }
  if (!a.truth_out.empty()) {
    std::vector<gnss::TruthRecord> truth;
    for (const auto& e : data.epochs) truth.push_back({e.epoch_id, data.truth.position});
    auto f = open_output(a.truth_out);
    gnss::write_truth(f, truth);
  }
  if (!a.training_out.empty()) {
    gnss::SyntheticConfig training = config;
    training.seed = substream_seed(a.seed, kTrainingStream);
    training.n_epochs = a.training_epochs;
    const auto samples = gnss::generate_synthetic_epochs(training).training_samples();
    auto f = open_output(a.training_out);
    gnss::write_training(f, samples);
  }
  out << "generated " << data.epochs.size() << " epochs (" << a.profile << ") -> " << a.out << '\n';
  return kSuccess;
}

// -- spp ----------------------------------------------------------------------

struct SppArgs {
  std::string observations;
  std::string model;
  std::string training;
  std::string model_out;
  double bin_width = 3.0;
  std::size_t min_bin_count = 30;
  std::string methods = "LS,CH,LAH";
  std::string truth;
  std::string out;
};

int cmd_spp(const SppArgs& a, std::ostream& out, std::ostream& err) {
  if (a.model.empty() && a.training.empty()) throw InputError("no scale source (give --model or --training)");
  std::vector<KernelKind> methods;
  for (const auto& m : split_list(a.methods)) methods.push_back(parse_kernel_kind(m));
  if (methods.empty()) throw InputError("no methods selected");

  auto obs_in = open_input(a.observations);
  const auto epochs = gnss::read_epochs(obs_in);

  std::optional<gnss::ElevationScaleModel> model;
  if (!a.model.empty()) {
    auto in = open_input(a.model);
    model = gnss::read_scale_model(in);
  } else {
    auto in = open_input(a.training);
    model = gnss::fit_elevation_model(gnss::read_training(in),
                                      gnss::ElevationFitOptions{a.bin_width, a.min_bin_count});
  }
  if (!a.model_out.empty()) {
    auto f = open_output(a.model_out);
    gnss::write_scale_model(f, *model);
  }

  std::map<std::int64_t, Eigen::Vector3d> truth;
  if (!a.truth.empty()) {
    auto in = open_input(a.truth);
    for (const auto& t : gnss::read_truth(in)) truth[t.epoch_id] = t.position;
  }

  auto fix_out = open_output(a.out);
  gnss::write_fix_header(fix_out, !truth.empty());
  std::map<KernelKind, std::vector<double>> errors;
  std::size_t skipped = 0;
  for (const auto& epoch : epochs) {
    for (KernelKind method : methods) {
      try {
        const gnss::SppFix fix = gnss::spp_solve(epoch, *model, method);
        std::optional<double> error;
        if (const auto it = truth.find(epoch.epoch_id); it != truth.end()) {
          error = (fix.position - it->second).norm();
          errors[method].push_back(*error);
        }
        gnss::write_fix_row(fix_out, fix, error);
      } catch (const std::exception& e) {
        err << "epoch " << epoch.epoch_id << " " << to_string(method) << " skipped: " << e.what() << '\n';
        ++skipped;
      }
    }
  }
  out << "solved " << epochs.size() << " epochs x " << methods.size() << " methods, " << skipped
      << " skipped -> " << a.out << '\n';
  if (!errors.empty()) {
    out << "method,rmse_3d,std_3d\n" << std::fixed << std::setprecision(4);
    for (KernelKind method : methods) {
      if (errors[method].empty()) continue;
      const ErrorSummary s = summarize(errors[method]);
      out << to_string(method) << ',' << s.rmse << ',' << s.std << '\n';
    }
  }
  return kSuccess;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust M-estimation for range and pseudorange positioning", "lahm"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit Gaussian and/or logistic models to a sample file");
  fit_cmd->add_option("--input", fit.input, "One numeric sample per line")->required();
  fit_cmd->add_option("--dist", fit.distribution, "gaussian | logistic | both")
      ->check(CLI::IsMember({"gaussian", "logistic", "both"}));
  fit_cmd->add_option("--out", fit.out, "Parameter table (distribution,location,scale); stdout if omitted");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand(
      "analyze",
      "Efficiency or residual-GES sweep over the logistic scale s.\n"
      "  efficiency columns: s,efficiency_lqlc,efficiency_lah,are (are = efficiency_lah/efficiency_lqlc)\n"
      "  ges columns:        s,ges_lqlc,ges_lah,ratio (ratio = ges_lah/ges_lqlc)");
  analyze_cmd->add_option("--sweep", analyze.sweep, "efficiency | ges")
      ->required()
      ->check(CLI::IsMember({"efficiency", "ges"}));
  analyze_cmd->add_option("--sweep-min", analyze.s_min, "First s (default 0.05)");
  analyze_cmd->add_option("--sweep-max", analyze.s_max, "Last s (default 3.0 efficiency, 6.0 ges)");
  analyze_cmd->add_option("--step", analyze.step, "Grid step (default 0.05)");
  analyze_cmd->add_option("--out", analyze.out, "Table file; stdout if omitted");

  SimulateArgs simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "2D anchor Monte Carlo: LS vs CH vs LAH");
  simulate_cmd->add_option("--seed", simulate.seed, "RNG seed")->required();
  simulate_cmd->add_option("--trials", simulate.trials, "Monte Carlo trials (default 1e5)");
  simulate_cmd->add_option("--calibration-samples", simulate.calibration_samples,
                           "Range errors drawn per anchor for scale fitting (default 1e5)");
  simulate_cmd->add_option("--scales", simulate.scales, "Comma-separated per-anchor t-scales (default eight 1.0)");
  simulate_cmd->add_option("--workers", simulate.workers, "Worker threads, 0 = all cores (default 1)");
  simulate_cmd->add_option("--out", simulate.out_dir, "Output directory")->required();

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Synthetic GNSS epochs");
  generate_cmd->add_option("--seed", generate.seed, "RNG seed")->required();
  generate_cmd->add_option("--epochs", generate.epochs, "Epoch count (default 100)");
  generate_cmd->add_option("--sats", generate.satellites, "Satellites per epoch (default 10)");
  generate_cmd->add_option("--profile", generate.profile, "urban | clean")
      ->check(CLI::IsMember({"urban", "clean"}));
  generate_cmd->add_option("--out", generate.out, "Observation file")->required();
  generate_cmd->add_option("--truth-out", generate.truth_out, "Truth file (epoch_id,x,y,z)");
  generate_cmd->add_option("--training-out", generate.training_out,
                           "Training pairs (elevation_deg,error) from an independent stream");
  generate_cmd->add_option("--training-epochs", generate.training_epochs, "Training epochs (default 2000)");

  SppArgs spp;
  auto* spp_cmd = app.add_subcommand("spp", "Snapshot positioning of an observation file");
  spp_cmd->add_option("--obs", spp.observations, "Observation file")->required();
  spp_cmd->add_option("--model", spp.model, "Elevation scale model file");
  spp_cmd->add_option("--training", spp.training, "Training pairs to fit the model from");
  spp_cmd->add_option("--model-out", spp.model_out, "Write the model in use");
  spp_cmd->add_option("--bin-width", spp.bin_width, "Elevation bin width in degrees (default 3)");
  spp_cmd->add_option("--min-bin-count", spp.min_bin_count, "Bins below this merge (default 30)");
  spp_cmd->add_option("--methods", spp.methods, "Comma-separated LS,CH,LAH,QLC (default LS,CH,LAH)");
  spp_cmd->add_option("--truth", spp.truth, "Truth file; adds an error_3d column");
  spp_cmd->add_option("--out", spp.out, "Fix file")->required();

  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputFailure;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputFailure;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze, out);
    if (simulate_cmd->parsed()) return cmd_simulate(simulate, out);
    if (generate_cmd->parsed()) return cmd_generate(generate, out);
    if (spp_cmd->parsed()) return cmd_spp(spp, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
  return kInputFailure;
}

}  // namespace lahm::cli
