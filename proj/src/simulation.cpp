#include "lahm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <thread>

#include "lahm/errors.hpp"
#include "lahm/random.hpp"
#include "lahm/solver.hpp"

namespace lahm {

namespace {

// Keeps the calibration draws and the trial draws on disjoint substreams.
constexpr std::uint64_t kCalibrationStream = 0x63616c6962ULL;

LinearSystem linearize_at_truth(const AnchorScenario& scenario) {
  const auto n = static_cast<Eigen::Index>(scenario.anchor_positions.size());
  LinearSystem sys{Eigen::MatrixXd(n, 2), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d los =
        (scenario.anchor_positions[static_cast<std::size_t>(i)] - scenario.true_position).normalized();
    sys.geometry.row(i) = -los.transpose();
  }
  return sys;
}

}  // namespace

void validate(const AnchorScenario& s) {
  if (s.anchor_positions.size() < 3) throw InputError("scenario needs at least 3 anchors");
  if (s.noise_scales.size() != s.anchor_positions.size()) {
    throw InputError("one noise scale per anchor required");
  }
  for (double v : s.noise_scales) {
    if (!std::isfinite(v) || v < 0.0) throw InputError("noise scales must be finite and nonnegative");
  }
  if (!std::isfinite(s.noise_dof) || s.noise_dof <= 0.0) throw InputError("invalid noise dof");
  if (!s.true_position.allFinite()) throw InputError("non-finite true position");
  for (const auto& a : s.anchor_positions) {
    if (!a.allFinite() || (a - s.true_position).norm() == 0.0) {
      throw InputError("anchor coincides with the true position");
    }
  }
  // Lines of sight must span the plane.
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  for (const auto& a : s.anchor_positions) {
    const Eigen::Vector2d u = (a - s.true_position).normalized();
    normal += u * u.transpose();
  }
  if (std::abs(normal.determinant()) < 1e-9) throw InputError("anchors collinear with the true position");
}

AnchorScenario build_default_scenario(std::span<const double> noise_scales, double range) {
  if (!(range > 0.0) || !std::isfinite(range)) throw InputError("anchor range must be positive");
  AnchorScenario s;
  const std::size_t n = noise_scales.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double az = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    s.anchor_positions.emplace_back(range * std::cos(az), range * std::sin(az));
  }
  s.noise_scales.assign(noise_scales.begin(), noise_scales.end());
  validate(s);
  return s;
}

std::vector<double> draw_calibration_samples(const AnchorScenario& scenario, std::size_t anchor,
                                             std::size_t n, std::uint64_t seed) {
  if (anchor >= scenario.noise_scales.size()) throw InputError("anchor index out of range");
  if (scenario.noise_scales[anchor] <= 0.0) throw InputError("cannot calibrate a noiseless anchor");
  return sample_student_t(scenario.noise_dof, scenario.noise_scales[anchor], n,
                          substream_seed(seed ^ kCalibrationStream, anchor));
}

ScaleCalibration calibrate_scales(const AnchorScenario& scenario, std::size_t n_samples,
                                  std::uint64_t seed) {
  validate(scenario);
  if (n_samples < 10000) throw InputError("calibration needs at least 1e4 samples per anchor");
  ScaleCalibration cal;
  cal.sample_count = n_samples;
  for (std::size_t i = 0; i < scenario.anchor_positions.size(); ++i) {
    const auto samples = draw_calibration_samples(scenario, i, n_samples, seed);
    cal.gaussian.push_back(fit_gaussian_mle(samples));
    cal.logistic.push_back(fit_logistic_mle(samples));
  }
  return cal;
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kLeastSquares: return "LS";
    case Estimator::kConventionalHuber: return "CH";
    case Estimator::kLogisticAidedHuber: return "LAH";
  }
  return "?";
}

ErrorSummary summarize(std::span<const double> errors) {
  if (errors.empty()) throw InputError("no errors to summarize");
  double sum = 0.0, sum_sq = 0.0;
  for (double e : errors) {
    if (!std::isfinite(e) || e < 0.0) throw InputError("errors must be finite and nonnegative");
    sum += e;
    sum_sq += e * e;
  }
  const double n = static_cast<double>(errors.size());
  const double mean = sum / n;
  double centered = 0.0;
  for (double e : errors) centered += (e - mean) * (e - mean);

  ErrorSummary out;
  out.rmse = std::sqrt(sum_sq / n);
  out.std = std::sqrt(centered / n);
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  out.cdf.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Ties collapse onto the last (highest) fraction.
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.cdf.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

TrialReport run_monte_carlo(const AnchorScenario& scenario, const ScaleCalibration& calibration,
                            const MonteCarloOptions& options) {
  validate(scenario);
  const std::size_t n_anchors = scenario.anchor_positions.size();
  if (calibration.gaussian.size() != n_anchors || calibration.logistic.size() != n_anchors) {
    throw InputError("calibration does not match scenario anchor count");
  }
  if (options.n_trials == 0) throw InputError("trial count must be positive");

  std::array<MeasurementKernelSet, 3> kernels;
  for (std::size_t i = 0; i < n_anchors; ++i) {
    kernels[0].push_back(KernelSpec::least_squares(calibration.gaussian[i].std_sigma));
    kernels[1].push_back(KernelSpec::conventional_huber(calibration.gaussian[i].std_sigma));
    kernels[2].push_back(KernelSpec::logistic_aided_huber(calibration.logistic[i].scale_s));
  }
  const LinearSystem base = linearize_at_truth(scenario);

  TrialReport report;
  for (auto& e : report.errors) e.assign(options.n_trials, 0.0);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    LinearSystem sys = base;
    for (std::size_t k = begin; k < end; ++k) {
      Engine engine = make_engine(options.seed, k);
      for (std::size_t i = 0; i < n_anchors; ++i) {
        const double scale = scenario.noise_scales[i];
        sys.delta_y(static_cast<Eigen::Index>(i)) =
            scale > 0.0 ? scale * draw_student_t(engine, scenario.noise_dof) : 0.0;
      }
      for (std::size_t e = 0; e < kernels.size(); ++e) {
        try {
          report.errors[e][k] = irls_solve(sys, kernels[e]).state.norm();
        } catch (const std::exception&) {
          report.errors[e][k] = std::nan("");
        }
      }
    }
  };

  unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, options.n_trials));
  if (workers <= 1) {
    run_range(0, options.n_trials);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (options.n_trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(options.n_trials, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
  }

  for (std::size_t e = 0; e < report.errors.size(); ++e) {
    std::vector<double> kept;
    kept.reserve(options.n_trials);
    for (double v : report.errors[e]) {
      if (std::isnan(v)) {
        ++report.excluded[e];
      } else {
        kept.push_back(v);
      }
    }
    if (kept.empty()) throw NumericError(std::string("every trial failed for ") +
                                         estimator_name(static_cast<Estimator>(e)));
    report.summary[e] = summarize(kept);
  }
  return report;
}

double percentage_reduction(double ch, double lah) { return 100.0 * (1.0 - lah / ch); }

void write_summary_table(std::ostream& out, const TrialReport& report) {
  const auto& ls = report.of(Estimator::kLeastSquares);
  const auto& ch = report.of(Estimator::kConventionalHuber);
  const auto& lah = report.of(Estimator::kLogisticAidedHuber);
  out << "metric,LS,CH,LAH,reduction_lah_vs_ch_pct\n" << std::fixed << std::setprecision(4);
  out << "rmse_2d," << ls.rmse << ',' << ch.rmse << ',' << lah.rmse << ','
      << percentage_reduction(ch.rmse, lah.rmse) << '\n';
  out << "std_2d," << ls.std << ',' << ch.std << ',' << lah.std << ','
      << percentage_reduction(ch.std, lah.std) << '\n';
  out << "excluded," << report.excluded[0] << ',' << report.excluded[1] << ','
      << report.excluded[2] << ",\n";
  out.unsetf(std::ios::floatfield);
}

void write_cdf(std::ostream& out, const ErrorSummary& summary) {
  out << "error,fraction\n" << std::setprecision(17);
  for (const auto& p : summary.cdf) out << p.error << ',' << p.fraction << '\n';
}

void write_scale_table(std::ostream& out, const AnchorScenario& scenario,
                       const ScaleCalibration& calibration) {
  out << "anchor,true_scale,gaussian_sigma,logistic_s\n" << std::setprecision(10);
  for (std::size_t i = 0; i < calibration.gaussian.size(); ++i) {
    out << i + 1 << ',' << scenario.noise_scales.at(i) << ',' << calibration.gaussian[i].std_sigma
        << ',' << calibration.logistic[i].scale_s << '\n';
  }
}

}  // namespace lahm
