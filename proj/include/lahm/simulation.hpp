#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lahm/distributions.hpp"

namespace lahm {

/// 2D range-only localization: a sensor ranging to fixed anchors, each range
/// corrupted by scaled Student-t noise.
struct AnchorScenario {
  std::vector<Eigen::Vector2d> anchor_positions;
  Eigen::Vector2d true_position = Eigen::Vector2d::Zero();
  std::vector<double> noise_scales;  ///< per anchor, meters; 0 means noiseless
  double noise_dof = 2.0;
};

void validate(const AnchorScenario& scenario);

inline constexpr double kDefaultAnchorRange = 1e6;

/// Eight anchors with unit t-scale. Gaussian fits to t(2) draws inflate well
/// past the truth on most anchors, which is what separates CH from LAH.
inline const std::vector<double>& default_anchor_scales() {
  static const std::vector<double> scales(8, 1.0);
  return scales;
}

/// Anchors equally spaced in azimuth on a circle of radius `range` around the
/// origin, which is the true position. One anchor per entry of `noise_scales`.
AnchorScenario build_default_scenario(std::span<const double> noise_scales = default_anchor_scales(),
                                      double range = kDefaultAnchorRange);

struct ScaleCalibration {
  std::vector<GaussianParams> gaussian;
  std::vector<LogisticParams> logistic;
  std::size_t sample_count = 0;
};

/// The n calibration range errors of one anchor.
std::vector<double> draw_calibration_samples(const AnchorScenario& scenario, std::size_t anchor,
                                             std::size_t n, std::uint64_t seed);

/// Draws n_samples range errors per anchor and fits both a Gaussian and a
/// logistic model to each.
ScaleCalibration calibrate_scales(const AnchorScenario& scenario, std::size_t n_samples,
                                  std::uint64_t seed);

/// Estimators compared by the Monte Carlo run.
enum class Estimator : std::size_t { kLeastSquares = 0, kConventionalHuber = 1, kLogisticAidedHuber = 2 };
inline constexpr std::array<Estimator, 3> kAllEstimators{
    Estimator::kLeastSquares, Estimator::kConventionalHuber, Estimator::kLogisticAidedHuber};
const char* estimator_name(Estimator e);

struct CdfPoint {
  double error = 0.0;
  double fraction = 0.0;
};

struct ErrorSummary {
  double rmse = 0.0;
  double std = 0.0;
  std::vector<CdfPoint> cdf;
};

/// rmse = sqrt(mean(e^2)); std is the population standard deviation; cdf is
/// sorted (error, fraction <= error).
ErrorSummary summarize(std::span<const double> errors);

struct TrialReport {
  /// errors[e][k]: 2D error of estimator e on trial k; excluded trials are NaN.
  std::array<std::vector<double>, 3> errors;
  std::array<ErrorSummary, 3> summary;
  std::array<std::size_t, 3> excluded{};

  const ErrorSummary& of(Estimator e) const { return summary[static_cast<std::size_t>(e)]; }
  const std::vector<double>& errors_of(Estimator e) const {
    return errors[static_cast<std::size_t>(e)];
  }
};

struct MonteCarloOptions {
  std::size_t n_trials = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;  ///< 0 selects hardware concurrency
};

/// Each trial draws one range error per anchor from substream (seed, trial),
/// linearizes at the true position and solves with LS and CH (fitted Gaussian
/// sigma, c = 1.345) and LAH (fitted logistic s). Results do not depend on the
/// worker count.
TrialReport run_monte_carlo(const AnchorScenario& scenario, const ScaleCalibration& calibration,
                            const MonteCarloOptions& options);

/// Metric x estimator table with the LAH-vs-CH percentage reduction.
void write_summary_table(std::ostream& out, const TrialReport& report);
void write_cdf(std::ostream& out, const ErrorSummary& summary);
/// anchor,true_scale,gaussian_sigma,logistic_s
void write_scale_table(std::ostream& out, const AnchorScenario& scenario,
                       const ScaleCalibration& calibration);

/// 100 * (1 - lah / ch).
double percentage_reduction(double ch, double lah);

}  // namespace lahm
