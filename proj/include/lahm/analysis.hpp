#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "lahm/errors.hpp"
#include "lahm/kernels.hpp"

namespace lahm {

/// Quadrature failed to reach its error target.
class QuadratureError : public NumericError {
 public:
  QuadratureError(const std::string& what, double error_estimate)
      : NumericError(what), error_estimate_(error_estimate) {}
  double error_estimate() const { return error_estimate_; }

 private:
  double error_estimate_;
};

inline constexpr double kQuadratureTolerance = 1e-9;

/// E[f(Z)], Z ~ N(0,1): adaptive Gauss-Kronrod over [-12, 12], split at the
/// given breakpoints so each panel integrand is smooth.
double expectation_under_standard_normal(const std::function<double(double)>& f,
                                         std::span<const double> breakpoints = {});

/// E[psi^2] and E[psi'] of a kernel under unit Gaussian residuals.
struct ScoreMoments {
  double mean_score_squared = 0.0;
  double mean_score_derivative = 0.0;
};

ScoreMoments score_moments(const KernelSpec& kernel);

/// Efficiency relative to least squares, E[psi']^2 / E[psi^2]. The (H^T H)^-1
/// factor is common to both asymptotic variances in the homoscedastic case
/// and cancels.
double efficiency(const KernelSpec& kernel);
double efficiency_lqlc(double s);
double efficiency_lah(double s);
double efficiency_huber(double c, double sigma = 1.0);

/// sup|psi| / E[psi'], or unbounded for least squares.
class ResidualGes {
 public:
  static ResidualGes unbounded() { return ResidualGes(true, 0.0); }
  static ResidualGes finite(double value) { return ResidualGes(false, value); }

  bool is_unbounded() const { return unbounded_; }
  /// Throws NumericError when unbounded.
  double value() const;

 private:
  ResidualGes(bool unbounded, double value) : unbounded_(unbounded), value_(value) {}
  bool unbounded_;
  double value_;
};

ResidualGes residual_ges(const KernelSpec& kernel);

/// Measurement (y-) breakdown point: 0.5 for monotone bounded scores, 0 for LS.
double measurement_bdp(const KernelSpec& kernel);

struct EfficiencyPoint {
  double scale_s = 0.0;
  double efficiency_lqlc = 0.0;
  double efficiency_lah = 0.0;
  /// efficiency_lah / efficiency_lqlc: relative efficiency of the LQLC
  /// estimator against LAH, ratio of their asymptotic variances.
  double are = 0.0;
};

struct GesPoint {
  double scale_s = 0.0;
  double ges_lqlc = 0.0;
  double ges_lah = 0.0;
  double ratio = 0.0;  ///< ges_lah / ges_lqlc
};

/// Grid s_min, s_min + step, ... up to s_max (inclusive within step/1e6).
std::vector<double> scale_grid(double s_min, double s_max, double step);

std::vector<EfficiencyPoint> sweep_efficiency(double s_min, double s_max, double step);
std::vector<GesPoint> sweep_ges(double s_min, double s_max, double step);

/// Columns: s,efficiency_lqlc,efficiency_lah,are
void write_efficiency_table(std::ostream& out, std::span<const EfficiencyPoint> points);
/// Columns: s,ges_lqlc,ges_lah,ratio
void write_ges_table(std::ostream& out, std::span<const GesPoint> points);

}  // namespace lahm
