#pragma once

#include <string_view>

namespace lahm {

/// Threshold giving the Huber estimator 95% efficiency under unit Gaussian noise.
inline constexpr double kConventionalHuberThreshold = 1.345;

struct HuberParams {
  double threshold_c = kConventionalHuberThreshold;
  double scale_sigma = 1.0;
};

struct QlcParams {
  double scale_s = 1.0;
};

/// Loss, score (d loss / d r), IRLS weight (score / r, with its r -> 0 limit)
/// and score derivative of a kernel at one residual.
struct KernelEval {
  double loss = 0.0;
  double score = 0.0;
  double weight = 0.0;
  double score_derivative = 0.0;
};

void validate(const HuberParams& p);
void validate(const QlcParams& p);

KernelEval huber_eval(double r, const HuberParams& p);
KernelEval qlc_eval(double r, const QlcParams& p);
KernelEval ls_eval(double r, double sigma);

/// Huber tuning matched to a logistic error scale: c = sqrt(2), sigma = sqrt(2) * s.
/// The quadratic regions agree to first order at the origin and the clipped
/// scores agree at infinity.
HuberParams lah_params_from_logistic_scale(double s);

enum class KernelKind { kLeastSquares, kConventionalHuber, kLogisticAidedHuber, kQuasiLogCosh };

std::string_view to_string(KernelKind kind);
/// Accepts "LS", "CH", "LAH", "QLC" (also "LQLC"), case-insensitive.
KernelKind parse_kernel_kind(std::string_view name);

/// Per-measurement kernel descriptor: kind plus the scale it was built from.
class KernelSpec {
 public:
  static KernelSpec least_squares(double sigma);
  static KernelSpec conventional_huber(double sigma, double threshold = kConventionalHuberThreshold);
  static KernelSpec logistic_aided_huber(double logistic_scale);
  static KernelSpec quasi_log_cosh(double logistic_scale);

  KernelKind kind() const { return kind_; }
  /// Gaussian sigma for LS/CH, logistic s for LAH/QLC.
  double source_scale() const { return source_scale_; }
  /// Effective Huber parameters (CH and LAH only).
  const HuberParams& huber() const;

  KernelEval evaluate(double r) const;
  /// sup |score|; +inf for least squares.
  double score_bound() const;

 private:
  KernelSpec(KernelKind kind, double source_scale, HuberParams huber)
      : kind_(kind), source_scale_(source_scale), huber_(huber) {}

  KernelKind kind_;
  double source_scale_;
  HuberParams huber_;
};

}  // namespace lahm
