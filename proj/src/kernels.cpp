#include "lahm/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lahm/errors.hpp"

namespace lahm {

namespace {

void require_finite_residual(double r) {
  if (!std::isfinite(r)) throw InputError("non-finite residual");
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// ln(cosh(x) + 1) for x >= 0. Past x = 30 cosh is rewritten as
// e^x * ((1 + e^-2x) / 2 + e^-x) so large residuals never overflow.
double log_cosh_plus_one(double x) {
  if (x > 30.0) {
    return x + std::log((1.0 + std::exp(-2.0 * x)) / 2.0 + std::exp(-x));
  }
  return std::log(std::cosh(x) + 1.0);
}

}  // namespace

void validate(const HuberParams& p) {
  if (!positive_finite(p.threshold_c)) throw InputError("invalid Huber threshold");
  if (!positive_finite(p.scale_sigma)) throw InputError("invalid Huber scale");
}

void validate(const QlcParams& p) {
  if (!positive_finite(p.scale_s)) throw InputError("invalid logistic scale");
}

KernelEval huber_eval(double r, const HuberParams& p) {
  require_finite_residual(r);
  validate(p);
  const double sigma = p.scale_sigma;
  const double c = p.threshold_c;
  const double u = std::abs(r) / sigma;
  KernelEval e;
  // |r|/sigma == c belongs to the quadratic branch.
  if (u <= c) {
    e.loss = 0.5 * u * u;
    e.score = r / (sigma * sigma);
    e.weight = 1.0 / (sigma * sigma);
    e.score_derivative = 1.0 / (sigma * sigma);
  } else {
    e.loss = c * (u - 0.5 * c);
    e.score = std::copysign(c / sigma, r);
    e.weight = c / (sigma * std::abs(r));
    e.score_derivative = 0.0;
  }
  return e;
}

KernelEval qlc_eval(double r, const QlcParams& p) {
  require_finite_residual(r);
  validate(p);
  const double s = p.scale_s;
  const double half = r / (2.0 * s);
  KernelEval e;
  e.loss = log_cosh_plus_one(std::abs(r) / s);
  e.score = std::tanh(half) / s;
  e.weight = (r == 0.0) ? 1.0 / (2.0 * s * s) : e.score / r;
  const double ch = std::cosh(half);
  e.score_derivative = 1.0 / (2.0 * s * s * ch * ch);
  return e;
}

KernelEval ls_eval(double r, double sigma) {
  require_finite_residual(r);
  if (!positive_finite(sigma)) throw InputError("invalid least-squares scale");
  const double inv_var = 1.0 / (sigma * sigma);
  return KernelEval{0.5 * r * r * inv_var, r * inv_var, inv_var, inv_var};
}

HuberParams lah_params_from_logistic_scale(double s) {
  if (!positive_finite(s)) throw InputError("invalid logistic scale");
  return HuberParams{std::numbers::sqrt2, std::numbers::sqrt2 * s};
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kLeastSquares: return "LS";
    case KernelKind::kConventionalHuber: return "CH";
    case KernelKind::kLogisticAidedHuber: return "LAH";
    case KernelKind::kQuasiLogCosh: return "QLC";
  }
  return "?";
}

KernelKind parse_kernel_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  if (upper == "LS") return KernelKind::kLeastSquares;
  if (upper == "CH") return KernelKind::kConventionalHuber;
  if (upper == "LAH") return KernelKind::kLogisticAidedHuber;
  if (upper == "QLC" || upper == "LQLC") return KernelKind::kQuasiLogCosh;
  throw InputError("unknown method '" + std::string(name) + "'");
}

KernelSpec KernelSpec::least_squares(double sigma) {
  if (!positive_finite(sigma)) throw InputError("invalid least-squares scale");
  return KernelSpec(KernelKind::kLeastSquares, sigma, HuberParams{});
}

KernelSpec KernelSpec::conventional_huber(double sigma, double threshold) {
  const HuberParams p{threshold, sigma};
  validate(p);
  return KernelSpec(KernelKind::kConventionalHuber, sigma, p);
}

KernelSpec KernelSpec::logistic_aided_huber(double logistic_scale) {
  return KernelSpec(KernelKind::kLogisticAidedHuber, logistic_scale,
                    lah_params_from_logistic_scale(logistic_scale));
}

KernelSpec KernelSpec::quasi_log_cosh(double logistic_scale) {
  validate(QlcParams{logistic_scale});
  return KernelSpec(KernelKind::kQuasiLogCosh, logistic_scale, HuberParams{});
}

const HuberParams& KernelSpec::huber() const {
  if (kind_ != KernelKind::kConventionalHuber && kind_ != KernelKind::kLogisticAidedHuber) {
    throw InputError("kernel has no Huber parameters");
  }
  return huber_;
}

KernelEval KernelSpec::evaluate(double r) const {
  switch (kind_) {
    case KernelKind::kLeastSquares: return ls_eval(r, source_scale_);
    case KernelKind::kConventionalHuber:
    case KernelKind::kLogisticAidedHuber: return huber_eval(r, huber_);
    case KernelKind::kQuasiLogCosh: return qlc_eval(r, QlcParams{source_scale_});
  }
  return {};
}

double KernelSpec::score_bound() const {
  switch (kind_) {
    case KernelKind::kLeastSquares: return std::numeric_limits<double>::infinity();
    case KernelKind::kConventionalHuber:
    case KernelKind::kLogisticAidedHuber: return huber_.threshold_c / huber_.scale_sigma;
    case KernelKind::kQuasiLogCosh: return 1.0 / source_scale_;
  }
  return 0.0;
}

}  // namespace lahm
