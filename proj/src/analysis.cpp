#include "lahm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace lahm {

namespace {

constexpr double kIntegrationLimit = 12.0;

double standard_normal_pdf(double r) {
  return std::exp(-0.5 * r * r) / std::sqrt(2.0 * std::numbers::pi);
}

std::vector<double> kink_points(const KernelSpec& kernel) {
  if (kernel.kind() == KernelKind::kConventionalHuber ||
      kernel.kind() == KernelKind::kLogisticAidedHuber) {
    const double k = kernel.huber().threshold_c * kernel.huber().scale_sigma;
    return {-k, k};
  }
  return {};
}

}  // namespace

double expectation_under_standard_normal(const std::function<double(double)>& f,
                                         std::span<const double> breakpoints) {
  std::vector<double> edges{-kIntegrationLimit, kIntegrationLimit};
  for (double b : breakpoints) {
    if (std::isfinite(b) && b > -kIntegrationLimit && b < kIntegrationLimit) edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const auto integrand = [&f](double r) { return f(r) * standard_normal_pdf(r); };
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double error = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, edges[i], edges[i + 1], 15, 1e-13, &error);
    total_error += error;
  }
  if (!std::isfinite(total) || !(total_error <= kQuadratureTolerance)) {
    throw QuadratureError("quadrature did not converge", total_error);
  }
  return total;
}

ScoreMoments score_moments(const KernelSpec& kernel) {
  const std::vector<double> kinks = kink_points(kernel);
  ScoreMoments m;
  m.mean_score_squared = expectation_under_standard_normal(
      [&kernel](double r) {
        const double psi = kernel.evaluate(r).score;
        return psi * psi;
      },
      kinks);
  m.mean_score_derivative = expectation_under_standard_normal(
      [&kernel](double r) { return kernel.evaluate(r).score_derivative; }, kinks);
  return m;
}

double efficiency(const KernelSpec& kernel) {
  if (kernel.kind() == KernelKind::kLeastSquares) return 1.0;
  const ScoreMoments m = score_moments(kernel);
  return m.mean_score_derivative * m.mean_score_derivative / m.mean_score_squared;
}

double efficiency_lqlc(double s) { return efficiency(KernelSpec::quasi_log_cosh(s)); }

double efficiency_lah(double s) { return efficiency(KernelSpec::logistic_aided_huber(s)); }

double efficiency_huber(double c, double sigma) {
  return efficiency(KernelSpec::conventional_huber(sigma, c));
}

double ResidualGes::value() const {
  if (unbounded_) throw NumericError("residual GES is unbounded");
  return value_;
}

ResidualGes residual_ges(const KernelSpec& kernel) {
  if (kernel.kind() == KernelKind::kLeastSquares) return ResidualGes::unbounded();
  const double mean_derivative = expectation_under_standard_normal(
      [&kernel](double r) { return kernel.evaluate(r).score_derivative; }, kink_points(kernel));
  return ResidualGes::finite(kernel.score_bound() / mean_derivative);
}

double measurement_bdp(const KernelSpec& kernel) {
  return kernel.kind() == KernelKind::kLeastSquares ? 0.0 : 0.5;
}

std::vector<double> scale_grid(double s_min, double s_max, double step) {
  if (!std::isfinite(s_min) || !std::isfinite(s_max) || !std::isfinite(step)) {
    throw InputError("non-finite sweep range");
  }
  if (!(s_min > 0.0)) throw InputError("sweep minimum must be positive");
  if (!(s_max > s_min)) throw InputError("sweep maximum must exceed minimum");
  if (!(step > 0.0)) throw InputError("sweep step must be positive");
  // Multiply rather than accumulate so grid points carry no drift.
  const auto count = static_cast<std::size_t>(std::floor((s_max - s_min) / step + 1e-6)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = s_min + static_cast<double>(i) * step;
  return grid;
}

std::vector<EfficiencyPoint> sweep_efficiency(double s_min, double s_max, double step) {
  std::vector<EfficiencyPoint> out;
  for (double s : scale_grid(s_min, s_max, step)) {
    EfficiencyPoint p;
    p.scale_s = s;
    p.efficiency_lqlc = efficiency_lqlc(s);
    p.efficiency_lah = efficiency_lah(s);
    p.are = p.efficiency_lah / p.efficiency_lqlc;
    out.push_back(p);
  }
  return out;
}

std::vector<GesPoint> sweep_ges(double s_min, double s_max, double step) {
  std::vector<GesPoint> out;
  for (double s : scale_grid(s_min, s_max, step)) {
    GesPoint p;
    p.scale_s = s;
    p.ges_lqlc = residual_ges(KernelSpec::quasi_log_cosh(s)).value();
    p.ges_lah = residual_ges(KernelSpec::logistic_aided_huber(s)).value();
    p.ratio = p.ges_lah / p.ges_lqlc;
    out.push_back(p);
  }
  return out;
}

void write_efficiency_table(std::ostream& out, std::span<const EfficiencyPoint> points) {
  out << "s,efficiency_lqlc,efficiency_lah,are\n" << std::setprecision(12);
  for (const auto& p : points) {
    out << p.scale_s << ',' << p.efficiency_lqlc << ',' << p.efficiency_lah << ',' << p.are << '\n';
  }
}

void write_ges_table(std::ostream& out, std::span<const GesPoint> points) {
  out << "s,ges_lqlc,ges_lah,ratio\n" << std::setprecision(12);
  for (const auto& p : points) {
    out << p.scale_s << ',' << p.ges_lqlc << ',' << p.ges_lah << ',' << p.ratio << '\n';
  }
}

}  // namespace lahm
