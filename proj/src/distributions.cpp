#include "lahm/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "lahm/random.hpp"

namespace lahm {

namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kStepTolerance = 1e-10;

void require_valid(const LogisticParams& p) {
  if (!std::isfinite(p.location_m) || !std::isfinite(p.scale_s) || p.scale_s <= 0.0) {
    throw InputError("invalid logistic parameters");
  }
}

void require_finite_samples(std::span<const double> samples) {
  for (double v : samples) {
    if (!std::isfinite(v)) throw InputError("non-finite sample");
  }
}

double median_of(std::span<const double> samples) {
  std::vector<double> tmp(samples.begin(), samples.end());
  const auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  double med = *mid;
  if (tmp.size() % 2 == 0) med = 0.5 * (med + *std::max_element(tmp.begin(), mid));
  return med;
}

struct LikelihoodDerivatives {
  double grad_m = 0.0;
  double grad_s = 0.0;
  double h_mm = 0.0;
  double h_ms = 0.0;
  double h_ss = 0.0;
};

// Per-sample averages of the gradient and Hessian of the log-likelihood.
LikelihoodDerivatives derivatives(std::span<const double> x, const LogisticParams& p) {
  double sum_t = 0.0, sum_zt = 0.0, sum_sech2 = 0.0, sum_zsech2 = 0.0, sum_z2sech2 = 0.0;
  for (double xi : x) {
    const double z = (xi - p.location_m) / p.scale_s;
    const double t = std::tanh(0.5 * z);
    const double ch = std::cosh(0.5 * z);
    const double sech2 = 1.0 / (ch * ch);
    sum_t += t;
    sum_zt += z * t;
    sum_sech2 += sech2;
    sum_zsech2 += z * sech2;
    sum_z2sech2 += z * z * sech2;
  }
  const double n = static_cast<double>(x.size());
  const double s = p.scale_s;
  LikelihoodDerivatives d;
  d.grad_m = sum_t / (n * s);
  d.grad_s = (sum_zt / n - 1.0) / s;
  d.h_mm = -sum_sech2 / (2.0 * n * s * s);
  d.h_ms = -(sum_t / n + 0.5 * sum_zsech2 / n) / (s * s);
  d.h_ss = (1.0 - 2.0 * sum_zt / n - 0.5 * sum_z2sech2 / n) / (s * s);
  return d;
}

}  // namespace

double logistic_pdf(double x, const LogisticParams& p) {
  if (!std::isfinite(x)) throw InputError("non-finite argument");
  require_valid(p);
  // Even in z, so evaluate at -|z| where e^{-|z|} cannot overflow.
  const double e = std::exp(-std::abs(x - p.location_m) / p.scale_s);
  return e / (p.scale_s * (1.0 + e) * (1.0 + e));
}

double logistic_cdf(double x, const LogisticParams& p) {
  if (!std::isfinite(x)) throw InputError("non-finite argument");
  require_valid(p);
  const double z = (x - p.location_m) / p.scale_s;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logistic_log_likelihood(std::span<const double> samples, const LogisticParams& p) {
  require_valid(p);
  const double log_s = std::log(p.scale_s);
  double ll = 0.0;
  for (double xi : samples) {
    const double a = std::abs(xi - p.location_m) / p.scale_s;
    ll += -a - log_s - 2.0 * std::log1p(std::exp(-a));
  }
  return ll;
}

LogisticParams fit_logistic_mle(std::span<const double> samples) {
  require_finite_samples(samples);
  if (!samples.empty()) {
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    if (*lo == *hi) throw InputError("degenerate sample");
  }
  if (samples.size() < 10) throw InputError("logistic fit needs at least 10 samples");

  LogisticParams p{median_of(samples),
                   moment_scale_from_gaussian(fit_gaussian_mle(samples).std_sigma)};
  double ll = logistic_log_likelihood(samples, p);

  for (int iter = 0; iter < kMaxNewtonIterations; ++iter) {
    const LikelihoodDerivatives d = derivatives(samples, p);
    const double det = d.h_mm * d.h_ss - d.h_ms * d.h_ms;
    double dm = 0.0, ds = 0.0;
    if (d.h_mm < 0.0 && det > 0.0) {
      dm = -(d.h_ss * d.grad_m - d.h_ms * d.grad_s) / det;
      ds = -(-d.h_ms * d.grad_m + d.h_mm * d.grad_s) / det;
    } else {
      // Hessian not negative definite: scaled gradient ascent.
      dm = d.grad_m * p.scale_s * p.scale_s;
      ds = d.grad_s * p.scale_s * p.scale_s;
    }

    const double slack = 1e-12 * (1.0 + std::abs(ll));
    double t = 1.0;
    LogisticParams next = p;
    double next_ll = ll;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      next = {p.location_m + t * dm, p.scale_s + t * ds};
      if (!(next.scale_s > 0.0)) continue;
      next_ll = logistic_log_likelihood(samples, next);
      if (next_ll >= ll - slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) throw FitConvergenceError("logistic fit line search failed", p);

    const double step = std::max(std::abs(next.location_m - p.location_m),
                                 std::abs(next.scale_s - p.scale_s));
    p = next;
    ll = next_ll;
    // Step measured in units of the current scale so the fit is scale-equivariant.
    if (step < kStepTolerance * p.scale_s) return p;
  }
  throw FitConvergenceError("logistic fit did not converge", p);
}

GaussianParams fit_gaussian_mle(std::span<const double> samples) {
  if (samples.size() < 2) throw InputError("Gaussian fit needs at least 2 samples");
  require_finite_samples(samples);
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / n);
  if (!(sigma > 0.0)) throw InputError("degenerate sample");
  return {mean, sigma};
}

double moment_scale_from_gaussian(double sigma) {
  if (!std::isfinite(sigma) || sigma <= 0.0) throw InputError("invalid Gaussian sigma");
  return std::numbers::sqrt3 / std::numbers::pi * sigma;
}

double draw_student_t(Engine& engine, double dof) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::chi_squared_distribution<double> chi2(dof);
  const double z = normal(engine);
  const double v = chi2(engine);
  return z / std::sqrt(v / dof);
}

std::vector<double> sample_student_t(double dof, double scale, std::size_t n, std::uint64_t seed) {
  if (!std::isfinite(dof) || dof <= 0.0) throw InputError("invalid degrees of freedom");
  if (!std::isfinite(scale) || scale <= 0.0) throw InputError("invalid t scale");
  if (n == 0) throw InputError("sample count must be positive");
  Engine engine(seed);
  std::vector<double> out(n);
  for (double& v : out) v = scale * draw_student_t(engine, dof);
  return out;
}

std::vector<double> read_samples(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r,");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    if (*begin == '+') ++begin;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw InputError("line " + std::to_string(line_no) + ": not a number: '" + line + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw InputError("no samples");
  return values;
}

void write_samples(std::ostream& out, std::span<const double> samples) {
  char buf[32];
  for (double v : samples) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
    out.put('\n');
  }
}

}  // namespace lahm
