#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lahm/errors.hpp"

namespace lahm {

struct LogisticParams {
  double location_m = 0.0;
  double scale_s = 1.0;
};

struct GaussianParams {
  double mean_mu = 0.0;
  double std_sigma = 1.0;
};

/// Raised when the logistic Newton iteration hits its cap; carries the last iterate.
class FitConvergenceError : public NumericError {
 public:
  FitConvergenceError(const std::string& what, LogisticParams last)
      : NumericError(what), last_(last) {}
  const LogisticParams& last_iterate() const { return last_; }

 private:
  LogisticParams last_;
};

double logistic_pdf(double x, const LogisticParams& p);
double logistic_cdf(double x, const LogisticParams& p);
/// Sum of log densities; the objective maximized by fit_logistic_mle.
double logistic_log_likelihood(std::span<const double> samples, const LogisticParams& p);

/// Damped Newton on the two-parameter log-likelihood, started from
/// (median, sqrt(3)/pi * sample std). Needs >= 10 samples with nonzero spread.
LogisticParams fit_logistic_mle(std::span<const double> samples);

/// Sample mean and population (1/n) standard deviation.
GaussianParams fit_gaussian_mle(std::span<const double> samples);

/// Logistic scale with the same variance as a Gaussian of std sigma: (sqrt(3)/pi) * sigma.
double moment_scale_from_gaussian(double sigma);

/// n draws of scale * T, T ~ Student-t(dof). Deterministic in seed.
std::vector<double> sample_student_t(double dof, double scale, std::size_t n, std::uint64_t seed);

/// One value per line; blank lines and lines starting with '#' are skipped.
/// Throws InputError naming the offending line.
std::vector<double> read_samples(std::istream& in);
void write_samples(std::ostream& out, std::span<const double> samples);

}  // namespace lahm
