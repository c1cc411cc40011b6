#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "lahm/distributions.hpp"
#include "lahm/errors.hpp"
#include "test_support.hpp"

using namespace lahm;
using doctest::Approx;
namespace lt = lahm::testing;

TEST_CASE("logistic_pdf examples") {
  const LogisticParams p{1.5, 1.2};
  CHECK(logistic_pdf(1.5, p) == Approx(1.0 / (4.0 * 1.2)).epsilon(1e-15));
  CHECK(logistic_pdf(1.5 + 3.7, p) == logistic_pdf(1.5 - 3.7, p));
  const double e = std::exp(-1.0);
  CHECK(logistic_pdf(1.0, LogisticParams{0.0, 1.0}) == Approx(e / ((1 + e) * (1 + e))).epsilon(1e-14));
  CHECK(logistic_pdf(1.0, LogisticParams{0.0, 1.0}) == Approx(0.19661).epsilon(1e-5));
  CHECK_THROWS_AS(logistic_pdf(NAN, p), InputError);
  CHECK_THROWS_AS(logistic_pdf(0.0, LogisticParams{0.0, 0.0}), InputError);
}

TEST_CASE("logistic_pdf algebraic forms agree") {
  // e^{-z}/(s(1+e^{-z})^2) and sech^2(z/2)/(4s).
  const LogisticParams p{-0.4, 0.8};
  for (double x = -20.0; x <= 20.0; x += 0.37) {
    const double z = (x - p.location_m) / p.scale_s;
    const double a = std::exp(-z) / (p.scale_s * std::pow(1.0 + std::exp(-z), 2));
    const double sech = 1.0 / std::cosh(z / 2.0);
    const double b = sech * sech / (4.0 * p.scale_s);
    const double got = logistic_pdf(x, p);
    CHECK(got == Approx(a).epsilon(1e-12));
    CHECK(got == Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("logistic_pdf integrates to one") {
  for (const LogisticParams p : {LogisticParams{0.0, 1.0}, LogisticParams{3.0, 0.2}, LogisticParams{-7.0, 5.0}}) {
    const double lo = p.location_m - 60.0 * p.scale_s;
    const double hi = p.location_m + 60.0 * p.scale_s;
    const int n = 200000;  // composite Simpson
    const double h = (hi - lo) / n;
    double sum = logistic_pdf(lo, p) + logistic_pdf(hi, p);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * logistic_pdf(lo + i * h, p);
    CHECK(std::abs(sum * h / 3.0 - 1.0) < 1e-6);
  }
}

TEST_CASE("logistic_cdf examples") {
  const LogisticParams p{2.0, 0.5};
  CHECK(logistic_cdf(2.0, p) == 0.5);
  CHECK(std::abs(logistic_cdf(2.0 + 100.0 * 0.5, p) - 1.0) < 1e-12);
  const double x = 2.0 + 0.3 * 0.5;
  const double h = 1e-5;
  const double fd = (logistic_cdf(x + h, p) - logistic_cdf(x - h, p)) / (2.0 * h);
  CHECK(std::abs(fd - logistic_pdf(x, p)) < 1e-6);
  CHECK_THROWS_AS(logistic_cdf(INFINITY, p), InputError);

  double prev = 0.0;
  for (double t = -40.0; t <= 40.0; t += 0.1) {
    const double c = logistic_cdf(t, p);
    CHECK(c >= prev);
    CHECK(c <= 1.0);
    prev = c;
  }
}

TEST_CASE("fit_logistic_mle symmetric sample") {
  std::vector<double> x;
  for (int i = 0; i < 10; ++i) {
    x.push_back(-3.0);
    x.push_back(3.0);
  }
  CHECK(std::abs(fit_logistic_mle(x).location_m) < 1e-9);
}

TEST_CASE("fit_logistic_mle agrees with a grid search") {
  const auto x = lt::logistic_draws(2.0, 0.7, 100000, 20240611);
  const LogisticParams fit = fit_logistic_mle(x);
  CHECK(std::abs(fit.location_m - 2.0) < 0.02);
  CHECK(std::abs(fit.scale_s - 0.7) < 0.02);

  const double cell = 0.005;
  double best_ll = -INFINITY, best_m = 0.0, best_s = 0.0;
  for (double m = 1.9; m <= 2.1 + 1e-12; m += cell) {
    for (double s = 0.6; s <= 0.8 + 1e-12; s += cell) {
      const double ll = lt::logistic_loglik(x, m, s);
      if (ll > best_ll) {
        best_ll = ll;
        best_m = m;
        best_s = s;
      }
    }
  }
  CHECK(std::abs(fit.location_m - best_m) <= cell);
  CHECK(std::abs(fit.scale_s - best_s) <= cell);
  CHECK(lt::logistic_loglik(x, fit.location_m, fit.scale_s) >= best_ll);
}

TEST_CASE("fit_logistic_mle is stationary") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = lt::logistic_draws(-1.0, 2.5, 5000, seed);
    const LogisticParams fit = fit_logistic_mle(x);
    const auto [gm, gs] = lt::logistic_score(x, fit.location_m, fit.scale_s);
    CHECK(std::hypot(gm, gs) < 1e-8);
  }
  // Heavy tails too.
  const auto t = sample_student_t(2.0, 1.0, 20000, 9);
  const LogisticParams fit = fit_logistic_mle(t);
  const auto [gm, gs] = lt::logistic_score(t, fit.location_m, fit.scale_s);
  CHECK(std::hypot(gm, gs) < 1e-8);
}

TEST_CASE("fit_logistic_mle equivariance") {
  const auto x = lt::logistic_draws(0.3, 1.1, 3000, 77);
  const LogisticParams base = fit_logistic_mle(x);
  for (double k : {-50.0, 0.25, 1000.0}) {
    std::vector<double> shifted(x);
    for (double& v : shifted) v += k;
    const LogisticParams f = fit_logistic_mle(shifted);
    CHECK(std::abs(f.location_m - (base.location_m + k)) < 1e-9 * std::max(1.0, std::abs(k)));
    CHECK(std::abs(f.scale_s - base.scale_s) < 1e-9);
  }
  for (double k : {0.01, 3.0, 400.0}) {
    std::vector<double> scaled(x);
    for (double& v : scaled) v *= k;
    const LogisticParams f = fit_logistic_mle(scaled);
    CHECK(f.location_m == Approx(k * base.location_m).epsilon(1e-9));
    CHECK(f.scale_s == Approx(k * base.scale_s).epsilon(1e-9));
  }
}

TEST_CASE("fit_logistic_mle errors") {
  const std::vector<double> constant{5, 5, 5, 5};
  CHECK_THROWS_WITH_AS(fit_logistic_mle(constant), "degenerate sample", InputError);
  const std::vector<double> many(25, -2.0);
  CHECK_THROWS_WITH_AS(fit_logistic_mle(many), "degenerate sample", InputError);
  const std::vector<double> few{1, 2, 3};
  CHECK_THROWS_AS(fit_logistic_mle(few), InputError);
  std::vector<double> bad(20, 1.0);
  bad[3] = NAN;
  CHECK_THROWS_AS(fit_logistic_mle(bad), InputError);
}

TEST_CASE("fit_gaussian_mle examples") {
  const std::vector<double> pm{-1.0, 1.0};
  const auto a = fit_gaussian_mle(pm);
  CHECK(a.mean_mu == 0.0);
  CHECK(a.std_sigma == 1.0);

  const std::vector<double> b{2, 2, 2, 6};
  const auto g = fit_gaussian_mle(b);
  CHECK(g.mean_mu == Approx(3.0).epsilon(1e-15));
  CHECK(g.std_sigma == Approx(std::sqrt(3.0)).epsilon(1e-15));

  std::mt19937_64 gen(42);
  std::normal_distribution<double> n01;
  std::vector<double> x(100000);
  for (double& v : x) v = n01(gen);
  CHECK(std::abs(fit_gaussian_mle(x).std_sigma - 1.0) < 0.02);

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(fit_gaussian_mle(one), InputError);
  const std::vector<double> same{4.0, 4.0, 4.0};
  CHECK_THROWS_WITH_AS(fit_gaussian_mle(same), "degenerate sample", InputError);
}

TEST_CASE("moment_scale_from_gaussian") {
  CHECK(moment_scale_from_gaussian(1.0) == Approx(0.5513).epsilon(1e-4));
  CHECK(moment_scale_from_gaussian(2.0) == Approx(1.1027).epsilon(1e-4));
  CHECK(moment_scale_from_gaussian(std::numbers::pi / std::numbers::sqrt3) == Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(moment_scale_from_gaussian(0.0), InputError);
  CHECK_THROWS_AS(moment_scale_from_gaussian(-1.0), InputError);

  // Gaussian data: moment scale of the fitted sigma lands near sqrt(3)/pi.
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n01;
  std::vector<double> x(200000);
  for (double& v : x) v = n01(gen);
  CHECK(std::abs(moment_scale_from_gaussian(fit_gaussian_mle(x).std_sigma) -
                 std::numbers::sqrt3 / std::numbers::pi) < 0.005);
}

TEST_CASE("sample_student_t") {
  auto x = sample_student_t(2.0, 1.0, 100000, 123);
  REQUIRE(x.size() == 100000);
  std::vector<double> sorted(x);
  std::nth_element(sorted.begin(), sorted.begin() + 50000, sorted.end());
  CHECK(std::abs(sorted[50000]) < 0.02);

  const auto inside = std::count_if(x.begin(), x.end(), [](double v) { return std::abs(v) <= 1.0; });
  CHECK(std::abs(static_cast<double>(inside) / 1e5 - 1.0 / std::sqrt(3.0)) < 0.01);

  CHECK(sample_student_t(2.0, 1.0, 100000, 123) == x);
  CHECK(sample_student_t(2.0, 1.0, 1000, 124) != sample_student_t(2.0, 1.0, 1000, 123));

  // Scale multiplies every draw.
  const auto y = sample_student_t(2.0, 3.0, 1000, 123);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == Approx(3.0 * x[i]).epsilon(1e-15));

  CHECK_THROWS_AS(sample_student_t(0.0, 1.0, 10, 1), InputError);
  CHECK_THROWS_AS(sample_student_t(2.0, -1.0, 10, 1), InputError);
  CHECK_THROWS_AS(sample_student_t(2.0, 1.0, 0, 1), InputError);
}

TEST_CASE("t(2) scale inflation under Gaussian fitting") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = sample_student_t(2.0, 1.0, 10000, seed);
    CHECK(fit_logistic_mle(x).scale_s < fit_gaussian_mle(x).std_sigma);
  }
}

TEST_CASE("sample file round trip and diagnostics") {
  const std::vector<double> v{1.0, -2.5, 0.1, 1e-300, 12345.678901234567};
  std::stringstream ss;
  write_samples(ss, v);
  CHECK(read_samples(ss) == v);

  std::istringstream comments("# header\n\n 1.5 \n2\n");
  CHECK(read_samples(comments) == std::vector<double>{1.5, 2.0});

  std::istringstream empty("");
  CHECK_THROWS_WITH_AS(read_samples(empty), "no samples", InputError);

  std::istringstream bad("1\n2\nabc\n4\n");
  try {
    read_samples(bad);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}
