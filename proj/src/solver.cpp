#include "lahm/solver.hpp"

#include <cmath>
#include <string>

#include "lahm/errors.hpp"

namespace lahm {

namespace {

void require_kernel_count(const LinearSystem& sys, const MeasurementKernelSet& kernels) {
  if (static_cast<Eigen::Index>(kernels.size()) != sys.measurements()) {
    throw InputError("kernel count " + std::to_string(kernels.size()) +
                     " does not match measurement count " + std::to_string(sys.measurements()));
  }
}

}  // namespace

void validate(const LinearSystem& sys) {
  if (sys.geometry.rows() != sys.delta_y.size()) {
    throw InputError("geometry rows and measurement vector differ in length");
  }
  if (sys.states() == 0) throw InputError("empty state");
  if (sys.measurements() < sys.states()) throw InputError("underdetermined system");
  if (!sys.geometry.allFinite() || !sys.delta_y.allFinite()) {
    throw InputError("non-finite entries in linear system");
  }
}

double objective(const LinearSystem& sys, const MeasurementKernelSet& kernels,
                 const Eigen::VectorXd& x) {
  require_kernel_count(sys, kernels);
  const Eigen::VectorXd r = sys.delta_y - sys.geometry * x;
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += kernels[static_cast<std::size_t>(i)].evaluate(r(i)).loss;
  return total;
}

Eigen::VectorXd weighted_ls_step(const LinearSystem& sys, std::span<const double> weights) {
  validate(sys);
  if (static_cast<Eigen::Index>(weights.size()) != sys.measurements()) {
    throw InputError("weight count does not match measurement count");
  }
  Eigen::VectorXd sqrt_w(sys.measurements());
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < sqrt_w.size(); ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (!std::isfinite(w) || w < 0.0) throw InputError("weights must be finite and nonnegative");
    if (w > 0.0) ++positive;
    sqrt_w(i) = std::sqrt(w);
  }
  if (positive == 0) throw NumericError("all measurements rejected");

  const Eigen::MatrixXd a = sqrt_w.asDiagonal() * sys.geometry;
  const Eigen::VectorXd b = sqrt_w.cwiseProduct(sys.delta_y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  // Relative rank threshold against the largest pivot.
  qr.setThreshold(1e-12);
  if (qr.rank() < sys.states()) throw NumericError("singular geometry");
  Eigen::VectorXd x = qr.solve(b);
  if (!x.allFinite()) throw NumericError("non-finite weighted least-squares solution");
  return x;
}

Solution irls_solve(const LinearSystem& sys, const MeasurementKernelSet& kernels,
                    const std::optional<Eigen::VectorXd>& x0, const IrlsOptions& options) {
  validate(sys);
  require_kernel_count(sys, kernels);
  if (!(options.tolerance > 0.0)) throw InputError("tolerance must be positive");
  if (options.max_iterations < 1) throw InputError("max_iterations must be at least 1");

  const auto n = static_cast<std::size_t>(sys.measurements());
  std::vector<double> weights(n, 1.0);

  Solution sol;
  if (x0) {
    if (x0->size() != sys.states() || !x0->allFinite()) throw InputError("invalid initial state");
    sol.state = *x0;
  } else {
    sol.state = weighted_ls_step(sys, weights);
  }
  sol.objective_trace.push_back(objective(sys, kernels, sol.state));

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd r = sys.delta_y - sys.geometry * sol.state;
    bool any_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = kernels[i].evaluate(r(static_cast<Eigen::Index>(i))).weight;
      any_positive = any_positive || weights[i] > 0.0;
    }
    if (!any_positive) throw NumericError("all measurements rejected");

    const Eigen::VectorXd next = weighted_ls_step(sys, weights);
    const double step = (next - sol.state).lpNorm<Eigen::Infinity>();
    sol.state = next;
    sol.iterations = iter;
    const double obj = objective(sys, kernels, sol.state);
    if (!std::isfinite(obj)) throw NumericError("non-finite objective");
    sol.objective_trace.push_back(obj);
    if (step < options.tolerance) {
      sol.converged = true;
      break;
    }
  }
  sol.residuals = sys.delta_y - sys.geometry * sol.state;
  return sol;
}

}  // namespace lahm
