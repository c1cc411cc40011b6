#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lahm/kernels.hpp"

namespace lahm {

/// Linearized measurement model delta_y = H x + e. Rows are measurements.
struct LinearSystem {
  Eigen::MatrixXd geometry;
  Eigen::VectorXd delta_y;

  Eigen::Index measurements() const { return geometry.rows(); }
  Eigen::Index states() const { return geometry.cols(); }
};

/// Checks n >= p, matching sizes and finite entries. Rank is checked by the solves.
void validate(const LinearSystem& sys);

using MeasurementKernelSet = std::vector<KernelSpec>;

struct IrlsOptions {
  double tolerance = 1e-8;  ///< stop when the infinity norm of the state update drops below this
  int max_iterations = 50;
};

struct Solution {
  Eigen::VectorXd state;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd residuals;
  std::vector<double> objective_trace;  ///< objective at the start point and after every iteration
};

/// Sum of kernel losses at state x.
double objective(const LinearSystem& sys, const MeasurementKernelSet& kernels,
                 const Eigen::VectorXd& x);

/// argmin_x sum_i w_i (delta_y_i - H_i x)^2, via column-pivoted QR of sqrt(W) H.
/// Throws NumericError("singular geometry") if the weighted system is rank deficient.
Eigen::VectorXd weighted_ls_step(const LinearSystem& sys, std::span<const double> weights);

/// Iteratively reweighted least squares with weights psi(r)/r. Without x0 the
/// iteration starts from the unit-weight least-squares solution.
Solution irls_solve(const LinearSystem& sys, const MeasurementKernelSet& kernels,
                    const std::optional<Eigen::VectorXd>& x0 = std::nullopt,
                    const IrlsOptions& options = {});

}  // namespace lahm
