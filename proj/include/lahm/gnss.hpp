#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lahm/distributions.hpp"
#include "lahm/kernels.hpp"
#include "lahm/random.hpp"
#include "lahm/solver.hpp"

namespace lahm::gnss {

/// One satellite in one epoch. The pseudorange already has satellite clock,
/// ionosphere and troposphere corrections applied.
struct SatelliteObservation {
  int sat_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  ///< ECEF, meters
  double pseudorange = 0.0;                             ///< meters
  double elevation_deg = 0.0;
};

struct EpochObservations {
  std::int64_t epoch_id = 0;
  std::vector<SatelliteObservation> satellites;
};

/// Receiver ECEF position and clock bias, both in meters.
struct ReceiverState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double clock_bias = 0.0;
};

/// Rows (-los, 1) with los the unit vector receiver -> satellite;
/// delta_y = pseudorange - (range + clock) at the linearization point.
LinearSystem build_geometry(const EpochObservations& epoch, const ReceiverState& at);

// -- Elevation-dependent scale model ----------------------------------------

struct ElevationBin {
  double low_deg = 0.0;
  double high_deg = 0.0;
  double gauss_sigma = 0.0;
  double logistic_s = 0.0;
  std::size_t n_samples = 0;

  bool operator==(const ElevationBin&) const = default;
};

/// Contiguous bins covering [0, 90] degrees. An elevation on a bin edge
/// belongs to the upper bin; 90 belongs to the last bin.
class ElevationScaleModel {
 public:
  explicit ElevationScaleModel(std::vector<ElevationBin> bins);

  /// Single bin over the whole sky.
  static ElevationScaleModel uniform(double gauss_sigma, double logistic_s);

  const ElevationBin& lookup(double elevation_deg) const;
  const std::vector<ElevationBin>& bins() const { return bins_; }

  bool operator==(const ElevationScaleModel&) const = default;

 private:
  std::vector<ElevationBin> bins_;
};

struct ElevationErrorSample {
  double elevation_deg = 0.0;
  double error = 0.0;  ///< meters
};

struct ElevationFitOptions {
  double bin_width_deg = 3.0;
  std::size_t min_samples = 30;  ///< sparser bins merge into a neighbour
};

/// Bins the samples by elevation, merges sparse bins into the adjacent bin
/// with more samples, and fits Gaussian and logistic scales per bin.
ElevationScaleModel fit_elevation_model(std::span<const ElevationErrorSample> training,
                                        const ElevationFitOptions& options = {});

// -- Snapshot positioning ---------------------------------------------------

struct SppOptions {
  double position_tolerance = 1e-4;  ///< meters, on the outer relinearization update
  int max_outer_iterations = 10;
  IrlsOptions irls;
};

struct SppFix {
  std::int64_t epoch_id = 0;
  KernelKind method = KernelKind::kLeastSquares;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double clock_bias = 0.0;
  Eigen::VectorXd residuals;  ///< pseudorange residuals at the final state
  int iterations = 0;         ///< outer relinearizations
  int irls_iterations = 0;    ///< summed over all outer iterations
  bool converged = false;
};

/// Per-satellite kernel for `method`: Gaussian sigma for LS/CH, logistic s
/// for LAH/QLC, both taken from the satellite's elevation bin.
MeasurementKernelSet kernels_for(const EpochObservations& epoch, const ElevationScaleModel& model,
                                 KernelKind method);

/// Relinearize-and-solve until the position update drops below tolerance.
/// Without x0 the start point comes from plain least-squares iterations from
/// the Earth's centre.
SppFix spp_solve(const EpochObservations& epoch, const ElevationScaleModel& model,
                 KernelKind method, const std::optional<ReceiverState>& x0 = std::nullopt,
                 const SppOptions& options = {});

// -- Synthetic data ----------------------------------------------------------

enum class ErrorLawKind { kNone, kGaussian, kLogistic, kStudentT };

struct ErrorLaw {
  ErrorLawKind kind = ErrorLawKind::kNone;
  double scale = 0.0;  ///< sigma, logistic s or t scale
  double dof = 2.0;    ///< Student-t only

  double draw(Engine& engine) const;
};

/// Error law for elevations in [low_deg, high_deg).
struct ElevationBand {
  double low_deg = 0.0;
  double high_deg = 90.0;
  ErrorLaw law;
};

/// Hong Kong area receiver used by the synthetic profiles.
ReceiverState default_receiver();

struct SyntheticConfig {
  /// With 8, the two lowest satellites carry leverage near 0.8 and a single gross
  /// fault on either can drag any Huber-type fix further than least squares.
  std::size_t satellite_count = 10;
  std::size_t n_epochs = 100;
  std::uint64_t seed = 1;
  ReceiverState truth = default_receiver();
  double min_elevation_deg = 5.0;
  std::vector<ElevationBand> bands;  ///< elevations outside every band get no error
};

/// Noise-free measurements.
SyntheticConfig clean_profile();
/// Student-t(2) errors at low elevation, logistic in the middle, small
/// Gaussian errors overhead.
SyntheticConfig urban_profile();

struct SyntheticDataset {
  ReceiverState truth;
  std::vector<EpochObservations> epochs;
  std::vector<std::vector<double>> injected_errors;  ///< parallel to epochs[k].satellites

  std::vector<ElevationErrorSample> training_samples() const;
};

/// Satellites on a 26560 km sphere, one per elevation stratum over
/// [min_elevation, 90), azimuths spread around the sky. Epoch k draws from
/// substream (seed, k).
SyntheticDataset generate_synthetic_epochs(const SyntheticConfig& config);

// -- Files -------------------------------------------------------------------

/// epoch_id,sat_id,sat_x,sat_y,sat_z,pseudorange,elevation_deg
std::vector<EpochObservations> read_epochs(std::istream& in);
void write_epochs(std::ostream& out, std::span<const EpochObservations> epochs);

/// bin_low_deg,bin_high_deg,gauss_sigma,logistic_s,n_samples
ElevationScaleModel read_scale_model(std::istream& in);
void write_scale_model(std::ostream& out, const ElevationScaleModel& model);

/// elevation_deg,error
std::vector<ElevationErrorSample> read_training(std::istream& in);
void write_training(std::ostream& out, std::span<const ElevationErrorSample> samples);

struct TruthRecord {
  std::int64_t epoch_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// epoch_id,x,y,z
std::vector<TruthRecord> read_truth(std::istream& in);
void write_truth(std::ostream& out, std::span<const TruthRecord> truth);

/// epoch_id,x,y,z,clock,method,iterations,converged[,error_3d]
void write_fix_header(std::ostream& out, bool with_error);
void write_fix_row(std::ostream& out, const SppFix& fix, std::optional<double> error_3d);

}  // namespace lahm::gnss
