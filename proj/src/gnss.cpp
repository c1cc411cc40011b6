#include "lahm/gnss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "lahm/errors.hpp"
#include "text_io.hpp"

namespace lahm::gnss {

namespace {

constexpr double kOrbitRadius = 26'560'000.0;
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kBootstrapIterations = 20;

void require_solvable(const EpochObservations& epoch) {
  if (epoch.satellites.size() < 4) throw InputError("underdetermined epoch");
}

bool valid_elevation(double e) { return std::isfinite(e) && e >= 0.0 && e <= 90.0; }

struct OuterResult {
  ReceiverState state;
  int iterations = 0;
  int irls_iterations = 0;
  bool converged = false;
};

// Outer relinearization loop around irls_solve on a fixed geometry.
OuterResult relinearize(const EpochObservations& epoch, const MeasurementKernelSet& kernels,
                        ReceiverState state, int max_iterations, const SppOptions& options) {
  OuterResult out;
  double last_update = std::numeric_limits<double>::infinity();
  int growing = 0;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const LinearSystem sys = build_geometry(epoch, state);
    const Solution sol = irls_solve(sys, kernels, std::nullopt, options.irls);
    state.position += sol.state.head<3>();
    state.clock_bias += sol.state(3);
    out.iterations = iter;
    out.irls_iterations += sol.iterations;

    const double update = sol.state.head<3>().norm();
    if (!std::isfinite(update)) throw NumericError("non-finite position update");
    if (update < options.position_tolerance) {
      out.converged = true;
      break;
    }
    growing = update > last_update ? growing + 1 : 0;
    if (growing >= 3) throw NumericError("diverged");
    last_update = update;
  }
  out.state = state;
  return out;
}

}  // namespace

LinearSystem build_geometry(const EpochObservations& epoch, const ReceiverState& at) {
  require_solvable(epoch);
  if (!at.position.allFinite() || !std::isfinite(at.clock_bias)) {
    throw InputError("non-finite linearization point");
  }
  const auto n = static_cast<Eigen::Index>(epoch.satellites.size());
  LinearSystem sys{Eigen::MatrixXd(n, 4), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& sat = epoch.satellites[static_cast<std::size_t>(i)];
    const Eigen::Vector3d diff = sat.position - at.position;
    const double range = diff.norm();
    if (!(range > 0.0) || !std::isfinite(range)) {
      throw InputError("satellite " + std::to_string(sat.sat_id) + " coincides with receiver");
    }
    sys.geometry.block<1, 3>(i, 0) = -(diff / range).transpose();
    sys.geometry(i, 3) = 1.0;
    sys.delta_y(i) = sat.pseudorange - (range + at.clock_bias);
  }
  return sys;
}

// -- ElevationScaleModel ------------------------------------------------------

ElevationScaleModel::ElevationScaleModel(std::vector<ElevationBin> bins) : bins_(std::move(bins)) {
  if (bins_.empty()) throw InputError("scale model has no bins");
  if (bins_.front().low_deg != 0.0 || bins_.back().high_deg != 90.0) {
    throw InputError("scale model must cover 0 to 90 degrees");
  }
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    const auto& b = bins_[i];
    if (!(b.low_deg < b.high_deg)) throw InputError("scale model bin has empty range");
    if (i + 1 < bins_.size() && b.high_deg != bins_[i + 1].low_deg) {
      throw InputError("scale model bins are not contiguous");
    }
    if (!(b.gauss_sigma > 0.0) || !(b.logistic_s > 0.0) || !std::isfinite(b.gauss_sigma) ||
        !std::isfinite(b.logistic_s)) {
      throw InputError("scale model bin scales must be positive");
    }
  }
}

ElevationScaleModel ElevationScaleModel::uniform(double gauss_sigma, double logistic_s) {
  return ElevationScaleModel({ElevationBin{0.0, 90.0, gauss_sigma, logistic_s, 0}});
}

const ElevationBin& ElevationScaleModel::lookup(double elevation_deg) const {
  if (!valid_elevation(elevation_deg)) throw InputError("elevation outside [0, 90] degrees");
  const auto it = std::upper_bound(bins_.begin(), bins_.end(), elevation_deg,
                                   [](double e, const ElevationBin& b) { return e < b.low_deg; });
  return *std::prev(it);
}

ElevationScaleModel fit_elevation_model(std::span<const ElevationErrorSample> training,
                                        const ElevationFitOptions& options) {
  if (training.empty()) throw InputError("empty training set");
  if (!(options.bin_width_deg > 0.0) || options.bin_width_deg > 90.0) {
    throw InputError("bin width must be in (0, 90] degrees");
  }
  if (options.min_samples < 10) throw InputError("minimum bin count must be at least 10");

  struct Group {
    double low;
    double high;
    std::vector<double> errors;
  };
  const double w = options.bin_width_deg;
  const auto n_bins = static_cast<std::size_t>(std::ceil(90.0 / w - 1e-9));
  std::vector<Group> groups(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    groups[i].low = static_cast<double>(i) * w;
    groups[i].high = std::min(90.0, static_cast<double>(i + 1) * w);
  }
  for (const auto& s : training) {
    if (!valid_elevation(s.elevation_deg)) throw InputError("training elevation outside [0, 90]");
    if (!std::isfinite(s.error)) throw InputError("non-finite training error");
    const auto idx = std::min(n_bins - 1, static_cast<std::size_t>(std::floor(s.elevation_deg / w)));
    groups[idx].errors.push_back(s.error);
  }

  // Merge the sparsest bin into its fuller neighbour until every bin is dense enough.
  while (groups.size() > 1) {
    std::size_t sparse = groups.size();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].errors.size() < options.min_samples &&
          (sparse == groups.size() || groups[i].errors.size() < groups[sparse].errors.size())) {
        sparse = i;
      }
    }
    if (sparse == groups.size()) break;
    std::size_t into;
    if (sparse == 0) {
      into = 1;
    } else if (sparse + 1 == groups.size()) {
      into = sparse - 1;
    } else {
      into = groups[sparse - 1].errors.size() > groups[sparse + 1].errors.size() ? sparse - 1
                                                                                 : sparse + 1;
    }
    Group& target = groups[into];
    target.low = std::min(target.low, groups[sparse].low);
    target.high = std::max(target.high, groups[sparse].high);
    target.errors.insert(target.errors.end(), groups[sparse].errors.begin(),
                         groups[sparse].errors.end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(sparse));
  }
  if (groups.front().errors.size() < options.min_samples) {
    throw InputError("not enough training samples for one elevation bin");
  }

  std::vector<ElevationBin> bins;
  for (const auto& g : groups) {
    bins.push_back(ElevationBin{g.low, g.high, fit_gaussian_mle(g.errors).std_sigma,
                                fit_logistic_mle(g.errors).scale_s, g.errors.size()});
  }
  return ElevationScaleModel(std::move(bins));
}

// -- SPP ---------------------------------------------------------------------------

MeasurementKernelSet kernels_for(const EpochObservations& epoch, const ElevationScaleModel& model,
                                 KernelKind method) {
  MeasurementKernelSet kernels;
  kernels.reserve(epoch.satellites.size());
  for (const auto& sat : epoch.satellites) {
    const ElevationBin& bin = model.lookup(sat.elevation_deg);
    switch (method) {
      case KernelKind::kLeastSquares:
        kernels.push_back(KernelSpec::least_squares(bin.gauss_sigma));
        break;
      case KernelKind::kConventionalHuber:
        kernels.push_back(KernelSpec::conventional_huber(bin.gauss_sigma));
        break;
      case KernelKind::kLogisticAidedHuber:
        kernels.push_back(KernelSpec::logistic_aided_huber(bin.logistic_s));
        break;
      case KernelKind::kQuasiLogCosh:
        kernels.push_back(KernelSpec::quasi_log_cosh(bin.logistic_s));
        break;
    }
  }
  return kernels;
}

SppFix spp_solve(const EpochObservations& epoch, const ElevationScaleModel& model,
                 KernelKind method, const std::optional<ReceiverState>& x0,
                 const SppOptions& options) {
  require_solvable(epoch);
  const MeasurementKernelSet kernels = kernels_for(epoch, model, method);

  ReceiverState start;
  if (x0) {
    start = *x0;
  } else {
    const MeasurementKernelSet unit(epoch.satellites.size(), KernelSpec::least_squares(1.0));
    start = relinearize(epoch, unit, ReceiverState{}, kBootstrapIterations, options).state;
  }
  const OuterResult result =
      relinearize(epoch, kernels, start, options.max_outer_iterations, options);

  SppFix fix;
  fix.epoch_id = epoch.epoch_id;
  fix.method = method;
  fix.position = result.state.position;
  fix.clock_bias = result.state.clock_bias;
  fix.iterations = result.iterations;
  fix.irls_iterations = result.irls_iterations;
  fix.converged = result.converged;
  fix.residuals = build_geometry(epoch, result.state).delta_y;
  return fix;
}

// -- Synthetic data ------------------------------------------------------------

double ErrorLaw::draw(Engine& engine) const {
  switch (kind) {
    case ErrorLawKind::kNone: return 0.0;
    case ErrorLawKind::kGaussian: {
      boost::random::normal_distribution<double> normal(0.0, scale);
      return normal(engine);
    }
    case ErrorLawKind::kLogistic: {
      boost::random::uniform_01<double> uniform;
      double u = 0.0;
      do {
        u = uniform(engine);
      } while (u <= 0.0);
      return scale * std::log(u / (1.0 - u));
    }
    case ErrorLawKind::kStudentT: return scale * draw_student_t(engine, dof);
  }
  return 0.0;
}

ReceiverState default_receiver() {
  return ReceiverState{Eigen::Vector3d(-2414266.9197, 5386768.9868, 2407460.0314), 25.0};
}

SyntheticConfig clean_profile() { return SyntheticConfig{}; }

SyntheticConfig urban_profile() {
  SyntheticConfig c;
  c.bands = {
      {0.0, 20.0, {ErrorLawKind::kStudentT, 4.0, 2.0}},
      {20.0, 40.0, {ErrorLawKind::kStudentT, 2.0, 2.0}},
      {40.0, 65.0, {ErrorLawKind::kLogistic, 1.0, 0.0}},
      {65.0, 90.0, {ErrorLawKind::kGaussian, 0.8, 0.0}},
  };
  return c;
}

std::vector<ElevationErrorSample> SyntheticDataset::training_samples() const {
  std::vector<ElevationErrorSample> out;
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    for (std::size_t j = 0; j < epochs[k].satellites.size(); ++j) {
      out.push_back({epochs[k].satellites[j].elevation_deg, injected_errors[k][j]});
    }
  }
  return out;
}

SyntheticDataset generate_synthetic_epochs(const SyntheticConfig& config) {
  if (config.satellite_count < 4) throw InputError("synthetic config needs at least 4 satellites");
  if (config.n_epochs == 0) throw InputError("synthetic config needs at least one epoch");
  if (!(config.min_elevation_deg >= 0.0) || !(config.min_elevation_deg < 90.0)) {
    throw InputError("minimum elevation must be in [0, 90)");
  }
  const Eigen::Vector3d rx = config.truth.position;
  if (!rx.allFinite() || rx.norm() < 1.0 || rx.norm() >= kOrbitRadius) {
    throw InputError("receiver must lie inside the orbit sphere");
  }
  for (const auto& band : config.bands) {
    if (!(band.low_deg < band.high_deg)) throw InputError("empty elevation band");
    if (band.law.kind != ErrorLawKind::kNone && !(band.law.scale > 0.0)) {
      throw InputError("error law scale must be positive");
    }
    if (band.law.kind == ErrorLawKind::kStudentT && !(band.law.dof > 0.0)) {
      throw InputError("error law dof must be positive");
    }
  }

  // Local frame with a geocentric up vector.
  const Eigen::Vector3d up = rx.normalized();
  Eigen::Vector3d east = Eigen::Vector3d::UnitZ().cross(up);
  if (east.norm() < 1e-9) east = Eigen::Vector3d::UnitX();
  east.normalize();
  const Eigen::Vector3d north = up.cross(east);

  const std::size_t n_sats = config.satellite_count;
  const double span = 90.0 - config.min_elevation_deg;
  boost::random::uniform_01<double> uniform;

  SyntheticDataset data;
  data.truth = config.truth;
  data.epochs.reserve(config.n_epochs);
  data.injected_errors.reserve(config.n_epochs);
  for (std::size_t k = 0; k < config.n_epochs; ++k) {
    Engine engine = make_engine(config.seed, k);
    EpochObservations epoch;
    epoch.epoch_id = static_cast<std::int64_t>(k);
    std::vector<double> errors;
    const double az0 = 360.0 * uniform(engine);
    for (std::size_t j = 0; j < n_sats; ++j) {
      const double elev = config.min_elevation_deg +
                          span * (static_cast<double>(j) + uniform(engine)) / static_cast<double>(n_sats);
      // Golden-angle azimuth steps keep consecutive strata apart in azimuth.
      const double az = std::fmod(az0 + 137.50776 * static_cast<double>(j) + 20.0 * (uniform(engine) - 0.5), 360.0);
      const double el_rad = elev * kDegToRad;
      const double az_rad = az * kDegToRad;
      const Eigen::Vector3d los = std::cos(el_rad) * std::sin(az_rad) * east +
                                  std::cos(el_rad) * std::cos(az_rad) * north +
                                  std::sin(el_rad) * up;
      const double b = rx.dot(los);
      const double range = -b + std::sqrt(b * b - (rx.squaredNorm() - kOrbitRadius * kOrbitRadius));

      double error = 0.0;
      for (const auto& band : config.bands) {
        if (elev >= band.low_deg && elev < band.high_deg) {
          error = band.law.draw(engine);
          break;
        }
      }
      SatelliteObservation sat;
      sat.sat_id = static_cast<int>(j + 1);
      sat.position = rx + range * los;
      sat.pseudorange = range + config.truth.clock_bias + error;
      sat.elevation_deg = elev;
      epoch.satellites.push_back(sat);
      errors.push_back(error);
    }
    data.epochs.push_back(std::move(epoch));
    data.injected_errors.push_back(std::move(errors));
  }
  return data;
}

// -- Files ---------------------------------------------------------------------

namespace {
constexpr const char* kEpochHeader = "epoch_id,sat_id,sat_x,sat_y,sat_z,pseudorange,elevation_deg";
constexpr const char* kModelHeader = "bin_low_deg,bin_high_deg,gauss_sigma,logistic_s,n_samples";
constexpr const char* kTrainingHeader = "elevation_deg,error";
constexpr const char* kTruthHeader = "epoch_id,x,y,z";

template <typename RowFn>
void for_each_row(std::istream& in, const char* header, std::size_t columns, RowFn&& fn) {
  std::size_t line_no = 0;
  text::expect_header(in, header, line_no);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_skippable(line)) continue;
    const auto fields = text::split(line);
    if (fields.size() != columns) {
      throw InputError(text::where(line_no) + "expected " + std::to_string(columns) + " fields, got " +
                       std::to_string(fields.size()));
    }
    fn(fields, line_no);
  }
}
}  // namespace

std::vector<EpochObservations> read_epochs(std::istream& in) {
  std::vector<EpochObservations> epochs;
  for_each_row(in, kEpochHeader, 7, [&](const auto& f, std::size_t ln) {
    const std::int64_t epoch_id = text::parse_int(f[0], ln);
    SatelliteObservation sat;
    sat.sat_id = static_cast<int>(text::parse_int(f[1], ln));
    sat.position = {text::parse_double(f[2], ln), text::parse_double(f[3], ln),
                    text::parse_double(f[4], ln)};
    sat.pseudorange = text::parse_double(f[5], ln);
    sat.elevation_deg = text::parse_double(f[6], ln);
    if (!valid_elevation(sat.elevation_deg)) {
      throw InputError(text::where(ln) + "elevation outside [0, 90]");
    }
    if (epochs.empty() || epochs.back().epoch_id != epoch_id) {
      epochs.push_back(EpochObservations{epoch_id, {}});
    }
    epochs.back().satellites.push_back(sat);
  });
  return epochs;
}

void write_epochs(std::ostream& out, std::span<const EpochObservations> epochs) {
  out << kEpochHeader << '\n';
  for (const auto& e : epochs) {
    for (const auto& s : e.satellites) {
      out << e.epoch_id << ',' << s.sat_id;
      for (double v : {s.position.x(), s.position.y(), s.position.z(), s.pseudorange, s.elevation_deg}) {
        out << ',';
        text::put(out, v);
      }
      out << '\n';
    }
  }
}

ElevationScaleModel read_scale_model(std::istream& in) {
  std::vector<ElevationBin> bins;
  for_each_row(in, kModelHeader, 5, [&](const auto& f, std::size_t ln) {
    const std::int64_t count = text::parse_int(f[4], ln);
    if (count < 0) throw InputError(text::where(ln) + "negative sample count");
    bins.push_back(ElevationBin{text::parse_double(f[0], ln), text::parse_double(f[1], ln),
                                text::parse_double(f[2], ln), text::parse_double(f[3], ln),
                                static_cast<std::size_t>(count)});
  });
  return ElevationScaleModel(std::move(bins));
}

void write_scale_model(std::ostream& out, const ElevationScaleModel& model) {
  out << kModelHeader << '\n';
  for (const auto& b : model.bins()) {
    for (double v : {b.low_deg, b.high_deg, b.gauss_sigma, b.logistic_s}) {
      text::put(out, v);
      out << ',';
    }
    out << b.n_samples << '\n';
  }
}

std::vector<ElevationErrorSample> read_training(std::istream& in) {
  std::vector<ElevationErrorSample> samples;
  for_each_row(in, kTrainingHeader, 2, [&](const auto& f, std::size_t ln) {
    samples.push_back({text::parse_double(f[0], ln), text::parse_double(f[1], ln)});
  });
  return samples;
}

void write_training(std::ostream& out, std::span<const ElevationErrorSample> samples) {
  out << kTrainingHeader << '\n';
  for (const auto& s : samples) {
    text::put(out, s.elevation_deg);
    out << ',';
    text::put(out, s.error);
    out << '\n';
  }
}

std::vector<TruthRecord> read_truth(std::istream& in) {
  std::vector<TruthRecord> truth;
  for_each_row(in, kTruthHeader, 4, [&](const auto& f, std::size_t ln) {
    truth.push_back({text::parse_int(f[0], ln),
                     {text::parse_double(f[1], ln), text::parse_double(f[2], ln),
                      text::parse_double(f[3], ln)}});
  });
  return truth;
}

void write_truth(std::ostream& out, std::span<const TruthRecord> truth) {
  out << kTruthHeader << '\n';
  for (const auto& t : truth) {
    out << t.epoch_id;
    for (double v : {t.position.x(), t.position.y(), t.position.z()}) {
      out << ',';
      text::put(out, v);
    }
    out << '\n';
  }
}

void write_fix_header(std::ostream& out, bool with_error) {
  out << "epoch_id,x,y,z,clock,method,iterations,converged" << (with_error ? ",error_3d" : "") << '\n';
}

void write_fix_row(std::ostream& out, const SppFix& fix, std::optional<double> error_3d) {
  out << fix.epoch_id;
  for (double v : {fix.position.x(), fix.position.y(), fix.position.z(), fix.clock_bias}) {
    out << ',';
    text::put(out, v);
  }
  out << ',' << to_string(fix.method) << ',' << fix.iterations << ',' << (fix.converged ? 1 : 0);
  if (error_3d) {
    out << ',';
    text::put(out, *error_3d);
  }
  out << '\n';
}

}  // namespace lahm::gnss
