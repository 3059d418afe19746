#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "difftomo/geometry.hpp"
#include "difftomo/krylov.hpp"
#include "difftomo/operators.hpp"

namespace difftomo {

struct TotalFieldSolution {
  CVector field;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves A(f) u = u_in. Throws SolverError (transmitter -1) when the Krylov
/// method stops above tolerance.
TotalFieldSolution solve_total_field(const ScatteringOperators& ops, const RVector& f, const CVector& u_in,
                                     const KrylovOptions& options = {}, const CVector* initial_guess = nullptr);

/// Z(f) = H (u .* f) on the listed receiver rows.
CVector scattered_field(const ScatteringOperators& ops, const RVector& f, const CVector& u,
                        const std::vector<std::size_t>& rows);

/// Measurements for every transmitter of a layout. measurements[p] holds the
/// active receivers of transmitter p in ascending receiver order.
struct ScatteringDataset {
  Layout layout;
  PhysicsConfig physics{1.0};
  std::vector<CVector> measurements;
  /// Additive noise realisation per transmitter; empty when not recorded.
  std::vector<CVector> noise;

  std::size_t transmitter_count() const { return measurements.size(); }
  /// Lengths match the active masks and every value is finite.
  void validate() const;
  /// Same dataset with every measurement multiplied by `factor`.
  ScatteringDataset scaled(double factor) const;
};

/// 0.5 * sum_p ||y_p - Z_p(f)||^2.
double data_fidelity(const ScatteringOperators& ops, const RVector& f, const ScatteringDataset& data,
                     const std::vector<CVector>& incident, const KrylovOptions& options = {});

struct SimulationOptions {
  /// Measurement SNR in dB; +inf leaves the data clean.
  double snr_db = std::numeric_limits<double>::infinity();
  /// Forward solve on a grid refined by this factor (1 or 2).
  int anti_crime_factor = 1;
  std::uint64_t seed = 0;
  KrylovOptions krylov{1e-8, 2000, KrylovMethod::bicgstab};
  bool include_self_term = true;
};

/// Forward-simulates y = H (u .* f) + e for every transmitter. With
/// anti_crime_factor 2 each pixel of f_true is replicated onto a grid twice as
/// fine before the forward solve.
ScatteringDataset simulate_measurements(const RVector& f_true, const Grid& grid, const Layout& layout,
                                        const PhysicsConfig& physics, const SimulationOptions& options = {});

/// Piecewise-constant upsampling of an image to grid.refined(factor).
RVector upsample_nearest(const RVector& f, const Grid& grid, int factor);

/// Adds circular complex Gaussian noise at the requested SNR over the whole
/// dataset, recording the realisation.
void add_measurement_noise(ScatteringDataset& data, double snr_db, std::uint64_t seed);

}  // namespace difftomo
