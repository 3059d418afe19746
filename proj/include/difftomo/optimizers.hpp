#pragma once

#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "difftomo/gradient.hpp"
#include "difftomo/tv.hpp"

namespace difftomo {

/// Settings of the relaxed FISTA loop and of the convex baselines built on it.
struct SolverConfig {
  double alpha = 0.96;
  /// Step size. Must be positive unless the caller resolves it (auto mode).
  double gamma = 0.0;
  double tau = 0.0;
  Box box{0.0, 1.0};
  int max_iterations = 200;
  /// Stop once ||G(f_k)|| <= tolerance * ||G(f_1)||. Zero runs all iterations.
  double tolerance = 1e-4;
  int prox_iterations = 20;
  double prox_tolerance = 0.0;
  /// Evaluate D and grad D at every f_k for the telemetry and the stopping
  /// rule. Costs one extra gradient per iteration unless alpha = 0. Without
  /// it the stopping rule uses the mapping at s_k, which comes for free, and
  /// the F, D and TV columns are NaN.
  bool monitor = true;

  void validate() const;
};

/// Step size (1 - alpha^2) / (2 L).
double auto_step(double alpha, double lipschitz);

/// t_{k+1} = (sqrt(4 t_k^2 + 1) + 1) / 2
double next_t(double t);

struct TelemetryRow {
  int k = 0;
  double F = std::numeric_limits<double>::quiet_NaN();
  double D = std::numeric_limits<double>::quiet_NaN();
  double tv = std::numeric_limits<double>::quiet_NaN();  // tau * TV(f_k)
  double grad_map_norm = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct SolverResult {
  RVector image;
  std::vector<TelemetryRow> telemetry;
  int iterations = 0;
  bool converged = false;
};

/// Thrown when a forward or adjoint solve fails mid-run; carries everything
/// recorded before the failure.
class ReconstructionError : public SolverError {
 public:
  ReconstructionError(const SolverError& cause, std::vector<TelemetryRow> telemetry, RVector last)
      : SolverError(cause), telemetry_(std::move(telemetry)), last_(std::move(last)) {}
  const std::vector<TelemetryRow>& telemetry() const { return telemetry_; }
  const RVector& last_iterate() const { return last_; }

 private:
  std::vector<TelemetryRow> telemetry_;
  RVector last_;
};

/// Iteration callback, invoked after each telemetry row with f_k. Used by the
/// tests to observe the trajectory.
using IterationObserver = std::function<void(const TelemetryRow&, const RVector& f_k, const RVector& s_k)>;

/// Relaxed FISTA for min D(f) + tau TV(f) + box indicator:
///   f_k = prox(s_k - gamma grad D(s_k)),
///   t_{k+1} = (sqrt(4 t_k^2 + 1) + 1) / 2,
///   s_{k+1} = f_k + alpha (t_k - 1) / t_{k+1} (f_k - f_{k-1}),
/// with s_1 = f_0 and t_1 = next_t(1).
SolverResult relaxed_fista(DataFidelity& model, const SolverConfig& config, const RVector& f0,
                           const IterationObserver& observer = {});

struct GradientMapping {
  RVector mapping;
  double norm = 0.0;
};

/// G(f) = (f - prox(f - gamma grad D(f))) / gamma with a cold-started prox.
GradientMapping gradient_mapping(DataFidelity& model, const RVector& f, const SolverConfig& config);

/// Fields frozen at u_in: FISTA (alpha = 1) on the Born model. A non-positive
/// config.gamma is replaced by 1 / ||sum_p (H diag u_p)^H (H diag u_p)||.
SolverResult first_born_reconstruct(std::shared_ptr<const ScatteringOperators> ops, const ScatteringDataset& data,
                                    const std::vector<CVector>& incident, SolverConfig config);

/// Alternates total-field solves at the current estimate with a convex FISTA
/// solve (`inner_iterations` each) of the model linearised at those fields.
/// Starts from f = 0, so one round equals first_born_reconstruct with the
/// same inner budget.
SolverResult iterative_linearization_reconstruct(std::shared_ptr<const ScatteringOperators> ops,
                                                 const ScatteringDataset& data,
                                                 const std::vector<CVector>& incident, SolverConfig config,
                                                 int outer_rounds, int inner_iterations = 50,
                                                 const KrylovOptions& krylov = {});

}  // namespace difftomo
