#pragma once

// Glue between a parsed configuration and the solver modules.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "difftomo/io.hpp"
#include "difftomo/vectorial.hpp"

namespace difftomo {

/// Everything a reconstruction needs, built once from a configuration.
struct Problem {
  ExperimentConfig config;
  Grid grid{2, 2, 1.0};
  PhysicsConfig physics{1.0};
  Layout layout;
  IncidentKind incident_kind = IncidentKind::point_source;
  /// Ground truth; empty when the data came from a file.
  std::optional<Phantom> phantom;
  std::vector<CVector> incident;
  ScatteringDataset data;
  /// Exactly one of these is set: scalar model in 2D, vectorial in 3D.
  std::shared_ptr<const ScatteringOperators> scalar_ops;
  std::shared_ptr<const VectorialOperators> vector_ops;

  bool vectorial() const { return vector_ops != nullptr; }
};

Layout build_layout(const ExperimentConfig& config, const Grid& grid);
Phantom build_phantom(const ExperimentConfig& config, const Grid& grid);

/// Builds operators and incident fields. Without `data` the phantom is
/// simulated (with the configured anti-crime refinement and noise).
Problem build_problem(const ExperimentConfig& config, std::optional<ScatteringDataset> data = std::nullopt);

/// Nonlinear data term of the problem (scalar or vectorial).
std::unique_ptr<DataFidelity> make_model(const Problem& problem, bool warm_start = true);

/// ||grad D(0)||_inf, the reference for tau_rel.
double tau_scale(const Problem& problem);

struct MethodRun {
  Method method = Method::cisor;
  SolverConfig solver;  // resolved gamma and tau
  double lipschitz = 0.0;  // L used for the step (0 when fixed)
  SolverResult result;
};

/// Resolves step and weight for `method` and runs it from f = 0.
/// `tau_rel` overrides the configured relative weight when given.
MethodRun run_method(const Problem& problem, Method method, std::optional<double> tau_rel = std::nullopt,
                     const IterationObserver& observer = {});

/// Solver settings as run_method would use them, without running.
SolverConfig resolve_solver(const Problem& problem, Method method, DataFidelity& model, double scale,
                            std::optional<double> tau_rel, double* lipschitz = nullptr);

struct SweepRow {
  Method method;
  double contrast;
  double snr_db;
  double tau_rel;
  int iterations;
};

struct SweepResult {
  /// Best tau per (method, contrast), contrast-major.
  std::vector<SweepRow> best;
  /// Every (method, contrast, tau) run.
  std::vector<SweepRow> all;
};

/// Contrast sweep: for each contrast simulate fresh data, run every method at
/// every tau_rel and keep the best SNR. `progress` receives one line per run.
SweepResult run_sweep(const ExperimentConfig& config, const std::function<void(const SweepRow&)>& progress = {});

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::vector<std::size_t> coordinates;
  std::vector<double> adjoint;
  std::vector<double> finite_difference;
};

/// Compares the adjoint gradient with central differences, step
/// 1e-5 * max(1, |f_n|), at `count` random coordinates of the point `f`.
/// Uses the problem's data and a tight Krylov tolerance.
GradcheckResult gradcheck(const Problem& problem, const RVector& f, int count = 10, std::uint64_t seed = 0,
                          double krylov_tolerance = 1e-13);

/// Point used by the CLI gradcheck: half the phantom plus a small positive
/// random perturbation, so no gradient entry is trivially zero.
RVector gradcheck_point(const Problem& problem, std::uint64_t seed);

}  // namespace difftomo
