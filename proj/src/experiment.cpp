#include "difftomo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace difftomo {

Layout build_layout(const ExperimentConfig& config, const Grid& grid) {
  const auto& spec = config.layout;
  Layout layout;
  if (spec.preset == "simulated_2d") {
    layout = simulated_layout_2d();
  } else if (spec.preset == "halved_2d") {
    layout = simulated_layout_2d(halved_linear_array());
  } else if (spec.preset == "spherical_3d") {
    layout = spherical_layout_3d();
  } else if (spec.preset == "explicit") {
    layout = make_layout(config.grid.dim, spec.transmitters, spec.receivers);
    if (!spec.active.empty()) layout.active = spec.active;
  } else {
    throw ConfigError("layout.preset: unknown preset '" + spec.preset + "'");
  }
  if (!spec.use_transmitters.empty()) {
    Layout kept;
    kept.dim = layout.dim;
    kept.receivers = layout.receivers;
    for (int p : spec.use_transmitters) {
      if (p < 0 || static_cast<std::size_t>(p) >= layout.transmitter_count()) {
        throw ConfigError("layout.use_transmitters: index " + std::to_string(p) + " outside the preset (" +
                          std::to_string(layout.transmitter_count()) + " transmitters)");
      }
      kept.transmitters.push_back(layout.transmitters[static_cast<std::size_t>(p)]);
      kept.active.push_back(layout.active[static_cast<std::size_t>(p)]);
    }
    layout = std::move(kept);
  }
  try {
    layout.validate(grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("layout: ") + e.what());
  }
  return layout;
}

Phantom build_phantom(const ExperimentConfig& config, const Grid& grid) {
  const auto& spec = config.phantom;
  if (spec.kind == "shepp-logan") return shepp_logan(grid.side(), spec.contrast);
  ShapeSpec shapes;
  if (spec.kind == "two-spheres") {
    shapes = two_spheres_preset(spec.contrast);
  } else if (spec.kind == "two-cubes") {
    shapes = two_cubes_preset(spec.contrast);
  } else {
    shapes.spheres = spec.spheres;
    shapes.cubes = spec.cubes;
  }
  Phantom out = spheres_cubes_3d(grid, shapes);
  out.label = spec.kind;
  return out;
}

namespace {

IncidentKind incident_kind(const ExperimentConfig& config) {
  if (config.incident.empty()) return default_incident_kind(config.grid.dim);
  if (config.incident == "point_source") return IncidentKind::point_source;
  if (config.incident == "plane_wave") return IncidentKind::plane_wave;
  return IncidentKind::dipole;
}

PhysicsConfig physics_of(const ExperimentConfig& config) {
  PhysicsConfig physics(config.physics.wavelength, config.physics.eps_b);
  physics.dyadic_uses_background_k = config.physics.dyadic_uses_background_k;
  return physics;
}

Box box_of(const ExperimentConfig& config) {
  return Box{config.solver.box_min, config.solver.box_max.value_or(config.phantom.contrast)};
}

}  // namespace

Problem build_problem(const ExperimentConfig& config, std::optional<ScatteringDataset> data) {
  validate_config(config);
  Problem pb;
  pb.config = config;
  pb.grid = build_grid(config.grid.dim, config.grid.J, config.grid.pitch);
  pb.physics = physics_of(config);
  pb.incident_kind = incident_kind(config);
  OperatorOptions options;
  options.include_self_term = config.simulation.include_self_term;

  if (data) {
    data->validate();
    if (data->layout.dim != config.grid.dim) throw ConfigError("grid.dim: dataset dimension differs");
    try {
      data->layout.validate(pb.grid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("layout: dataset layout does not fit the grid: ") + e.what());
    }
    pb.physics = data->physics;
    pb.layout = data->layout;
  } else {
    pb.layout = build_layout(config, pb.grid);
  }

  if (config.grid.dim == 2) {
    pb.scalar_ops = std::make_shared<ScatteringOperators>(pb.grid, pb.physics, pb.layout.receivers, options);
  } else {
    pb.vector_ops = std::make_shared<VectorialOperators>(pb.grid, pb.physics, pb.layout.receivers, options);
  }
  pb.incident = incident_fields(pb.grid, pb.layout, pb.physics, pb.incident_kind);

  if (data) {
    pb.data = std::move(*data);
  } else {
    pb.phantom = build_phantom(config, pb.grid);
    SimulationOptions sim;
    sim.snr_db = config.simulation.snr_db;
    sim.anti_crime_factor = config.simulation.anti_crime_factor;
    sim.seed = config.seed;
    sim.krylov = config.simulation.krylov;
    sim.include_self_term = config.simulation.include_self_term;
    if (config.grid.dim == 2) {
      pb.data = simulate_measurements(pb.phantom->image, pb.grid, pb.layout, pb.physics, sim);
    } else {
      pb.data = simulate_measurements_3d(pb.phantom->image, pb.grid, pb.layout, pb.physics, pb.incident_kind, sim);
    }
  }
  return pb;
}

std::unique_ptr<DataFidelity> make_model(const Problem& pb, bool warm_start) {
  if (pb.vectorial()) {
    return std::make_unique<VectorialFidelity>(pb.vector_ops, pb.data, pb.incident, pb.config.solver.krylov,
                                               warm_start);
  }
  return std::make_unique<ScalarFidelity>(pb.scalar_ops, pb.data, pb.incident, pb.config.solver.krylov, warm_start);
}

double tau_scale(const Problem& pb) {
  auto model = make_model(pb, false);
  RVector grad;
  model->value_and_gradient(RVector::Zero(static_cast<Eigen::Index>(model->size())), grad);
  return grad.cwiseAbs().maxCoeff();
}

SolverConfig resolve_solver(const Problem& pb, Method method, DataFidelity& model, double scale,
                            std::optional<double> tau_rel, double* lipschitz) {
  const auto& s = pb.config.solver;
  SolverConfig out;
  out.alpha = method == Method::ista ? 0.0 : (method == Method::cisor ? s.alpha : 1.0);
  out.box = box_of(pb.config);
  out.max_iterations = s.max_iterations;
  out.tolerance = s.tolerance;
  out.prox_iterations = s.prox_iterations;
  out.prox_tolerance = s.prox_tolerance;
  out.monitor = s.monitor;
  out.tau = (s.tau && !tau_rel) ? *s.tau : tau_rel.value_or(s.tau_rel) * scale;
  double L = 0.0;

  const bool baseline = method == Method::fb || method == Method::il;
  if (s.step_rule == StepRule::fixed) {
    out.gamma = s.gamma;
  } else if (baseline) {
    out.gamma = 0.0;  // the baselines pick 1 / ||linearised operator|| per round
  } else if (s.step_rule == StepRule::born) {
    if (pb.vectorial()) throw ConfigError("solver.gamma: the born step rule needs the scalar 2D model");
    L = born_operator_norm(*pb.scalar_ops, pb.incident, pb.data.layout);
    out.gamma = s.gamma_scale / L;
  } else {
    double floor = 0.0;
    if (!pb.vectorial()) floor = born_operator_norm(*pb.scalar_ops, pb.incident, pb.data.layout);
    const auto est = lipschitz_estimate(model, out.box, s.lipschitz_samples, pb.config.seed, floor,
                                        s.lipschitz_safety, s.lipschitz_fraction);
    L = est.value;
    // Plain FISTA has no relaxation margin; it takes the alpha = 0 step.
    out.gamma = auto_step(out.alpha < 1.0 ? out.alpha : 0.0, L);
  }
  if (lipschitz) *lipschitz = L;
  return out;
}

MethodRun run_method(const Problem& pb, Method method, std::optional<double> tau_rel,
                     const IterationObserver& observer) {
  if ((method == Method::fb || method == Method::il) && pb.vectorial()) {
    throw ConfigError("method: fb and il are implemented for the scalar 2D model");
  }
  auto model = make_model(pb);
  MethodRun run;
  run.method = method;
  run.solver = resolve_solver(pb, method, *model, tau_scale(pb), tau_rel, &run.lipschitz);
  const RVector f0 = RVector::Zero(static_cast<Eigen::Index>(pb.grid.size()));
  switch (method) {
    case Method::cisor:
    case Method::ista:
    case Method::fista:
      run.result = relaxed_fista(*model, run.solver, f0, observer);
      break;
    case Method::fb:
      run.result = first_born_reconstruct(pb.scalar_ops, pb.data, pb.incident, run.solver);
      break;
    case Method::il:
      run.result = iterative_linearization_reconstruct(pb.scalar_ops, pb.data, pb.incident, run.solver,
                                                       pb.config.il.outer_rounds, pb.config.il.inner_iterations,
                                                       pb.config.solver.krylov);
      break;
  }
  return run;
}

SweepResult run_sweep(const ExperimentConfig& config, const std::function<void(const SweepRow&)>& progress) {
  SweepResult out;
  for (double contrast : config.sweep.contrasts) {
    ExperimentConfig c = config;
    c.phantom.contrast = contrast;
    // The box follows each contrast.
    c.solver.box_max.reset();
    const Problem pb = build_problem(c);
    for (Method m : config.sweep.methods) {
      const auto it = config.sweep.tau_rel_by_method.find(to_string(m));
      const auto& taus = it != config.sweep.tau_rel_by_method.end() ? it->second : config.sweep.tau_rel;
      std::optional<SweepRow> best;
      for (double tau_rel : taus) {
        const auto run = run_method(pb, m, tau_rel);
        SweepRow row{m, contrast, snr_db(run.result.image, pb.phantom->image), tau_rel, run.result.iterations};
        out.all.push_back(row);
        if (progress) progress(row);
        if (!best || row.snr_db > best->snr_db) best = row;
      }
      out.best.push_back(*best);
    }
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "method,contrast,snr_db,tau_rel,iterations\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%d\n", to_string(r.method).c_str(), r.contrast, r.snr_db,
                  r.tau_rel, r.iterations);
    out << buf;
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

RVector gradcheck_point(const Problem& pb, std::uint64_t seed) {
  const auto N = static_cast<Eigen::Index>(pb.grid.size());
  const double c = pb.config.phantom.contrast;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 0.05 * c);
  RVector f(N);
  for (Eigen::Index n = 0; n < N; ++n) f[n] = unif(rng);
  if (pb.phantom) f += 0.5 * pb.phantom->image;
  return f;
}

GradcheckResult gradcheck(const Problem& pb, const RVector& f, int count, std::uint64_t seed,
                          double krylov_tolerance) {
  if (count < 1) throw std::invalid_argument("gradcheck needs at least one coordinate");
  detail::check_length(static_cast<std::size_t>(f.size()), pb.grid.size(), "gradcheck point");
  Problem tight = pb;
  tight.config.solver.krylov.tolerance = krylov_tolerance;
  tight.config.solver.krylov.max_iterations = std::max(tight.config.solver.krylov.max_iterations, 10000);
  auto model = make_model(tight, false);

  RVector grad;
  model->value_and_gradient(f, grad);

  GradcheckResult out;
  const auto N = f.size();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool(static_cast<std::size_t>(N));
  for (std::size_t n = 0; n < pool.size(); ++n) pool[n] = n;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(count)));
  std::sort(pool.begin(), pool.end());

  for (std::size_t n : pool) {
    const auto i = static_cast<Eigen::Index>(n);
    const double h = 1e-5 * std::max(1.0, std::abs(f[i]));
    RVector fp = f, fm = f;
    fp[i] += h;
    fm[i] -= h;
    const double fd = (model->value(fp) - model->value(fm)) / (2.0 * h);
    const double denom = std::max(std::abs(fd), std::abs(grad[i]));
    const double err = denom > 0.0 ? std::abs(fd - grad[i]) / denom : 0.0;
    out.coordinates.push_back(n);
    out.adjoint.push_back(grad[i]);
    out.finite_difference.push_back(fd);
    out.max_relative_error = std::max(out.max_relative_error, err);
  }
  return out;
}

}  // namespace difftomo
