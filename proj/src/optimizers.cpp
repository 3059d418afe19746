#include "difftomo/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "parallel.hpp"

namespace difftomo {

void SolverConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("step size gamma must be positive");
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(box.lower <= box.upper)) throw std::invalid_argument("box lower bound exceeds upper bound");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
  if (prox_iterations < 1) throw std::invalid_argument("prox_iterations must be at least 1");
}

double auto_step(double alpha, double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("Lipschitz estimate must be positive");
  return (1.0 - alpha * alpha) / (2.0 * lipschitz);
}

double next_t(double t) { return 0.5 * (std::sqrt(4.0 * t * t + 1.0) + 1.0); }

namespace {

bool inside_box(const RVector& f, Box box) {
  return (f.array() >= box.lower).all() && (f.array() <= box.upper).all();
}

}  // namespace

SolverResult relaxed_fista(DataFidelity& model, const SolverConfig& config, const RVector& f0,
                           const IterationObserver& observer) {
  config.validate();
  detail::check_length(static_cast<std::size_t>(f0.size()), model.size(), "relaxed_fista initial image");
  if (!inside_box(f0, config.box)) throw std::invalid_argument("initial image lies outside the box");

  const Shape shape = model.shape();
  const double gamma = config.gamma;
  const double weight = gamma * config.tau;
  const auto start = std::chrono::steady_clock::now();

  SolverResult out;
  RVector f_prev = f0;
  RVector s = f0;
  double t = next_t(1.0);
  TvProxState step_state;
  TvProxState monitor_state;
  RVector grad_s;
  double first_norm = 0.0;

  try {
    model.value_and_gradient(s, grad_s);
    for (int k = 1; k <= config.max_iterations; ++k) {
      RVector f = prox_tv_box(s - gamma * grad_s, shape, weight, config.box, config.prox_iterations, &step_state,
                              config.prox_tolerance);
      const double t_next = next_t(t);
      const double beta = config.alpha * (t - 1.0) / t_next;
      RVector s_next = f + beta * (f - f_prev);

      TelemetryRow row;
      row.k = k;
      RVector grad_f;
      if (config.monitor) {
        row.D = model.value_and_gradient(f, grad_f);
        row.tv = config.tau * tv_value(f, shape);
        row.F = row.D + row.tv;
        const RVector p = prox_tv_box(f - gamma * grad_f, shape, weight, config.box, config.prox_iterations,
                                      &monitor_state, config.prox_tolerance);
        row.grad_map_norm = (f - p).norm() / gamma;
      } else {
        row.grad_map_norm = (s - f).norm() / gamma;
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.telemetry.push_back(row);
      if (observer) observer(row, f, s);
      if (k == 1) first_norm = row.grad_map_norm;
      out.iterations = k;

      const bool stationary = row.grad_map_norm == 0.0;
      const bool small = config.tolerance > 0.0 && row.grad_map_norm <= config.tolerance * first_norm;
      if (stationary || (k > 1 && small)) {
        out.converged = true;
        f_prev = std::move(f);
        break;
      }
      if (k < config.max_iterations) {
        if (config.monitor && s_next == f) {
          grad_s = std::move(grad_f);
        } else {
          model.value_and_gradient(s_next, grad_s);
        }
      }
      f_prev = std::move(f);
      s = std::move(s_next);
      t = t_next;
    }
  } catch (const SolverError& e) {
    throw ReconstructionError(e, std::move(out.telemetry), f_prev);
  }
  out.image = std::move(f_prev);
  return out;
}

GradientMapping gradient_mapping(DataFidelity& model, const RVector& f, const SolverConfig& config) {
  config.validate();
  detail::check_length(static_cast<std::size_t>(f.size()), model.size(), "gradient_mapping");
  RVector grad;
  model.value_and_gradient(f, grad);
  const RVector p = prox_tv_box(f - config.gamma * grad, model.shape(), config.gamma * config.tau, config.box,
                                config.prox_iterations, nullptr, config.prox_tolerance);
  GradientMapping out;
  out.mapping = (f - p) / config.gamma;
  out.norm = out.mapping.norm();
  return out;
}

SolverResult first_born_reconstruct(std::shared_ptr<const ScatteringOperators> ops, const ScatteringDataset& data,
                                    const std::vector<CVector>& incident, SolverConfig config) {
  LinearizedFidelity model(ops, data, incident);
  if (!(config.gamma > 0.0)) {
    const double L = model.operator_norm();
    if (!(L > 0.0)) throw std::invalid_argument("Born operator vanishes; cannot choose a step size");
    config.gamma = 1.0 / L;
  }
  config.alpha = 1.0;
  return relaxed_fista(model, config, RVector::Zero(static_cast<Eigen::Index>(ops->size())));
}

SolverResult iterative_linearization_reconstruct(std::shared_ptr<const ScatteringOperators> ops,
                                                 const ScatteringDataset& data,
                                                 const std::vector<CVector>& incident, SolverConfig config,
                                                 int outer_rounds, int inner_iterations,
                                                 const KrylovOptions& krylov) {
  if (outer_rounds < 1) throw std::invalid_argument("outer_rounds must be at least 1");
  if (inner_iterations < 1) throw std::invalid_argument("inner_iterations must be at least 1");
  const std::size_t P = data.transmitter_count();
  detail::check_length(incident.size(), P, "iterative linearization incident fields");
  const bool fixed_step = config.gamma > 0.0;
  config.alpha = 1.0;
  config.max_iterations = inner_iterations;

  RVector f = RVector::Zero(static_cast<Eigen::Index>(ops->size()));
  SolverResult out;
  std::vector<CVector> fields = incident;
  for (int round = 0; round < outer_rounds; ++round) {
    if (round > 0) {
      try {
        detail::for_each_transmitter(P, [&](std::size_t p) {
          fields[p] = solve_total_field(*ops, f, incident[p], krylov, &fields[p]).field;
        });
      } catch (const SolverError& e) {
        throw ReconstructionError(e, std::move(out.telemetry), f);
      }
    }
    LinearizedFidelity model(ops, data, fields);
    if (!fixed_step) {
      const double L = model.operator_norm();
      if (!(L > 0.0)) throw std::invalid_argument("linearised operator vanishes; cannot choose a step size");
      config.gamma = 1.0 / L;
    }
    SolverResult inner = relaxed_fista(model, config, f);
    const int offset = out.iterations;
    for (auto row : inner.telemetry) {
      row.k += offset;
      out.telemetry.push_back(row);
    }
    out.iterations += inner.iterations;
    out.converged = inner.converged;
    f = std::move(inner.image);
  }
  out.image = std::move(f);
  return out;
}

}  // namespace difftomo
