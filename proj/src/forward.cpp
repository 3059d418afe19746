#include "difftomo/forward.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <string>

namespace difftomo {

TotalFieldSolution solve_total_field(const ScatteringOperators& ops, const RVector& f, const CVector& u_in,
                                     const KrylovOptions& options, const CVector* initial_guess) {
  detail::check_length(static_cast<std::size_t>(f.size()), ops.size(), "solve_total_field contrast");
  detail::check_length(static_cast<std::size_t>(u_in.size()), ops.size(), "solve_total_field incident");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  TotalFieldSolution out;
  if (f.isZero(0.0)) {
    out.field = u_in;
    return out;
  }
  const LinearMap A = [&](const CVector& u) { return ops.apply_A(f, u); };
  const LinearMap AH = [&](const CVector& v) { return ops.apply_A_adjoint(f, v); };
  const CVector x0 = initial_guess ? *initial_guess : CVector();
  KrylovResult r = krylov_solve(A, AH, u_in, x0, options);
  if (!r.converged) {
    throw SolverError("forward solve did not converge: residual " + std::to_string(r.relative_residual) +
                          " after " + std::to_string(r.iterations) + " iterations",
                      -1, r.iterations, r.relative_residual);
  }
  out.field = std::move(r.x);
  out.iterations = r.iterations;
  out.residual = r.relative_residual;
  return out;
}

CVector scattered_field(const ScatteringOperators& ops, const RVector& f, const CVector& u,
                        const std::vector<std::size_t>& rows) {
  detail::check_length(static_cast<std::size_t>(f.size()), ops.size(), "scattered_field contrast");
  detail::check_length(static_cast<std::size_t>(u.size()), ops.size(), "scattered_field field");
  return ops.apply_H(u.cwiseProduct(f.cast<Complex>()), rows);
}

void ScatteringDataset::validate() const {
  if (measurements.size() != layout.transmitter_count()) {
    throw std::invalid_argument("dataset needs one measurement vector per transmitter");
  }
  for (std::size_t p = 0; p < measurements.size(); ++p) {
    if (static_cast<std::size_t>(measurements[p].size()) != layout.active_count(p)) {
      throw std::invalid_argument("measurement length does not match the active receivers of transmitter " +
                                  std::to_string(p));
    }
    if (!measurements[p].allFinite()) {
      throw std::invalid_argument("non-finite measurement for transmitter " + std::to_string(p));
    }
  }
}

ScatteringDataset ScatteringDataset::scaled(double factor) const {
  ScatteringDataset out = *this;
  for (auto& y : out.measurements) y *= factor;
  for (auto& e : out.noise) e *= factor;
  return out;
}

double data_fidelity(const ScatteringOperators& ops, const RVector& f, const ScatteringDataset& data,
                     const std::vector<CVector>& incident, const KrylovOptions& options) {
  const std::size_t P = data.transmitter_count();
  detail::check_length(incident.size(), P, "data_fidelity incident fields");
  std::vector<double> parts(P, 0.0);
  std::vector<std::exception_ptr> errors(P);
  const auto count = static_cast<std::ptrdiff_t>(P);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto p = static_cast<std::size_t>(i);
    try {
      const auto rows = data.layout.active_receivers(p);
      const auto u = solve_total_field(ops, f, incident[p], options);
      parts[p] = 0.5 * (data.measurements[p] - scattered_field(ops, f, u.field, rows)).squaredNorm();
    } catch (const SolverError& e) {
      errors[p] = std::make_exception_ptr(
          SolverError(std::string(e.what()) + " (transmitter " + std::to_string(p) + ")",
                      static_cast<int>(p), e.iterations(), e.residual()));
    } catch (...) {
      errors[p] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

RVector upsample_nearest(const RVector& f, const Grid& grid, int factor) {
  detail::check_length(static_cast<std::size_t>(f.size()), grid.size(), "upsample_nearest");
  const Grid fine = grid.refined(factor);
  RVector out(static_cast<Eigen::Index>(fine.size()));
  for (std::size_t n = 0; n < fine.size(); ++n) {
    const auto i = fine.indices(n);
    out[static_cast<Eigen::Index>(n)] =
        f[static_cast<Eigen::Index>(grid.linear(i[0] / factor, i[1] / factor, i[2] / factor))];
  }
  return out;
}

void add_measurement_noise(ScatteringDataset& data, double snr_db, std::uint64_t seed) {
  data.noise.assign(data.measurements.size(), CVector());
  for (std::size_t p = 0; p < data.measurements.size(); ++p) {
    data.noise[p] = CVector::Zero(data.measurements[p].size());
  }
  if (std::isinf(snr_db) && snr_db > 0) return;
  double energy = 0.0;
  std::size_t count = 0;
  for (const auto& y : data.measurements) {
    energy += y.squaredNorm();
    count += static_cast<std::size_t>(y.size());
  }
  if (count == 0 || energy == 0.0) return;
  const double variance = energy / (static_cast<double>(count) * std::pow(10.0, snr_db / 10.0));
  const double sigma = std::sqrt(0.5 * variance);  // per real/imaginary part
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (std::size_t p = 0; p < data.measurements.size(); ++p) {
    for (Eigen::Index m = 0; m < data.measurements[p].size(); ++m) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      data.noise[p][m] = Complex(re, im);
    }
    data.measurements[p] += data.noise[p];
  }
}

ScatteringDataset simulate_measurements(const RVector& f_true, const Grid& grid, const Layout& layout,
                                        const PhysicsConfig& physics, const SimulationOptions& options) {
  if (options.anti_crime_factor != 1 && options.anti_crime_factor != 2) {
    throw std::invalid_argument("anti_crime_factor must be 1 or 2");
  }
  detail::check_length(static_cast<std::size_t>(f_true.size()), grid.size(), "simulate_measurements contrast");
  layout.validate(grid);
  const Grid sim_grid = grid.refined(options.anti_crime_factor);
  const RVector f_sim = options.anti_crime_factor == 1 ? f_true : upsample_nearest(f_true, grid, options.anti_crime_factor);
  const ScatteringOperators ops(sim_grid, physics, layout.receivers, OperatorOptions{options.include_self_term});
  const auto incident = incident_fields(sim_grid, layout, physics, IncidentKind::point_source);

  ScatteringDataset data;
  data.layout = layout;
  data.physics = physics;
  data.measurements.resize(layout.transmitter_count());
  std::vector<std::exception_ptr> errors(layout.transmitter_count());
  const auto count = static_cast<std::ptrdiff_t>(layout.transmitter_count());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto p = static_cast<std::size_t>(i);
    try {
      const auto rows = layout.active_receivers(p);
      const auto u = solve_total_field(ops, f_sim, incident[p], options.krylov);
      data.measurements[p] = scattered_field(ops, f_sim, u.field, rows);
    } catch (...) {
      errors[p] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  add_measurement_noise(data, options.snr_db, options.seed);
  return data;
}

}  // namespace difftomo
