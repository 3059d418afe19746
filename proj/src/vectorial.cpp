#include "difftomo/vectorial.hpp"

#include <string>

#include "difftomo/special_functions.hpp"
#include "parallel.hpp"

namespace difftomo {

namespace {

SolverError tag_transmitter(const SolverError& e, std::size_t p, const char* stage) {
  return SolverError(std::string(stage) + " solve failed for transmitter " + std::to_string(p) + ": " + e.what(),
                     static_cast<int>(p), e.iterations(), e.residual());
}

void require_3d(const Grid& grid) {
  if (grid.dim() != 3) throw std::invalid_argument("the vectorial model needs a 3D grid");
}

}  // namespace

GradDivOperator::GradDivOperator(const Grid& grid) : grid_(grid) { require_3d(grid); }

CVector GradDivOperator::apply(const CVector& b) const {
  const std::size_t N = grid_.size();
  detail::check_length(static_cast<std::size_t>(b.size()), 3 * N, "apply_graddiv");
  const int J = grid_.side();
  const double h2 = grid_.pitch() * grid_.pitch();
  const auto n_total = static_cast<std::ptrdiff_t>(N);
  CVector out(static_cast<Eigen::Index>(3 * N));
  // sample of component c at index i shifted by (a along axis u) and (c2 along axis v)
  auto at = [&](int c, std::array<int, 3> i) -> Complex {
    for (int a = 0; a < 3; ++a) {
      if (i[a] < 0 || i[a] >= J) return Complex(0.0);
    }
    return b[static_cast<Eigen::Index>(c * N + grid_.linear(i[0], i[1], i[2]))];
  };
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < n_total; ++n) {
    const auto idx = grid_.indices(static_cast<std::size_t>(n));
    for (int i = 0; i < 3; ++i) {
      Complex acc(0.0);
      for (int j = 0; j < 3; ++j) {
        if (i == j) {
          auto up = idx, down = idx;
          ++up[i];
          --down[i];
          acc += at(j, up) - 2.0 * at(j, idx) + at(j, down);
        } else {
          auto pp = idx, pm = idx, mp = idx, mm = idx;
          ++pp[i], ++pp[j];
          ++pm[i], --pm[j];
          --mp[i], ++mp[j];
          --mm[i], --mm[j];
          acc += 0.25 * (at(j, pp) - at(j, pm) - at(j, mp) + at(j, mm));
        }
      }
      out[static_cast<Eigen::Index>(i * N) + n] = acc / h2;
    }
  }
  return out;
}

VectorialOperators::VectorialOperators(const Grid& grid, const PhysicsConfig& physics,
                                       const std::vector<Point>& receivers, OperatorOptions options)
    : physics_(physics),
      k_(physics.dyadic_uses_background_k ? physics.kb() : physics.k()),
      conv_((require_3d(grid), grid), physics, grid.cell_measure(), options.include_self_term),
      graddiv_(grid) {
  const std::size_t N = grid.size();
  const auto M = static_cast<Eigen::Index>(receivers.size());
  const double w = grid.cell_measure();
  H_.resize(M, static_cast<Eigen::Index>(3 * N));
#pragma omp parallel for schedule(static)
  for (Eigen::Index m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      const Eigen::Matrix3cd G = dyadic_green(receivers[static_cast<std::size_t>(m)] - grid.point(n), physics);
      for (int c = 0; c < 3; ++c) H_(m, static_cast<Eigen::Index>(c * N + n)) = w * G(2, c);
    }
  }
}

CVector VectorialOperators::apply_G(const CVector& x) const {
  const auto N = static_cast<Eigen::Index>(size());
  detail::check_length(static_cast<std::size_t>(x.size()), 3 * size(), "vectorial apply_G");
  CVector y(3 * N);
  for (int c = 0; c < 3; ++c) y.segment(c * N, N) = conv_.apply(x.segment(c * N, N));
  return y;
}

CVector VectorialOperators::apply_G_adjoint(const CVector& x) const {
  const auto N = static_cast<Eigen::Index>(size());
  detail::check_length(static_cast<std::size_t>(x.size()), 3 * size(), "vectorial apply_G_adjoint");
  CVector y(3 * N);
  for (int c = 0; c < 3; ++c) y.segment(c * N, N) = conv_.apply_adjoint(x.segment(c * N, N));
  return y;
}

CVector VectorialOperators::apply_K(const CVector& x) const { return k_ * k_ * x + graddiv_.apply(x); }

CVector scale_components(const RVector& f, const CVector& x) {
  const Eigen::Index N = f.size();
  detail::check_length(static_cast<std::size_t>(x.size()), 3 * static_cast<std::size_t>(N), "scale_components");
  CVector y(3 * N);
  for (int c = 0; c < 3; ++c) y.segment(c * N, N) = x.segment(c * N, N).cwiseProduct(f.cast<Complex>());
  return y;
}

CVector VectorialOperators::apply_A(const RVector& f, const CVector& u) const {
  detail::check_length(static_cast<std::size_t>(f.size()), size(), "vectorial apply_A contrast");
  return u - apply_K(apply_G(scale_components(f, u)));
}

CVector VectorialOperators::apply_A_adjoint(const RVector& f, const CVector& v) const {
  detail::check_length(static_cast<std::size_t>(f.size()), size(), "vectorial apply_A_adjoint contrast");
  return v - scale_components(f, apply_G_adjoint(apply_K(v)));
}

CVector VectorialOperators::apply_H(const CVector& x, const std::vector<std::size_t>& rows) const {
  return detail::rows_times(H_, x, rows);
}

CVector VectorialOperators::apply_H(const CVector& x) const {
  return detail::rows_times(H_, x, detail::all_rows(receiver_count()));
}

CVector VectorialOperators::apply_H_adjoint(const CVector& y, const std::vector<std::size_t>& rows) const {
  return detail::rows_adjoint_times(H_, y, rows);
}

CVector VectorialOperators::apply_H_adjoint(const CVector& y) const {
  return detail::rows_adjoint_times(H_, y, detail::all_rows(receiver_count()));
}

namespace {

TotalFieldSolution solve_3d(const LinearMap& A, const LinearMap& AH, const CVector& rhs, const KrylovOptions& options,
                            const CVector* guess, const char* what) {
  TotalFieldSolution out;
  const CVector x0 = guess ? *guess : CVector();
  KrylovResult r = krylov_solve(A, AH, rhs, x0, options);
  if (!r.converged) {
    throw SolverError(std::string(what) + " did not converge: residual " + std::to_string(r.relative_residual),
                      -1, r.iterations, r.relative_residual);
  }
  out.field = std::move(r.x);
  out.iterations = r.iterations;
  out.residual = r.relative_residual;
  return out;
}

}  // namespace

TotalFieldSolution solve_total_field_3d(const VectorialOperators& ops, const RVector& f, const CVector& u_in,
                                        const KrylovOptions& options, const CVector* initial_guess) {
  detail::check_length(static_cast<std::size_t>(f.size()), ops.size(), "solve_total_field_3d contrast");
  detail::check_length(static_cast<std::size_t>(u_in.size()), 3 * ops.size(), "solve_total_field_3d incident");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (f.isZero(0.0)) {
    TotalFieldSolution out;
    out.field = u_in;
    return out;
  }
  const LinearMap A = [&](const CVector& u) { return ops.apply_A(f, u); };
  const LinearMap AH = [&](const CVector& v) { return ops.apply_A_adjoint(f, v); };
  return solve_3d(A, AH, u_in, options, initial_guess, "vectorial forward solve");
}

CVector scattered_field_3d(const VectorialOperators& ops, const RVector& f, const CVector& u,
                           const std::vector<std::size_t>& rows) {
  detail::check_length(static_cast<std::size_t>(f.size()), ops.size(), "scattered_field_3d contrast");
  return ops.apply_H(scale_components(f, u), rows);
}

double data_fidelity_3d(const VectorialOperators& ops, const RVector& f, const ScatteringDataset& data,
                        const std::vector<CVector>& incident, const KrylovOptions& options) {
  const std::size_t P = data.transmitter_count();
  detail::check_length(incident.size(), P, "data_fidelity_3d incident fields");
  std::vector<double> parts(P, 0.0);
  detail::for_each_transmitter(P, [&](std::size_t p) {
    const auto rows = data.layout.active_receivers(p);
    TotalFieldSolution u;
    try {
      u = solve_total_field_3d(ops, f, incident[p], options);
    } catch (const SolverError& e) {
      throw tag_transmitter(e, p, "forward");
    }
    parts[p] = 0.5 * (data.measurements[p] - scattered_field_3d(ops, f, u.field, rows)).squaredNorm();
  });
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

GradientResult gradient_3d(const VectorialOperators& ops, const RVector& f, const ScatteringDataset& data,
                           const std::vector<CVector>& incident, const KrylovOptions& options, FieldCache* cache) {
  const std::size_t P = data.transmitter_count();
  const auto N = static_cast<Eigen::Index>(ops.size());
  detail::check_length(incident.size(), P, "gradient_3d incident fields");
  detail::check_length(static_cast<std::size_t>(f.size()), ops.size(), "gradient_3d contrast");
  if (cache) {
    cache->forward.resize(P);
    cache->adjoint.resize(P);
  }
  std::vector<RVector> parts(P);
  std::vector<double> values(P, 0.0);
  GradientResult out;
  out.residuals.resize(P);
  out.telemetry.resize(P);
  const bool zero_contrast = f.isZero(0.0);
  const LinearMap AH = [&](const CVector& v) { return ops.apply_A_adjoint(f, v); };
  const LinearMap A = [&](const CVector& u) { return ops.apply_A(f, u); };

  detail::for_each_transmitter(P, [&](std::size_t p) {
    const auto rows = data.layout.active_receivers(p);
    const CVector* u_guess = (cache && cache->forward[p].size() == 3 * N) ? &cache->forward[p] : nullptr;
    TotalFieldSolution u;
    try {
      u = solve_total_field_3d(ops, f, incident[p], options, u_guess);
    } catch (const SolverError& e) {
      throw tag_transmitter(e, p, "forward");
    }
    CVector w = scattered_field_3d(ops, f, u.field, rows) - data.measurements[p];
    values[p] = 0.5 * w.squaredNorm();
    const CVector Hw = ops.apply_H_adjoint(w, rows);
    const CVector rhs = scale_components(f, Hw);
    TotalFieldSolution v;
    if (zero_contrast || rhs.isZero(0.0)) {
      v.field = CVector::Zero(3 * N);
    } else {
      const CVector* v_guess = (cache && cache->adjoint[p].size() == 3 * N) ? &cache->adjoint[p] : nullptr;
      try {
        v = solve_3d(AH, A, rhs, options, v_guess, "vectorial adjoint solve");
      } catch (const SolverError& e) {
        throw tag_transmitter(e, p, "adjoint");
      }
    }
    CVector total = Hw;
    if (!v.field.isZero(0.0)) total += ops.apply_G_adjoint(ops.apply_K(v.field));
    const CVector g = u.field.conjugate().cwiseProduct(total);
    parts[p] = (g.segment(0, N) + g.segment(N, N) + g.segment(2 * N, N)).real();
    out.residuals[p] = std::move(w);
    out.telemetry[p] = {u.iterations, v.iterations};
    if (cache) {
      cache->forward[p] = std::move(u.field);
      cache->adjoint[p] = std::move(v.field);
    }
  });

  out.gradient = RVector::Zero(N);
  for (std::size_t p = 0; p < P; ++p) {
    out.gradient += parts[p];
    out.value += values[p];
  }
  return out;
}

VectorialFidelity::VectorialFidelity(std::shared_ptr<const VectorialOperators> ops, ScatteringDataset data,
                                     std::vector<CVector> incident, KrylovOptions options, bool warm_start)
    : ops_(std::move(ops)),
      data_(std::move(data)),
      incident_(std::move(incident)),
      options_(options),
      warm_start_(warm_start) {
  data_.validate();
  detail::check_length(incident_.size(), data_.transmitter_count(), "VectorialFidelity incident fields");
  for (const auto& u : incident_) {
    detail::check_length(static_cast<std::size_t>(u.size()), 3 * ops_->size(), "VectorialFidelity incident field");
  }
}

double VectorialFidelity::value(const RVector& f) { return data_fidelity_3d(*ops_, f, data_, incident_, options_); }

double VectorialFidelity::value_and_gradient(const RVector& f, RVector& gradient) {
  GradientResult r = gradient_3d(*ops_, f, data_, incident_, options_, warm_start_ ? &cache_ : nullptr);
  gradient = std::move(r.gradient);
  return r.value;
}

ScatteringDataset simulate_measurements_3d(const RVector& f_true, const Grid& grid, const Layout& layout,
                                           const PhysicsConfig& physics, IncidentKind kind,
                                           const SimulationOptions& options) {
  require_3d(grid);
  if (kind == IncidentKind::point_source) {
    throw std::invalid_argument("the vectorial model needs plane_wave or dipole incidence");
  }
  if (options.anti_crime_factor != 1 && options.anti_crime_factor != 2) {
    throw std::invalid_argument("anti_crime_factor must be 1 or 2");
  }
  detail::check_length(static_cast<std::size_t>(f_true.size()), grid.size(), "simulate_measurements_3d contrast");
  layout.validate(grid);
  const Grid sim_grid = grid.refined(options.anti_crime_factor);
  const RVector f_sim =
      options.anti_crime_factor == 1 ? f_true : upsample_nearest(f_true, grid, options.anti_crime_factor);
  const VectorialOperators ops(sim_grid, physics, layout.receivers, OperatorOptions{options.include_self_term});
  const auto incident = incident_fields(sim_grid, layout, physics, kind);

  ScatteringDataset data;
  data.layout = layout;
  data.physics = physics;
  data.measurements.resize(layout.transmitter_count());
  detail::for_each_transmitter(layout.transmitter_count(), [&](std::size_t p) {
    const auto rows = layout.active_receivers(p);
    TotalFieldSolution u;
    try {
      u = solve_total_field_3d(ops, f_sim, incident[p], options.krylov);
    } catch (const SolverError& e) {
      throw tag_transmitter(e, p, "forward");
    }
    data.measurements[p] = scattered_field_3d(ops, f_sim, u.field, rows);
  });
  add_measurement_noise(data, options.snr_db, options.seed);
  return data;
}

}  // namespace difftomo
