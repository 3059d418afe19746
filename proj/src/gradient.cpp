#include "difftomo/gradient.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "parallel.hpp"

namespace difftomo {

namespace {

SolverError tag_transmitter(const SolverError& e, std::size_t p, const char* stage) {
  return SolverError(std::string(stage) + " solve failed for transmitter " + std::to_string(p) + ": " + e.what(),
                     static_cast<int>(p), e.iterations(), e.residual());
}

}  // namespace

TotalFieldSolution solve_adjoint_field(const ScatteringOperators& ops, const RVector& f, const CVector& rhs,
                                       const KrylovOptions& options, const CVector* initial_guess) {
  detail::check_length(static_cast<std::size_t>(rhs.size()), ops.size(), "solve_adjoint_field");
  TotalFieldSolution out;
  if (f.isZero(0.0) || rhs.isZero(0.0)) {
    out.field = rhs;
    return out;
  }
  const LinearMap AH = [&](const CVector& v) { return ops.apply_A_adjoint(f, v); };
  const LinearMap A = [&](const CVector& u) { return ops.apply_A(f, u); };
  const CVector x0 = initial_guess ? *initial_guess : CVector();
  KrylovResult r = krylov_solve(AH, A, rhs, x0, options);
  if (!r.converged) {
    throw SolverError("adjoint solve did not converge: residual " + std::to_string(r.relative_residual),
                      -1, r.iterations, r.relative_residual);
  }
  out.field = std::move(r.x);
  out.iterations = r.iterations;
  out.residual = r.relative_residual;
  return out;
}

GradientResult gradient_data_fidelity(const ScatteringOperators& ops, const RVector& f,
                                      const ScatteringDataset& data, const std::vector<CVector>& incident,
                                      const KrylovOptions& options, FieldCache* cache) {
  const std::size_t P = data.transmitter_count();
  detail::check_length(incident.size(), P, "gradient incident fields");
  detail::check_length(static_cast<std::size_t>(f.size()), ops.size(), "gradient contrast");
  if (cache) {
    cache->forward.resize(P);
    cache->adjoint.resize(P);
  }
  std::vector<RVector> parts(P);
  std::vector<double> values(P, 0.0);
  GradientResult out;
  out.residuals.resize(P);
  out.telemetry.resize(P);
  const CVector fc = f.cast<Complex>();

  detail::for_each_transmitter(P, [&](std::size_t p) {
    const auto rows = data.layout.active_receivers(p);
    const CVector* u_guess = (cache && cache->forward[p].size() == fc.size()) ? &cache->forward[p] : nullptr;
    TotalFieldSolution u;
    try {
      u = solve_total_field(ops, f, incident[p], options, u_guess);
    } catch (const SolverError& e) {
      throw tag_transmitter(e, p, "forward");
    }
    CVector w = ops.apply_H(u.field.cwiseProduct(fc), rows) - data.measurements[p];
    values[p] = 0.5 * w.squaredNorm();
    const CVector Hw = ops.apply_H_adjoint(w, rows);
    const CVector rhs = fc.cwiseProduct(Hw);
    const CVector* v_guess = (cache && cache->adjoint[p].size() == fc.size()) ? &cache->adjoint[p] : nullptr;
    TotalFieldSolution v;
    try {
      v = solve_adjoint_field(ops, f, rhs, options, v_guess);
    } catch (const SolverError& e) {
      throw tag_transmitter(e, p, "adjoint");
    }
    CVector total = Hw;
    if (!v.field.isZero(0.0)) total += ops.apply_G_adjoint(v.field);
    parts[p] = u.field.conjugate().cwiseProduct(total).real();
    out.residuals[p] = std::move(w);
    out.telemetry[p] = {u.iterations, v.iterations};
    if (cache) {
      cache->forward[p] = std::move(u.field);
      cache->adjoint[p] = std::move(v.field);
    }
  });

  out.gradient = RVector::Zero(f.size());
  for (std::size_t p = 0; p < P; ++p) {
    out.gradient += parts[p];
    out.value += values[p];
  }
  return out;
}

ScalarFidelity::ScalarFidelity(std::shared_ptr<const ScatteringOperators> ops, ScatteringDataset data,
                               std::vector<CVector> incident, KrylovOptions options, bool warm_start)
    : ops_(std::move(ops)),
      data_(std::move(data)),
      incident_(std::move(incident)),
      options_(options),
      warm_start_(warm_start) {
  data_.validate();
  detail::check_length(incident_.size(), data_.transmitter_count(), "ScalarFidelity incident fields");
}

double ScalarFidelity::value(const RVector& f) {
  // The forward half of the gradient pass, without the adjoint solves.
  const std::size_t P = data_.transmitter_count();
  if (warm_start_) cache_.forward.resize(P);
  std::vector<double> values(P, 0.0);
  std::vector<int> iterations(P, 0);
  const CVector fc = f.cast<Complex>();
  detail::for_each_transmitter(P, [&](std::size_t p) {
    const auto rows = data_.layout.active_receivers(p);
    const CVector* guess = (warm_start_ && cache_.forward[p].size() == fc.size()) ? &cache_.forward[p] : nullptr;
    TotalFieldSolution u;
    try {
      u = solve_total_field(*ops_, f, incident_[p], options_, guess);
    } catch (const SolverError& e) {
      throw tag_transmitter(e, p, "forward");
    }
    values[p] = 0.5 * (ops_->apply_H(u.field.cwiseProduct(fc), rows) - data_.measurements[p]).squaredNorm();
    iterations[p] = u.iterations;
    if (warm_start_) cache_.forward[p] = std::move(u.field);
  });
  double total = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    total += values[p];
    krylov_iterations_ += iterations[p];
  }
  return total;
}

double ScalarFidelity::value_and_gradient(const RVector& f, RVector& gradient) {
  GradientResult r = gradient_data_fidelity(*ops_, f, data_, incident_, options_, warm_start_ ? &cache_ : nullptr);
  for (const auto& t : r.telemetry) krylov_iterations_ += t.forward_iterations + t.adjoint_iterations;
  gradient = std::move(r.gradient);
  return r.value;
}

LinearizedFidelity::LinearizedFidelity(std::shared_ptr<const ScatteringOperators> ops, ScatteringDataset data,
                                       std::vector<CVector> fields)
    : ops_(std::move(ops)), data_(std::move(data)), fields_(std::move(fields)) {
  data_.validate();
  detail::check_length(fields_.size(), data_.transmitter_count(), "LinearizedFidelity fields");
  for (std::size_t p = 0; p < fields_.size(); ++p) rows_.push_back(data_.layout.active_receivers(p));
}

double LinearizedFidelity::value(const RVector& f) {
  const CVector fc = f.cast<Complex>();
  double total = 0.0;
  for (std::size_t p = 0; p < fields_.size(); ++p) {
    total += 0.5 * (ops_->apply_H(fields_[p].cwiseProduct(fc), rows_[p]) - data_.measurements[p]).squaredNorm();
  }
  return total;
}

double LinearizedFidelity::value_and_gradient(const RVector& f, RVector& gradient) {
  const CVector fc = f.cast<Complex>();
  const std::size_t P = fields_.size();
  std::vector<RVector> parts(P);
  std::vector<double> values(P, 0.0);
  detail::for_each_transmitter(P, [&](std::size_t p) {
    const CVector w = ops_->apply_H(fields_[p].cwiseProduct(fc), rows_[p]) - data_.measurements[p];
    values[p] = 0.5 * w.squaredNorm();
    parts[p] = fields_[p].conjugate().cwiseProduct(ops_->apply_H_adjoint(w, rows_[p])).real();
  });
  gradient = RVector::Zero(f.size());
  double total = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    gradient += parts[p];
    total += values[p];
  }
  return total;
}

double LinearizedFidelity::operator_norm(int iterations, std::uint64_t seed) const {
  return born_operator_norm(*ops_, fields_, data_.layout, iterations, seed);
}

double born_operator_norm(const ScatteringOperators& ops, const std::vector<CVector>& fields, const Layout& layout,
                          int iterations, std::uint64_t seed) {
  const auto N = static_cast<Eigen::Index>(ops.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  CVector x(N);
  for (Eigen::Index n = 0; n < N; ++n) x[n] = Complex(unif(rng), unif(rng));
  x.normalize();
  std::vector<std::vector<std::size_t>> rows;
  for (std::size_t p = 0; p < fields.size(); ++p) rows.push_back(layout.active_receivers(p));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<CVector> parts(fields.size());
    detail::for_each_transmitter(fields.size(), [&](std::size_t p) {
      parts[p] = fields[p].conjugate().cwiseProduct(
          ops.apply_H_adjoint(ops.apply_H(fields[p].cwiseProduct(x), rows[p]), rows[p]));
    });
    CVector y = CVector::Zero(N);
    for (const auto& part : parts) y += part;
    const double next = y.norm();
    if (next == 0.0) return 0.0;
    x = y / next;
    const bool settled = std::abs(next - lambda) <= 1e-10 * next;
    lambda = next;
    if (settled) break;
  }
  return lambda;
}

LipschitzEstimate lipschitz_estimate(DataFidelity& model, Box box, int n_samples, std::uint64_t seed,
                                     double born_floor, double safety, double fraction) {
  if (n_samples < 2) throw std::invalid_argument("lipschitz_estimate needs at least two samples");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("sample fraction must lie in (0, 1]");
  const auto N = static_cast<Eigen::Index>(model.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(box.lower, box.lower + fraction * (box.upper - box.lower));
  std::vector<RVector> points;
  std::vector<RVector> grads;
  LipschitzEstimate out;
  for (int i = 0; i < n_samples; ++i) {
    RVector s(N);
    for (Eigen::Index n = 0; n < N; ++n) s[n] = unif(rng);
    RVector g;
    try {
      model.value_and_gradient(s, g);
    } catch (const SolverError&) {
      ++out.failed_samples;
      continue;
    }
    points.push_back(std::move(s));
    grads.push_back(std::move(g));
  }
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      const double dx = (points[a] - points[b]).norm();
      if (dx > 0.0) out.sampled = std::max(out.sampled, (grads[a] - grads[b]).norm() / dx);
    }
  }
  out.born_floor = born_floor;
  out.value = safety * std::max(out.sampled, born_floor);
  if (!(out.value > 0.0)) out.value = safety * 1e-300;
  return out;
}

LipschitzEstimate lipschitz_estimate(ScalarFidelity& model, Box box, int n_samples, std::uint64_t seed,
                                     double safety, double fraction) {
  const double floor = born_operator_norm(model.operators(), model.incident(), model.dataset().layout);
  return lipschitz_estimate(model, box, n_samples, seed, floor, safety, fraction);
}

}  // namespace difftomo
