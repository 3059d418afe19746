#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "difftomo/forward.hpp"

namespace difftomo {

/// Smooth data term of the composite cost, seen by the optimisers.
class DataFidelity {
 public:
  virtual ~DataFidelity() = default;
  virtual std::size_t size() const = 0;
  virtual Shape shape() const = 0;
  virtual double value(const RVector& f) = 0;
  /// Returns D(f) and writes its gradient.
  virtual double value_and_gradient(const RVector& f, RVector& gradient) = 0;
};

/// Previous forward/adjoint solutions per transmitter, used as Krylov initial
/// guesses at the next evaluation point.
struct FieldCache {
  std::vector<CVector> forward;
  std::vector<CVector> adjoint;
};

struct TransmitterTelemetry {
  int forward_iterations = 0;
  int adjoint_iterations = 0;
};

struct GradientResult {
  RVector gradient;
  double value = 0.0;
  /// w_p = Z_p(f) - y_p
  std::vector<CVector> residuals;
  std::vector<TransmitterTelemetry> telemetry;
};

/// Solves A(f)^H v = rhs.
TotalFieldSolution solve_adjoint_field(const ScatteringOperators& ops, const RVector& f, const CVector& rhs,
                                       const KrylovOptions& options = {}, const CVector* initial_guess = nullptr);

/// Adjoint-state gradient of D(f) = 0.5 sum_p ||y_p - Z_p(f)||^2:
/// per transmitter solve A u = u_in, w = H(u .* f) - y, A^H v = f .* H^H w,
/// and accumulate Re{conj(u) .* (H^H w + G^H v)}. Transmitters run in
/// parallel and are reduced in index order.
GradientResult gradient_data_fidelity(const ScatteringOperators& ops, const RVector& f,
                                      const ScatteringDataset& data, const std::vector<CVector>& incident,
                                      const KrylovOptions& options = {}, FieldCache* cache = nullptr);

/// Nonlinear Lippmann-Schwinger data term.
class ScalarFidelity : public DataFidelity {
 public:
  ScalarFidelity(std::shared_ptr<const ScatteringOperators> ops, ScatteringDataset data,
                 std::vector<CVector> incident, KrylovOptions options = {}, bool warm_start = true);

  std::size_t size() const override { return ops_->size(); }
  Shape shape() const override { return ops_->grid().shape(); }
  double value(const RVector& f) override;
  double value_and_gradient(const RVector& f, RVector& gradient) override;

  const ScatteringOperators& operators() const { return *ops_; }
  const ScatteringDataset& dataset() const { return data_; }
  const std::vector<CVector>& incident() const { return incident_; }
  const KrylovOptions& krylov() const { return options_; }
  /// Krylov iterations spent so far, forward plus adjoint.
  long long krylov_iterations() const { return krylov_iterations_; }

 private:
  std::shared_ptr<const ScatteringOperators> ops_;
  ScatteringDataset data_;
  std::vector<CVector> incident_;
  KrylovOptions options_;
  bool warm_start_;
  FieldCache cache_;
  long long krylov_iterations_ = 0;
};

/// Data term with the field frozen: 0.5 sum_p ||y_p - H diag(u_p) f||^2.
/// With u_p = u_in this is the first Born model.
class LinearizedFidelity : public DataFidelity {
 public:
  LinearizedFidelity(std::shared_ptr<const ScatteringOperators> ops, ScatteringDataset data,
                     std::vector<CVector> fields);

  std::size_t size() const override { return ops_->size(); }
  Shape shape() const override { return ops_->grid().shape(); }
  double value(const RVector& f) override;
  double value_and_gradient(const RVector& f, RVector& gradient) override;

  /// Largest eigenvalue of sum_p (H diag(u_p))^H (H diag(u_p)).
  double operator_norm(int iterations = 300, std::uint64_t seed = 7) const;

 private:
  std::shared_ptr<const ScatteringOperators> ops_;
  ScatteringDataset data_;
  std::vector<CVector> fields_;
  std::vector<std::vector<std::size_t>> rows_;
};

/// Power iteration for the largest eigenvalue of
/// sum_p (H_p diag(u_p))^H (H_p diag(u_p)) over complex vectors.
double born_operator_norm(const ScatteringOperators& ops, const std::vector<CVector>& fields, const Layout& layout,
                          int iterations = 300, std::uint64_t seed = 7);

struct LipschitzEstimate {
  double value = 0.0;       // safety * max(sampled, born_floor)
  double sampled = 0.0;     // max ||grad(s1) - grad(s2)|| / ||s1 - s2||
  double born_floor = 0.0;
  int failed_samples = 0;   // samples skipped because a solve diverged
};

/// Empirical Lipschitz constant of grad D on the box: the largest difference
/// quotient over `n_samples` uniform random points (all pairs), floored by the
/// Born operator norm, times `safety`. Deterministic given the seed.
///
/// Samples are drawn from [lower, lower + fraction * (upper - lower)]. Dense
/// random images near the top of a large box scatter far more strongly than
/// any iterate and often make the forward solve diverge; a fraction below 1
/// keeps the samples in the regime the optimiser visits.
LipschitzEstimate lipschitz_estimate(DataFidelity& model, Box box, int n_samples, std::uint64_t seed,
                                     double born_floor, double safety = 2.0, double fraction = 1.0);

/// Convenience overload for the scalar model: builds the Born floor from the
/// model's incident fields.
LipschitzEstimate lipschitz_estimate(ScalarFidelity& model, Box box, int n_samples, std::uint64_t seed,
                                     double safety = 2.0, double fraction = 1.0);

}  // namespace difftomo
