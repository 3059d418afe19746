#pragma once

#include <memory>
#include <vector>

#include "difftomo/forward.hpp"
#include "difftomo/gradient.hpp"

namespace difftomo {

// Vector fields on a 3D grid are stored as three stacked N-blocks [E1; E2; E3].

/// Discrete grad-div: component i of the output is sum_j d^2 B_j / dx_i dx_j,
/// with (1, -2, 1)/h^2 on the diagonal, the four-corner (+-1)/(4 h^2) pattern
/// off it, and zero samples outside the grid. The matrix is real symmetric.
class GradDivOperator {
 public:
  explicit GradDivOperator(const Grid& grid);
  const Grid& grid() const { return grid_; }
  CVector apply(const CVector& b) const;
  CVector apply_adjoint(const CVector& b) const { return apply(b); }

 private:
  Grid grid_;
};

/// Operators of the vectorial Lippmann-Schwinger model:
///   A = I - (k^2 I + D)(I3 (x) G diag(f)),  G the scalar convolution with scale h^3,
///   H: M x 3N, h^3 times the third row of the dyadic Green's function.
class VectorialOperators {
 public:
  VectorialOperators(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers,
                     OperatorOptions options = {});

  const Grid& grid() const { return conv_.grid(); }
  const PhysicsConfig& physics() const { return physics_; }
  /// Number of scalar unknowns N.
  std::size_t size() const { return conv_.grid().size(); }
  std::size_t receiver_count() const { return static_cast<std::size_t>(H_.rows()); }
  /// The k used in k^2 I + D (vacuum k unless the physics flag selects kb).
  double k() const { return k_; }
  const RowMatrix& H_matrix() const { return H_; }
  const GreenConvolution& convolution() const { return conv_; }
  const GradDivOperator& graddiv() const { return graddiv_; }

  /// (I3 (x) G) x and its adjoint.
  CVector apply_G(const CVector& x) const;
  CVector apply_G_adjoint(const CVector& x) const;
  /// (k^2 I + D) x, which is self-adjoint.
  CVector apply_K(const CVector& x) const;

  CVector apply_A(const RVector& f, const CVector& u) const;
  /// v - (I3 (x) diag f)(I3 (x) G^H)(k^2 I + D) v
  CVector apply_A_adjoint(const RVector& f, const CVector& v) const;

  CVector apply_H(const CVector& x, const std::vector<std::size_t>& rows) const;
  CVector apply_H(const CVector& x) const;
  CVector apply_H_adjoint(const CVector& y, const std::vector<std::size_t>& rows) const;
  CVector apply_H_adjoint(const CVector& y) const;

 private:
  PhysicsConfig physics_;
  double k_;
  GreenConvolution conv_;
  GradDivOperator graddiv_;
  RowMatrix H_;
};

/// (I3 (x) diag f) x
CVector scale_components(const RVector& f, const CVector& x);

TotalFieldSolution solve_total_field_3d(const VectorialOperators& ops, const RVector& f, const CVector& u_in,
                                        const KrylovOptions& options = {}, const CVector* initial_guess = nullptr);

/// Z(f) = H (I3 (x) diag f) u
CVector scattered_field_3d(const VectorialOperators& ops, const RVector& f, const CVector& u,
                           const std::vector<std::size_t>& rows);

double data_fidelity_3d(const VectorialOperators& ops, const RVector& f, const ScatteringDataset& data,
                        const std::vector<CVector>& incident, const KrylovOptions& options = {});

/// Per transmitter: A u = u_in, w = Z(f) - y, A^H v = (I3 (x) diag f) H^H w,
/// g = conj(u) .* (H^H w + (I3 (x) G^H)(k^2 I + D) v); the gradient is the
/// real part of the sum of the three component blocks of g.
GradientResult gradient_3d(const VectorialOperators& ops, const RVector& f, const ScatteringDataset& data,
                           const std::vector<CVector>& incident, const KrylovOptions& options = {},
                           FieldCache* cache = nullptr);

class VectorialFidelity : public DataFidelity {
 public:
  VectorialFidelity(std::shared_ptr<const VectorialOperators> ops, ScatteringDataset data,
                    std::vector<CVector> incident, KrylovOptions options = {}, bool warm_start = true);

  std::size_t size() const override { return ops_->size(); }
  Shape shape() const override { return ops_->grid().shape(); }
  double value(const RVector& f) override;
  double value_and_gradient(const RVector& f, RVector& gradient) override;

  const VectorialOperators& operators() const { return *ops_; }
  const ScatteringDataset& dataset() const { return data_; }

 private:
  std::shared_ptr<const VectorialOperators> ops_;
  ScatteringDataset data_;
  std::vector<CVector> incident_;
  KrylovOptions options_;
  bool warm_start_;
  FieldCache cache_;
};

/// Vectorial counterpart of simulate_measurements. The incident kind must
/// produce 3N-component fields (plane_wave or dipole).
ScatteringDataset simulate_measurements_3d(const RVector& f_true, const Grid& grid, const Layout& layout,
                                           const PhysicsConfig& physics, IncidentKind kind,
                                           const SimulationOptions& options = {});

}  // namespace difftomo
