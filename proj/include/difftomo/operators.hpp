#pragma once

#include <memory>
#include <vector>

#include "difftomo/geometry.hpp"
#include "difftomo/types.hpp"

namespace difftomo {

class FftPlan;

/// Linear (non-circular) convolution of grid samples with scale * g, evaluated
/// by FFT on a grid zero-padded to 2J per axis. The zero offset carries
/// scale * self_term so the operator equals the dense midpoint discretisation
/// of the volume integral.
class GreenConvolution {
 public:
  GreenConvolution(const Grid& grid, const PhysicsConfig& physics, double scale,
                   bool include_self_term = true);
  ~GreenConvolution();
  GreenConvolution(GreenConvolution&&) noexcept;
  GreenConvolution& operator=(GreenConvolution&&) noexcept;

  const Grid& grid() const { return grid_; }
  CVector apply(const CVector& x) const;
  /// The kernel is even, so the adjoint is conj(apply(conj(x))).
  CVector apply_adjoint(const CVector& x) const;
  /// Diagonal entry of the operator.
  Complex diagonal() const { return diagonal_; }

 private:
  Grid grid_;
  int padded_;
  std::size_t padded_size_;
  Complex diagonal_;
  std::vector<Complex> spectrum_;
  std::unique_ptr<FftPlan> plan_;
};

struct OperatorOptions {
  bool include_self_term = true;
};

/// Row-major dense matrix, used for the receiver operators.
using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Discretised scalar scattering operators on one grid:
///   G: image -> image, k^2 delta^d g(r_n - r_n') with the self term on the diagonal;
///   H: image -> receivers, k^2 delta^d g(r_m - r_n);
///   A(f) = I - G diag(f).
class ScatteringOperators {
 public:
  ScatteringOperators(const Grid& grid, const PhysicsConfig& physics,
                      const std::vector<Point>& receivers, OperatorOptions options = {});

  const Grid& grid() const { return conv_.grid(); }
  const PhysicsConfig& physics() const { return physics_; }
  std::size_t size() const { return conv_.grid().size(); }
  std::size_t receiver_count() const { return static_cast<std::size_t>(H_.rows()); }
  /// Quadrature-weighted coupling k^2 delta^d folded into G and H.
  double coupling() const { return coupling_; }
  const RowMatrix& H_matrix() const { return H_; }
  const GreenConvolution& convolution() const { return conv_; }

  CVector apply_G(const CVector& x) const;
  CVector apply_G_adjoint(const CVector& x) const;

  /// Rows of H listed in `rows` (the active receivers), in order.
  CVector apply_H(const CVector& x, const std::vector<std::size_t>& rows) const;
  CVector apply_H(const CVector& x) const;
  CVector apply_H_adjoint(const CVector& y, const std::vector<std::size_t>& rows) const;
  CVector apply_H_adjoint(const CVector& y) const;

  /// u - G (f .* u)
  CVector apply_A(const RVector& f, const CVector& u) const;
  /// v - diag(f) G^H v
  CVector apply_A_adjoint(const RVector& f, const CVector& v) const;

 private:
  PhysicsConfig physics_;
  double coupling_;
  GreenConvolution conv_;
  RowMatrix H_;
};

namespace detail {
// Row subset of a dense operator and its adjoint; parallel over rows/columns.
CVector rows_times(const RowMatrix& H, const CVector& x, const std::vector<std::size_t>& rows);
CVector rows_adjoint_times(const RowMatrix& H, const CVector& y, const std::vector<std::size_t>& rows);
std::vector<std::size_t> all_rows(std::size_t count);
void check_length(std::size_t got, std::size_t expected, const char* what);
}  // namespace detail

}  // namespace difftomo
