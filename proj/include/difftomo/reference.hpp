#pragma once

// Dense, single-threaded versions of the operators. They are slow and exist to
// cross-check the FFT and parallel paths in tests and benchmarks.

#include <vector>

#include "difftomo/forward.hpp"
#include "difftomo/gradient.hpp"

namespace difftomo::reference {

/// N x N matrix of k^2 delta^d g(r_n - r_n'), with the self term on the diagonal.
CMatrix dense_G(const Grid& grid, const PhysicsConfig& physics, bool include_self_term = true);
/// M x N matrix of k^2 delta^d g(r_m - r_n).
CMatrix dense_H(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers);
/// I - G diag(f)
CMatrix dense_A(const CMatrix& G, const RVector& f);

/// H x evaluated row by row without storing H.
CVector matrix_free_H(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers,
                      const CVector& x);

/// 3N x 3N grad-div stencil matrix.
RMatrix dense_graddiv(const Grid& grid);
/// N x N scalar convolution with scale delta^3 (the vectorial model's G).
CMatrix dense_G_3d(const Grid& grid, const PhysicsConfig& physics, bool include_self_term = true);
/// I - (k^2 I + D)(I3 (x) G diag f)
CMatrix dense_A_3d(const Grid& grid, const PhysicsConfig& physics, const RVector& f, bool include_self_term = true);
/// M x 3N, delta^3 times the third dyadic row.
CMatrix dense_H_3d(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers);

/// Gradient of the scalar data term by dense LU solves.
RVector dense_gradient(const CMatrix& G, const CMatrix& H, const RVector& f, const ScatteringDataset& data,
                       const std::vector<CVector>& incident);

/// Same algorithm as gradient_data_fidelity, one transmitter at a time on the
/// calling thread.
GradientResult serial_gradient(const ScatteringOperators& ops, const RVector& f, const ScatteringDataset& data,
                               const std::vector<CVector>& incident, const KrylovOptions& options = {});

}  // namespace difftomo::reference
