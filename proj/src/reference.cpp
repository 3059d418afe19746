#include "difftomo/reference.hpp"

#include "difftomo/special_functions.hpp"

namespace difftomo::reference {

namespace {

CMatrix scalar_convolution_matrix(const Grid& grid, const PhysicsConfig& physics, double scale, bool self) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  CMatrix G(N, N);
  const Complex diag = self ? scale * self_term(grid, physics) : Complex(0.0);
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index b = 0; b < N; ++b) {
      G(a, b) = a == b ? diag
                       : scale * scalar_green(grid.point(static_cast<std::size_t>(a)) -
                                                  grid.point(static_cast<std::size_t>(b)),
                                              physics, grid.dim());
    }
  }
  return G;
}

}  // namespace

CMatrix dense_G(const Grid& grid, const PhysicsConfig& physics, bool include_self_term) {
  return scalar_convolution_matrix(grid, physics, physics.k() * physics.k() * grid.cell_measure(), include_self_term);
}

CMatrix dense_H(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  const auto M = static_cast<Eigen::Index>(receivers.size());
  const double c = physics.k() * physics.k() * grid.cell_measure();
  CMatrix H(M, N);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index n = 0; n < N; ++n) {
      H(m, n) = c * scalar_green(receivers[static_cast<std::size_t>(m)] - grid.point(static_cast<std::size_t>(n)),
                                 physics, grid.dim());
    }
  }
  return H;
}

CMatrix dense_A(const CMatrix& G, const RVector& f) {
  return CMatrix::Identity(G.rows(), G.cols()) - G * f.cast<Complex>().asDiagonal();
}

CVector matrix_free_H(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers,
                      const CVector& x) {
  const double c = physics.k() * physics.k() * grid.cell_measure();
  CVector y = CVector::Zero(static_cast<Eigen::Index>(receivers.size()));
  for (std::size_t m = 0; m < receivers.size(); ++m) {
    Complex acc(0.0);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      acc += scalar_green(receivers[m] - grid.point(n), physics, grid.dim()) * x[static_cast<Eigen::Index>(n)];
    }
    y[static_cast<Eigen::Index>(m)] = c * acc;
  }
  return y;
}

RMatrix dense_graddiv(const Grid& grid) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  const int J = grid.side();
  const double h2 = grid.pitch() * grid.pitch();
  RMatrix D = RMatrix::Zero(3 * N, 3 * N);
  auto add = [&](Eigen::Index row, int comp, std::array<int, 3> idx, double w) {
    for (int a = 0; a < 3; ++a) {
      if (idx[a] < 0 || idx[a] >= J) return;
    }
    D(row, comp * N + static_cast<Eigen::Index>(grid.linear(idx[0], idx[1], idx[2]))) += w / h2;
  };
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto base = grid.indices(static_cast<std::size_t>(n));
    for (int i = 0; i < 3; ++i) {
      const Eigen::Index row = i * N + n;
      for (int j = 0; j < 3; ++j) {
        if (i == j) {
          auto up = base, down = base;
          ++up[i];
          --down[i];
          add(row, j, up, 1.0);
          add(row, j, base, -2.0);
          add(row, j, down, 1.0);
        } else {
          for (int si : {1, -1}) {
            for (int sj : {1, -1}) {
              auto idx = base;
              idx[i] += si;
              idx[j] += sj;
              add(row, j, idx, 0.25 * si * sj);
            }
          }
        }
      }
    }
  }
  return D;
}

CMatrix dense_G_3d(const Grid& grid, const PhysicsConfig& physics, bool include_self_term) {
  return scalar_convolution_matrix(grid, physics, grid.cell_measure(), include_self_term);
}

CMatrix dense_A_3d(const Grid& grid, const PhysicsConfig& physics, const RVector& f, bool include_self_term) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  const double k = physics.dyadic_uses_background_k ? physics.kb() : physics.k();
  const CMatrix Gf = dense_G_3d(grid, physics, include_self_term) * f.cast<Complex>().asDiagonal();
  CMatrix blockG = CMatrix::Zero(3 * N, 3 * N);
  for (int c = 0; c < 3; ++c) blockG.block(c * N, c * N, N, N) = Gf;
  const CMatrix K = (k * k) * CMatrix::Identity(3 * N, 3 * N) + dense_graddiv(grid).cast<Complex>();
  return CMatrix::Identity(3 * N, 3 * N) - K * blockG;
}

CMatrix dense_H_3d(const Grid& grid, const PhysicsConfig& physics, const std::vector<Point>& receivers) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  const auto M = static_cast<Eigen::Index>(receivers.size());
  CMatrix H(M, 3 * N);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index n = 0; n < N; ++n) {
      const Eigen::Matrix3cd D =
          dyadic_green(receivers[static_cast<std::size_t>(m)] - grid.point(static_cast<std::size_t>(n)), physics);
      for (int c = 0; c < 3; ++c) H(m, c * N + n) = grid.cell_measure() * D(2, c);
    }
  }
  return H;
}

RVector dense_gradient(const CMatrix& G, const CMatrix& H, const RVector& f, const ScatteringDataset& data,
                       const std::vector<CVector>& incident) {
  const CMatrix A = dense_A(G, f);
  const Eigen::PartialPivLU<CMatrix> lu(A);
  const Eigen::PartialPivLU<CMatrix> lu_h(A.adjoint());
  const CVector fc = f.cast<Complex>();
  RVector grad = RVector::Zero(f.size());
  for (std::size_t p = 0; p < data.transmitter_count(); ++p) {
    const auto rows = data.layout.active_receivers(p);
    CMatrix Hp(static_cast<Eigen::Index>(rows.size()), H.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) Hp.row(static_cast<Eigen::Index>(i)) = H.row(static_cast<Eigen::Index>(rows[i]));
    const CVector u = lu.solve(incident[p]);
    const CVector w = Hp * u.cwiseProduct(fc) - data.measurements[p];
    const CVector Hw = Hp.adjoint() * w;
    const CVector v = lu_h.solve(fc.cwiseProduct(Hw));
    grad += u.conjugate().cwiseProduct(Hw + G.adjoint() * v).real();
  }
  return grad;
}

GradientResult serial_gradient(const ScatteringOperators& ops, const RVector& f, const ScatteringDataset& data,
                               const std::vector<CVector>& incident, const KrylovOptions& options) {
  GradientResult out;
  out.gradient = RVector::Zero(f.size());
  const CVector fc = f.cast<Complex>();
  for (std::size_t p = 0; p < data.transmitter_count(); ++p) {
    const auto rows = data.layout.active_receivers(p);
    const auto u = solve_total_field(ops, f, incident[p], options);
    CVector w = ops.apply_H(u.field.cwiseProduct(fc), rows) - data.measurements[p];
    out.value += 0.5 * w.squaredNorm();
    const CVector Hw = ops.apply_H_adjoint(w, rows);
    const auto v = solve_adjoint_field(ops, f, fc.cwiseProduct(Hw), options);
    CVector total = Hw;
    if (!v.field.isZero(0.0)) total += ops.apply_G_adjoint(v.field);
    out.gradient += u.field.conjugate().cwiseProduct(total).real();
    out.residuals.push_back(std::move(w));
    out.telemetry.push_back({u.iterations, v.iterations});
  }
  return out;
}

}  // namespace difftomo::reference
