#include <Eigen/Sparse>
#include <doctest.h>

#include "helpers.hpp"

using namespace difftomo;
using namespace testing;

namespace {

using SpMat = Eigen::SparseMatrix<double>;

/// Assembled forward-difference matrix, one block per axis.
SpMat difference_matrix(const Shape& shape) {
  const auto N = static_cast<Eigen::Index>(shape.size());
  std::vector<Eigen::Triplet<double>> t;
  for (int a = 0; a < shape.rank(); ++a) {
    const auto stride = static_cast<Eigen::Index>(shape.stride(a));
    for (Eigen::Index n = 0; n < N; ++n) {
      const auto i = (n / stride) % shape.dims[static_cast<std::size_t>(a)];
      if (i + 1 < shape.dims[static_cast<std::size_t>(a)]) {
        t.emplace_back(a * N + n, n + stride, 1.0);
        t.emplace_back(a * N + n, n, -1.0);
      }
    }
  }
  SpMat D(shape.rank() * N, N);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

double oracle_tv(const RVector& f, const Shape& shape) {
  const RVector d = difference_matrix(shape) * f;
  const auto N = f.size();
  double sum = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    double s = 0.0;
    for (int a = 0; a < shape.rank(); ++a) s += d[a * N + n] * d[a * N + n];
    sum += std::sqrt(s);
  }
  return sum;
}

double prox_objective(const RVector& x, const RVector& z, const Shape& shape, double w) {
  return 0.5 * (x - z).squaredNorm() + w * oracle_tv(x, shape);
}

/// Chambolle-Pock primal-dual for min 0.5||x - z||^2 + w TV(x) + box, run long.
RVector chambolle_pock(const RVector& z, const Shape& shape, double w, Box box, int iterations) {
  const SpMat D = difference_matrix(shape);
  const auto N = z.size();
  const int R = shape.rank();
  const double L = std::sqrt(4.0 * R);
  const double sigma = 1.0 / L, tau = 1.0 / L;
  RVector x = clip_to_box(z, box), xbar = x, y = RVector::Zero(R * N);
  for (int it = 0; it < iterations; ++it) {
    y += sigma * (D * xbar);
    for (Eigen::Index n = 0; n < N; ++n) {
      double s = 0.0;
      for (int a = 0; a < R; ++a) s += y[a * N + n] * y[a * N + n];
      const double scale = std::max(1.0, std::sqrt(s) / w);
      for (int a = 0; a < R; ++a) y[a * N + n] /= scale;
    }
    const RVector x_old = x;
    const RVector v = x - tau * (D.transpose() * y);
    x = clip_to_box((v + tau * z) / (1.0 + tau), box);
    xbar = 2.0 * x - x_old;
  }
  return x;
}

}  // namespace

TEST_CASE("TV of a constant image is zero") {
  const Shape shape{{8, 8}};
  CHECK(tv_value(RVector::Constant(64, 0.37), shape) == 0.0);
}

TEST_CASE("TV of [[0,1],[0,1]] is 2") {
  const Shape shape{{2, 2}};
  RVector f(4);
  f << 0, 1, 0, 1;  // axis 0 runs along each row
  CHECK(tv_value(f, shape) == 2.0);
}

TEST_CASE("TV and differences match the assembled matrix") {
  for (const Shape& shape : {Shape{{8, 8}}, Shape{{5, 4, 3}}, Shape{{9}}}) {
    const auto N = static_cast<Eigen::Index>(shape.size());
    const RVector f = random_rvector(N, -1.0, 1.0, 12);
    const SpMat D = difference_matrix(shape);
    CHECK(rel_err(forward_differences(f, shape), RVector(D * f)) < 1e-15);
    const RVector p = random_rvector(shape.rank() * N, -1.0, 1.0, 13);
    CHECK(rel_err(forward_differences_adjoint(p, shape), RVector(D.transpose() * p)) < 1e-15);
    CHECK(tv_value(f, shape) == doctest::Approx(oracle_tv(f, shape)).epsilon(1e-14));
  }
}

TEST_CASE("prox with zero weight clips; a constant feasible input is a fixed point") {
  const Shape shape{{8, 8}};
  const RVector z = random_rvector(64, -0.5, 1.5, 1);
  const Box box{0.0, 1.0};
  CHECK(prox_tv_box(z, shape, 0.0, box, 20) == clip_to_box(z, box));
  const RVector c = RVector::Constant(64, 0.4);
  for (double w : {0.01, 1.0, 100.0}) CHECK((prox_tv_box(c, shape, w, box, 20) - c).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("1D step: prox agrees with a long dual-ascent oracle to 1e-4") {
  const Shape shape{{40}};
  RVector z(40);
  for (int i = 0; i < 40; ++i) z[i] = i < 20 ? 0.2 : 0.8;
  z += random_rvector(40, -0.05, 0.05, 4);
  const Box box{0.0, 1.0};
  const double w = 0.1;
  // projected gradient ascent on the dual, step 1/(4 rank), until the iterate settles to 1e-8
  const SpMat D = difference_matrix(shape);
  RVector p = RVector::Zero(40);
  RVector x_oracle = clip_to_box(z, box);
  for (int it = 0; it < 2000000; ++it) {
    const RVector x = clip_to_box(z - w * (D.transpose() * p), box);
    p = (p + (1.0 / (4.0 * w)) * (D * x)).cwiseMax(-1.0).cwiseMin(1.0);
    if ((x - x_oracle).norm() < 1e-12 && it > 1000) {
      x_oracle = x;
      break;
    }
    x_oracle = x;
  }
  const RVector x = prox_tv_box(z, shape, w, box, 200);
  CHECK((x - x_oracle).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("prox output is feasible and decreases the prox objective below clipping") {
  const Shape shape{{16, 16}};
  const Box box{0.0, 1.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RVector z = random_rvector(256, -0.5, 1.5, seed);
    for (double w : {0.05, 0.5}) {
      const RVector x = prox_tv_box(z, shape, w, box, 20);
      CHECK(x.minCoeff() >= 0.0);
      CHECK(x.maxCoeff() <= 1.0);
      const RVector zc = clip_to_box(z, box);
      CHECK(prox_objective(x, z, shape, w) <= prox_objective(zc, z, shape, w));
    }
  }
}

TEST_CASE("prox is non-expansive to 1e-3 with 50 inner iterations") {
  const Shape shape{{16, 16}};
  const Box box{0.0, 1.0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RVector z1 = random_rvector(256, -0.5, 1.5, 2 * seed);
    const RVector z2 = z1 + random_rvector(256, -0.2, 0.2, 2 * seed + 1);
    const RVector x1 = prox_tv_box(z1, shape, 0.2, box, 50);
    const RVector x2 = prox_tv_box(z2, shape, 0.2, box, 50);
    CHECK((x1 - x2).norm() <= (z1 - z2).norm() + 1e-3);
  }
}

TEST_CASE("3D prox matches Chambolle-Pock") {
  const Shape shape{{6, 6, 6}};
  const Box box{0.0, 1.0};
  const RVector z = random_rvector(216, -0.2, 1.2, 5);
  const RVector oracle = chambolle_pock(z, shape, 0.1, box, 20000);
  const RVector x = prox_tv_box(z, shape, 0.1, box, 400);
  const double fo = prox_objective(oracle, z, shape, 0.1);
  CHECK((prox_objective(x, z, shape, 0.1) - fo) / fo < 1e-4);
}

TEST_CASE("warm starts reuse the dual and early exit honours the tolerance") {
  const Shape shape{{16, 16}};
  const Box box{0.0, 1.0};
  const RVector z = random_rvector(256, 0.0, 1.0, 3);
  TvProxState state;
  const RVector a = prox_tv_box(z, shape, 0.2, box, 100, &state);
  CHECK(state.dual.size() == 2 * 256);
  const RVector b = prox_tv_box(z, shape, 0.2, box, 1, &state);
  CHECK((a - b).norm() < 1e-2 * a.norm());
  CHECK_THROWS_AS(prox_tv_box(z, shape, -1.0, box, 10), std::invalid_argument);
  CHECK_THROWS_AS(prox_tv_box(z, shape, 0.1, Box{1.0, 0.0}, 10), std::invalid_argument);
}
