#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "difftomo/special_functions.hpp"

using namespace difftomo;
using testing::kWavelength;

namespace {

// Power series in long double; accurate to ~1e-15 for x <= 10.
long double series_j0(long double x) {
  long double term = 1.0L, sum = 1.0L;
  const long double q = x * x / 4.0L;
  for (int m = 1; m < 80; ++m) {
    term *= -q / (static_cast<long double>(m) * m);
    sum += term;
  }
  return sum;
}

long double series_y0(long double x) {
  const long double q = x * x / 4.0L;
  long double term = 1.0L, harmonic = 0.0L, tail = 0.0L;
  for (int m = 1; m < 80; ++m) {
    term *= -q / (static_cast<long double>(m) * m);
    harmonic += 1.0L / m;
    tail -= term * harmonic;  // (-1)^{m+1} H_m q^m / (m!)^2
  }
  const long double two_over_pi = 2.0L / 3.14159265358979323846264338327950288L;
  return two_over_pi * (std::log(x / 2.0L) + 0.57721566490153286060651209L) * series_j0(x) + two_over_pi * tail;
}

}  // namespace

TEST_CASE("hankel h0 rejects the origin and negative arguments") {
  CHECK_THROWS_AS(hankel_h0_first_kind(0.0), std::domain_error);
  CHECK_THROWS_AS(hankel_h0_first_kind(-1.0), std::domain_error);
  CHECK_THROWS_AS(hankel_h1_first_kind(0.0), std::domain_error);
}

TEST_CASE("hankel h0 at 1 matches the power series") {
  const Complex h = hankel_h0_first_kind(1.0);
  CHECK(std::abs(h.real() - static_cast<double>(series_j0(1.0L))) < 1e-14);
  CHECK(std::abs(h.imag() - static_cast<double>(series_y0(1.0L))) < 1e-14);
}

TEST_CASE("bessel j0 and y0 match the series to 1e-10 below x = 10") {
  for (double x = 0.05; x <= 10.0; x += 0.37) {
    CAPTURE(x);
    CHECK(std::abs(bessel_j0(x) - static_cast<double>(series_j0(x))) < 1e-10);
    CHECK(std::abs(bessel_y0(x) - static_cast<double>(series_y0(x))) < 1e-10);
  }
}

TEST_CASE("bessel functions match the standard library across the switchover") {
  for (double x = 0.1; x < 120.0; x *= 1.07) {
    CAPTURE(x);
    const double scale = std::max(1.0, std::sqrt(x));  // the functions decay like 1/sqrt(x)
    CHECK(std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)) * scale < 1e-10);
    CHECK(std::abs(bessel_j1(x) - std::cyl_bessel_j(1.0, x)) * scale < 1e-10);
    CHECK(std::abs(bessel_y0(x) - std::cyl_neumann(0.0, x)) * scale < 1e-10);
    CHECK(std::abs(bessel_y1(x) - std::cyl_neumann(1.0, x)) * scale < 1e-10);
  }
}

TEST_CASE("hankel h0 at 50 is within 1% of the leading asymptotic term") {
  const double x = 50.0;
  const Complex asym = std::sqrt(2.0 / (kPi * x)) * std::exp(Complex(0.0, x - kPi / 4.0));
  CHECK(std::abs(hankel_h0_first_kind(x) - asym) / std::abs(asym) < 0.01);
}

TEST_CASE("Wronskian J0 Y0' - J0' Y0 = 2 / (pi x) with numerical derivatives") {
  const double h = 1e-5;
  for (double x : {0.3, 1.0, 4.0, 7.9, 8.1, 15.0, 24.9, 25.1, 40.0, 90.0}) {
    CAPTURE(x);
    const double dj = (bessel_j0(x + h) - bessel_j0(x - h)) / (2 * h);
    const double dy = (bessel_y0(x + h) - bessel_y0(x - h)) / (2 * h);
    const double w = bessel_j0(x) * dy - dj * bessel_y0(x);
    CHECK(std::abs(w - 2.0 / (kPi * x)) < 1e-8);
  }
}

TEST_CASE("3D scalar green at one background wavelength") {
  const PhysicsConfig physics(kWavelength, 2.25);
  const double lb = kWavelength / 1.5;
  const Complex g = scalar_green({lb, 0.0, 0.0}, physics, 3);
  CHECK(std::abs(g.imag()) < 1e-12 * std::abs(g));
  CHECK(g.real() == doctest::Approx(1.0 / (4 * kPi * lb)).epsilon(1e-12));
}

TEST_CASE("2D scalar green at kb r = 1") {
  const PhysicsConfig physics(kWavelength);
  const double r = 1.0 / physics.kb();
  const Complex g = scalar_green({0.6 * r, 0.8 * r, 0.0}, physics, 2);
  const Complex expect = Complex(0.0, -0.25) * Complex(static_cast<double>(series_j0(1.0L)),
                                                      static_cast<double>(series_y0(1.0L)));
  CHECK(std::abs(g - expect) < 1e-14);
}

TEST_CASE("scalar green is even") {
  const PhysicsConfig physics(kWavelength, 1.7);
  const Point r{0.013, -0.021, 0.007};
  const Point mr{-r[0], -r[1], -r[2]};
  for (int d : {2, 3}) CHECK(scalar_green(r, physics, d) == scalar_green(mr, physics, d));
}

TEST_CASE("dyadic green is symmetric and even") {
  const PhysicsConfig physics(kWavelength);
  const Point r{0.031, -0.017, 0.052};
  const Eigen::Matrix3cd G = dyadic_green(r, physics);
  CHECK((G - G.transpose()).norm() < 1e-12 * G.norm());
  CHECK((G - dyadic_green({-r[0], -r[1], -r[2]}, physics)).norm() < 1e-12 * G.norm());
}

TEST_CASE("dyadic green reaches the transverse far field") {
  const PhysicsConfig physics(kWavelength);
  const double k = physics.k();
  const Point rhat{0.48, -0.6, 0.64};
  const double d = 1e3 / k;
  const Point r{rhat[0] * d, rhat[1] * d, rhat[2] * d};
  Eigen::Matrix3cd far;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) far(a, b) = k * k * ((a == b ? 1.0 : 0.0) - rhat[a] * rhat[b]);
  }
  far *= scalar_green(r, physics, 3);
  CHECK((dyadic_green(r, physics) - far).norm() / far.norm() < 5e-3);
}

TEST_CASE("dyadic green equals (k^2 I + grad grad) g by finite differences") {
  const PhysicsConfig physics(kWavelength);
  const double k = physics.k();
  const Point dir{0.3, 0.5, std::sqrt(1.0 - 0.34)};
  for (double kd : {1.0, 2.5, 5.0, 10.0}) {
    CAPTURE(kd);
    const double d = kd / k;
    const Point r{dir[0] * d, dir[1] * d, dir[2] * d};
    const double h = 1e-3 * d;
    auto g = [&](Point p) { return scalar_green(p, physics, 3); };
    Eigen::Matrix3cd fd;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        auto shifted = [&](double sa, double sb) {
          Point p = r;
          p[a] += sa * h;
          p[b] += sb * h;
          return g(p);
        };
        fd(a, b) = (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4 * h * h);
      }
      fd(a, a) += k * k * g(r);
    }
    const Eigen::Matrix3cd G = dyadic_green(r, physics);
    CHECK((G - fd).norm() / G.norm() < 1e-4);
  }
}

TEST_CASE("self term times the cell measure vanishes as the pitch shrinks") {
  const PhysicsConfig physics(kWavelength);
  for (int d : {2, 3}) {
    double prev = 1e300;
    for (double pitch : {kWavelength / 4, kWavelength / 16, kWavelength / 64, kWavelength / 256}) {
      const Grid grid(d, 4, pitch);
      const double v = std::abs(self_term(grid, physics)) * grid.cell_measure();
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-4 * kWavelength * kWavelength);
  }
}

TEST_CASE("2D self term follows the logarithmic small-argument expansion") {
  const PhysicsConfig physics(kWavelength);
  const double pitch = 0.01 * std::sqrt(kPi) / physics.kb();  // equivalent radius a with kb a = 0.01
  const Grid grid(2, 4, pitch);
  const double a = pitch / std::sqrt(kPi);
  const double ka = physics.kb() * a;
  // mean of ln(rho) over the disk is ln(a) - 1/2
  const Complex approx =
      Complex(0.0, -0.25) * Complex(1.0, 2.0 / kPi * (std::log(ka / 2.0) + kEulerGamma - 0.5));
  CHECK(std::abs(self_term(grid, physics) - approx) / std::abs(approx) < 1e-3);
}

TEST_CASE("dropping the self term barely changes tiny-grid forward solutions") {
  const PhysicsConfig physics(kWavelength);
  const double pitch = 0.2 / physics.kb();
  const Grid grid(2, 8, pitch);
  const RVector f = RVector::Constant(static_cast<Eigen::Index>(grid.size()), 0.5);
  const CVector u_in = incident_field(grid, {0.5, 0.1, 0.0}, physics, IncidentKind::point_source);
  const CVector with = reference::dense_A(reference::dense_G(grid, physics, true), f).partialPivLu().solve(u_in);
  const CVector without = reference::dense_A(reference::dense_G(grid, physics, false), f).partialPivLu().solve(u_in);
  CHECK((with - without).norm() / with.norm() < 0.05);
}
