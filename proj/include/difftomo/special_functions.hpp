#pragma once

#include "difftomo/geometry.hpp"
#include "difftomo/types.hpp"

namespace difftomo {

// Bessel functions of the first and second kind, orders 0 and 1, for real
// arguments. Backward (Miller) recurrence below the asymptotic threshold,
// Hankel's asymptotic expansion above it.
double bessel_j0(double x);
double bessel_j1(double x);
double bessel_y0(double x);
double bessel_y1(double x);

/// H0^(1)(x) = J0(x) + j Y0(x). Throws std::domain_error for x <= 0.
Complex hankel_h0_first_kind(double x);
/// H1^(1)(x) = J1(x) + j Y1(x). Throws std::domain_error for x <= 0.
Complex hankel_h1_first_kind(double x);

/// Free-space scalar Green's function of the background medium.
/// d = 2: -(j/4) H0^(1)(kb |r|); d = 3: exp(j kb |r|) / (4 pi |r|).
Complex scalar_green(const Point& r, const PhysicsConfig& physics, int dim);

/// Free-space dyadic Green's function (k^2 I + grad grad) g, in closed form.
Eigen::Matrix3cd dyadic_green(const Point& r, const PhysicsConfig& physics);

/// Mean of g over one grid cell, replaced by an equal-area disk (2D) or an
/// equal-volume sphere (3D) so the integral is analytic.
Complex self_term(const Grid& grid, const PhysicsConfig& physics);

}  // namespace difftomo
