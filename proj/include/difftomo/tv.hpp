#pragma once

#include "difftomo/geometry.hpp"
#include "difftomo/types.hpp"

namespace difftomo {

/// Regularisation settings: weight tau, the box, and the inner dual solver budget.
struct TvConfig {
  double tau = 0.0;
  Box box{0.0, 1.0};
  int inner_iterations = 20;
  /// Early exit once the relative primal change drops below this (0 disables).
  double inner_tolerance = 0.0;
};

/// Forward differences along every axis with zero difference at the last
/// sample (replicate boundary). Output holds rank blocks of size N.
RVector forward_differences(const RVector& f, const Shape& shape);
/// Adjoint of forward_differences (the negative divergence).
RVector forward_differences_adjoint(const RVector& p, const Shape& shape);

/// Isotropic total variation sum_n sqrt(sum_d [D_d f]_n^2).
double tv_value(const RVector& f, const Shape& shape);

/// Dual variables of the last prox call, reused as the next starting point.
struct TvProxState {
  RVector dual;
};

/// argmin_x 0.5 ||x - z||^2 + weight * TV(x) + indicator_box(x), by the fast
/// gradient projection method on the dual. The result always lies in the box.
RVector prox_tv_box(const RVector& z, const Shape& shape, double weight, Box box, int iterations,
                    TvProxState* warm = nullptr, double tolerance = 0.0);

/// Pointwise projection onto the box.
RVector clip_to_box(const RVector& z, Box box);

}  // namespace difftomo
