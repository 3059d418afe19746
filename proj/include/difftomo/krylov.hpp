#pragma once

#include <functional>

#include "difftomo/types.hpp"

namespace difftomo {

using LinearMap = std::function<CVector(const CVector&)>;

enum class KrylovMethod {
  bicgstab,  // default: A is complex symmetric, not Hermitian
  cgnr,      // CG on the normal equations A^H A x = A^H b
};

struct KrylovOptions {
  double tolerance = 1e-6;
  int max_iterations = 1000;
  KrylovMethod method = KrylovMethod::bicgstab;
};

struct KrylovResult {
  CVector x;
  int iterations = 0;
  /// ||b - A x|| / ||b||, recomputed from the returned x.
  double relative_residual = 0.0;
  bool converged = false;
};

KrylovResult bicgstab(const LinearMap& A, const CVector& b, const CVector& x0, const KrylovOptions& options);

KrylovResult cgnr(const LinearMap& A, const LinearMap& A_adjoint, const CVector& b, const CVector& x0,
                  const KrylovOptions& options);

/// Dispatches on options.method. `A_adjoint` is only used by CGNR.
KrylovResult krylov_solve(const LinearMap& A, const LinearMap& A_adjoint, const CVector& b,
                          const CVector& x0, const KrylovOptions& options);

}  // namespace difftomo
