#include "difftomo/krylov.hpp"

#include <cmath>

namespace difftomo {

namespace {

bool zero_rhs(const CVector& b, KrylovResult& out) {
  if (b.squaredNorm() > 0.0) return false;
  out.x = CVector::Zero(b.size());
  out.converged = true;
  return true;
}

}  // namespace

KrylovResult bicgstab(const LinearMap& A, const CVector& b, const CVector& x0, const KrylovOptions& options) {
  KrylovResult out;
  if (zero_rhs(b, out)) return out;
  const double bnorm = b.norm();
  const double target = options.tolerance * bnorm;

  CVector x = x0.size() == b.size() ? x0 : CVector::Zero(b.size());
  CVector r = b - A(x);
  int it = 0;
  // Outer loop restarts from the true residual whenever the recursive one has
  // drifted or the method breaks down.
  while (it < options.max_iterations) {
    if (r.norm() <= target) break;
    const CVector r_hat = r;
    Complex rho = 1.0, alpha = 1.0, omega = 1.0;
    CVector v = CVector::Zero(b.size());
    CVector p = CVector::Zero(b.size());
    bool breakdown = false;
    while (it < options.max_iterations) {
      ++it;
      const Complex rho_next = r_hat.dot(r);
      if (std::abs(rho_next) < 1e-300) {
        breakdown = true;
        break;
      }
      const Complex beta = (rho_next / rho) * (alpha / omega);
      rho = rho_next;
      p = r + beta * (p - omega * v);
      v = A(p);
      const Complex denom = r_hat.dot(v);
      if (std::abs(denom) < 1e-300) {
        breakdown = true;
        break;
      }
      alpha = rho / denom;
      CVector s = r - alpha * v;
      if (s.norm() <= target) {
        x += alpha * p;
        r = s;
        break;
      }
      const CVector t = A(s);
      const double tt = t.squaredNorm();
      if (tt == 0.0) {
        x += alpha * p;
        r = s;
        breakdown = true;
        break;
      }
      omega = t.dot(s) / tt;
      x += alpha * p + omega * s;
      r = s - omega * t;
      if (r.norm() <= target) break;
      if (omega == Complex(0.0)) {
        breakdown = true;
        break;
      }
    }
    const CVector true_r = b - A(x);
    r = true_r;
    if (!breakdown && r.norm() <= target) break;
  }
  out.x = std::move(x);
  out.iterations = it;
  out.relative_residual = r.norm() / bnorm;
  out.converged = out.relative_residual <= options.tolerance;
  return out;
}

KrylovResult cgnr(const LinearMap& A, const LinearMap& A_adjoint, const CVector& b, const CVector& x0,
                  const KrylovOptions& options) {
  KrylovResult out;
  if (zero_rhs(b, out)) return out;
  const double bnorm = b.norm();
  CVector x = x0.size() == b.size() ? x0 : CVector::Zero(b.size());
  CVector r = b - A(x);
  CVector z = A_adjoint(r);
  CVector p = z;
  double zz = z.squaredNorm();
  int it = 0;
  while (it < options.max_iterations && r.norm() > options.tolerance * bnorm && zz > 0.0) {
    ++it;
    const CVector w = A(p);
    const double alpha = zz / w.squaredNorm();
    x += alpha * p;
    r -= alpha * w;
    z = A_adjoint(r);
    const double zz_next = z.squaredNorm();
    p = z + (zz_next / zz) * p;
    zz = zz_next;
  }
  r = b - A(x);
  out.x = std::move(x);
  out.iterations = it;
  out.relative_residual = r.norm() / bnorm;
  out.converged = out.relative_residual <= options.tolerance;
  return out;
}

KrylovResult krylov_solve(const LinearMap& A, const LinearMap& A_adjoint, const CVector& b,
                          const CVector& x0, const KrylovOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("Krylov tolerance must be positive");
  if (options.method == KrylovMethod::cgnr) return cgnr(A, A_adjoint, b, x0, options);
  return bicgstab(A, b, x0, options);
}

}  // namespace difftomo
