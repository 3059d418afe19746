#include "difftomo/special_functions.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace difftomo {

namespace {

// Above this argument Hankel's expansion is summed; its smallest term is then
// below exp(-2x) ~ 1e-22, comfortably past double precision.
constexpr double kAsymptoticThreshold = 25.0;

struct BesselPair {
  double j0, j1, y0, y1;
};

// Miller's backward recurrence normalised by J0 + 2 sum J_2k = 1, with the
// Neumann series for Y0 and its derivative for Y1.
BesselPair bessel_recurrence(double x) {
  const int top = 2 * ((static_cast<int>(x) + 50) / 2);
  std::vector<double> J(static_cast<std::size_t>(top) + 2, 0.0);
  J[top + 1] = 0.0;
  J[top] = 1e-30;
  for (int n = top; n >= 1; --n) {
    J[n - 1] = (2.0 * n / x) * J[n] - J[n + 1];
    if (std::abs(J[n - 1]) > 1e250) {
      for (int m = n - 1; m <= top; ++m) J[m] *= 1e-250;
    }
  }
  double norm = J[0];
  for (int k = 2; k <= top; k += 2) norm += 2.0 * J[k];
  for (auto& v : J) v /= norm;

  const double L = std::log(0.5 * x) + kEulerGamma;
  double s0 = 0.0;
  double s1 = 0.0;
  for (int k = 1; 2 * k + 1 <= top + 1; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s0 += sign * J[2 * k] / k;
    s1 += sign * (J[2 * k - 1] - J[2 * k + 1]) / k;
  }
  BesselPair out;
  out.j0 = J[0];
  out.j1 = J[1];
  out.y0 = (2.0 / kPi) * (L * J[0] - 2.0 * s0);
  out.y1 = (2.0 / kPi) * (-J[0] / x + L * J[1] + s1);
  return out;
}

// H_nu^(1)(x) from Hankel's asymptotic expansion, nu in {0, 1}.
Complex hankel_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double P = 1.0;
  double Q = 0.0;
  double a = 1.0;
  double xk = 1.0;
  double last = 1.0;
  for (int k = 1; k < 200; ++k) {
    a *= (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k);
    xk *= x;
    const double term = a / xk;
    if (std::abs(term) > last) break;  // series has started to diverge
    last = std::abs(term);
    // (-1)^floor(k/2): even k feed P, odd k feed Q.
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      P += sign * term;
    } else {
      Q += sign * term;
    }
    if (last < 1e-18) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * Complex(P, Q) * Complex(std::cos(chi), std::sin(chi));
}

BesselPair bessel_all(double x) {
  if (x <= kAsymptoticThreshold) return bessel_recurrence(x);
  const Complex h0 = hankel_asymptotic(0, x);
  const Complex h1 = hankel_asymptotic(1, x);
  return {h0.real(), h1.real(), h0.imag(), h1.imag()};
}

// z*Y1(z) + 2/pi, free of the cancellation between the two terms for small z.
double y1_regular(double z) {
  if (z >= 1.0) return z * bessel_y1(z) + 2.0 / kPi;
  const double q = 0.25 * z * z;
  double term = 0.5 * z;  // (z/2)^(2m+1) / (m! (m+1)!) at m = 0
  double harmonic = 0.0;  // H_m
  double sum = 0.0;
  for (int m = 0; m < 40; ++m) {
    if (m > 0) {
      term *= -q / (static_cast<double>(m) * (m + 1));
      harmonic += 1.0 / m;
    }
    const double psi_sum = -2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (m + 1);
    sum += psi_sum * term;
    if (std::abs(term) < 1e-20) break;
  }
  return (2.0 / kPi) * z * std::log(0.5 * z) * bessel_j1(z) - (z / kPi) * sum;
}

}  // namespace

double bessel_j0(double x) {
  x = std::abs(x);
  if (x == 0.0) return 1.0;
  return bessel_all(x).j0;
}

double bessel_j1(double x) {
  if (x == 0.0) return 0.0;
  const double v = bessel_all(std::abs(x)).j1;
  return x < 0.0 ? -v : v;
}

double bessel_y0(double x) {
  if (!(x > 0.0)) throw std::domain_error("Y0 is singular for x <= 0");
  return bessel_all(x).y0;
}

double bessel_y1(double x) {
  if (!(x > 0.0)) throw std::domain_error("Y1 is singular for x <= 0");
  return bessel_all(x).y1;
}

Complex hankel_h0_first_kind(double x) {
  if (!(x > 0.0)) throw std::domain_error("H0 is singular for x <= 0");
  if (x > kAsymptoticThreshold) return hankel_asymptotic(0, x);
  const auto b = bessel_recurrence(x);
  return {b.j0, b.y0};
}

Complex hankel_h1_first_kind(double x) {
  if (!(x > 0.0)) throw std::domain_error("H1 is singular for x <= 0");
  if (x > kAsymptoticThreshold) return hankel_asymptotic(1, x);
  const auto b = bessel_recurrence(x);
  return {b.j1, b.y1};
}

Complex scalar_green(const Point& r, const PhysicsConfig& physics, int dim) {
  const double d = norm(r);
  if (!(d > 0.0)) throw std::domain_error("Green's function is singular at r = 0");
  if (dim == 2) return Complex(0.0, -0.25) * hankel_h0_first_kind(physics.kb() * d);
  if (dim == 3) return std::exp(Complex(0.0, physics.kb() * d)) / (4.0 * kPi * d);
  throw std::invalid_argument("Green's function dimension must be 2 or 3");
}

Eigen::Matrix3cd dyadic_green(const Point& r, const PhysicsConfig& physics) {
  const double d = norm(r);
  if (!(d > 0.0)) throw std::domain_error("dyadic Green's function is singular at r = 0");
  const double k = physics.dyadic_uses_background_k ? physics.kb() : physics.k();
  const double kd = k * d;
  const Complex g = scalar_green(r, physics, 3);
  const Complex radial = Complex(3.0 / (kd * kd) - 1.0, -3.0 / kd);
  const Complex transverse = Complex(1.0 - 1.0 / (kd * kd), 1.0 / kd);
  Eigen::Matrix3cd G;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      Complex v = radial * (r[a] / d) * (r[b] / d);
      if (a == b) v += transverse;
      G(a, b) = k * k * v * g;
    }
  }
  return G;
}

Complex self_term(const Grid& grid, const PhysicsConfig& physics) {
  const double k = physics.kb();
  const double h = grid.pitch();
  if (grid.dim() == 2) {
    const double a = h / std::sqrt(kPi);
    const double z = k * a;
    // disk integral of -(j/4) H0(k r): (pi / 2k^2) [ (z Y1(z) + 2/pi) - j z J1(z) ]
    const Complex integral = (kPi / (2.0 * k * k)) * Complex(y1_regular(z), -z * bessel_j1(z));
    return integral / (h * h);
  }
  const double a = std::cbrt(3.0 / (4.0 * kPi)) * h;
  const double z = k * a;
  // sphere integral of exp(jkr)/(4 pi r): ((1 - jz) e^{jz} - 1) / k^2
  Complex f;
  if (z < 1.0) {
    f = 0.0;
    Complex power = 1.0;  // (jz)^n / n!
    for (int n = 1; n < 40; ++n) {
      power *= Complex(0.0, z) / static_cast<double>(n);
      if (n >= 2) f += static_cast<double>(1 - n) * power;
    }
  } else {
    f = (Complex(1.0, -z) * std::exp(Complex(0.0, z))) - 1.0;
  }
  return f / (k * k) / (h * h * h);
}

}  // namespace difftomo
