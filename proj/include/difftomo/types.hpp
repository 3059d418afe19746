#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace difftomo {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

/// Cartesian position in metres. 2D problems leave the third coordinate at 0.
using Point = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Raised when an iterative solve fails to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int transmitter, int iterations, double residual)
      : std::runtime_error(what),
        transmitter_(transmitter),
        iterations_(iterations),
        residual_(residual) {}

  int transmitter() const noexcept { return transmitter_; }
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int transmitter_;
  int iterations_;
  double residual_;
};

/// Closed interval of admissible contrast values.
struct Box {
  double lower = 0.0;
  double upper = 1.0;
};

inline double distance(const Point& a, const Point& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline Point operator-(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline double norm(const Point& a) {
  return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

}  // namespace difftomo
