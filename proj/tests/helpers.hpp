#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "difftomo/experiment.hpp"
#include "difftomo/reference.hpp"

namespace testing {

using namespace difftomo;

inline CVector random_cvector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v;
}

inline RVector random_rvector(Eigen::Index n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline double rel_err(const CVector& a, const CVector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
inline double rel_err(const RVector& a, const RVector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

/// |<A x, y> - <x, A^H y>| / (||A x|| ||y||)
inline double adjoint_mismatch(const CVector& Ax, const CVector& y, const CVector& x, const CVector& AHy) {
  return std::abs(y.dot(Ax) - AHy.dot(x)) / (Ax.norm() * y.norm());
}

inline constexpr double kWavelength = 0.0749;

/// Points on a circle of `radius` in the x-y plane, starting at `phase` radians.
inline std::vector<Point> ring(int count, double radius, double phase = 0.0, double z = 0.0) {
  std::vector<Point> pts;
  for (int i = 0; i < count; ++i) {
    const double a = phase + 2.0 * kPi * i / count;
    pts.push_back({radius * std::cos(a), radius * std::sin(a), z});
  }
  return pts;
}

/// Small 2D problem: J x J grid at pitch lambda/8, transmitters and receivers
/// on rings around it.
struct SmallScalar {
  Grid grid;
  PhysicsConfig physics{kWavelength};
  Layout layout;
  std::shared_ptr<ScatteringOperators> ops;
  std::vector<CVector> incident;

  SmallScalar(int J, int transmitters = 3, int receivers = 12, bool self_term = true,
              double pitch = kWavelength / 8)
      : grid(2, J, pitch) {
    layout = make_layout(2, ring(transmitters, 0.5, 0.1), ring(receivers, 0.35, 0.05));
    OperatorOptions opts;
    opts.include_self_term = self_term;
    ops = std::make_shared<ScatteringOperators>(grid, physics, layout.receivers, opts);
    incident = incident_fields(grid, layout, physics, IncidentKind::point_source);
  }

  /// Centred disk of contrast `c` covering about half the grid radius.
  RVector disk(double c) const {
    RVector f = RVector::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Point p = grid.point(n);
      if (std::hypot(p[0], p[1]) < 0.3 * grid.half_extent() * 2) f[static_cast<Eigen::Index>(n)] = c;
    }
    return f;
  }

  ScatteringDataset simulate(const RVector& f, int anti_crime = 1) const {
    SimulationOptions o;
    o.anti_crime_factor = anti_crime;
    o.krylov.tolerance = 1e-12;
    return simulate_measurements(f, grid, layout, physics, o);
  }

  /// Dataset of random complex measurements on the layout.
  ScatteringDataset random_data(std::uint64_t seed, double scale = 1e-3) const {
    ScatteringDataset d;
    d.layout = layout;
    d.physics = physics;
    for (std::size_t p = 0; p < layout.transmitter_count(); ++p) {
      d.measurements.push_back(scale * random_cvector(static_cast<Eigen::Index>(layout.active_count(p)), seed + p));
    }
    return d;
  }
};

/// Small 3D problem with z-polarised plane waves.
struct SmallVector {
  Grid grid;
  PhysicsConfig physics{kWavelength};
  Layout layout;
  std::shared_ptr<VectorialOperators> ops;
  std::vector<CVector> incident;

  SmallVector(int J, int transmitters = 2, int receivers = 8) : grid(3, J, kWavelength / 10) {
    layout = make_layout(3, ring(transmitters, 1.0, 0.3, 0.2), ring(receivers, 0.6, 0.05));
    ops = std::make_shared<VectorialOperators>(grid, physics, layout.receivers);
    incident = incident_fields(grid, layout, physics, IncidentKind::plane_wave);
  }

  RVector ball(double c) const {
    RVector f = RVector::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t n = 0; n < grid.size(); ++n) {
      if (norm(grid.point(n)) < 0.6 * grid.half_extent()) f[static_cast<Eigen::Index>(n)] = c;
    }
    return f;
  }
};

}  // namespace testing
