#pragma once

#include <cstdint>
#include <vector>

#include "difftomo/types.hpp"

namespace difftomo {

/// Wave constants of a single-frequency experiment.
class PhysicsConfig {
 public:
  PhysicsConfig(double wavelength, double background_permittivity = 1.0);

  double wavelength() const { return wavelength_; }
  double background_permittivity() const { return eps_b_; }
  /// Vacuum wavenumber 2*pi/lambda.
  double k() const { return k_; }
  /// Background wavenumber k*sqrt(eps_b).
  double kb() const { return kb_; }

  /// When set, the dyadic Green's function uses kb in its polynomial factors
  /// instead of the vacuum k. Only matters for eps_b != 1.
  bool dyadic_uses_background_k = false;

 private:
  double wavelength_;
  double eps_b_;
  double k_;
  double kb_;
};

/// Extents of a (possibly non-cubic) sample array, axis 0 fastest.
struct Shape {
  std::vector<int> dims;

  std::size_t size() const;
  int rank() const { return static_cast<int>(dims.size()); }
  /// Linear stride of `axis`.
  std::size_t stride(int axis) const;
};

/// Uniform sampling of the image domain, centred on the origin.
///
/// Sample (i0, i1, i2) (zero based) sits at ((i - (J-1)/2) * pitch) per axis,
/// and the linear index is i0 + J*(i1 + J*i2).
class Grid {
 public:
  Grid(int dim, int side, double pitch);

  int dim() const { return dim_; }
  int side() const { return side_; }
  double pitch() const { return pitch_; }
  std::size_t size() const { return size_; }
  /// Pixel area (2D) or voxel volume (3D).
  double cell_measure() const;
  double half_extent() const { return 0.5 * side_ * pitch_; }

  double coordinate(int index) const { return (index - 0.5 * (side_ - 1)) * pitch_; }
  Point point(std::size_t n) const;
  std::array<int, 3> indices(std::size_t n) const;
  std::size_t linear(int i0, int i1, int i2 = 0) const;
  Shape shape() const;

  /// The same domain sampled `factor` times finer per axis.
  Grid refined(int factor) const;

 private:
  int dim_;
  int side_;
  double pitch_;
  std::size_t size_;
};

Grid build_grid(int dim, int side, double pitch);

/// Transmitter/receiver placement plus per-transmitter receiver masks.
struct Layout {
  int dim = 2;
  std::vector<Point> transmitters;
  std::vector<Point> receivers;
  /// active[p][m] != 0 when receiver m records transmitter p.
  std::vector<std::vector<std::uint8_t>> active;

  std::size_t transmitter_count() const { return transmitters.size(); }
  std::size_t receiver_count() const { return receivers.size(); }
  std::vector<std::size_t> active_receivers(std::size_t transmitter) const;
  std::size_t active_count(std::size_t transmitter) const;

  /// Every position outside the grid's bounding box and at least one active
  /// receiver per transmitter. Throws std::invalid_argument otherwise.
  void validate(const Grid& grid) const;
};

/// Builds a layout with every receiver active for every transmitter.
Layout make_layout(int dim, std::vector<Point> transmitters, std::vector<Point> receivers);

/// Two opposing linear detectors plus a line of transmitters behind the left one.
struct LinearArraySpec {
  double detector_offset = 0.959;   // |x| of both detectors
  int sensors_per_detector = 169;
  double sensor_spacing = 0.0384;
  double transmitter_setback = 0.480;  // distance left of the left detector
  double min_angle_deg = -60.0;
  double max_angle_deg = 60.0;
  double angle_step_deg = 5.0;
};

Layout simulated_layout_2d(const LinearArraySpec& spec = {});

/// The halved geometry used for desk-scale contrast sweeps: every other
/// transmitter angle and half the sensors at twice the spacing.
LinearArraySpec halved_linear_array();

/// Transmitters on a sphere and z-polarised receivers on the azimuthal circle.
/// A receiver is active for a transmitter only when their azimuths differ by
/// more than `min_separation_deg`.
struct SphericalArraySpec {
  double radius = 1.769;
  double azimuth_start_deg = 20.0;
  double azimuth_stop_deg = 340.0;
  double azimuth_step_deg = 40.0;
  double polar_start_deg = 30.0;
  double polar_stop_deg = 150.0;
  double polar_step_deg = 15.0;
  double receiver_step_deg = 10.0;
  double min_separation_deg = 50.0;
};

Layout spherical_layout_3d(const SphericalArraySpec& spec = {});

enum class IncidentKind { point_source, plane_wave, dipole };

/// Incident field on all grid samples for one transmitter.
///
/// 2D: unit line source, u_in = g(r - r_s). 3D point_source: scalar g (N values).
/// 3D plane_wave / dipole: vectorial field stacked as [E1; E2; E3] (3N values).
CVector incident_field(const Grid& grid, const Point& source, const PhysicsConfig& physics,
                       IncidentKind kind);

/// Default kind: point source in 2D, plane wave in 3D.
IncidentKind default_incident_kind(int dim);

/// pol * exp(j kb <dir, r>) sampled on a 3D grid, stacked per component.
CVector plane_wave_field(const Grid& grid, const Point& direction, const Point& polarization,
                         const PhysicsConfig& physics);

/// Incident fields for every transmitter of the layout.
std::vector<CVector> incident_fields(const Grid& grid, const Layout& layout,
                                     const PhysicsConfig& physics, IncidentKind kind);

}  // namespace difftomo
