#include "difftomo/geometry.hpp"

#include <cmath>
#include <string>

#include "difftomo/special_functions.hpp"

namespace difftomo {

namespace {

double deg2rad(double deg) { return deg * kPi / 180.0; }

// Angle values start, start+step, ... up to stop (inclusive, with slack for
// accumulated rounding).
std::vector<double> angle_range(double start, double stop, double step) {
  std::vector<double> out;
  const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) out.push_back(start + i * step);
  return out;
}

bool inside_box(const Point& p, double half, int dim) {
  for (int a = 0; a < dim; ++a) {
    if (std::abs(p[a]) > half) return false;
  }
  return true;
}

}  // namespace

PhysicsConfig::PhysicsConfig(double wavelength, double background_permittivity)
    : wavelength_(wavelength), eps_b_(background_permittivity) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw std::invalid_argument("wavelength must be positive and finite");
  }
  if (!(background_permittivity > 0.0) || !std::isfinite(background_permittivity)) {
    throw std::invalid_argument("background permittivity must be positive and finite");
  }
  k_ = 2.0 * kPi / wavelength_;
  kb_ = k_ * std::sqrt(eps_b_);
}

std::size_t Shape::size() const {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::size_t Shape::stride(int axis) const {
  std::size_t s = 1;
  for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(dims[a]);
  return s;
}

Grid::Grid(int dim, int side, double pitch) : dim_(dim), side_(side), pitch_(pitch) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
  if (side < 2) throw std::invalid_argument("grid side count must be at least 2");
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    throw std::invalid_argument("grid pitch must be positive and finite");
  }
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(side);
}

double Grid::cell_measure() const { return dim_ == 2 ? pitch_ * pitch_ : pitch_ * pitch_ * pitch_; }

std::array<int, 3> Grid::indices(std::size_t n) const {
  const auto J = static_cast<std::size_t>(side_);
  return {static_cast<int>(n % J), static_cast<int>((n / J) % J),
          dim_ == 3 ? static_cast<int>(n / (J * J)) : 0};
}

Point Grid::point(std::size_t n) const {
  const auto idx = indices(n);
  return {coordinate(idx[0]), coordinate(idx[1]), dim_ == 3 ? coordinate(idx[2]) : 0.0};
}

std::size_t Grid::linear(int i0, int i1, int i2) const {
  const auto J = static_cast<std::size_t>(side_);
  return static_cast<std::size_t>(i0) + J * (static_cast<std::size_t>(i1) + J * static_cast<std::size_t>(i2));
}

Shape Grid::shape() const { return Shape{std::vector<int>(static_cast<std::size_t>(dim_), side_)}; }

Grid Grid::refined(int factor) const {
  if (factor < 1) throw std::invalid_argument("refinement factor must be >= 1");
  return Grid(dim_, side_ * factor, pitch_ / factor);
}

Grid build_grid(int dim, int side, double pitch) { return Grid(dim, side, pitch); }

std::vector<std::size_t> Layout::active_receivers(std::size_t transmitter) const {
  std::vector<std::size_t> rows;
  const auto& mask = active.at(transmitter);
  for (std::size_t m = 0; m < mask.size(); ++m) {
    if (mask[m]) rows.push_back(m);
  }
  return rows;
}

std::size_t Layout::active_count(std::size_t transmitter) const {
  std::size_t count = 0;
  for (auto a : active.at(transmitter)) count += a ? 1 : 0;
  return count;
}

void Layout::validate(const Grid& grid) const {
  if (dim != grid.dim()) throw std::invalid_argument("layout and grid dimensions differ");
  if (active.size() != transmitters.size()) {
    throw std::invalid_argument("layout needs one receiver mask per transmitter");
  }
  const double half = grid.half_extent();
  auto check = [&](const Point& p, const char* what, std::size_t i) {
    if (inside_box(p, half, dim)) {
      throw std::invalid_argument(std::string(what) + " " + std::to_string(i) +
                                  " lies inside the image domain");
    }
  };
  for (std::size_t p = 0; p < transmitters.size(); ++p) check(transmitters[p], "transmitter", p);
  for (std::size_t m = 0; m < receivers.size(); ++m) check(receivers[m], "receiver", m);
  for (std::size_t p = 0; p < transmitters.size(); ++p) {
    if (active[p].size() != receivers.size()) {
      throw std::invalid_argument("receiver mask length mismatch for transmitter " + std::to_string(p));
    }
    if (active_count(p) == 0) {
      throw std::invalid_argument("transmitter " + std::to_string(p) + " has no active receiver");
    }
  }
}

Layout make_layout(int dim, std::vector<Point> transmitters, std::vector<Point> receivers) {
  Layout layout;
  layout.dim = dim;
  layout.transmitters = std::move(transmitters);
  layout.receivers = std::move(receivers);
  layout.active.assign(layout.transmitters.size(),
                       std::vector<std::uint8_t>(layout.receivers.size(), 1));
  return layout;
}

Layout simulated_layout_2d(const LinearArraySpec& spec) {
  std::vector<Point> receivers;
  const double span = (spec.sensors_per_detector - 1) * spec.sensor_spacing;
  for (double x : {-spec.detector_offset, spec.detector_offset}) {
    for (int i = 0; i < spec.sensors_per_detector; ++i) {
      receivers.push_back({x, -0.5 * span + i * spec.sensor_spacing, 0.0});
    }
  }
  std::vector<Point> transmitters;
  const double tx_x = spec.detector_offset + spec.transmitter_setback;
  for (double angle : angle_range(spec.min_angle_deg, spec.max_angle_deg, spec.angle_step_deg)) {
    transmitters.push_back({-tx_x, tx_x * std::tan(deg2rad(angle)), 0.0});
  }
  return make_layout(2, std::move(transmitters), std::move(receivers));
}

LinearArraySpec halved_linear_array() {
  LinearArraySpec spec;
  spec.sensors_per_detector = 85;
  spec.sensor_spacing = 2.0 * 0.0384;
  spec.angle_step_deg = 10.0;
  return spec;
}

Layout spherical_layout_3d(const SphericalArraySpec& spec) {
  Layout layout;
  layout.dim = 3;
  std::vector<double> tx_azimuth;
  for (double polar : angle_range(spec.polar_start_deg, spec.polar_stop_deg, spec.polar_step_deg)) {
    for (double az : angle_range(spec.azimuth_start_deg, spec.azimuth_stop_deg, spec.azimuth_step_deg)) {
      const double t = deg2rad(az);
      const double p = deg2rad(polar);
      layout.transmitters.push_back({spec.radius * std::sin(p) * std::cos(t),
                                     spec.radius * std::sin(p) * std::sin(t), spec.radius * std::cos(p)});
      tx_azimuth.push_back(az);
    }
  }
  std::vector<double> rx_azimuth = angle_range(0.0, 360.0 - spec.receiver_step_deg, spec.receiver_step_deg);
  for (double az : rx_azimuth) {
    const double t = deg2rad(az);
    layout.receivers.push_back({spec.radius * std::cos(t), spec.radius * std::sin(t), 0.0});
  }
  for (double tx_az : tx_azimuth) {
    std::vector<std::uint8_t> mask;
    for (double rx_az : rx_azimuth) {
      double sep = std::fmod(std::abs(tx_az - rx_az), 360.0);
      sep = std::min(sep, 360.0 - sep);
      mask.push_back(sep > spec.min_separation_deg ? 1 : 0);
    }
    layout.active.push_back(std::move(mask));
  }
  return layout;
}

IncidentKind default_incident_kind(int dim) {
  return dim == 2 ? IncidentKind::point_source : IncidentKind::plane_wave;
}

CVector plane_wave_field(const Grid& grid, const Point& direction, const Point& polarization,
                         const PhysicsConfig& physics) {
  if (grid.dim() != 3) throw std::invalid_argument("plane-wave incidence needs a 3D grid");
  const double dn = norm(direction);
  if (!(dn > 0.0)) throw std::invalid_argument("plane-wave direction must be nonzero");
  const std::size_t N = grid.size();
  CVector field(3 * N);
  for (std::size_t n = 0; n < N; ++n) {
    const Point r = grid.point(n);
    const double phase = physics.kb() * (direction[0] * r[0] + direction[1] * r[1] + direction[2] * r[2]) / dn;
    const Complex e = std::exp(Complex(0.0, phase));
    for (int c = 0; c < 3; ++c) field[c * N + n] = polarization[c] * e;
  }
  return field;
}

CVector incident_field(const Grid& grid, const Point& source, const PhysicsConfig& physics,
                       IncidentKind kind) {
  if (inside_box(source, grid.half_extent(), grid.dim())) {
    throw std::invalid_argument("source lies inside the image domain");
  }
  const std::size_t N = grid.size();
  if (kind == IncidentKind::point_source) {
    CVector field(N);
    for (std::size_t n = 0; n < N; ++n) field[n] = scalar_green(grid.point(n) - source, physics, grid.dim());
    return field;
  }
  if (grid.dim() != 3) throw std::invalid_argument("vectorial incidence needs a 3D grid");
  if (kind == IncidentKind::plane_wave) {
    const double r = norm(source);
    const Point dir{-source[0] / r, -source[1] / r, -source[2] / r};
    // z projected onto the plane normal to the propagation direction
    Point pol{-dir[2] * dir[0], -dir[2] * dir[1], 1.0 - dir[2] * dir[2]};
    double pn = norm(pol);
    if (pn < 1e-12) {
      pol = {1.0, 0.0, 0.0};
      pn = 1.0;
    }
    for (auto& c : pol) c /= pn;
    return plane_wave_field(grid, dir, pol, physics);
  }
  CVector field(3 * N);
  for (std::size_t n = 0; n < N; ++n) {
    const Eigen::Matrix3cd G = dyadic_green(grid.point(n) - source, physics);
    for (int c = 0; c < 3; ++c) field[c * N + n] = G(c, 2);
  }
  return field;
}

std::vector<CVector> incident_fields(const Grid& grid, const Layout& layout,
                                     const PhysicsConfig& physics, IncidentKind kind) {
  for (const auto& s : layout.transmitters) {
    if (inside_box(s, grid.half_extent(), grid.dim())) {
      throw std::invalid_argument("source lies inside the image domain");
    }
  }
  if (grid.dim() == 2 && kind != IncidentKind::point_source) {
    throw std::invalid_argument("vectorial incidence needs a 3D grid");
  }
  std::vector<CVector> out(layout.transmitter_count());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = incident_field(grid, layout.transmitters[p], physics, kind);
  }
  return out;
}

}  // namespace difftomo
