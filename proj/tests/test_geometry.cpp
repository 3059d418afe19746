#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "helpers.hpp"
#include "difftomo/special_functions.hpp"

using namespace difftomo;
using testing::kWavelength;

TEST_CASE("2x2 grid of unit pitch sits at (+-0.5, +-0.5)") {
  const Grid g = build_grid(2, 2, 1.0);
  REQUIRE(g.size() == 4);
  std::set<std::pair<double, double>> pts;
  for (std::size_t n = 0; n < 4; ++n) pts.insert({g.point(n)[0], g.point(n)[1]});
  CHECK(pts == std::set<std::pair<double, double>>{{-0.5, -0.5}, {-0.5, 0.5}, {0.5, -0.5}, {0.5, 0.5}});
}

TEST_CASE("32^3 grid at 4.6875 mm spans a 150 mm cube") {
  const Grid g = build_grid(3, 32, 4.6875e-3);
  CHECK(g.size() == 32768);
  CHECK(2 * g.half_extent() == doctest::Approx(0.150).epsilon(1e-12));
  CHECK(g.point(0)[2] == doctest::Approx(-0.075 + 0.5 * 4.6875e-3));
}

TEST_CASE("128^2 grid at 9.375 mm spans 1.2 m") {
  const Grid g = build_grid(2, 128, 9.375e-3);
  CHECK(2 * g.half_extent() == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(g.size() == 16384);
}

TEST_CASE("grid coordinates sum to zero and index maps invert") {
  for (int d : {2, 3}) {
    const Grid g = build_grid(d, 7, 0.01);
    Point sum{0, 0, 0};
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto p = g.point(n);
      for (int a = 0; a < 3; ++a) sum[a] += p[a];
      const auto idx = g.indices(n);
      CHECK(g.linear(idx[0], idx[1], idx[2]) == n);
    }
    CHECK(norm(sum) < 1e-12);
  }
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(build_grid(1, 8, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 8, -0.1), std::invalid_argument);
}

TEST_CASE("simulated 2D layout: 25 transmitters, 338 receivers at x = +-95.9 cm") {
  const Layout l = simulated_layout_2d();
  CHECK(l.transmitter_count() == 25);
  CHECK(l.receiver_count() == 338);
  for (const auto& r : l.receivers) CHECK(std::abs(std::abs(r[0]) - 0.959) < 1e-12);
  const long left = std::count_if(l.receivers.begin(), l.receivers.end(), [](const Point& r) { return r[0] < 0; });
  CHECK(left == 169);
  for (std::size_t p = 0; p < l.transmitter_count(); ++p) CHECK(l.active_count(p) == 338);
}

TEST_CASE("halved layout: 13 transmitters, 2 x 85 receivers") {
  const Layout l = simulated_layout_2d(halved_linear_array());
  CHECK(l.transmitter_count() == 13);
  CHECK(l.receiver_count() == 170);
}

TEST_CASE("sensors keep more than half a pitch from the 1.2 m grid") {
  const Grid g = build_grid(2, 128, 9.375e-3);
  const Layout l = simulated_layout_2d();
  CHECK_NOTHROW(l.validate(g));
  double closest = 1e300;
  for (const auto* set : {&l.receivers, &l.transmitters}) {
    for (const auto& s : *set) {
      for (std::size_t n = 0; n < g.size(); ++n) closest = std::min(closest, distance(s, g.point(n)));
    }
  }
  CHECK(closest > 0.5 * g.pitch());
}

TEST_CASE("layout validation catches sensors inside the domain") {
  const Grid g = build_grid(2, 16, 0.01);
  Layout l = make_layout(2, {{0.5, 0.0, 0.0}}, {{0.01, 0.0, 0.0}});
  CHECK_THROWS_AS(l.validate(g), std::invalid_argument);
  l = make_layout(2, {{0.5, 0.0, 0.0}}, {{0.3, 0.0, 0.0}});
  l.active[0][0] = 0;
  CHECK_THROWS_AS(l.validate(g), std::invalid_argument);
}

TEST_CASE("spherical layout masks receivers near each transmitter") {
  const SphericalArraySpec spec;
  const Layout l = spherical_layout_3d(spec);
  CHECK(l.receiver_count() == 36);
  CHECK(l.transmitter_count() == 9 * 9);
  for (std::size_t p = 0; p < l.transmitter_count(); ++p) {
    const auto& t = l.transmitters[p];
    CHECK(norm(t) == doctest::Approx(spec.radius));
    const double ta = std::atan2(t[1], t[0]);
    for (std::size_t m = 0; m < l.receiver_count(); ++m) {
      const auto& r = l.receivers[m];
      double diff = std::abs(std::atan2(r[1], r[0]) - ta) * 180.0 / kPi;
      diff = std::min(diff, 360.0 - diff);
      CHECK((l.active[p][m] != 0) == (diff > spec.min_separation_deg + 1e-9));
    }
  }
}

TEST_CASE("incident field: equidistant points see the same value") {
  const PhysicsConfig physics(kWavelength);
  const Grid g = build_grid(2, 8, kWavelength / 8);
  const Point src{0.0, 0.6, 0.0};
  const CVector u = incident_field(g, src, physics, IncidentKind::point_source);
  // mirror pair in x about the source's line
  CHECK(u[static_cast<Eigen::Index>(g.linear(1, 3))] == u[static_cast<Eigen::Index>(g.linear(6, 3))]);
}

TEST_CASE("2D point source equals -(j/4) H0(kb rho)") {
  const PhysicsConfig physics(kWavelength, 1.3);
  const Grid g = build_grid(2, 4, 0.01);
  const Point src{0.4, -0.2, 0.0};
  const CVector u = incident_field(g, src, physics, IncidentKind::point_source);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double rho = distance(g.point(n), src);
    CHECK(std::abs(u[static_cast<Eigen::Index>(n)] - Complex(0, -0.25) * hankel_h0_first_kind(physics.kb() * rho)) <
          1e-15);
  }
}

TEST_CASE("2D incident magnitude decays monotonically along a radial slice") {
  const PhysicsConfig physics(kWavelength);
  const Grid g = build_grid(2, 64, kWavelength / 8);
  const Point src{1.0, g.coordinate(20), 0.0};
  const CVector u = incident_field(g, src, physics, IncidentKind::point_source);
  // row i1 = 20 runs straight away from the source, from i0 = 63 down to 0
  for (int i0 = 62; i0 >= 0; --i0) {
    CHECK(std::abs(u[static_cast<Eigen::Index>(g.linear(i0, 20))]) <
          std::abs(u[static_cast<Eigen::Index>(g.linear(i0 + 1, 20))]));
  }
}

TEST_CASE("plane wave at the origin equals its polarisation") {
  const PhysicsConfig physics(kWavelength);
  const Grid g = build_grid(3, 3, 0.01);
  const std::size_t centre = g.linear(1, 1, 1);
  const auto N = static_cast<Eigen::Index>(g.size());
  const CVector u = plane_wave_field(g, {1.0, 0.0, 0.0}, {0.0, 0.6, 0.8}, physics);
  REQUIRE(u.size() == 3 * N);
  const auto c = static_cast<Eigen::Index>(centre);
  CHECK(std::abs(u[c] - 0.0) < 1e-15);
  CHECK(std::abs(u[N + c] - 0.6) < 1e-15);
  CHECK(std::abs(u[2 * N + c] - 0.8) < 1e-15);
}

TEST_CASE("3D incident plane waves travel toward the origin, transverse and unit") {
  const PhysicsConfig physics(kWavelength);
  const Grid g = build_grid(3, 3, 0.01);
  const auto N = static_cast<Eigen::Index>(g.size());
  const Point src{0.5, 0.5, 1.0};
  const CVector u = incident_field(g, src, physics, IncidentKind::plane_wave);
  const auto c = static_cast<Eigen::Index>(g.linear(1, 1, 1));
  const Eigen::Vector3cd e(u[c], u[N + c], u[2 * N + c]);
  const Eigen::Vector3d dir = -Eigen::Vector3d(src[0], src[1], src[2]).normalized();
  CHECK(e.norm() == doctest::Approx(1.0));
  CHECK(std::abs(e.dot(dir.cast<Complex>())) < 1e-14);
  CHECK(std::abs(e[0].imag()) + std::abs(e[1].imag()) + std::abs(e[2].imag()) < 1e-14);
}

TEST_CASE("dipole incidence is the third dyadic column and needs a 3D grid") {
  const PhysicsConfig physics(kWavelength);
  const Grid g = build_grid(3, 2, 0.01);
  const Point src{0.3, 0.1, 0.2};
  const CVector u = incident_field(g, src, physics, IncidentKind::dipole);
  const auto N = static_cast<Eigen::Index>(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Eigen::Matrix3cd G = dyadic_green(g.point(n) - src, physics);
    for (int c = 0; c < 3; ++c) CHECK(u[c * N + static_cast<Eigen::Index>(n)] == G(c, 2));
  }
  CHECK_THROWS_AS(incident_field(build_grid(2, 2, 0.01), src, physics, IncidentKind::plane_wave),
                  std::invalid_argument);
  CHECK_THROWS_AS(incident_field(g, {0.0, 0.0, 0.0}, physics, IncidentKind::dipole), std::invalid_argument);
}

TEST_CASE("physics constants") {
  const PhysicsConfig p(0.5, 4.0);
  CHECK(p.k() == doctest::Approx(4 * kPi));
  CHECK(p.kb() == doctest::Approx(8 * kPi));
  CHECK_THROWS_AS(PhysicsConfig(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(PhysicsConfig(1.0, 0.0), std::invalid_argument);
}
