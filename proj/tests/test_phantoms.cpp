#include <cmath>

#include <doctest.h>

#include "helpers.hpp"

using namespace difftomo;

namespace {

// Independent copy of the ten-ellipse table: intensity, a, b, x0, y0, phi (deg).
const double kTable[10][6] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},        {-0.98, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.02, 0.11, 0.31, 0.22, 0.0, -18.0},   {-0.02, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.01, 0.21, 0.25, 0.0, 0.35, 0.0},      {0.01, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.01, 0.046, 0.046, 0.0, -0.1, 0.0},    {0.01, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.01, 0.023, 0.023, 0.0, -0.606, 0.0},  {0.01, 0.023, 0.046, 0.06, -0.605, 0.0},
};

double oracle_value(double x, double y) {
  double v = 0.0;
  for (const auto& e : kTable) {
    const double phi = e[5] * kPi / 180.0;
    const double dx = x - e[3], dy = y - e[4];
    const double xr = dx * std::cos(phi) + dy * std::sin(phi);
    const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
    if ((xr * xr) / (e[1] * e[1]) + (yr * yr) / (e[2] * e[2]) <= 1.0) v += e[0];
  }
  return v;
}

}  // namespace

TEST_CASE("Shepp-Logan table value at (0, -0.6) sums the covering ellipses") {
  CHECK(shepp_logan_value(0.0, -0.6) == doctest::Approx(oracle_value(0.0, -0.6)).epsilon(1e-15));
  CHECK(oracle_value(0.0, -0.6) == doctest::Approx(1.0 - 0.98 + 0.01));
  for (double x = -1.0; x <= 1.0; x += 0.0731) {
    for (double y = -1.0; y <= 1.0; y += 0.0517) CHECK(shepp_logan_value(x, y) == doctest::Approx(oracle_value(x, y)));
  }
}

TEST_CASE("Shepp-Logan image: max equals the contrast, zero outside, floored and scaled") {
  for (double c : {1e-3, 0.5, 3.0}) {
    const int J = 64;
    const Phantom ph = shepp_logan(J, c);
    CHECK(ph.label == "shepp-logan");
    CHECK(ph.image.maxCoeff() == c);
    CHECK(ph.image.minCoeff() >= 0.0);
    double raw_max = 0.0;
    for (int i1 = 0; i1 < J; ++i1) {
      for (int i0 = 0; i0 < J; ++i0) raw_max = std::max(raw_max, oracle_value(canonical_coordinates(i0, i1, J)[0],
                                                                               canonical_coordinates(i0, i1, J)[1]));
    }
    for (int i1 = 0; i1 < J; ++i1) {
      for (int i0 = 0; i0 < J; ++i0) {
        const auto xy = canonical_coordinates(i0, i1, J);
        const double v = ph.image[i0 + J * i1];
        const double e0 = (xy[0] * xy[0]) / (0.69 * 0.69) + (xy[1] * xy[1]) / (0.92 * 0.92);
        if (e0 > 1.0) CHECK(v == 0.0);
        CHECK(v == doctest::Approx(std::max(0.0, oracle_value(xy[0], xy[1])) * c / raw_max));
      }
    }
  }
}

TEST_CASE("Shepp-Logan rejects small grids and is deterministic") {
  CHECK_THROWS_AS(shepp_logan(7, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(shepp_logan(16, 0.0), std::invalid_argument);
  CHECK(shepp_logan(16, 0.7).image == shepp_logan(16, 0.7).image);
}

TEST_CASE("empty shape spec gives a zero phantom") {
  const Grid g = build_grid(3, 6, 0.01);
  const Phantom ph = spheres_cubes_3d(g, {});
  CHECK(ph.image.size() == 216);
  CHECK(ph.image.isZero(0.0));
  CHECK(ph.label == "custom");
}

TEST_CASE("sphere of radius 2 pitches has about (4/3) pi 8 voxels") {
  const double h = 0.01;
  const Grid g = build_grid(3, 12, h);
  ShapeSpec spec;
  spec.spheres.push_back({{0.0, 0.0, 0.0}, 2 * h, 1.0});
  const Phantom ph = spheres_cubes_3d(g, spec);
  const double count = (ph.image.array() > 0).count();
  const double analytic = 4.0 / 3.0 * kPi * 8.0;
  CHECK(std::abs(count - analytic) <= 0.2 * analytic);
}

TEST_CASE("disjoint spheres add their supports; overlaps keep the maximum") {
  const double h = 0.01;
  const Grid g = build_grid(3, 16, h);
  const Sphere a{{-0.04, 0.0, 0.0}, 0.025, 1.0}, b{{0.04, 0.0, 0.0}, 0.025, 2.0};
  auto count = [&](ShapeSpec s) { return (spheres_cubes_3d(g, s).image.array() > 0).count(); };
  CHECK(count({{a, b}, {}}) == count({{a}, {}}) + count({{b}, {}}));
  ShapeSpec overlap{{a}, {{{-0.04, 0.0, 0.0}, 0.02, 0.5}}};
  const Phantom ph = spheres_cubes_3d(g, overlap);
  CHECK(ph.image.maxCoeff() == 1.0);
}

TEST_CASE("presets reach their contrast inside the 150 mm cube") {
  const Grid g = build_grid(3, 32, 4.6875e-3);
  const Phantom s = spheres_cubes_3d(g, two_spheres_preset(0.9));
  CHECK(s.image.maxCoeff() == 0.9);
  const Phantom c = spheres_cubes_3d(g, two_cubes_preset(0.9));
  CHECK(c.image.maxCoeff() == 0.9);
  // two spheres are mirror images under x -> -x
  for (int i2 = 0; i2 < 32; ++i2) {
    for (int i1 = 0; i1 < 32; ++i1) {
      for (int i0 = 0; i0 < 32; ++i0) {
        CHECK(s.image[static_cast<Eigen::Index>(g.linear(i0, i1, i2))] ==
              s.image[static_cast<Eigen::Index>(g.linear(31 - i0, i1, i2))]);
      }
    }
  }
}

TEST_CASE("snr_db examples") {
  const RVector f = testing::random_rvector(50, 0.1, 1.0, 3);
  CHECK(snr_db(f, f) == kSnrCapDb);
  CHECK(snr_db(RVector::Zero(50), f) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(snr_db(f * 1.01, f) == doctest::Approx(40.0).epsilon(1e-10));
  CHECK_THROWS_AS(snr_db(f, RVector::Zero(50)), std::invalid_argument);
  CHECK_THROWS_AS(snr_db(f, RVector::Zero(49)), std::invalid_argument);
}

TEST_CASE("snr_db is invariant under joint positive scaling") {
  const RVector f = testing::random_rvector(40, 0.0, 1.0, 1);
  const RVector g = testing::random_rvector(40, 0.0, 1.0, 2);
  for (double s : {1e-6, 0.3, 7.0, 1e5}) CHECK(snr_db(s * g, s * f) == doctest::Approx(snr_db(g, f)).epsilon(1e-12));
}
