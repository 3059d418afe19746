#pragma once

#include <string>
#include <vector>

#include "difftomo/geometry.hpp"

namespace difftomo {

struct Phantom {
  RVector image;
  std::string label;  // shepp-logan, two-spheres, two-cubes or custom
};

/// One ellipse of the Shepp-Logan table in canonical coordinates [-1, 1]^2
/// (x to the right, y up).
struct Ellipse {
  double intensity;
  double a;  // semi-axis along x before rotation
  double b;  // semi-axis along y before rotation
  double x0;
  double y0;
  double phi_deg;
};

/// The standard ten-ellipse table (original intensities).
const std::vector<Ellipse>& shepp_logan_ellipses();

/// Sum of the intensities of every ellipse covering canonical point (x, y).
double shepp_logan_value(double x, double y);

/// Canonical coordinates of pixel (i0, i1) on a J x J image: x = (i0 - (J-1)/2) / (J/2),
/// y = (i1 - (J-1)/2) / (J/2).
std::array<double, 2> canonical_coordinates(int i0, int i1, int J);

/// J x J Shepp-Logan map, negative sums set to 0, scaled so the maximum is `contrast`.
Phantom shepp_logan(int J, double contrast);

struct Sphere {
  Point center;  // metres
  double radius;
  double value;
};

struct Cube {
  Point center;
  double side;
  double value;
};

struct ShapeSpec {
  std::vector<Sphere> spheres;
  std::vector<Cube> cubes;
};

/// Rasterises spheres and axis-aligned cubes by testing each voxel centre.
/// Overlaps keep the larger value. The label is "custom"; presets relabel.
Phantom spheres_cubes_3d(const Grid& grid, const ShapeSpec& spec);

/// Two touching spheres of radius 25 mm along x with contrast `contrast`.
ShapeSpec two_spheres_preset(double contrast);
/// Two 25 mm cubes offset diagonally in the x-y plane.
ShapeSpec two_cubes_preset(double contrast);

/// 20 log10(||f_true|| / ||f_hat - f_true||), capped at 300 dB.
double snr_db(const RVector& f_hat, const RVector& f_true);

inline constexpr double kSnrCapDb = 300.0;

}  // namespace difftomo
