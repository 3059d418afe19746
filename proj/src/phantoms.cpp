#include "difftomo/phantoms.hpp"

#include <algorithm>
#include <cmath>

namespace difftomo {

const std::vector<Ellipse>& shepp_logan_ellipses() {
  static const std::vector<Ellipse> table = {
      {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},   {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
      {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0}, {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
      {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
      {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},   {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
      {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},   {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
  };
  return table;
}

double shepp_logan_value(double x, double y) {
  double v = 0.0;
  for (const auto& e : shepp_logan_ellipses()) {
    const double phi = e.phi_deg * kPi / 180.0;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double dx = x - e.x0;
    const double dy = y - e.y0;
    const double u = (dx * c + dy * s) / e.a;
    const double w = (-dx * s + dy * c) / e.b;
    if (u * u + w * w <= 1.0) v += e.intensity;
  }
  return v;
}

std::array<double, 2> canonical_coordinates(int i0, int i1, int J) {
  const double half = 0.5 * J;
  const double mid = 0.5 * (J - 1);
  return {(i0 - mid) / half, (i1 - mid) / half};
}

Phantom shepp_logan(int J, double contrast) {
  if (J < 8) throw std::invalid_argument("Shepp-Logan phantom needs J >= 8");
  if (!(contrast > 0.0)) throw std::invalid_argument("phantom contrast must be positive");
  RVector img(static_cast<Eigen::Index>(J) * J);
  for (int i1 = 0; i1 < J; ++i1) {
    for (int i0 = 0; i0 < J; ++i0) {
      const auto xy = canonical_coordinates(i0, i1, J);
      img[i0 + static_cast<Eigen::Index>(J) * i1] = std::max(0.0, shepp_logan_value(xy[0], xy[1]));
    }
  }
  const double peak = img.maxCoeff();
  if (!(peak > 0.0)) throw std::invalid_argument("Shepp-Logan raster is empty at this resolution");
  img *= contrast / peak;
  // Guard against the rescale landing one ulp away from the requested maximum.
  for (Eigen::Index n = 0; n < img.size(); ++n) img[n] = std::min(img[n], contrast);
  img[static_cast<Eigen::Index>(std::max_element(img.data(), img.data() + img.size()) - img.data())] = contrast;
  return {std::move(img), "shepp-logan"};
}

Phantom spheres_cubes_3d(const Grid& grid, const ShapeSpec& spec) {
  if (grid.dim() != 3) throw std::invalid_argument("spheres_cubes_3d needs a 3D grid");
  for (const auto& s : spec.spheres) {
    if (!(s.radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  }
  for (const auto& c : spec.cubes) {
    if (!(c.side > 0.0)) throw std::invalid_argument("cube side must be positive");
  }
  RVector img = RVector::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Point r = grid.point(n);
    double v = 0.0;
    bool hit = false;
    for (const auto& s : spec.spheres) {
      if (distance(r, s.center) <= s.radius) {
        v = hit ? std::max(v, s.value) : s.value;
        hit = true;
      }
    }
    for (const auto& c : spec.cubes) {
      const double h = 0.5 * c.side;
      if (std::abs(r[0] - c.center[0]) <= h && std::abs(r[1] - c.center[1]) <= h &&
          std::abs(r[2] - c.center[2]) <= h) {
        v = hit ? std::max(v, c.value) : c.value;
        hit = true;
      }
    }
    img[static_cast<Eigen::Index>(n)] = v;
  }
  return {std::move(img), "custom"};
}

ShapeSpec two_spheres_preset(double contrast) {
  ShapeSpec s;
  s.spheres.push_back({{-0.025, 0.0, 0.0}, 0.025, contrast});
  s.spheres.push_back({{0.025, 0.0, 0.0}, 0.025, contrast});
  return s;
}

ShapeSpec two_cubes_preset(double contrast) {
  ShapeSpec s;
  s.cubes.push_back({{-0.0125, 0.0125, 0.0375}, 0.025, contrast});
  s.cubes.push_back({{0.0125, -0.0125, 0.0625}, 0.025, contrast});
  return s;
}

double snr_db(const RVector& f_hat, const RVector& f_true) {
  if (f_hat.size() != f_true.size()) throw std::invalid_argument("snr_db: length mismatch");
  const double signal = f_true.norm();
  if (!(signal > 0.0)) throw std::invalid_argument("snr_db: reference image is zero");
  const double error = (f_hat - f_true).norm();
  if (error == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 20.0 * std::log10(signal / error));
}

}  // namespace difftomo
