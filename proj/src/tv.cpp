#include "difftomo/tv.hpp"

#include <cmath>

#include "difftomo/operators.hpp"

namespace difftomo {

namespace {

// Position of n along `axis`.
inline int axis_index(std::size_t n, std::size_t stride, int extent) {
  return static_cast<int>((n / stride) % static_cast<std::size_t>(extent));
}

void project_unit_balls(RVector& p, int rank, Eigen::Index N) {
  for (Eigen::Index n = 0; n < N; ++n) {
    double s = 0.0;
    for (int d = 0; d < rank; ++d) s += p[d * N + n] * p[d * N + n];
    if (s > 1.0) {
      const double inv = 1.0 / std::sqrt(s);
      for (int d = 0; d < rank; ++d) p[d * N + n] *= inv;
    }
  }
}

}  // namespace

RVector forward_differences(const RVector& f, const Shape& shape) {
  const auto N = static_cast<Eigen::Index>(shape.size());
  detail::check_length(static_cast<std::size_t>(f.size()), shape.size(), "forward_differences");
  RVector out = RVector::Zero(shape.rank() * N);
  for (int d = 0; d < shape.rank(); ++d) {
    const std::size_t stride = shape.stride(d);
    const int extent = shape.dims[static_cast<std::size_t>(d)];
    for (Eigen::Index n = 0; n < N; ++n) {
      if (axis_index(static_cast<std::size_t>(n), stride, extent) + 1 < extent) {
        out[d * N + n] = f[n + static_cast<Eigen::Index>(stride)] - f[n];
      }
    }
  }
  return out;
}

RVector forward_differences_adjoint(const RVector& p, const Shape& shape) {
  const auto N = static_cast<Eigen::Index>(shape.size());
  detail::check_length(static_cast<std::size_t>(p.size()), shape.size() * static_cast<std::size_t>(shape.rank()),
                       "forward_differences_adjoint");
  RVector out = RVector::Zero(N);
  for (int d = 0; d < shape.rank(); ++d) {
    const std::size_t stride = shape.stride(d);
    const auto s = static_cast<Eigen::Index>(stride);
    const int extent = shape.dims[static_cast<std::size_t>(d)];
    for (Eigen::Index n = 0; n < N; ++n) {
      const int i = axis_index(static_cast<std::size_t>(n), stride, extent);
      if (i + 1 < extent) out[n] -= p[d * N + n];
      if (i > 0) out[n] += p[d * N + n - s];
    }
  }
  return out;
}

double tv_value(const RVector& f, const Shape& shape) {
  const RVector g = forward_differences(f, shape);
  const auto N = static_cast<Eigen::Index>(shape.size());
  double total = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    double s = 0.0;
    for (int d = 0; d < shape.rank(); ++d) s += g[d * N + n] * g[d * N + n];
    total += std::sqrt(s);
  }
  return total;
}

RVector clip_to_box(const RVector& z, Box box) { return z.cwiseMax(box.lower).cwiseMin(box.upper); }

RVector prox_tv_box(const RVector& z, const Shape& shape, double weight, Box box, int iterations,
                    TvProxState* warm, double tolerance) {
  detail::check_length(static_cast<std::size_t>(z.size()), shape.size(), "prox_tv_box");
  if (weight < 0.0) throw std::invalid_argument("prox weight must be nonnegative");
  if (box.lower > box.upper) throw std::invalid_argument("box lower bound exceeds upper bound");
  if (weight == 0.0) return clip_to_box(z, box);

  const auto N = static_cast<Eigen::Index>(shape.size());
  const int rank = shape.rank();
  const double step = 1.0 / (4.0 * rank * weight);  // 1 / (||D||^2 weight)
  RVector p_prev = (warm && warm->dual.size() == rank * N) ? warm->dual : RVector::Zero(rank * N);
  RVector r = p_prev;
  RVector x = clip_to_box(z - weight * forward_differences_adjoint(r, shape), box);
  double t = 1.0;
  for (int k = 0; k < iterations; ++k) {
    RVector p = r + step * forward_differences(x, shape);
    project_unit_balls(p, rank, N);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    r = p + ((t - 1.0) / t_next) * (p - p_prev);
    p_prev = std::move(p);
    t = t_next;
    RVector x_next = clip_to_box(z - weight * forward_differences_adjoint(r, shape), box);
    const double change = (x_next - x).norm();
    const double scale = x_next.norm();
    x = std::move(x_next);
    if (tolerance > 0.0 && change <= tolerance * std::max(scale, 1e-300)) break;
  }
  if (warm) warm->dual = p_prev;
  return clip_to_box(z - weight * forward_differences_adjoint(p_prev, shape), box);
}

}  // namespace difftomo
