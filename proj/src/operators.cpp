#include "difftomo/operators.hpp"

#include <string>

#include "difftomo/special_functions.hpp"
#include "fft.hpp"

namespace difftomo {

namespace detail {

void check_length(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(expected) +
                                ", got " + std::to_string(got));
  }
}

std::vector<std::size_t> all_rows(std::size_t count) {
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = i;
  return rows;
}

CVector rows_times(const RowMatrix& H, const CVector& x, const std::vector<std::size_t>& rows) {
  check_length(static_cast<std::size_t>(x.size()), static_cast<std::size_t>(H.cols()), "apply_H");
  CVector y(static_cast<Eigen::Index>(rows.size()));
  const auto count = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    y[i] = H.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)])).transpose().cwiseProduct(x).sum();
  }
  return y;
}

CVector rows_adjoint_times(const RowMatrix& H, const CVector& y, const std::vector<std::size_t>& rows) {
  check_length(static_cast<std::size_t>(y.size()), rows.size(), "apply_H_adjoint");
  const Eigen::Index N = H.cols();
  CVector x = CVector::Zero(N);
  constexpr Eigen::Index kBlock = 1024;
  const Eigen::Index blocks = (N + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index start = b * kBlock;
    const Eigen::Index len = std::min(kBlock, N - start);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.segment(start, len) +=
          H.row(static_cast<Eigen::Index>(rows[i])).segment(start, len).transpose().conjugate() *
          y[static_cast<Eigen::Index>(i)];
    }
  }
  return x;
}

}  // namespace detail

GreenConvolution::GreenConvolution(const Grid& grid, const PhysicsConfig& physics, double scale,
                                   bool include_self_term)
    : grid_(grid), padded_(2 * grid.side()) {
  const int d = grid.dim();
  const int P = padded_;
  padded_size_ = 1;
  for (int a = 0; a < d; ++a) padded_size_ *= static_cast<std::size_t>(P);
  plan_ = std::make_unique<FftPlan>(std::vector<int>(static_cast<std::size_t>(d), P));
  diagonal_ = include_self_term ? scale * self_term(grid, physics) : Complex(0.0);

  spectrum_.assign(padded_size_, Complex(0.0));
  const int J = grid.side();
  const double h = grid.pitch();
  const auto total = static_cast<std::ptrdiff_t>(padded_size_);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    std::array<int, 3> o{0, 0, 0};
    std::size_t rest = static_cast<std::size_t>(idx);
    bool unused = false;
    for (int a = 0; a < d; ++a) {
      const int i = static_cast<int>(rest % static_cast<std::size_t>(P));
      rest /= static_cast<std::size_t>(P);
      if (i == J) unused = true;
      o[a] = i < J ? i : i - P;
    }
    if (unused) continue;
    if (o[0] == 0 && o[1] == 0 && o[2] == 0) {
      spectrum_[static_cast<std::size_t>(idx)] = diagonal_;
      continue;
    }
    const Point r{o[0] * h, o[1] * h, o[2] * h};
    spectrum_[static_cast<std::size_t>(idx)] = scale * scalar_green(r, physics, d);
  }
  plan_->forward(spectrum_.data());
  const double inv = 1.0 / static_cast<double>(padded_size_);
  for (auto& v : spectrum_) v *= inv;
}

GreenConvolution::~GreenConvolution() = default;
GreenConvolution::GreenConvolution(GreenConvolution&&) noexcept = default;
GreenConvolution& GreenConvolution::operator=(GreenConvolution&&) noexcept = default;

CVector GreenConvolution::apply(const CVector& x) const {
  const std::size_t N = grid_.size();
  detail::check_length(static_cast<std::size_t>(x.size()), N, "apply_G");
  const auto P = static_cast<std::size_t>(padded_);
  const bool three = grid_.dim() == 3;
  std::vector<Complex> buf(padded_size_, Complex(0.0));
  for (std::size_t n = 0; n < N; ++n) {
    const auto i = grid_.indices(n);
    buf[static_cast<std::size_t>(i[0]) + P * (static_cast<std::size_t>(i[1]) + (three ? P * static_cast<std::size_t>(i[2]) : 0))] =
        x[static_cast<Eigen::Index>(n)];
  }
  plan_->forward(buf.data());
  for (std::size_t k = 0; k < padded_size_; ++k) buf[k] *= spectrum_[k];
  plan_->backward(buf.data());
  CVector y(static_cast<Eigen::Index>(N));
  for (std::size_t n = 0; n < N; ++n) {
    const auto i = grid_.indices(n);
    y[static_cast<Eigen::Index>(n)] =
        buf[static_cast<std::size_t>(i[0]) + P * (static_cast<std::size_t>(i[1]) + (three ? P * static_cast<std::size_t>(i[2]) : 0))];
  }
  return y;
}

CVector GreenConvolution::apply_adjoint(const CVector& x) const {
  return apply(x.conjugate()).conjugate();
}

ScatteringOperators::ScatteringOperators(const Grid& grid, const PhysicsConfig& physics,
                                         const std::vector<Point>& receivers, OperatorOptions options)
    : physics_(physics),
      coupling_(physics.k() * physics.k() * grid.cell_measure()),
      conv_(grid, physics, coupling_, options.include_self_term) {
  const std::size_t N = grid.size();
  const auto M = static_cast<Eigen::Index>(receivers.size());
  H_.resize(M, static_cast<Eigen::Index>(N));
#pragma omp parallel for schedule(static)
  for (Eigen::Index m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      H_(m, static_cast<Eigen::Index>(n)) =
          coupling_ * scalar_green(receivers[static_cast<std::size_t>(m)] - grid.point(n), physics, grid.dim());
    }
  }
}

CVector ScatteringOperators::apply_G(const CVector& x) const { return conv_.apply(x); }

CVector ScatteringOperators::apply_G_adjoint(const CVector& x) const { return conv_.apply_adjoint(x); }

CVector ScatteringOperators::apply_H(const CVector& x, const std::vector<std::size_t>& rows) const {
  return detail::rows_times(H_, x, rows);
}

CVector ScatteringOperators::apply_H(const CVector& x) const {
  return detail::rows_times(H_, x, detail::all_rows(receiver_count()));
}

CVector ScatteringOperators::apply_H_adjoint(const CVector& y, const std::vector<std::size_t>& rows) const {
  return detail::rows_adjoint_times(H_, y, rows);
}

CVector ScatteringOperators::apply_H_adjoint(const CVector& y) const {
  return detail::rows_adjoint_times(H_, y, detail::all_rows(receiver_count()));
}

CVector ScatteringOperators::apply_A(const RVector& f, const CVector& u) const {
  detail::check_length(static_cast<std::size_t>(f.size()), size(), "apply_A contrast");
  detail::check_length(static_cast<std::size_t>(u.size()), size(), "apply_A field");
  return u - conv_.apply(f.cast<Complex>().cwiseProduct(u));
}

CVector ScatteringOperators::apply_A_adjoint(const RVector& f, const CVector& v) const {
  detail::check_length(static_cast<std::size_t>(f.size()), size(), "apply_A_adjoint contrast");
  detail::check_length(static_cast<std::size_t>(v.size()), size(), "apply_A_adjoint field");
  return v - f.cast<Complex>().cwiseProduct(conv_.apply_adjoint(v));
}

}  // namespace difftomo
