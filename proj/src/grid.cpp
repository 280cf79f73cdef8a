// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <string>

#include "uqftlab/errors.hpp"

namespace uqftlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void check_axes(const std::vector<AxisSpec>& axes) {
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto& ax = axes[a];
    const std::string where = "axis " + std::to_string(a) + ": ";
    if (!power_of_two(ax.points) || ax.points < 16)
      throw ConfigurationError(where + "points must be a power of two >= 16");
    if (!(ax.extent > 0.0) || !std::isfinite(ax.extent))
      throw ConfigurationError(where + "extent must be positive");
    if (!std::isfinite(ax.origin) || !std::isfinite(ax.momentum_center))
      throw ConfigurationError(where + "origin and momentum centre must be finite");
  }
}

// One direction of the per-axis pass. `sign` is +1 for position -> momentum.
void axis_pass(std::vector<cplx>& v, const GridSpec& g, std::size_t a, int sign) {
  const AxisSpec& ax = g.axes[a];
  const std::size_t n = ax.points;
  const std::size_t inner = g.stride(a);
  const std::size_t outer = g.size() / (n * inner);

  // Centred-index factors: (-1)^j before, (-1)^k exp(sign i p_k x0) and
  // the measure after.
  const double measure = (sign > 0 ? ax.dx() : ax.dp()) / std::sqrt(kTwoPi);
  std::vector<cplx> post(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double kappa = (static_cast<double>(k) - static_cast<double>(n / 2)) * ax.dp();
    const double s = (k % 2 == 0) ? measure : -measure;
    post[k] = std::polar(s, sign * kappa * ax.origin);
  }

  auto* data = reinterpret_cast<fftw_complex*>(v.data());
  if (sign < 0) {
    // Inverse: the post factors are applied first, conjugated.
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < n; ++k) {
        const cplx f = post[k];
        cplx* row = v.data() + (o * n + k) * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] *= f;
      }
  } else {
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 1; j < n; j += 2) {
        cplx* row = v.data() + (o * n + j) * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] = -row[i];
      }
  }

  fftw_iodim dim{static_cast<int>(n), static_cast<int>(inner), static_cast<int>(inner)};
  fftw_iodim loops[2] = {
      {static_cast<int>(outer), static_cast<int>(n * inner), static_cast<int>(n * inner)},
      {static_cast<int>(inner), 1, 1}};
  fftw_plan plan = fftw_plan_guru_dft(1, &dim, 2, loops, data, data,
                                      sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  if (plan == nullptr) throw NumericalError("FFT planning failed", 0.0);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  if (sign > 0) {
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < n; ++k) {
        const cplx f = post[k];
        cplx* row = v.data() + (o * n + k) * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] *= f;
      }
  } else {
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 1; j < n; j += 2) {
        cplx* row = v.data() + (o * n + j) * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] = -row[i];
      }
  }
}

}  // namespace

double AxisSpec::dx() const { return extent / static_cast<double>(points); }
double AxisSpec::dp() const { return kTwoPi / extent; }

double AxisSpec::position(std::size_t j) const {
  return origin + (static_cast<double>(j) - static_cast<double>(points / 2)) * dx();
}

double AxisSpec::momentum(std::size_t k) const {
  return momentum_center + (static_cast<double>(k) - static_cast<double>(points / 2)) * dp();
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.points;
  return n;
}

std::size_t GridSpec::stride(std::size_t a) const {
  std::size_t s = 1;
  for (std::size_t b = a + 1; b < axes.size(); ++b) s *= axes[b].points;
  return s;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes) v *= a.dx();
  return v;
}

double GridSpec::momentum_cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes) v *= a.dp();
  return v;
}

GridSpec make_grid(std::vector<AxisSpec> axes) {
  const auto n = axes.size();
  if (n != 1 && n != 2 && n != 4)
    throw ConfigurationError("grid must have 1, 2 or 4 axes, got " + std::to_string(n));
  check_axes(axes);
  return GridSpec{std::move(axes)};
}

GridSpec make_analysis_grid(std::vector<AxisSpec> axes) {
  if (axes.empty() || axes.size() > 4)
    throw ConfigurationError("analysis grid must have 1 to 4 axes");
  check_axes(axes);
  return GridSpec{std::move(axes)};
}

WaveFunction::WaveFunction(GridSpec g, Space s)
    : grid(std::move(g)), space(s), values(grid.size(), cplx{0.0, 0.0}) {}

double WaveFunction::norm() const {
  double sum = 0.0;
  for (const auto& v : values) sum += std::norm(v);
  const double cell = space == Space::Position ? grid.cell_volume() : grid.momentum_cell_volume();
  return std::sqrt(sum * cell);
}

std::vector<std::size_t> WaveFunction::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(grid.dims());
  for (std::size_t a = grid.dims(); a-- > 0;) {
    idx[a] = flat % grid.axes[a].points;
    flat /= grid.axes[a].points;
  }
  return idx;
}

void transform_in_place(WaveFunction& wf) {
  const int sign = wf.space == Space::Position ? +1 : -1;
  for (std::size_t a = 0; a < wf.grid.dims(); ++a) axis_pass(wf.values, wf.grid, a, sign);
  wf.space = wf.space == Space::Position ? Space::Momentum : Space::Position;
}

WaveFunction transform(const WaveFunction& wf) {
  WaveFunction out = wf;
  transform_in_place(out);
  return out;
}

}  // namespace uqftlab
