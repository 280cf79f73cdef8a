// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace uqftlab {

using cplx = std::complex<double>;

/// One grid axis. Positions are x_j = origin + (j - N/2) dx and momenta
/// p_k = momentum_center + (k - N/2) dp with dx = extent / N and
/// dp = 2 pi / extent.
struct AxisSpec {
  std::size_t points = 64;
  double extent = 1.0;           // m
  double origin = 0.0;           // m, grid centre
  double momentum_center = 0.0;  // 1/m, carrier removed from position samples

  double dx() const;
  double dp() const;
  double position(std::size_t j) const;
  double momentum(std::size_t k) const;
};

/// Row-major product grid of 1, 2 or 4 axes.
///
/// Position-space samples hold the envelope g(x) = exp(+i p_c . x) psi(x)
/// where p_c collects the per-axis momentum centres; momentum-space
/// samples hold psi~(p) itself. With p_c near the packet momentum the
/// envelope is slowly varying even when psi is not.
struct GridSpec {
  std::vector<AxisSpec> axes;

  std::size_t dims() const { return axes.size(); }
  std::size_t size() const;
  /// Index stride of axis `a` in the row-major layout.
  std::size_t stride(std::size_t a) const;
  double cell_volume() const;           // prod dx
  double momentum_cell_volume() const;  // prod dp
};

/// Validates and returns the grid. Throws ConfigurationError for an axis
/// count other than 1, 2 or 4, points that are not a power of two or are
/// below 16, or a non-positive extent.
GridSpec make_grid(std::vector<AxisSpec> axes);

/// Like make_grid but also accepts 3 axes; used for single-packet analyses.
GridSpec make_analysis_grid(std::vector<AxisSpec> axes);

enum class Space { Position, Momentum };

/// Samples of a function on a grid. Values approximate the continuum
/// function so that norm() approximates its L2 norm.
struct WaveFunction {
  GridSpec grid;
  Space space = Space::Position;
  std::vector<cplx> values;

  WaveFunction() = default;
  WaveFunction(GridSpec g, Space s);

  double norm() const;
  /// Multi-index of a flat index.
  std::vector<std::size_t> unflatten(std::size_t flat) const;
};

/// Unitary transform to the other space with
///   psi~(p) = (2 pi)^(-d/2) int exp(+i p.x) psi(x) dx,
///   psi(x)  = (2 pi)^(-d/2) int exp(-i p.x) psi~(p) dp,
/// realized as separable FFT passes. The discrete map preserves norm()
/// exactly up to roundoff.
WaveFunction transform(const WaveFunction& wf);
void transform_in_place(WaveFunction& wf);

}  // namespace uqftlab
