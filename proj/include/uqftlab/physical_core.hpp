// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace uqftlab {

using Vec3 = Eigen::Vector3d;

/// SI values of the three constants used throughout. Scenarios that run at
/// desk scale substitute rescaled values; every formula reads them from here.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;  // J s
  double c = 2.99792458e8;        // m/s
  double G = 6.67430e-11;         // m^3 / (kg s^2)

  /// Throws DomainError unless all three are finite and positive.
  void validate() const;

  /// Compton wavenumber mc/hbar in 1/m.
  double compton_wavenumber(double m) const { return m * c / hbar; }
  /// sqrt(hbar G / c^3).
  double planck_length() const;
};

/// Conversions between SI and the natural units where time and energy are
/// measured as lengths and inverse lengths respectively.
namespace natural_units {
/// Time coordinate (m) from seconds: t = c * seconds.
inline double time_length(double seconds, const PhysicalConstants& k) { return k.c * seconds; }
inline double seconds(double time_length, const PhysicalConstants& k) { return time_length / k.c; }
/// Wavenumber (1/m) from momentum (kg m/s).
inline double wavenumber(double momentum, const PhysicalConstants& k) { return momentum / k.hbar; }
/// Energy in 1/m from Joules: E = energy / (hbar c).
inline double energy_wavenumber(double joules, const PhysicalConstants& k) {
  return joules / (k.hbar * k.c);
}
inline double joules(double energy_wavenumber, const PhysicalConstants& k) {
  return energy_wavenumber * k.hbar * k.c;
}
}  // namespace natural_units

struct LimitCheckConfig {
  double lambda = 2.0;                // support multiplier, > 1
  double much_less_threshold = 1e-3;  // "a << b" means a/b below this

  void validate() const;
};

struct LimitReport {
  double nonrel_ratio = 0.0;  // hbar^2 / (m sigma c)^2
  double limpak_ratio = 0.0;  // F(r_a) lambda sigma / (m c^2)
  double planck_ratio = 0.0;  // planck length / r_a
  bool compliant = false;
};

struct SigmaWindow {
  double sigma_min = 0.0;  // Compton wavelength hbar/(mc)
  double sigma_max = 0.0;  // m c^2 / F(r_a), +inf for free motion

  bool nonempty() const { return sigma_min < sigma_max; }
};

/// Packet spread that balances the spreading and tidal terms of the
/// residual for gravity: sigma = (hbar^2 r_a^2 / G)^(1/3) / m.
double gravity_sigma(double m, double r_a, const PhysicalConstants& k = {});

SigmaWindow sigma_window(double m, double force_at_closest, const PhysicalConstants& k = {});

/// Upper bound of |eps(x - q)| on the ball |x - q| <= lambda sigma:
/// F lambda sigma + hbar^2 lambda^2 / (8 m sigma^2).
double epsilon_bound(double force_at_closest, double lambda, double sigma, double m,
                     const PhysicalConstants& k = {});

LimitReport check_classical_limit(double m, double sigma, double force_at_closest, double r_a,
                                  const LimitCheckConfig& cfg = {},
                                  const PhysicalConstants& k = {});

/// |F| = G m1 m2 / r^2.
double gravity_force(double m1, double m2, double r, const PhysicalConstants& k = {});

}  // namespace uqftlab
