// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/physical_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "uqftlab/errors.hpp"

namespace uqftlab {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be finite and positive, got " +
                      std::to_string(v));
  }
}

}  // namespace

void PhysicalConstants::validate() const {
  require_positive(hbar, "hbar");
  require_positive(c, "c");
  require_positive(G, "G");
}

double PhysicalConstants::planck_length() const { return std::sqrt(hbar * G / (c * c * c)); }

void LimitCheckConfig::validate() const {
  if (!(lambda > 1.0)) throw DomainError("lambda must exceed 1");
  if (!(much_less_threshold > 0.0 && much_less_threshold < 1.0)) {
    throw DomainError("much_less_threshold must lie in (0, 1)");
  }
}

double gravity_sigma(double m, double r_a, const PhysicalConstants& k) {
  require_positive(m, "m");
  require_positive(r_a, "r_a");
  return std::cbrt(k.hbar * k.hbar * r_a * r_a / k.G) / m;
}

SigmaWindow sigma_window(double m, double force_at_closest, const PhysicalConstants& k) {
  require_positive(m, "m");
  if (!(force_at_closest >= 0.0)) throw DomainError("force must be non-negative");
  SigmaWindow w;
  w.sigma_min = k.hbar / (m * k.c);
  w.sigma_max = force_at_closest == 0.0 ? std::numeric_limits<double>::infinity()
                                        : m * k.c * k.c / force_at_closest;
  return w;
}

double epsilon_bound(double force_at_closest, double lambda, double sigma, double m,
                     const PhysicalConstants& k) {
  if (!(lambda > 1.0)) throw DomainError("lambda must exceed 1");
  require_positive(sigma, "sigma");
  require_positive(m, "m");
  const double tidal = force_at_closest * lambda * sigma;
  const double spreading = k.hbar * k.hbar * lambda * lambda / (8.0 * m * sigma * sigma);
  return tidal + spreading;
}

LimitReport check_classical_limit(double m, double sigma, double force_at_closest, double r_a,
                                  const LimitCheckConfig& cfg, const PhysicalConstants& k) {
  require_positive(m, "m");
  require_positive(sigma, "sigma");
  require_positive(r_a, "r_a");
  if (!(force_at_closest >= 0.0)) throw DomainError("force must be non-negative");
  cfg.validate();

  const double rest = m * k.c * k.c;
  LimitReport r;
  const double compton = k.hbar / (m * k.c * sigma);
  r.nonrel_ratio = compton * compton;
  r.limpak_ratio = force_at_closest * cfg.lambda * sigma / rest;
  r.planck_ratio = k.planck_length() / r_a;
  const double t = cfg.much_less_threshold;
  r.compliant = r.nonrel_ratio < t && r.limpak_ratio < t && r.planck_ratio < t;
  return r;
}

double gravity_force(double m1, double m2, double r, const PhysicalConstants& k) {
  require_positive(r, "r");
  return k.G * m1 * m2 / (r * r);
}

}  // namespace uqftlab
