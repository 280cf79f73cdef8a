// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <numbers>
#include <span>
#include <utility>

#include "uqftlab/physical_core.hpp"

namespace uqftlab {

/// Masses of a two-body system and their Jacobi combinations.
struct JacobiFrame {
  double m1 = 0.0;
  double m2 = 0.0;
  double mu = 0.0;   // m1 m2 / (m1 + m2)
  double m_T = 0.0;  // m1 + m2
};

JacobiFrame reduced_total_mass(double m1, double m2);

struct JacobiPair {
  Vec3 q;    // x1 - x2
  Vec3 q_o;  // centre of mass
};

struct ParticlePair {
  Vec3 x1;
  Vec3 x2;
};

JacobiPair jacobi_forward(const Vec3& x1, const Vec3& x2, const JacobiFrame& frame);
ParticlePair jacobi_inverse(const Vec3& q, const Vec3& q_o, const JacobiFrame& frame);

enum class Regime { Scattered, Bound, Transition };

const char* to_string(Regime r);

/// Choice of the parabolic-orbit size parameter. `Consistent` is
/// a = L^2 / (2 G m_T), the value that makes r(theta) solve the radial
/// equation; `Literal` reproduces a = L / (2 m_T G) for comparison only.
enum class TransitionForm { Consistent, Literal };

/// Relative orbit of the 1/r^2 two-body problem in the plane z = 0 with
/// the force centre at the origin:
///
///   Scattered  r = b^2 / (a - sqrt(a^2 + b^2) cos(theta))
///   Bound      r = b^2 / (a - sqrt(a^2 - b^2) cos(theta))
///   Transition r = 2a / (1 - cos(theta))
///
/// All three are r = P / (1 - e cos(theta)) with semi-latus rectum P and
/// eccentricity e; closest approach is at theta = pi.
struct ConicTrajectory {
  Regime regime = Regime::Bound;
  double a = 0.0;              // m
  double b = 0.0;              // m (unused for Transition)
  double L = 0.0;              // r^2 dtheta/dtau, m^2/s
  double energy_offset = 0.0;  // E_hat - E_o, J
  double theta_lo = 0.0;
  double theta_hi = 2.0 * std::numbers::pi;
  double theta0 = std::numbers::pi;  // theta at tau = 0

  double semi_latus() const;
  double eccentricity() const;
  double closest_approach() const;
  /// r(theta) without range checks. Non-positive for directions the orbit
  /// never reaches.
  double radius_unchecked(double theta) const;
};

/// Orbit with E_hat - E_o = delta_e (J) and angular momentum per reduced
/// mass `L`. delta_e > 0 scatters, < 0 binds, == 0 is the parabolic
/// transition.
ConicTrajectory orbit_from_energy(const JacobiFrame& frame, double delta_e, double L,
                                  const PhysicalConstants& k = {},
                                  double theta0 = std::numbers::pi,
                                  TransitionForm form = TransitionForm::Consistent);

/// Orbit from its geometric parameters; `b` is ignored for Transition.
/// L is taken positive (counter-clockwise motion).
ConicTrajectory orbit_from_axes(const JacobiFrame& frame, Regime regime, double a, double b,
                                const PhysicalConstants& k = {},
                                double theta0 = std::numbers::pi);

/// a = L / (2 m_T G) as printed for the parabolic case. Not a length;
/// kept so reports can show both values side by side.
double transition_a_literal(const JacobiFrame& frame, double L, const PhysicalConstants& k = {});

/// E_hat - E_o recovered from the geometry: -+ G m1 m2 / (2a), or 0.
double energy_offset_from_axes(const JacobiFrame& frame, Regime regime, double a,
                               const PhysicalConstants& k = {});

/// Radius on the orbit. Throws DomainError outside the regime's angular
/// range or where the denominator is not positive.
double conic_radius(const ConicTrajectory& traj, double theta);

/// Newtonian time tau(theta) = (1/L) int_{theta0}^{theta} r(s)^2 ds.
/// Bound orbits accept any angle (winding number included).
double tau_of_theta(const ConicTrajectory& traj, double theta);

/// Inverse of tau_of_theta. Bound orbits are periodic so any tau is valid;
/// open orbits throw DomainError when tau is not reached before the
/// asymptote.
double theta_of_tau(const ConicTrajectory& traj, double tau);

struct TrajectoryState {
  double tau = 0.0;
  Vec3 q = Vec3::Zero();
  Vec3 q_dot = Vec3::Zero();
  double r = 0.0;
  double theta = 0.0;
  double r_dot = 0.0;
  double theta_dot = 0.0;
};

TrajectoryState trajectory_state(const ConicTrajectory& traj, const JacobiFrame& frame,
                                 double tau);

/// V(r) = -G m1 m2 / r.
double potential(const JacobiFrame& frame, double r, const PhysicalConstants& k = {});

/// Force on particle 1, F = -G m1 m2 / r^2 u_r with q = x1 - x2.
Vec3 gravity_force_vector(const JacobiFrame& frame, const Vec3& q, const PhysicalConstants& k = {});

/// Two-body energy from the individual velocities and relative position.
double total_energy(const JacobiFrame& frame, const Vec3& q1_dot, const Vec3& q2_dot,
                    const Vec3& q_rel, double e_o, const PhysicalConstants& k = {});

/// Same quantity from Jacobi velocities: centre-of-mass + relative + V + E_o.
double total_energy_jacobi(const JacobiFrame& frame, const Vec3& qo_dot, const Vec3& q_dot,
                           const Vec3& q_rel, double e_o, const PhysicalConstants& k = {});

/// mu |q_dot|^2 / 2 + V(r) for a relative state.
double relative_energy(const JacobiFrame& frame, const TrajectoryState& s,
                       const PhysicalConstants& k = {});

/// Writes `tau,theta,r,qx,qy,qdotx,qdoty,energy,L` rows (17 significant
/// digits), energy being mu |q_dot|^2 / 2 + V.
void write_trajectory_csv(std::ostream& os, const ConicTrajectory& traj,
                          const JacobiFrame& frame, std::span<const double> taus,
                          const PhysicalConstants& k = {});

}  // namespace uqftlab
