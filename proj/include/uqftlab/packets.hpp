// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <iosfwd>

#include "uqftlab/grid.hpp"
#include "uqftlab/kepler.hpp"
#include "uqftlab/physical_core.hpp"

namespace uqftlab {

/// Minimum-uncertainty Gaussian
///
///   psi(x) = (2 pi sigma^2)^(-3/4)
///            exp(-(x - q)^2 / (4 sigma^2) - i m q_dot . x / hbar + i phi)
///
/// with momentum-space form (same Fourier convention as transform())
///
///   psi~(p) = (2 sigma^2 / pi)^(3/4)
///             exp(-sigma^2 (p - k0)^2 + i (p - k0) . q + i phi),  k0 = m q_dot / hbar.
struct MinimumPacket {
  double m = 1.0;      // kg
  double sigma = 1.0;  // m
  Vec3 q = Vec3::Zero();
  Vec3 q_dot = Vec3::Zero();
  double phi = 0.0;

  void validate() const;
  /// Carrier wavenumber m q_dot / hbar.
  Vec3 carrier(const PhysicalConstants& k = {}) const { return m * q_dot / k.hbar; }
};

cplx eval_packet(const MinimumPacket& pk, const Vec3& x, const PhysicalConstants& k = {});
cplx eval_packet_momentum(const MinimumPacket& pk, const Vec3& p, const PhysicalConstants& k = {});

/// Samples the packet's factor along the grid's axes (axis a is Cartesian
/// component a; a grid of d < 3 axes gets the normalized d-dimensional
/// factor). Position samples are envelopes relative to the grid's momentum
/// centres, see GridSpec.
WaveFunction sample_packet(const MinimumPacket& pk, const GridSpec& grid, Space space,
                           const PhysicalConstants& k = {});

/// Grid of `dims` axes centred on the packet in both spaces with
/// `half_width` sigmas on either side of q.
GridSpec packet_grid(const MinimumPacket& pk, std::size_t dims, std::size_t points,
                     double half_width, const PhysicalConstants& k = {});

struct PacketMoments {
  double norm = 0.0;
  Vec3 mean_X = Vec3::Zero();  // m
  Vec3 mean_P = Vec3::Zero();  // kg m/s
  double sigma_X = 0.0;        // rms over the three axes, m
  double sigma_P = 0.0;        // kg m/s
  /// Largest edge density relative to the peak, in either space.
  double achieved_error = 0.0;
  bool under_resolved = false;
};

/// Moments from grid quadrature. The packet factorizes, so each Cartesian
/// axis is analysed on a 1D grid taken from the corresponding grid axis;
/// axes beyond the grid's count reuse the last axis layout at the same
/// offset from the packet. Momentum moments come from transform().
PacketMoments packet_moments(const MinimumPacket& pk, const GridSpec& grid,
                             const PhysicalConstants& k = {},
                             double resolution_threshold = 1e-12);

/// Phase schedule of a packet moving on a classical trajectory:
///   d phi / d tau = (m c^2 + E_hat - E_o + dims hbar^2 / (4 m sigma^2)) / hbar.
/// dims = 1 is the one-axis value of the Laplacian's constant term; the
/// three-dimensional packet needs dims = 3 for the identity to close.
struct PhaseSchedule {
  double m = 1.0;      // kg
  double sigma = 1.0;  // m
  double E_hat = 0.0;  // J
  double E_o = 0.0;    // J
  int dims = 3;
};

/// rad/s.
double phase_rate(const PhaseSchedule& ps, const PhysicalConstants& k = {});

/// eps(x - q) = F.(x - q) - hbar^2 / (2 m) |x - q|^2 / (4 sigma^4), in J.
double epsilon_field(const Vec3& F, const Vec3& x, const Vec3& q, double m, double sigma,
                     const PhysicalConstants& k = {});

struct ResidualConfig {
  double lambda = 2.0;          // core radius in sigmas
  std::size_t points = 33;      // per axis of the cube around q, odd
  double position_tol = 1e-9;   // relative match of packet and trajectory
};

struct ResidualReport {
  double identity_residual = 0.0;
  double core_epsilon_ratio = 0.0;  // max |eps| / (m c^2) on the core
  double lambda_used = 0.0;
  double sigma = 0.0;
  double m = 0.0;
  double tau = 0.0;
  /// max |eps| over the spreading energy 3 hbar^2 / (4 m sigma^2).
  /// Diagnostic only: it is not small near the edge of the core.
  double epsilon_to_spreading = 0.0;
};

/// Residual of
///   (-i hbar d/dtau - m c^2 + hbar^2/(2m) Laplacian + eps) psi = 0
/// for a packet driven by a constant force F (q_ddot = F / m), with the
/// tau derivative and Laplacian taken analytically. Sampled on the ball
/// |x - q| <= lambda sigma and normalized by m c^2 |psi|.
ResidualReport lemma_residual(const MinimumPacket& pk, const PhaseSchedule& ps, const Vec3& F,
                              double tau, const ResidualConfig& cfg = {},
                              const PhysicalConstants& k = {});

/// Same for the relative packet of a two-body orbit: checks that pk sits
/// on trajectory_state(traj, frame, tau) with mass mu and phase
/// phase_rate * tau, then uses the gravitational force at q. Throws
/// DomainError when the packet and trajectory disagree.
ResidualReport lemma_residual(const MinimumPacket& pk, const PhaseSchedule& ps,
                              const ConicTrajectory& traj, const JacobiFrame& frame, double tau,
                              const ResidualConfig& cfg = {}, const PhysicalConstants& k = {});

/// Packet on the trajectory at tau with the schedule's phase.
MinimumPacket packet_on_trajectory(const ConicTrajectory& traj, const JacobiFrame& frame,
                                   const PhaseSchedule& ps, double tau,
                                   const PhysicalConstants& k = {});

/// Schedule for the relative packet: m = mu, E_hat - E_o = traj.energy_offset.
PhaseSchedule relative_schedule(const ConicTrajectory& traj, const JacobiFrame& frame,
                                double sigma);

/// Largest relative difference on the core between the analytic tau
/// derivative of the packet's non-rest exponent and its central difference
/// with step h along the trajectory.
double lemma_derivative_check(const MinimumPacket& pk, const ConicTrajectory& traj,
                              const JacobiFrame& frame, double tau, double h,
                              const ResidualConfig& cfg = {}, const PhysicalConstants& k = {});

/// {identity_residual, core_epsilon_ratio, lambda, sigma, m, tau}.
void write_residual_json(std::ostream& os, const ResidualReport& r);

}  // namespace uqftlab
