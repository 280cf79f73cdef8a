// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "uqftlab/grid.hpp"
#include "uqftlab/kepler.hpp"
#include "uqftlab/packets.hpp"

namespace uqftlab {

/// Consecutive grid axes belonging to one particle.
struct ParticleAxes {
  double m = 1.0;  // kg
  std::size_t first = 0;
  std::size_t count = 1;
};
using Layout = std::vector<ParticleAxes>;

Layout single_particle(double m, std::size_t axes);
/// Particle 1 on the first half of the axes, particle 2 on the second.
Layout two_particles(const JacobiFrame& frame, std::size_t axes_per_particle);

/// omega = sqrt((mc/hbar)^2 + p^2), 1/m.
double omega(double m, double p2, const PhysicalConstants& k = {});

/// Multiplies momentum-space values by prod_k 2 omega_k(p_k), the
/// positive-shell value of (E_k + omega_k).
void b_map(WaveFunction& phi, const Layout& layout, const PhysicalConstants& k = {});

enum class Mode { UQFT, NonRelativistic };
const char* to_string(Mode m);

/// Phase m c^2 t / hbar reduced modulo 2 pi. Exposed so targets built
/// elsewhere carry bit-identical rest phases.
double rest_phase(double m, double t_seconds, const PhysicalConstants& k = {});

/// Free evolution by t seconds (time coordinate c t), per particle
///   UQFT:            exp(-i omega c t)
///   NonRelativistic: exp(-i (m c^2 + hbar^2 p^2 / (2m)) t / hbar).
/// A packet with carrier m v moves by -v t, i.e. U(t) f(tau) = f(tau - t).
/// Throws DomainError for position-space input.
void propagate(WaveFunction& wf, const Layout& layout, double t_seconds, Mode mode,
               const PhysicalConstants& k = {});
WaveFunction propagated(const WaveFunction& wf, const Layout& layout, double t_seconds,
                        Mode mode, const PhysicalConstants& k = {});

/// Argmax of |wf| refined by a parabola through ln|wf| along each axis.
/// Throws DomainError for momentum-space input or when the maximum is
/// shared by two separated sites.
std::vector<double> peak_track(const WaveFunction& wf);

/// sqrt of the position density of one particle, integrated over the
/// other axes. The result lives on that particle's axes only.
WaveFunction marginal(const WaveFunction& wf, const Layout& layout, std::size_t particle);

struct TwoParticleState {
  WaveFunction wf;  // momentum space over (p1, p2)
  JacobiFrame frame;
  PhysicalConstants constants;
  Layout layout;
};

/// f~(p1, p2) = 2 omega_1 2 omega_2 phi~_rel(k; mu) phi~_cm(P; m_T) with
/// k = (m2 p1 - m1 p2) / m_T and P = p1 + p2, the packets reduced to the
/// grid's axes per particle. Without the b_map factor the product has
/// unit norm; a sampled norm off by more than 1e-6 means the grid cannot
/// hold the packets and raises ConfigurationError.
TwoParticleState assemble_two_particle(const MinimumPacket& pk_rel, const MinimumPacket& pk_cm,
                                       const GridSpec& grid, const JacobiFrame& frame,
                                       const PhysicalConstants& k = {}, bool apply_b_map = true);

enum class RelativeMotion { Orbit, Free };

/// Two-body tracking experiment on a 2- or 4-axis joint grid. The relative
/// coordinate follows `traj`, or the straight line q_rel0 + qrel_dot tau
/// when motion is Free.
struct TrackingScenario {
  JacobiFrame frame;
  RelativeMotion motion = RelativeMotion::Orbit;
  ConicTrajectory traj;
  Vec3 q_rel0 = Vec3::Zero();
  Vec3 qrel_dot = Vec3::Zero();
  double sigma = 1.0;     // relative packet
  double sigma_o = 1.0;   // centre-of-mass packet
  Vec3 q_o0 = Vec3::Zero();    // centre of mass at tau = 0
  Vec3 qo_dot = Vec3::Zero();  // constant centre-of-mass velocity
  std::size_t points = 64;     // per axis
  std::size_t axes_per_particle = 2;
  double lambda = 2.0;
  double much_less_threshold = 1e-3;
  PhysicalConstants constants;
};

struct TrackingResult {
  double delta_t = 0.0;           // s
  double evolution_error = 0.0;   // relative L2
  double peak_error = 0.0;        // max of the two, m
  double peak_error_x1 = 0.0;
  double peak_error_x2 = 0.0;
  std::array<Vec3, 2> classical_peak{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> evolved_peak{Vec3::Zero(), Vec3::Zero()};
  bool compliant = true;
  GridSpec grid;
};

/// Builds f(tau0) on the classical trajectory, evolves it with the UQFT
/// propagator for delta_t and compares with f(tau0 - delta_t) built the
/// same way (b_map applied to both). Phases follow
///   (m_T c^2 + E_hat - E_o + d hbar^2/(4 mu sigma^2) + d hbar^2/(4 m_T sigma_o^2)) (tau - tau0) / hbar
/// with E_hat - E_o = m_T |qo_dot|^2 / 2 + mu |q_dot|^2 / 2 + V and d axes
/// per particle.
TrackingResult tracking_error(const TrackingScenario& sc, double tau0, double delta_t);

/// Relative coordinate and velocity of the scenario at tau.
TrajectoryState relative_state(const TrackingScenario& sc, double tau);

/// Per-particle grid chosen by tracking_error.
GridSpec tracking_grid(const TrackingScenario& sc, double tau0, double delta_t);

/// delta_t |q_dot(tau0)| / sigma: packet widths crossed by the relative
/// coordinate during delta_t.
double dimensionless_delta_t(const TrackingScenario& sc, double tau0, double delta_t);
double delta_t_from_dimensionless(const TrackingScenario& sc, double tau0, double d);

void write_tracking_csv(std::ostream& os, const std::vector<TrackingResult>& rows);

/// 64-byte header ("UQFTWF01", axis count, 4 point counts, 4 extents,
/// space tag) then little-endian (re, im) pairs. Origins and momentum
/// centres are not part of the format; read_snapshot returns grids
/// centred at zero.
void write_snapshot(std::ostream& os, const WaveFunction& wf);
WaveFunction read_snapshot(std::istream& is);

}  // namespace uqftlab
