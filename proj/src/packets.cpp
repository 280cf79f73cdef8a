// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/packets.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <ostream>

#include "uqftlab/errors.hpp"

namespace uqftlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

bool close(const Vec3& a, const Vec3& b, double tol, double scale) {
  return (a - b).norm() <= tol * std::max({a.norm(), b.norm(), scale});
}

struct AxisMoments {
  double norm2 = 0.0;  // squared norm of the 1D factor
  double mean_x = 0.0;
  double var_x = 0.0;
  double mean_p = 0.0;
  double var_p = 0.0;
  double edge = 0.0;
};

AxisMoments axis_moments(const MinimumPacket& pk, const AxisSpec& ax, int axis, double k0,
                         double q_axis) {
  const GridSpec g = make_grid({ax});
  WaveFunction wf(g, Space::Position);
  const double amp = std::pow(2.0 * kPi * pk.sigma * pk.sigma, -0.25);
  const double shift = k0 - ax.momentum_center;
  for (std::size_t j = 0; j < ax.points; ++j) {
    const double x = ax.position(j);
    const double u = x - q_axis;
    const double env = amp * std::exp(-u * u / (4.0 * pk.sigma * pk.sigma));
    wf.values[j] = std::polar(env, -shift * x + (axis == 0 ? pk.phi : 0.0));
  }

  AxisMoments m;
  const double dx = ax.dx();
  double s0 = 0.0, s1 = 0.0, peak = 0.0;
  for (std::size_t j = 0; j < ax.points; ++j) {
    const double w = std::norm(wf.values[j]);
    s0 += w;
    s1 += w * (ax.position(j) - ax.origin);
    peak = std::max(peak, w);
  }
  const double off_x = s1 / s0;
  double s2 = 0.0;
  for (std::size_t j = 0; j < ax.points; ++j) {
    const double d = ax.position(j) - ax.origin - off_x;
    s2 += d * d * std::norm(wf.values[j]);
  }
  m.norm2 = s0 * dx;
  m.mean_x = ax.origin + off_x;
  m.var_x = s2 / s0;
  m.edge = std::max(std::norm(wf.values.front()), std::norm(wf.values.back())) / peak;

  transform_in_place(wf);
  double t0 = 0.0, t1 = 0.0, tpeak = 0.0;
  for (std::size_t k = 0; k < ax.points; ++k) {
    const double w = std::norm(wf.values[k]);
    t0 += w;
    t1 += w * (ax.momentum(k) - ax.momentum_center);
    tpeak = std::max(tpeak, w);
  }
  const double off_p = t1 / t0;
  double t2 = 0.0;
  for (std::size_t k = 0; k < ax.points; ++k) {
    const double d = ax.momentum(k) - ax.momentum_center - off_p;
    t2 += d * d * std::norm(wf.values[k]);
  }
  m.mean_p = ax.momentum_center + off_p;
  m.var_p = t2 / t0;
  m.edge = std::max(m.edge,
                    std::max(std::norm(wf.values.front()), std::norm(wf.values.back())) / tpeak);
  return m;
}

// Pieces of the residual multiplier that only depend on x.
struct CoreSample {
  cplx residual;
  double epsilon;
};

CoreSample residual_at(const MinimumPacket& pk, double phi_dot, const Vec3& F, const Vec3& x,
                       const PhysicalConstants& k) {
  const double s2 = pk.sigma * pk.sigma;
  const Vec3 u = x - pk.q;
  const Vec3 qdd = F / pk.m;
  const Vec3 k0 = pk.carrier(k);

  // d/dtau psi / psi.
  const cplx dtau = u.dot(pk.q_dot) / (2.0 * s2) - kI * (pk.m / k.hbar) * qdd.dot(x) + kI * phi_dot;
  // Laplacian psi / psi: -3/(2 sigma^2) + sum (-u/(2 sigma^2) - i k0)^2.
  cplx lap = -3.0 / (2.0 * s2);
  for (int a = 0; a < 3; ++a) {
    const cplx g = -u[a] / (2.0 * s2) - kI * k0[a];
    lap += g * g;
  }
  const double mc2 = pk.m * k.c * k.c;
  const double eps = epsilon_field(F, x, pk.q, pk.m, pk.sigma, k);
  const cplx r = -kI * k.hbar * dtau - mc2 + (k.hbar * k.hbar / (2.0 * pk.m)) * lap + eps;
  return {r, eps};
}

template <class Fn>
void for_each_core_point(const MinimumPacket& pk, const ResidualConfig& cfg, Fn&& fn) {
  if (!(cfg.lambda > 1.0)) throw DomainError("lambda must exceed 1");
  if (cfg.points < 3 || cfg.points % 2 == 0)
    throw ConfigurationError("residual cube needs an odd number of points >= 3");
  const double r = cfg.lambda * pk.sigma;
  const double h = 2.0 * r / static_cast<double>(cfg.points - 1);
  const auto n = static_cast<long>(cfg.points);
  const long c = n / 2;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long l = 0; l < n; ++l) {
        const Vec3 u{static_cast<double>(i - c) * h, static_cast<double>(j - c) * h,
                     static_cast<double>(l - c) * h};
        // Small slack so the axis end points at exactly lambda sigma count.
        if (u.norm() > r * (1.0 + 1e-12)) continue;
        fn(Vec3(pk.q + u));
      }
}

}  // namespace

void MinimumPacket::validate() const {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("packet mass must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("packet sigma must be positive");
  if (!q.allFinite() || !q_dot.allFinite() || !std::isfinite(phi))
    throw DomainError("packet position, velocity and phase must be finite");
}

cplx eval_packet(const MinimumPacket& pk, const Vec3& x, const PhysicalConstants& k) {
  const double s2 = pk.sigma * pk.sigma;
  const double amp = std::pow(2.0 * kPi * s2, -0.75);
  const double env = amp * std::exp(-(x - pk.q).squaredNorm() / (4.0 * s2));
  return std::polar(env, -pk.carrier(k).dot(x) + pk.phi);
}

cplx eval_packet_momentum(const MinimumPacket& pk, const Vec3& p, const PhysicalConstants& k) {
  const double s2 = pk.sigma * pk.sigma;
  const Vec3 d = p - pk.carrier(k);
  const double amp = std::pow(2.0 * s2 / kPi, 0.75);
  return std::polar(amp * std::exp(-s2 * d.squaredNorm()), d.dot(pk.q) + pk.phi);
}

WaveFunction sample_packet(const MinimumPacket& pk, const GridSpec& grid, Space space,
                           const PhysicalConstants& k) {
  pk.validate();
  const std::size_t d = grid.dims();
  if (d > 3) throw ConfigurationError("single packets are sampled on at most 3 axes");
  const Vec3 k0 = pk.carrier(k);
  const double s2 = pk.sigma * pk.sigma;
  const double dd = static_cast<double>(d);
  WaveFunction wf(grid, space);
  for (std::size_t f = 0; f < wf.values.size(); ++f) {
    const auto idx = wf.unflatten(f);
    if (space == Space::Position) {
      double e = 0.0, ph = pk.phi;
      for (std::size_t a = 0; a < d; ++a) {
        const auto& ax = grid.axes[a];
        const double x = ax.position(idx[a]);
        const double u = x - pk.q[a];
        e += u * u;
        ph -= (k0[a] - ax.momentum_center) * x;
      }
      wf.values[f] = std::polar(std::pow(2.0 * kPi * s2, -dd / 4.0) * std::exp(-e / (4.0 * s2)), ph);
    } else {
      double e = 0.0, ph = pk.phi;
      for (std::size_t a = 0; a < d; ++a) {
        const double dp = grid.axes[a].momentum(idx[a]) - k0[a];
        e += dp * dp;
        ph += dp * pk.q[a];
      }
      wf.values[f] = std::polar(std::pow(2.0 * s2 / kPi, dd / 4.0) * std::exp(-s2 * e), ph);
    }
  }
  return wf;
}

GridSpec packet_grid(const MinimumPacket& pk, std::size_t dims, std::size_t points,
                     double half_width, const PhysicalConstants& k) {
  pk.validate();
  if (dims < 1 || dims > 3) throw ConfigurationError("packet grids have 1 to 3 axes");
  const Vec3 k0 = pk.carrier(k);
  std::vector<AxisSpec> axes;
  for (std::size_t a = 0; a < dims; ++a)
    axes.push_back(AxisSpec{points, 2.0 * half_width * pk.sigma, pk.q[a], k0[a]});
  return make_analysis_grid(std::move(axes));
}

PacketMoments packet_moments(const MinimumPacket& pk, const GridSpec& grid,
                             const PhysicalConstants& k, double resolution_threshold) {
  pk.validate();
  const std::size_t d = grid.dims();
  if (d < 1 || d > 3) throw ConfigurationError("packet moments need a grid of 1 to 3 axes");
  const Vec3 k0 = pk.carrier(k);

  PacketMoments out;
  out.norm = 1.0;
  double vx = 0.0, vp = 0.0;
  for (int a = 0; a < 3; ++a) {
    AxisSpec ax = grid.axes[std::min<std::size_t>(a, d - 1)];
    if (static_cast<std::size_t>(a) >= d) {
      const auto last = static_cast<int>(d - 1);
      ax.origin += pk.q[a] - pk.q[last];
      ax.momentum_center += k0[a] - k0[last];
    }
    const AxisMoments m = axis_moments(pk, ax, a, k0[a], pk.q[a]);
    out.norm *= m.norm2;
    out.mean_X[a] = m.mean_x;
    out.mean_P[a] = k.hbar * m.mean_p;
    vx += m.var_x;
    vp += m.var_p;
    out.achieved_error = std::max(out.achieved_error, m.edge);
  }
  out.norm = std::sqrt(out.norm);
  out.sigma_X = std::sqrt(vx / 3.0);
  out.sigma_P = k.hbar * std::sqrt(vp / 3.0);
  out.under_resolved = out.achieved_error > resolution_threshold;
  return out;
}

double phase_rate(const PhaseSchedule& ps, const PhysicalConstants& k) {
  if (!(ps.m > 0.0) || !(ps.sigma > 0.0)) throw DomainError("schedule needs positive m and sigma");
  if (ps.dims < 1 || ps.dims > 3) throw DomainError("schedule dims must be 1, 2 or 3");
  const double spread = ps.dims * k.hbar * k.hbar / (4.0 * ps.m * ps.sigma * ps.sigma);
  return (ps.m * k.c * k.c + (ps.E_hat - ps.E_o) + spread) / k.hbar;
}

double epsilon_field(const Vec3& F, const Vec3& x, const Vec3& q, double m, double sigma,
                     const PhysicalConstants& k) {
  if (!(m > 0.0) || !(sigma > 0.0)) throw DomainError("epsilon needs positive m and sigma");
  const Vec3 u = x - q;
  const double s4 = sigma * sigma * sigma * sigma;
  return F.dot(u) - k.hbar * k.hbar / (2.0 * m) * u.squaredNorm() / (4.0 * s4);
}

ResidualReport lemma_residual(const MinimumPacket& pk, const PhaseSchedule& ps, const Vec3& F,
                              double tau, const ResidualConfig& cfg,
                              const PhysicalConstants& k) {
  pk.validate();
  if (!close(ps.m, pk.m, 1e-12) || !close(ps.sigma, pk.sigma, 1e-12))
    throw DomainError("phase schedule and packet disagree on m or sigma");
  const double phi_dot = phase_rate(ps, k);
  const double mc2 = pk.m * k.c * k.c;

  ResidualReport rep;
  rep.lambda_used = cfg.lambda;
  rep.sigma = pk.sigma;
  rep.m = pk.m;
  rep.tau = tau;
  double max_eps = 0.0;
  for_each_core_point(pk, cfg, [&](const Vec3& x) {
    const auto s = residual_at(pk, phi_dot, F, x, k);
    rep.identity_residual = std::max(rep.identity_residual, std::abs(s.residual) / mc2);
    max_eps = std::max(max_eps, std::abs(s.epsilon));
  });
  rep.core_epsilon_ratio = max_eps / mc2;
  rep.epsilon_to_spreading =
      max_eps / (3.0 * k.hbar * k.hbar / (4.0 * pk.m * pk.sigma * pk.sigma));
  return rep;
}

PhaseSchedule relative_schedule(const ConicTrajectory& traj, const JacobiFrame& frame,
                                double sigma) {
  return PhaseSchedule{frame.mu, sigma, traj.energy_offset, 0.0, 3};
}

MinimumPacket packet_on_trajectory(const ConicTrajectory& traj, const JacobiFrame& frame,
                                   const PhaseSchedule& ps, double tau,
                                   const PhysicalConstants& k) {
  const auto st = trajectory_state(traj, frame, tau);
  return MinimumPacket{ps.m, ps.sigma, st.q, st.q_dot, phase_rate(ps, k) * tau};
}

ResidualReport lemma_residual(const MinimumPacket& pk, const PhaseSchedule& ps,
                              const ConicTrajectory& traj, const JacobiFrame& frame, double tau,
                              const ResidualConfig& cfg, const PhysicalConstants& k) {
  const auto st = trajectory_state(traj, frame, tau);
  if (!close(pk.m, frame.mu, 1e-12))
    throw DomainError("relative packet must carry the reduced mass");
  if (!close(pk.q, st.q, cfg.position_tol, pk.sigma) ||
      !close(pk.q_dot, st.q_dot, cfg.position_tol, 0.0))
    throw DomainError("packet is not on the trajectory at this tau");
  if (!close(pk.phi, phase_rate(ps, k) * tau, 1e-12))
    throw DomainError("packet phase does not follow the phase schedule");
  return lemma_residual(pk, ps, gravity_force_vector(frame, st.q, k), tau, cfg, k);
}

double lemma_derivative_check(const MinimumPacket& pk, const ConicTrajectory& traj,
                              const JacobiFrame& frame, double tau, double h,
                              const ResidualConfig& cfg, const PhysicalConstants& k) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const auto lo = trajectory_state(traj, frame, tau - h);
  const auto hi = trajectory_state(traj, frame, tau + h);
  const Vec3 F = gravity_force_vector(frame, pk.q, k);
  const double s2 = pk.sigma * pk.sigma;

  auto exponent = [&](const TrajectoryState& st, const Vec3& x) {
    return cplx{-(x - st.q).squaredNorm() / (4.0 * s2), -pk.m * st.q_dot.dot(x) / k.hbar};
  };

  double worst = 0.0, scale = 0.0;
  for_each_core_point(pk, cfg, [&](const Vec3& x) {
    const Vec3 u = x - pk.q;
    const cplx an{u.dot(pk.q_dot) / (2.0 * s2), -F.dot(x) / k.hbar};
    const cplx fd = (exponent(hi, x) - exponent(lo, x)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - an));
    scale = std::max(scale, std::abs(an));
  });
  return scale > 0.0 ? worst / scale : worst;
}

void write_residual_json(std::ostream& os, const ResidualReport& r) {
  nlohmann::ordered_json j;
  j["identity_residual"] = r.identity_residual;
  j["core_epsilon_ratio"] = r.core_epsilon_ratio;
  j["lambda"] = r.lambda_used;
  j["sigma"] = r.sigma;
  j["m"] = r.m;
  j["tau"] = r.tau;
  os << j.dump(2) << '\n';
}

}  // namespace uqftlab
