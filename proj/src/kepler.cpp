// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/kepler.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

#include "uqftlab/errors.hpp"

namespace uqftlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Absolute tolerance is applied in units of the orbit's natural time scale
// P^2/|L|, the relative one to the integral itself.
constexpr double kQuadAbsTol = 1e-12;
constexpr double kQuadRelTol = 1e-10;
// Quadrature chunks never span more than this angle.
constexpr double kQuadChunk = kPi / 4.0;

double time_scale(const ConicTrajectory& t) {
  const double p = t.semi_latus();
  return p * p / std::abs(t.L);
}

bool inside_open_range(const ConicTrajectory& t, double theta) {
  if (t.regime == Regime::Bound) return std::isfinite(theta);
  return theta > t.theta_lo && theta < t.theta_hi;
}

double integrate_r2(const ConicTrajectory& t, double from, double to) {
  using boost::math::quadrature::gauss_kronrod;
  auto r2 = [&t](double s) {
    const double r = t.radius_unchecked(s);
    return r * r;
  };
  const double span = to - from;
  const int chunks = std::max(1, static_cast<int>(std::ceil(std::abs(span) / kQuadChunk)));
  double total = 0.0;
  double total_err = 0.0;
  for (int i = 0; i < chunks; ++i) {
    const double lo = from + span * i / chunks;
    const double hi = from + span * (i + 1) / chunks;
    // Integrate on [-1, 1] explicitly: the library's error estimate is only
    // in consistent units on that interval.
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    auto mapped = [&](double x) { return r2(mid + half * x); };
    double err = 0.0;
    total += half * gauss_kronrod<double, 31>::integrate(mapped, -1.0, 1.0, 15, 1e-13, &err);
    total_err += std::abs(half) * err;
  }
  const double scale = time_scale(t) * std::abs(t.L);
  if (total_err > std::max(kQuadAbsTol * scale, kQuadRelTol * std::abs(total))) {
    throw NumericalError("tau(theta) quadrature did not converge", total_err);
  }
  return total;
}

}  // namespace

JacobiFrame reduced_total_mass(double m1, double m2) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw DomainError("masses must be positive");
  return JacobiFrame{m1, m2, m1 * m2 / (m1 + m2), m1 + m2};
}

JacobiPair jacobi_forward(const Vec3& x1, const Vec3& x2, const JacobiFrame& f) {
  return JacobiPair{x1 - x2, (f.m1 * x1 + f.m2 * x2) / (f.m1 + f.m2)};
}

ParticlePair jacobi_inverse(const Vec3& q, const Vec3& q_o, const JacobiFrame& f) {
  return ParticlePair{q_o + (f.m2 / f.m_T) * q, q_o - (f.m1 / f.m_T) * q};
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Scattered:
      return "scattered";
    case Regime::Bound:
      return "bound";
    case Regime::Transition:
      return "transition";
  }
  return "?";
}

double ConicTrajectory::semi_latus() const {
  return regime == Regime::Transition ? 2.0 * a : b * b / a;
}

double ConicTrajectory::eccentricity() const {
  switch (regime) {
    case Regime::Scattered:
      return std::sqrt(a * a + b * b) / a;
    case Regime::Bound:
      return std::sqrt(a * a - b * b) / a;
    case Regime::Transition:
      return 1.0;
  }
  return 0.0;
}

double ConicTrajectory::closest_approach() const {
  switch (regime) {
    case Regime::Scattered:
      return std::sqrt(a * a + b * b) - a;
    case Regime::Bound:
      return a - std::sqrt(a * a - b * b);
    case Regime::Transition:
      return a;
  }
  return 0.0;
}

double ConicTrajectory::radius_unchecked(double theta) const {
  const double c = std::cos(theta);
  switch (regime) {
    case Regime::Scattered:
      return b * b / (a - std::sqrt(a * a + b * b) * c);
    case Regime::Bound:
      return b * b / (a - std::sqrt(a * a - b * b) * c);
    case Regime::Transition:
      return 2.0 * a / (1.0 - c);
  }
  return 0.0;
}

namespace {

void finish_ranges(ConicTrajectory& t) {
  if (t.regime == Regime::Scattered) {
    // The denominator of r(theta) vanishes on the asymptote directions, so
    // only the open interval between them is reachable.
    const double asym = std::acos(t.a / std::hypot(t.a, t.b));
    t.theta_lo = asym;
    t.theta_hi = kTwoPi - asym;
  } else {
    t.theta_lo = 0.0;
    t.theta_hi = kTwoPi;
  }
  if (t.regime != Regime::Bound && !inside_open_range(t, t.theta0)) {
    throw DomainError("theta0 outside the reachable range of the orbit");
  }
}

}  // namespace

ConicTrajectory orbit_from_energy(const JacobiFrame& frame, double delta_e, double L,
                                  const PhysicalConstants& k, double theta0,
                                  TransitionForm form) {
  if (L == 0.0 || !std::isfinite(L)) throw DomainError("L must be finite and non-zero");
  if (!std::isfinite(delta_e)) throw DomainError("energy offset must be finite");
  ConicTrajectory t;
  t.L = L;
  t.energy_offset = delta_e;
  t.theta0 = theta0;
  if (delta_e == 0.0) {
    t.regime = Regime::Transition;
    t.a = form == TransitionForm::Consistent ? L * L / (2.0 * k.G * frame.m_T)
                                             : transition_a_literal(frame, L, k);
    t.b = 0.0;
  } else {
    t.regime = delta_e > 0.0 ? Regime::Scattered : Regime::Bound;
    const double de = std::abs(delta_e);
    t.a = k.G * frame.m1 * frame.m2 / (2.0 * de);
    t.b = std::sqrt(frame.mu * L * L / (2.0 * de));
    if (t.regime == Regime::Bound && !(t.b <= t.a)) {
      throw DomainError("bound orbit requires b <= a; L too large for this energy");
    }
  }
  finish_ranges(t);
  return t;
}

ConicTrajectory orbit_from_axes(const JacobiFrame& frame, Regime regime, double a, double b,
                                const PhysicalConstants& k, double theta0) {
  if (!(a > 0.0)) throw DomainError("a must be positive");
  ConicTrajectory t;
  t.regime = regime;
  t.a = a;
  t.theta0 = theta0;
  t.energy_offset = energy_offset_from_axes(frame, regime, a, k);
  if (regime == Regime::Transition) {
    t.b = 0.0;
    t.L = std::sqrt(2.0 * a * k.G * frame.m_T);
  } else {
    if (!(b > 0.0)) throw DomainError("b must be positive");
    if (regime == Regime::Bound && !(b <= a)) throw DomainError("bound orbit requires b <= a");
    t.b = b;
    t.L = std::sqrt(k.G * frame.m_T * b * b / a);
  }
  finish_ranges(t);
  return t;
}

double transition_a_literal(const JacobiFrame& frame, double L, const PhysicalConstants& k) {
  return L / (2.0 * frame.m_T * k.G);
}

double energy_offset_from_axes(const JacobiFrame& frame, Regime regime, double a,
                               const PhysicalConstants& k) {
  const double magnitude = k.G * frame.m1 * frame.m2 / (2.0 * a);
  switch (regime) {
    case Regime::Scattered:
      return magnitude;
    case Regime::Bound:
      return -magnitude;
    case Regime::Transition:
      return 0.0;
  }
  return 0.0;
}

double conic_radius(const ConicTrajectory& t, double theta) {
  if (!(theta >= t.theta_lo && theta <= t.theta_hi)) {
    throw DomainError("theta outside the orbit's angular range");
  }
  const double r = t.radius_unchecked(theta);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw DomainError("orbit does not reach this direction (denominator <= 0)");
  }
  return r;
}

double tau_of_theta(const ConicTrajectory& t, double theta) {
  if (!inside_open_range(t, theta)) {
    throw DomainError("theta outside the orbit's angular range");
  }
  if (theta == t.theta0) return 0.0;
  return integrate_r2(t, t.theta0, theta) / t.L;
}

double theta_of_tau(const ConicTrajectory& t, double tau) {
  if (!std::isfinite(tau)) throw DomainError("tau must be finite");
  if (tau == 0.0) return t.theta0;

  // tau(theta) increases with theta when L > 0; search in the direction
  // that moves tau towards the target.
  const double dir = (tau > 0.0) == (t.L > 0.0) ? 1.0 : -1.0;
  double base = t.theta0;
  double tau_base = 0.0;
  double lo = base;
  double hi = base;

  if (t.regime == Regime::Bound) {
    const double period = std::abs(integrate_r2(t, t.theta0, t.theta0 + kTwoPi) / t.L);
    const double turns = std::floor(std::abs(tau) / period);
    base = t.theta0 + dir * kTwoPi * turns;
    tau_base = std::copysign(turns * period, tau);
    lo = base;
    hi = base + dir * kTwoPi;
  } else {
    const double edge = dir > 0.0 ? t.theta_hi : t.theta_lo;
    const double gap = edge - base;
    bool bracketed = false;
    for (int i = 1; i <= 60; ++i) {
      hi = edge - gap * std::ldexp(1.0, -i);
      if (!inside_open_range(t, hi)) break;
      double reached = 0.0;
      try {
        reached = std::abs(tau_of_theta(t, hi));
      } catch (const NumericalError&) {
        break;  // too close to the asymptote to integrate
      }
      if (reached >= std::abs(tau)) {
        bracketed = true;
        break;
      }
      lo = hi;
    }
    if (!bracketed) throw DomainError("tau beyond the range reached by the orbit");
  }

  auto f = [&](double theta) {
    return tau_base + integrate_r2(t, base, theta) / t.L - tau;
  };
  double a = std::min(lo, hi);
  double b = std::max(lo, hi);
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw DomainError("tau outside the image of tau(theta)");
  std::uintmax_t max_iter = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 3);
  auto [x0, x1] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
  return 0.5 * (x0 + x1);
}

TrajectoryState trajectory_state(const ConicTrajectory& t, const JacobiFrame& /*frame*/,
                                 double tau) {
  TrajectoryState s;
  s.tau = tau;
  s.theta = theta_of_tau(t, tau);
  s.r = t.radius_unchecked(s.theta);
  s.theta_dot = t.L / (s.r * s.r);
  s.r_dot = -t.L * t.eccentricity() * std::sin(s.theta) / t.semi_latus();
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  s.q = Vec3(s.r * c, s.r * sn, 0.0);
  s.q_dot = Vec3(s.r_dot * c - s.r * s.theta_dot * sn, s.r_dot * sn + s.r * s.theta_dot * c, 0.0);
  return s;
}

double potential(const JacobiFrame& frame, double r, const PhysicalConstants& k) {
  if (!(r > 0.0)) throw DomainError("separation must be positive");
  return -k.G * frame.m1 * frame.m2 / r;
}

Vec3 gravity_force_vector(const JacobiFrame& frame, const Vec3& q, const PhysicalConstants& k) {
  const double r = q.norm();
  if (!(r > 0.0)) throw DomainError("separation must be positive");
  return (-k.G * frame.m1 * frame.m2 / (r * r * r)) * q;
}

double total_energy(const JacobiFrame& f, const Vec3& q1_dot, const Vec3& q2_dot,
                    const Vec3& q_rel, double e_o, const PhysicalConstants& k) {
  return 0.5 * f.m1 * q1_dot.squaredNorm() + 0.5 * f.m2 * q2_dot.squaredNorm() +
         potential(f, q_rel.norm(), k) + e_o;
}

double total_energy_jacobi(const JacobiFrame& f, const Vec3& qo_dot, const Vec3& q_dot,
                           const Vec3& q_rel, double e_o, const PhysicalConstants& k) {
  return 0.5 * f.m_T * qo_dot.squaredNorm() + 0.5 * f.mu * q_dot.squaredNorm() +
         potential(f, q_rel.norm(), k) + e_o;
}

double relative_energy(const JacobiFrame& f, const TrajectoryState& s,
                       const PhysicalConstants& k) {
  return 0.5 * f.mu * s.q_dot.squaredNorm() + potential(f, s.r, k);
}

void write_trajectory_csv(std::ostream& os, const ConicTrajectory& traj,
                          const JacobiFrame& frame, std::span<const double> taus,
                          const PhysicalConstants& k) {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << "tau,theta,r,qx,qy,qdotx,qdoty,energy,L\n";
  os << std::setprecision(17);
  for (double tau : taus) {
    const TrajectoryState s = trajectory_state(traj, frame, tau);
    const double lz = s.q.x() * s.q_dot.y() - s.q.y() * s.q_dot.x();
    os << s.tau << ',' << s.theta << ',' << s.r << ',' << s.q.x() << ',' << s.q.y() << ','
       << s.q_dot.x() << ',' << s.q_dot.y() << ',' << relative_energy(frame, s, k) << ',' << lz
       << '\n';
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

}  // namespace uqftlab
