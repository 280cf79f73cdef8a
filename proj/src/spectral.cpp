// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>

#include "uqftlab/errors.hpp"

namespace uqftlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

struct Block {
  std::size_t first = 0;
  std::size_t count = 0;
  std::size_t size = 1;         // points in the particle's axes
  std::size_t stride_last = 1;  // stride of its last axis
};

Block block_of(const GridSpec& g, const ParticleAxes& pa) {
  if (pa.count == 0 || pa.first + pa.count > g.dims())
    throw ConfigurationError("particle axes do not fit the grid");
  Block b{pa.first, pa.count, 1, g.stride(pa.first + pa.count - 1)};
  for (std::size_t a = pa.first; a < pa.first + pa.count; ++a) b.size *= g.axes[a].points;
  return b;
}

void check_layout(const GridSpec& g, const Layout& layout) {
  std::vector<int> used(g.dims(), 0);
  for (const auto& pa : layout) {
    block_of(g, pa);
    if (!(pa.m > 0.0)) throw DomainError("particle mass must be positive");
    for (std::size_t a = pa.first; a < pa.first + pa.count; ++a) ++used[a];
  }
  for (int u : used)
    if (u != 1) throw ConfigurationError("layout must cover every axis exactly once");
}

// |p|^2 for each sub-index of a particle block, momentum space.
std::vector<double> block_p2(const GridSpec& g, const Block& b) {
  std::vector<double> p2(b.size, 0.0);
  for (std::size_t s = 0; s < b.size; ++s) {
    std::size_t rest = s;
    double sum = 0.0;
    for (std::size_t a = b.first + b.count; a-- > b.first;) {
      const auto& ax = g.axes[a];
      const double p = ax.momentum(rest % ax.points);
      rest /= ax.points;
      sum += p * p;
    }
    p2[s] = sum;
  }
  return p2;
}

std::vector<Vec3> block_points(const GridSpec& g, const Block& b, Space space) {
  std::vector<Vec3> pts(b.size, Vec3::Zero());
  for (std::size_t s = 0; s < b.size; ++s) {
    std::size_t rest = s;
    for (std::size_t a = b.first + b.count; a-- > b.first;) {
      const auto& ax = g.axes[a];
      const std::size_t i = rest % ax.points;
      rest /= ax.points;
      pts[s][static_cast<int>(a - b.first)] = space == Space::Momentum ? ax.momentum(i)
                                                                       : ax.position(i);
    }
  }
  return pts;
}

template <class Table>
void apply_tables(WaveFunction& wf, const std::vector<Block>& blocks, const Table& tables) {
  for (std::size_t f = 0; f < wf.values.size(); ++f) {
    cplx v = wf.values[f];
    for (std::size_t j = 0; j < blocks.size(); ++j)
      v *= tables[j][(f / blocks[j].stride_last) % blocks[j].size];
    wf.values[f] = v;
  }
}

Vec3 pad(const std::vector<double>& v) {
  Vec3 out = Vec3::Zero();
  for (std::size_t i = 0; i < v.size() && i < 3; ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

struct Endpoints {
  TrajectoryState rel0, rel1;
  Vec3 qo0, qo1;
};

Endpoints endpoints(const TrackingScenario& sc, double tau0, double delta_t) {
  const double tau1 = tau0 - delta_t;
  return {relative_state(sc, tau0), relative_state(sc, tau1),
          sc.q_o0 + sc.qo_dot * tau0, sc.q_o0 + sc.qo_dot * tau1};
}

double spread(double sigma, double m, double t, const PhysicalConstants& k) {
  const double r = k.hbar * t / (2.0 * m * sigma * sigma);
  return sigma * std::sqrt(1.0 + r * r);
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ConfigurationError("truncated snapshot");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ConfigurationError("truncated snapshot");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

Layout single_particle(double m, std::size_t axes) { return {ParticleAxes{m, 0, axes}}; }

Layout two_particles(const JacobiFrame& frame, std::size_t axes_per_particle) {
  return {ParticleAxes{frame.m1, 0, axes_per_particle},
          ParticleAxes{frame.m2, axes_per_particle, axes_per_particle}};
}

double omega(double m, double p2, const PhysicalConstants& k) {
  const double kappa = m * k.c / k.hbar;
  return std::sqrt(kappa * kappa + p2);
}

void b_map(WaveFunction& phi, const Layout& layout, const PhysicalConstants& k) {
  if (phi.space != Space::Momentum) throw DomainError("b_map needs momentum-space values");
  check_layout(phi.grid, layout);
  std::vector<Block> blocks;
  std::vector<std::vector<cplx>> tables;
  for (const auto& pa : layout) {
    blocks.push_back(block_of(phi.grid, pa));
    const auto p2 = block_p2(phi.grid, blocks.back());
    std::vector<cplx> t(p2.size());
    for (std::size_t s = 0; s < p2.size(); ++s) t[s] = 2.0 * omega(pa.m, p2[s], k);
    tables.push_back(std::move(t));
  }
  apply_tables(phi, blocks, tables);
}

const char* to_string(Mode m) { return m == Mode::UQFT ? "uqft" : "nonrelativistic"; }

double rest_phase(double m, double t_seconds, const PhysicalConstants& k) {
  return std::fmod(m * k.c * k.c * t_seconds / k.hbar, kTwoPi);
}

void propagate(WaveFunction& wf, const Layout& layout, double t_seconds, Mode mode,
               const PhysicalConstants& k) {
  if (wf.space != Space::Momentum) throw DomainError("propagate needs momentum-space values");
  check_layout(wf.grid, layout);
  if (t_seconds == 0.0) return;
  const double ct = natural_units::time_length(t_seconds, k);
  std::vector<Block> blocks;
  std::vector<std::vector<cplx>> tables;
  for (const auto& pa : layout) {
    blocks.push_back(block_of(wf.grid, pa));
    const auto p2 = block_p2(wf.grid, blocks.back());
    const double kappa = pa.m * k.c / k.hbar;
    const double rest = rest_phase(pa.m, t_seconds, k);
    std::vector<cplx> t(p2.size());
    for (std::size_t s = 0; s < p2.size(); ++s) {
      // omega - kappa without cancellation.
      const double kin = mode == Mode::UQFT
                             ? ct * p2[s] / (omega(pa.m, p2[s], k) + kappa)
                             : k.hbar * p2[s] * t_seconds / (2.0 * pa.m);
      t[s] = std::polar(1.0, -(rest + kin));
    }
    tables.push_back(std::move(t));
  }
  apply_tables(wf, blocks, tables);
}

WaveFunction propagated(const WaveFunction& wf, const Layout& layout, double t_seconds,
                        Mode mode, const PhysicalConstants& k) {
  WaveFunction out = wf;
  propagate(out, layout, t_seconds, mode, k);
  return out;
}

std::vector<double> peak_track(const WaveFunction& wf) {
  if (wf.space != Space::Position) throw DomainError("peak_track needs position-space values");
  const auto& g = wf.grid;
  std::size_t best = 0;
  double top = -1.0;
  for (std::size_t f = 0; f < wf.values.size(); ++f) {
    const double w = std::norm(wf.values[f]);
    if (w > top) {
      top = w;
      best = f;
    }
  }
  if (!(top > 0.0)) throw DomainError("degenerate peak: field vanishes");
  const auto idx = wf.unflatten(best);

  // Another site at the same height that is not a neighbour is a tie.
  for (std::size_t f = 0; f < wf.values.size(); ++f) {
    if (f == best || std::norm(wf.values[f]) < top * (1.0 - 1e-12)) continue;
    const auto other = wf.unflatten(f);
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const auto d = other[a] > idx[a] ? other[a] - idx[a] : idx[a] - other[a];
      if (d > 1) throw DomainError("degenerate peak: maximum is not unique");
    }
  }

  std::vector<double> loc(g.dims());
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const auto& ax = g.axes[a];
    loc[a] = ax.position(idx[a]);
    if (idx[a] == 0 || idx[a] + 1 == ax.points) continue;
    const std::size_t s = g.stride(a);
    const double ym = std::norm(wf.values[best - s]);
    const double yp = std::norm(wf.values[best + s]);
    if (!(ym > 0.0) || !(yp > 0.0)) continue;
    const double lm = std::log(ym), l0 = std::log(top), lp = std::log(yp);
    const double curv = lm - 2.0 * l0 + lp;
    if (!(curv < 0.0)) continue;
    const double shift = std::clamp(0.5 * (lm - lp) / curv, -0.5, 0.5);
    loc[a] += shift * ax.dx();
  }
  return loc;
}

WaveFunction marginal(const WaveFunction& wf, const Layout& layout, std::size_t particle) {
  if (wf.space != Space::Position) throw DomainError("marginal needs position-space values");
  check_layout(wf.grid, layout);
  if (particle >= layout.size()) throw DomainError("no such particle");
  const Block b = block_of(wf.grid, layout[particle]);
  std::vector<AxisSpec> axes(wf.grid.axes.begin() + static_cast<long>(b.first),
                             wf.grid.axes.begin() + static_cast<long>(b.first + b.count));
  WaveFunction out(GridSpec{axes}, Space::Position);
  std::vector<double> density(b.size, 0.0);
  for (std::size_t f = 0; f < wf.values.size(); ++f)
    density[(f / b.stride_last) % b.size] += std::norm(wf.values[f]);
  const double other = wf.grid.cell_volume() / out.grid.cell_volume();
  for (std::size_t s = 0; s < b.size; ++s) out.values[s] = std::sqrt(density[s] * other);
  return out;
}

TwoParticleState assemble_two_particle(const MinimumPacket& pk_rel, const MinimumPacket& pk_cm,
                                       const GridSpec& grid, const JacobiFrame& frame,
                                       const PhysicalConstants& k, bool apply_b_map) {
  pk_rel.validate();
  pk_cm.validate();
  if (grid.dims() != 2 && grid.dims() != 4)
    throw ConfigurationError("two-particle grids have 2 or 4 axes");
  const auto rel_tol = 1e-12 * frame.m_T;
  if (std::abs(pk_rel.m - frame.mu) > rel_tol || std::abs(pk_cm.m - frame.m_T) > rel_tol)
    throw DomainError("relative packet needs mass mu and centre-of-mass packet mass m_T");

  const std::size_t d = grid.dims() / 2;
  const Layout layout = two_particles(frame, d);
  const Block b1 = block_of(grid, layout[0]);
  const Block b2 = block_of(grid, layout[1]);
  const auto p1 = block_points(grid, b1, Space::Momentum);
  const auto p2 = block_points(grid, b2, Space::Momentum);

  Vec3 k0 = pk_rel.carrier(k), P0 = pk_cm.carrier(k);
  Vec3 q = pk_rel.q, qo = pk_cm.q;
  for (int a = static_cast<int>(d); a < 3; ++a) k0[a] = P0[a] = q[a] = qo[a] = 0.0;
  const double s2 = pk_rel.sigma * pk_rel.sigma;
  const double so2 = pk_cm.sigma * pk_cm.sigma;
  const double dd = static_cast<double>(d);
  const double amp = std::pow(2.0 * s2 / kPi, dd / 4.0) * std::pow(2.0 * so2 / kPi, dd / 4.0);
  const double phase0 = pk_rel.phi + pk_cm.phi;
  const double w1 = frame.m2 / frame.m_T, w2 = frame.m1 / frame.m_T;

  TwoParticleState st{WaveFunction(grid, Space::Momentum), frame, k, layout};
  auto& v = st.wf.values;
  for (std::size_t i = 0; i < b1.size; ++i) {
    for (std::size_t j = 0; j < b2.size; ++j) {
      const Vec3 kr = w1 * p1[i] - w2 * p2[j] - k0;
      const Vec3 P = p1[i] + p2[j] - P0;
      const double e = -s2 * kr.squaredNorm() - so2 * P.squaredNorm();
      v[i * b2.size + j] = std::polar(amp * std::exp(e), kr.dot(q) + P.dot(qo) + phase0);
    }
  }
  const double n = st.wf.norm();
  if (std::abs(n - 1.0) > 1e-6)
    throw ConfigurationError("grid does not resolve the packets (sampled norm " +
                             std::to_string(n) + ")");
  if (apply_b_map) b_map(st.wf, layout, k);
  return st;
}

TrajectoryState relative_state(const TrackingScenario& sc, double tau) {
  if (sc.motion == RelativeMotion::Orbit) return trajectory_state(sc.traj, sc.frame, tau);
  TrajectoryState st;
  st.tau = tau;
  st.q = sc.q_rel0 + sc.qrel_dot * tau;
  st.q_dot = sc.qrel_dot;
  st.r = st.q.norm();
  return st;
}

double dimensionless_delta_t(const TrackingScenario& sc, double tau0, double delta_t) {
  const auto st = relative_state(sc, tau0);
  return delta_t * st.q_dot.norm() / sc.sigma;
}

double delta_t_from_dimensionless(const TrackingScenario& sc, double tau0, double d) {
  const auto st = relative_state(sc, tau0);
  return d * sc.sigma / st.q_dot.norm();
}

GridSpec tracking_grid(const TrackingScenario& sc, double tau0, double delta_t) {
  const auto& k = sc.constants;
  const auto& fr = sc.frame;
  const std::size_t d = sc.axes_per_particle;
  if (d != 1 && d != 2) throw ConfigurationError("tracking uses 1 or 2 axes per particle");
  const auto ep = endpoints(sc, tau0, delta_t);
  const auto x0 = jacobi_inverse(ep.rel0.q, ep.qo0, fr);
  const auto x1 = jacobi_inverse(ep.rel1.q, ep.qo1, fr);
  const double t = std::abs(delta_t);
  const double sr = spread(sc.sigma, fr.mu, t, k);
  const double so = spread(sc.sigma_o, fr.m_T, t, k);

  auto velocity = [&](const TrajectoryState& s, int particle) -> Vec3 {
    return particle == 0 ? Vec3(sc.qo_dot + fr.m2 / fr.m_T * s.q_dot)
                         : Vec3(sc.qo_dot - fr.m1 / fr.m_T * s.q_dot);
  };

  std::vector<AxisSpec> axes;
  for (int particle = 0; particle < 2; ++particle) {
    const double m = particle == 0 ? fr.m1 : fr.m2;
    const double wq = (particle == 0 ? fr.m2 : fr.m1) / fr.m_T;
    const double wp = m / fr.m_T;
    const double sx = std::sqrt(so * so + wq * wq * sr * sr);
    const double sp = std::sqrt(wp * wp / (4.0 * sc.sigma_o * sc.sigma_o) +
                                1.0 / (4.0 * sc.sigma * sc.sigma));
    const Vec3 xa = particle == 0 ? x0.x1 : x0.x2;
    const Vec3 xb = particle == 0 ? x1.x1 : x1.x2;
    const Vec3 pa = m * velocity(ep.rel0, particle) / k.hbar;
    const Vec3 pb = m * velocity(ep.rel1, particle) / k.hbar;
    for (std::size_t a = 0; a < d; ++a) {
      const int c = static_cast<int>(a);
      const double need_x = 14.0 * sx + std::abs(xa[c] - xb[c]);
      const double need_p = 14.0 * sp + std::abs(pa[c] - pb[c]);
      const double budget = kTwoPi * static_cast<double>(sc.points);
      if (need_x * need_p > budget)
        throw ConfigurationError("tracking grid of " + std::to_string(sc.points) +
                                 " points per axis cannot hold the packets");
      const double L = std::sqrt(budget * need_x / need_p);
      axes.push_back(AxisSpec{sc.points, L, 0.5 * (xa[c] + xb[c]), 0.5 * (pa[c] + pb[c])});
    }
  }
  return make_grid(std::move(axes));
}

TrackingResult tracking_error(const TrackingScenario& sc, double tau0, double delta_t) {
  const auto& k = sc.constants;
  const auto& fr = sc.frame;
  const std::size_t d = sc.axes_per_particle;
  const GridSpec grid = tracking_grid(sc, tau0, delta_t);
  const auto ep = endpoints(sc, tau0, delta_t);

  TrackingResult res;
  res.delta_t = delta_t;
  res.grid = grid;
  const bool orbit = sc.motion == RelativeMotion::Orbit;
  // Free motion has no closest approach; r_a then only scales the Planck ratio.
  const double r_a = orbit ? sc.traj.closest_approach() : std::max(ep.rel0.r, 1.0);
  const double fa = orbit ? gravity_force(fr.m1, fr.m2, r_a, k) : 0.0;
  const double e_rel =
      orbit ? sc.traj.energy_offset : 0.5 * fr.mu * sc.qrel_dot.squaredNorm();
  const LimitCheckConfig lc{sc.lambda, sc.much_less_threshold};
  res.compliant = check_classical_limit(fr.mu, sc.sigma, fa, r_a, lc, k).compliant &&
                  check_classical_limit(fr.m_T, sc.sigma_o, 0.0, r_a, lc, k).compliant;

  const MinimumPacket rel0{fr.mu, sc.sigma, ep.rel0.q, ep.rel0.q_dot, 0.0};
  const MinimumPacket cm0{fr.m_T, sc.sigma_o, ep.qo0, sc.qo_dot, 0.0};
  auto state = assemble_two_particle(rel0, cm0, grid, fr, k);
  const double n0 = state.wf.norm();
  propagate(state.wf, state.layout, delta_t, Mode::UQFT, k);

  // Phase at tau0 - delta_t relative to tau0; the rest part uses the same
  // per-particle reduction as the propagator.
  const double dd = static_cast<double>(d);
  const double e_nonrest = 0.5 * fr.m_T * sc.qo_dot.squaredNorm() + e_rel +
                           dd * k.hbar * k.hbar / (4.0 * fr.mu * sc.sigma * sc.sigma) +
                           dd * k.hbar * k.hbar / (4.0 * fr.m_T * sc.sigma_o * sc.sigma_o);
  const double phi1 = -(rest_phase(fr.m1, delta_t, k) + rest_phase(fr.m2, delta_t, k)) -
                      e_nonrest * delta_t / k.hbar;
  const MinimumPacket rel1{fr.mu, sc.sigma, ep.rel1.q, ep.rel1.q_dot, phi1};
  const MinimumPacket cm1{fr.m_T, sc.sigma_o, ep.qo1, sc.qo_dot, 0.0};
  const auto target = assemble_two_particle(rel1, cm1, grid, fr, k);

  double diff = 0.0;
  for (std::size_t i = 0; i < target.wf.values.size(); ++i)
    diff += std::norm(state.wf.values[i] - target.wf.values[i]);
  res.evolution_error = std::sqrt(diff * grid.momentum_cell_volume()) / n0;

  transform_in_place(state.wf);
  const auto cls = jacobi_inverse(ep.rel1.q, ep.qo1, fr);
  res.classical_peak = {cls.x1, cls.x2};
  for (std::size_t p = 0; p < 2; ++p) {
    Vec3 loc = pad(peak_track(marginal(state.wf, state.layout, p)));
    Vec3 ref = res.classical_peak[p];
    for (int a = static_cast<int>(d); a < 3; ++a) ref[a] = 0.0;
    res.evolved_peak[p] = loc;
    (p == 0 ? res.peak_error_x1 : res.peak_error_x2) = (loc - ref).norm();
  }
  res.peak_error = std::max(res.peak_error_x1, res.peak_error_x2);
  return res;
}

void write_tracking_csv(std::ostream& os, const std::vector<TrackingResult>& rows) {
  os << "delta_t,evolution_error,peak_error_x1,peak_error_x2\n";
  const auto old = os.precision(17);
  for (const auto& r : rows)
    os << r.delta_t << ',' << r.evolution_error << ',' << r.peak_error_x1 << ','
       << r.peak_error_x2 << '\n';
  os.precision(old);
}

void write_snapshot(std::ostream& os, const WaveFunction& wf) {
  const auto& g = wf.grid;
  if (g.dims() > 4) throw ConfigurationError("snapshots hold at most 4 axes");
  os.write("UQFTWF01", 8);
  write_u32(os, static_cast<std::uint32_t>(g.dims()));
  for (std::size_t a = 0; a < 4; ++a)
    write_u32(os, a < g.dims() ? static_cast<std::uint32_t>(g.axes[a].points) : 0u);
  for (std::size_t a = 0; a < 4; ++a) write_f64(os, a < g.dims() ? g.axes[a].extent : 0.0);
  write_u32(os, wf.space == Space::Position ? 0u : 1u);
  for (const auto& v : wf.values) {
    write_f64(os, v.real());
    write_f64(os, v.imag());
  }
  if (!os) throw std::runtime_error("snapshot write failed");
}

WaveFunction read_snapshot(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, "UQFTWF01", 8) != 0)
    throw ConfigurationError("not a wavefunction snapshot");
  const std::uint32_t dims = read_u32(is);
  if (dims < 1 || dims > 4) throw ConfigurationError("snapshot axis count out of range");
  std::uint32_t pts[4];
  double ext[4];
  for (auto& p : pts) p = read_u32(is);
  for (auto& e : ext) e = read_f64(is);
  const std::uint32_t tag = read_u32(is);
  if (tag > 1) throw ConfigurationError("unknown snapshot space tag");
  std::vector<AxisSpec> axes;
  for (std::uint32_t a = 0; a < dims; ++a) axes.push_back(AxisSpec{pts[a], ext[a], 0.0, 0.0});
  WaveFunction wf(make_analysis_grid(std::move(axes)), tag == 0 ? Space::Position : Space::Momentum);
  for (auto& v : wf.values) {
    const double re = read_f64(is);
    const double im = read_f64(is);
    v = cplx{re, im};
  }
  return wf;
}

}  // namespace uqftlab
