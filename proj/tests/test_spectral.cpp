// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "uqftlab/errors.hpp"
#include "uqftlab/spectral.hpp"
#include "spectral_oracles.hpp"

using namespace uqftlab;
using uqftlab::testing::free_gaussian;
using uqftlab::testing::width;

namespace {

constexpr double kPi = std::numbers::pi;
const PhysicalConstants kDesk{1.0, 10.0, 1.0};

WaveFunction random_state(const GridSpec& g, Space s, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  WaveFunction wf(g, s);
  for (auto& v : wf.values) v = cplx{n(rng), n(rng)};
  return wf;
}

double max_abs_diff(const WaveFunction& a, const WaveFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

double max_abs(const WaveFunction& a) {
  double m = 0.0;
  for (const auto& v : a.values) m = std::max(m, std::abs(v));
  return m;
}

double l2_diff(const WaveFunction& a, const WaveFunction& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
  const double cell =
      a.space == Space::Position ? a.grid.cell_volume() : a.grid.momentum_cell_volume();
  return std::sqrt(s * cell);
}

}  // namespace

TEST_CASE("make_grid") {
  const auto g = make_grid({AxisSpec{64, 1.0, 0.0, 0.0}});
  CHECK(g.axes[0].dp() == doctest::Approx(2.0 * kPi));
  CHECK(g.axes[0].dx() * 64.0 == doctest::Approx(1.0));

  const AxisSpec a{64, 3.0, 0.0, 0.0};
  const auto g4 = make_grid({a, a, a, a});
  CHECK(g4.size() == 16777216u);
  CHECK(g4.stride(0) == 262144u);
  CHECK(g4.stride(3) == 1u);

  CHECK_THROWS_AS(make_grid({a, a, a}), ConfigurationError);
  CHECK_THROWS_AS(make_grid({AxisSpec{8, 1.0, 0.0, 0.0}}), ConfigurationError);
  CHECK_THROWS_AS(make_grid({AxisSpec{100, 1.0, 0.0, 0.0}}), ConfigurationError);
  CHECK_THROWS_AS(make_grid({AxisSpec{64, -1.0, 0.0, 0.0}}), ConfigurationError);
  CHECK_THROWS_AS(make_grid({}), ConfigurationError);
}

TEST_CASE("transform round trip and Parseval") {
  const auto g2 = make_grid({AxisSpec{32, 5.0, 0.3, -1.0}, AxisSpec{64, 7.0, -2.0, 4.0}});
  const AxisSpec s{16, 2.0, 0.1, 0.2};
  const auto g4 = make_grid({s, AxisSpec{16, 3.0, -0.2, 1.0}, s, s});
  for (const auto& g : {g2, g4}) {
    const auto wf = random_state(g, Space::Position, 3);
    const auto fwd = transform(wf);
    CHECK(fwd.space == Space::Momentum);
    CHECK(std::abs(fwd.norm() / wf.norm() - 1.0) < 1e-12);
    const auto back = transform(fwd);
    CHECK(back.space == Space::Position);
    CHECK(max_abs_diff(back, wf) / max_abs(wf) < 1e-12);
  }
}

TEST_CASE("transform matches a direct sum") {
  const AxisSpec ax{32, 6.0, 0.7, 1.3};
  const auto wf = random_state(make_grid({ax}), Space::Position, 9);
  const auto fwd = transform(wf);
  for (std::size_t kk = 0; kk < ax.points; ++kk) {
    const double kappa = ax.momentum(kk) - ax.momentum_center;
    cplx sum{0.0, 0.0};
    for (std::size_t j = 0; j < ax.points; ++j)
      sum += std::polar(1.0, kappa * ax.position(j)) * wf.values[j];
    sum *= ax.dx() / std::sqrt(2.0 * kPi);
    CHECK(std::abs(sum - fwd.values[kk]) < 1e-12 * max_abs(fwd));
  }
}

TEST_CASE("impulse transforms to constant modulus") {
  WaveFunction wf(make_grid({AxisSpec{64, 10.0, 0.0, 0.0}}), Space::Position);
  wf.values[17] = 1.0;
  const auto fwd = transform(wf);
  const double m0 = std::abs(fwd.values[0]);
  for (const auto& v : fwd.values) CHECK(std::abs(v) == doctest::Approx(m0).epsilon(1e-13));
}

TEST_CASE("b_map multiplier") {
  const double m = 1.0;
  const double kappa = m * kDesk.c / kDesk.hbar;
  CHECK(2.0 * omega(m, 0.0, kDesk) == doctest::Approx(2.0 * kappa));
  CHECK(2.0 * omega(m, kappa * kappa, kDesk) == doctest::Approx(2.0 * std::sqrt(2.0) * kappa));

  // Single site at p = 0 on a grid whose centre row is exactly p = 0.
  WaveFunction one(make_grid({AxisSpec{16, 4.0, 0.0, 0.0}}), Space::Momentum);
  one.values[8] = 1.0;
  b_map(one, single_particle(m, 1), kDesk);
  CHECK(one.values[8].real() == doctest::Approx(2.0 * kappa).epsilon(1e-15));

  // hbar / (m c sigma) = 1e-3: the multiplier is flat to ~1e-6 over the core.
  const PhysicalConstants k{1.0, 1e3, 1.0};
  const MinimumPacket pk{1.0, 1.0, Vec3(0.5, -0.5, 0.0), Vec3::Zero(), 0.0};
  const auto g = packet_grid(pk, 2, 64, 10.0, k);
  auto wf = sample_packet(pk, g, Space::Momentum, k);
  const auto before = wf;
  b_map(wf, single_particle(pk.m, 2), k);
  const double rest2 = 2.0 * pk.m * k.c / k.hbar;
  double worst = 0.0;
  for (std::size_t i = 0; i < wf.values.size(); ++i) {
    const auto idx = wf.unflatten(i);
    const double p2 = std::pow(g.axes[0].momentum(idx[0]), 2) + std::pow(g.axes[1].momentum(idx[1]), 2);
    if (p2 > 4.0) continue;  // core: |p - k0| <= 2 / sigma
    worst = std::max(worst, std::abs(wf.values[i] / before.values[i] / rest2 - 1.0));
  }
  CHECK(worst <= 2e-6);
  CHECK(worst > 0.0);

  auto in_position = transform(before);
  CHECK_THROWS_AS(b_map(in_position, single_particle(1.0, 2), k), DomainError);
}

TEST_CASE("b_map keeps the momentum peak within one cell") {
  const PhysicalConstants k{1.0, 1e3, 1.0};
  const MinimumPacket pk{1.0, 1.0, Vec3::Zero(), Vec3(3.0, -2.0, 0.0), 0.0};
  const auto g = packet_grid(pk, 2, 64, 10.0, k);
  auto wf = sample_packet(pk, g, Space::Momentum, k);
  auto argmax = [](const WaveFunction& w) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < w.values.size(); ++i)
      if (std::abs(w.values[i]) > std::abs(w.values[best])) best = i;
    return w.unflatten(best);
  };
  const auto before = argmax(wf);
  b_map(wf, single_particle(1.0, 2), k);
  const auto after = argmax(wf);
  for (std::size_t a = 0; a < 2; ++a)
    CHECK(std::abs(static_cast<long>(before[a]) - static_cast<long>(after[a])) <= 1);
}

TEST_CASE("propagate: identity, unitarity, group law") {
  const auto g = make_grid({AxisSpec{32, 8.0, 0.0, 0.5}, AxisSpec{32, 8.0, 0.0, -0.3}});
  const auto wf = random_state(g, Space::Momentum, 21);
  const Layout lay = single_particle(1.0, 2);
  for (Mode mode : {Mode::UQFT, Mode::NonRelativistic}) {
    CHECK(max_abs_diff(propagated(wf, lay, 0.0, mode, kDesk), wf) == 0.0);
    const auto a = propagated(wf, lay, 0.37, mode, kDesk);
    CHECK(std::abs(a.norm() / wf.norm() - 1.0) < 1e-12);
    const auto ab = propagated(a, lay, 0.81, mode, kDesk);
    const auto direct = propagated(wf, lay, 1.18, mode, kDesk);
    CHECK(max_abs_diff(ab, direct) / max_abs(wf) < 1e-12);
  }
  const Layout two{ParticleAxes{1.0, 0, 1}, ParticleAxes{2.0, 1, 1}};
  const auto a = propagated(wf, two, 0.5, Mode::UQFT, kDesk);
  CHECK(std::abs(a.norm() / wf.norm() - 1.0) < 1e-12);

  CHECK_THROWS_AS(propagated(transform(wf), lay, 1.0, Mode::UQFT, kDesk), DomainError);
  CHECK_THROWS_AS(propagated(wf, single_particle(1.0, 1), 1.0, Mode::UQFT, kDesk),
                  ConfigurationError);
}

TEST_CASE("free Gaussian spreading matches the closed form (1D)") {
  const double m = 1.0, sigma = 1.0, q = 2.0, v = 0.5, phi = 0.4;
  const double k0 = m * v / kDesk.hbar;
  const double T = 2.0 * m * sigma * sigma / kDesk.hbar;
  const MinimumPacket pk{m, sigma, Vec3(q, 0.0, 0.0), Vec3(v, 0.0, 0.0), phi};
  const auto g = make_grid({AxisSpec{256, 48.0, q - 0.5 * v * T, k0}});
  auto wf = sample_packet(pk, g, Space::Momentum, kDesk);
  propagate(wf, single_particle(m, 1), T, Mode::NonRelativistic, kDesk);
  const auto pos = transform(wf);

  WaveFunction oracle(g, Space::Position);
  for (std::size_t j = 0; j < 256; ++j) {
    const double x = g.axes[0].position(j);
    oracle.values[j] = free_gaussian(x, T, m, sigma, q, k0, phi, kDesk) * std::polar(1.0, k0 * x);
  }
  CHECK(max_abs_diff(pos, oracle) / max_abs(oracle) < 1e-10);

  const double w_expected = sigma * std::sqrt(1.0 + std::pow(kDesk.hbar * T / (2.0 * m * sigma * sigma), 2));
  CHECK(std::abs(width(pos, 0) / w_expected - 1.0) < 1e-6);
  const auto peak = peak_track(pos);
  CHECK(std::abs(peak[0] - (q - v * T)) <= g.axes[0].dx());
}

TEST_CASE("free Gaussian spreading matches the closed form (2D)") {
  const double m = 2.0, sigma = 0.8;
  const Vec3 q(1.0, -1.0, 0.0), v(0.3, 0.6, 0.0);
  const double T = 2.0 * m * sigma * sigma / kDesk.hbar;
  const MinimumPacket pk{m, sigma, q, v, 0.0};
  const Vec3 k0 = pk.carrier(kDesk);
  const Vec3 mid = q - 0.5 * v * T;
  const auto g = make_grid({AxisSpec{128, 40.0, mid[0], k0[0]}, AxisSpec{128, 40.0, mid[1], k0[1]}});
  auto wf = sample_packet(pk, g, Space::Momentum, kDesk);
  propagate(wf, single_particle(m, 2), T, Mode::NonRelativistic, kDesk);
  const auto pos = transform(wf);

  WaveFunction oracle(g, Space::Position);
  for (std::size_t f = 0; f < oracle.values.size(); ++f) {
    const auto idx = oracle.unflatten(f);
    const double x = g.axes[0].position(idx[0]), y = g.axes[1].position(idx[1]);
    // The rest phase belongs to the particle, not to each axis.
    oracle.values[f] = free_gaussian(x, T, m, sigma, q[0], k0[0], 0.0, kDesk) *
                       free_gaussian(y, T, m, sigma, q[1], k0[1], 0.0, kDesk, false) *
                       std::polar(1.0, k0[0] * x + k0[1] * y);
  }
  CHECK(max_abs_diff(pos, oracle) / max_abs(oracle) < 1e-10);
  const double w_expected = sigma * std::sqrt(2.0);
  CHECK(std::abs(width(pos, 0) / w_expected - 1.0) < 1e-6);
  CHECK(std::abs(width(pos, 1) / w_expected - 1.0) < 1e-6);
  const auto peak = peak_track(pos);
  CHECK(std::abs(peak[0] - (q[0] - v[0] * T)) <= g.axes[0].dx());
  CHECK(std::abs(peak[1] - (q[1] - v[1] * T)) <= g.axes[1].dx());
}

TEST_CASE("UQFT and nonrelativistic propagators agree when hbar/(m c sigma) = 1e-3") {
  const PhysicalConstants k{1.0, 1e3, 1.0};
  const double m = 1.0, sigma = 1.0;
  const double T = 2.0 * m * sigma * sigma / k.hbar;
  const MinimumPacket pk{m, sigma, Vec3::Zero(), Vec3::Zero(), 0.0};
  const auto g = packet_grid(pk, 2, 128, 16.0, k);
  const auto wf = sample_packet(pk, g, Space::Momentum, k);
  const Layout lay = single_particle(m, 2);
  const auto a = propagated(wf, lay, T, Mode::UQFT, k);
  const auto b = propagated(wf, lay, T, Mode::NonRelativistic, k);
  const double rel = l2_diff(a, b) / wf.norm();
  CHECK(rel <= 1e-4);
  CHECK(rel > 0.0);
}

TEST_CASE("peak_track") {
  const MinimumPacket pk{1.0, 0.7, Vec3(0.33, -0.21, 0.0), Vec3::Zero(), 0.0};
  const auto g = make_grid({AxisSpec{64, 12.0, 0.0, 0.0}, AxisSpec{64, 12.0, 0.0, 0.0}});
  const auto peak = peak_track(sample_packet(pk, g, Space::Position, kDesk));
  CHECK(std::abs(peak[0] - 0.33) <= g.axes[0].dx());
  CHECK(std::abs(peak[1] + 0.21) <= g.axes[1].dx());
  // The log-parabola is exact for a Gaussian.
  CHECK(std::abs(peak[0] - 0.33) < 1e-10);

  WaveFunction twin(make_grid({AxisSpec{32, 8.0, 0.0, 0.0}}), Space::Position);
  for (std::size_t j = 0; j < 32; ++j) {
    const double x = twin.grid.axes[0].position(j);
    twin.values[j] = std::exp(-std::pow(x - 2.0, 2)) + std::exp(-std::pow(x + 2.0, 2));
  }
  CHECK_THROWS_AS(peak_track(twin), DomainError);

  WaveFunction flat(make_grid({AxisSpec{16, 1.0, 0.0, 0.0}}), Space::Position);
  for (auto& v : flat.values) v = 1.0;
  CHECK_THROWS_AS(peak_track(flat), DomainError);
  CHECK_THROWS_AS(peak_track(WaveFunction(flat.grid, Space::Momentum)), DomainError);
}

TEST_CASE("two-particle assembly") {
  const JacobiFrame fr = reduced_total_mass(1.0, 1.0);
  const AxisSpec ax{32, 16.0, 0.0, 0.0};
  const auto g = make_grid({ax, ax, ax, ax});

  SUBCASE("even relative packet is exchange symmetric") {
    const MinimumPacket rel{fr.mu, 1.0, Vec3::Zero(), Vec3::Zero(), 0.2};
    const MinimumPacket cm{fr.m_T, 1.0, Vec3(0.5, -0.25, 0.0), Vec3(0.1, 0.2, 0.0), 0.0};
    const auto st = assemble_two_particle(rel, cm, g, fr, kDesk);
    double worst = 0.0;
    for (std::size_t i = 0; i < 32 * 32; ++i)
      for (std::size_t j = 0; j < 32 * 32; ++j)
        worst = std::max(worst, std::abs(st.wf.values[i * 1024 + j] - st.wf.values[j * 1024 + i]));
    CHECK(worst <= 1e-12 * max_abs(st.wf));
  }

  SUBCASE("without b_map the state is the product of the Jacobi factors") {
    const MinimumPacket rel{fr.mu, 0.9, Vec3(0.3, 0.1, 0.0), Vec3(0.2, -0.1, 0.0), 0.4};
    const MinimumPacket cm{fr.m_T, 1.1, Vec3(-0.2, 0.0, 0.0), Vec3(0.05, 0.0, 0.0), -0.3};
    const auto st = assemble_two_particle(rel, cm, g, fr, kDesk, false);
    CHECK(std::abs(st.wf.norm() - 1.0) < 1e-10);
    const Vec3 k0 = rel.carrier(kDesk), P0 = cm.carrier(kDesk);
    // Remove the z factor of each 3D momentum packet.
    const double zr = std::pow(2.0 * 0.81 / kPi, 0.25), zc = std::pow(2.0 * 1.21 / kPi, 0.25);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> pick(0, st.wf.values.size() - 1);
    for (int n = 0; n < 500; ++n) {
      const std::size_t f = pick(rng);
      const auto idx = st.wf.unflatten(f);
      const Vec3 p1(ax.momentum(idx[0]), ax.momentum(idx[1]), 0.0);
      const Vec3 p2(ax.momentum(idx[2]), ax.momentum(idx[3]), 0.0);
      Vec3 kr = 0.5 * (p1 - p2), P = p1 + p2;
      kr[2] = k0[2];
      P[2] = P0[2];
      const cplx expected = eval_packet_momentum(rel, kr, kDesk) / zr *
                            eval_packet_momentum(cm, P, kDesk) / zc;
      CHECK(std::abs(st.wf.values[f] - expected) < 1e-12);
    }
    auto with_b = assemble_two_particle(rel, cm, g, fr, kDesk, true);
    auto manual = st.wf;
    b_map(manual, st.layout, kDesk);
    CHECK(max_abs_diff(manual, with_b.wf) == 0.0);
  }

  SUBCASE("momentum peak sits at the particle momenta") {
    const JacobiFrame fr2 = reduced_total_mass(1.0, 2.0);
    const Vec3 qdot(0.9, -0.6, 0.0), qodot(0.3, 0.45, 0.0);
    const MinimumPacket rel{fr2.mu, 1.5, Vec3(1.0, 0.0, 0.0), qdot, 0.0};
    const MinimumPacket cm{fr2.m_T, 1.5, Vec3::Zero(), qodot, 0.0};
    const auto g2 = make_grid({AxisSpec{32, 24.0, 0.0, 0.0}, AxisSpec{32, 24.0, 0.0, 0.0},
                               AxisSpec{32, 24.0, 0.0, 0.0}, AxisSpec{32, 24.0, 0.0, 0.0}});
    const auto st = assemble_two_particle(rel, cm, g2, fr2, kDesk);
    std::size_t best = 0;
    for (std::size_t i = 1; i < st.wf.values.size(); ++i)
      if (std::abs(st.wf.values[i]) > std::abs(st.wf.values[best])) best = i;
    const auto idx = st.wf.unflatten(best);
    const Vec3 v1 = qodot + fr2.m2 / fr2.m_T * qdot, v2 = qodot - fr2.m1 / fr2.m_T * qdot;
    const double dp = g2.axes[0].dp();
    CHECK(std::abs(g2.axes[0].momentum(idx[0]) - fr2.m1 * v1[0]) <= dp);
    CHECK(std::abs(g2.axes[1].momentum(idx[1]) - fr2.m1 * v1[1]) <= dp);
    CHECK(std::abs(g2.axes[2].momentum(idx[2]) - fr2.m2 * v2[0]) <= dp);
    CHECK(std::abs(g2.axes[3].momentum(idx[3]) - fr2.m2 * v2[1]) <= dp);
  }

  SUBCASE("coarse grid is rejected") {
    const MinimumPacket rel{fr.mu, 1.0, Vec3::Zero(), Vec3::Zero(), 0.0};
    const MinimumPacket cm{fr.m_T, 1.0, Vec3::Zero(), Vec3::Zero(), 0.0};
    const AxisSpec tiny{16, 2.0, 0.0, 0.0};
    CHECK_THROWS_AS(assemble_two_particle(rel, cm, make_grid({tiny, tiny, tiny, tiny}), fr, kDesk),
                    ConfigurationError);
    CHECK_THROWS_AS(assemble_two_particle(cm, rel, g, fr, kDesk), DomainError);
  }
}

TEST_CASE("Jacobi separation of nonrelativistic evolution") {
  const JacobiFrame fr = reduced_total_mass(1.0, 3.0);
  const double sr = 1.0, so = 1.2, T = 1.5;
  const double q = 0.8, qdot = 0.4, qo = -0.3, qodot = 0.2, phi = 0.25;
  const MinimumPacket rel{fr.mu, sr, Vec3(q, 0.0, 0.0), Vec3(qdot, 0.0, 0.0), phi};
  const MinimumPacket cm{fr.m_T, so, Vec3(qo, 0.0, 0.0), Vec3(qodot, 0.0, 0.0), 0.0};
  const double k0 = rel.carrier(kDesk)[0], P0 = cm.carrier(kDesk)[0];
  const double pc1 = fr.m1 / fr.m_T * P0 + k0, pc2 = fr.m2 / fr.m_T * P0 - k0;
  const auto g = make_grid({AxisSpec{256, 40.0, 0.0, pc1}, AxisSpec{256, 40.0, 0.0, pc2}});
  auto st = assemble_two_particle(rel, cm, g, fr, kDesk, false);
  propagate(st.wf, st.layout, T, Mode::NonRelativistic, kDesk);
  const auto pos = transform(st.wf);

  WaveFunction oracle(g, Space::Position);
  for (std::size_t f = 0; f < oracle.values.size(); ++f) {
    const auto idx = oracle.unflatten(f);
    const double x1 = g.axes[0].position(idx[0]), x2 = g.axes[1].position(idx[1]);
    const double qr = x1 - x2, qc = (fr.m1 * x1 + fr.m2 * x2) / fr.m_T;
    // Kinetic evolution of each factor; the joint rest phase is (m1 + m2) c^2 t.
    const cplx fa = free_gaussian(qr, T, fr.mu, sr, q, k0, phi, kDesk, false);
    const cplx fb = free_gaussian(qc, T, fr.m_T, so, qo, P0, 0.0, kDesk, false);
    const double rest = fr.m_T * kDesk.c * kDesk.c * T / kDesk.hbar;
    oracle.values[f] = fa * fb * std::polar(1.0, pc1 * x1 + pc2 * x2 - rest);
  }
  CHECK(l2_diff(pos, oracle) / oracle.norm() < 1e-10);
}

TEST_CASE("UQFT factorization defect is nonzero but within the dispersion estimate") {
  const PhysicalConstants k{1.0, 30.0, 1.0};
  const JacobiFrame fr = reduced_total_mass(1.0, 2.0);
  const MinimumPacket rel{fr.mu, 0.5, Vec3(0.5, 0.0, 0.0), Vec3(1.0, 0.0, 0.0), 0.0};
  const MinimumPacket cm{fr.m_T, 0.5, Vec3::Zero(), Vec3(0.5, 0.0, 0.0), 0.0};
  const auto g = make_grid({AxisSpec{256, 40.0, 0.0, 0.0}, AxisSpec{256, 40.0, 0.0, 0.0}});
  const auto st = assemble_two_particle(rel, cm, g, fr, k, false);
  const double T = 1.0;
  const auto u = propagated(st.wf, st.layout, T, Mode::UQFT, k);
  const auto n = propagated(st.wf, st.layout, T, Mode::NonRelativistic, k);
  const double defect = l2_diff(u, n) / st.wf.norm();

  // |omega - kappa - p^2/(2 kappa)| <= p^4 / (8 kappa^3) per particle.
  double s = 0.0;
  for (std::size_t f = 0; f < st.wf.values.size(); ++f) {
    const auto idx = st.wf.unflatten(f);
    double d = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double m = j == 0 ? fr.m1 : fr.m2;
      const double kappa = m * k.c / k.hbar, p = g.axes[j].momentum(idx[j]);
      d += std::pow(p, 4) / (8.0 * std::pow(kappa, 3)) * k.c * T;
    }
    s += d * d * std::norm(st.wf.values[f]);
  }
  const double estimate = std::sqrt(s * g.momentum_cell_volume()) / st.wf.norm();
  CHECK(defect > 0.1 * estimate);
  CHECK(defect <= estimate);
}

TEST_CASE("marginals integrate the other particle out") {
  const JacobiFrame fr = reduced_total_mass(1.0, 1.0);
  const MinimumPacket rel{fr.mu, 1.0, Vec3(2.0, 0.0, 0.0), Vec3::Zero(), 0.0};
  const MinimumPacket cm{fr.m_T, 1.0, Vec3(0.5, 0.0, 0.0), Vec3::Zero(), 0.0};
  const auto g = make_grid({AxisSpec{128, 30.0, 0.0, 0.0}, AxisSpec{128, 30.0, 0.0, 0.0}});
  const auto st = assemble_two_particle(rel, cm, g, fr, kDesk, false);
  const auto pos = transform(st.wf);
  const auto m1 = marginal(pos, st.layout, 0);
  const auto m2 = marginal(pos, st.layout, 1);
  CHECK(m1.norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m2.norm() == doctest::Approx(1.0).epsilon(1e-10));
  const auto x = jacobi_inverse(rel.q, cm.q, fr);
  CHECK(peak_track(m1)[0] == doctest::Approx(x.x1[0]).epsilon(1e-9));
  CHECK(peak_track(m2)[0] == doctest::Approx(x.x2[0]).epsilon(1e-9));
}

TEST_CASE("tracking: zero step and free relative motion") {
  const PhysicalConstants k{1.0, 1e3, 1.0};
  TrackingScenario sc;
  sc.frame = reduced_total_mass(1.0, 1.0);
  sc.motion = RelativeMotion::Free;
  sc.q_rel0 = Vec3(3.0, 0.0, 0.0);
  sc.qrel_dot = Vec3(0.5, 0.25, 0.0);
  sc.qo_dot = Vec3(0.1, -0.2, 0.0);
  sc.sigma = sc.sigma_o = 1.0;
  sc.points = 32;
  sc.constants = k;

  const auto zero = tracking_error(sc, 0.0, 0.0);
  CHECK(zero.evolution_error == 0.0);
  CHECK(zero.peak_error <= zero.grid.axes[0].dx());
  CHECK(zero.compliant);

  // Straight-line motion: the only mismatch is the spreading the fixed-width
  // target packets leave out. Closed form per axis: overlap
  // (1 + i e)^(-1/2) exp(i e) with e = hbar dt / (4 m sigma^2).
  auto predicted = [&](double dt) {
    cplx ov{1.0, 0.0};
    for (double m : {sc.frame.mu, sc.frame.m_T}) {
      const double e = k.hbar * dt / (4.0 * m);
      const cplx o = std::pow(cplx(1.0, e), -0.5) * std::polar(1.0, e);
      ov *= o * o;
    }
    return std::sqrt(2.0 - 2.0 * ov.real());
  };
  const double t_spread = 2.0 * sc.frame.mu / k.hbar;
  for (double frac : {0.1, 1e-3}) {
    const double dt = frac * t_spread;
    const auto r = tracking_error(sc, 0.0, dt);
    CHECK(r.evolution_error == doctest::Approx(predicted(dt)).epsilon(0.01));
    CHECK(r.peak_error <= r.grid.axes[0].dx());
  }
  CHECK(tracking_error(sc, 0.0, 1e-3 * t_spread).evolution_error < 1e-3);
}

TEST_CASE("tracking grid rejects too few points") {
  TrackingScenario sc;
  sc.frame = reduced_total_mass(1.0, 1.0);
  sc.motion = RelativeMotion::Free;
  sc.q_rel0 = Vec3(3.0, 0.0, 0.0);
  sc.qrel_dot = Vec3(50.0, 0.0, 0.0);
  sc.points = 16;
  sc.constants = kDesk;
  CHECK_THROWS_AS(tracking_grid(sc, 0.0, 1.0), ConfigurationError);
}

TEST_CASE("tracking CSV and snapshot round trip") {
  TrackingResult r;
  r.delta_t = 0.1;
  r.evolution_error = 1.0 / 3.0;
  r.peak_error_x1 = 2e-3;
  r.peak_error_x2 = 3e-3;
  std::ostringstream csv;
  write_tracking_csv(csv, {r});
  CHECK(csv.str() ==
        "delta_t,evolution_error,peak_error_x1,peak_error_x2\n"
        "0.10000000000000001,0.33333333333333331,0.002,0.0030000000000000001\n");

  const auto g = make_grid({AxisSpec{16, 2.0, 0.0, 0.0}, AxisSpec{32, 3.0, 0.0, 0.0}});
  const auto wf = random_state(g, Space::Momentum, 77);
  std::stringstream bin;
  write_snapshot(bin, wf);
  const std::string bytes = bin.str();
  CHECK(bytes.size() == 64 + 16 * wf.values.size());
  CHECK(bytes.substr(0, 8) == "UQFTWF01");
  const auto back = read_snapshot(bin);
  CHECK(back.space == Space::Momentum);
  CHECK(back.grid.dims() == 2);
  CHECK(back.grid.axes[1].points == 32u);
  CHECK(back.grid.axes[1].extent == 3.0);
  CHECK(max_abs_diff(back, wf) == 0.0);

  std::stringstream bad("NOTASNAP");
  CHECK_THROWS_AS(read_snapshot(bad), ConfigurationError);
}
