// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/wightman.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "uqftlab/errors.hpp"

namespace uqftlab {
namespace {

constexpr double kPi = std::numbers::pi;

double omega_k(const Vec3& p, double kappa) { return std::sqrt(kappa * kappa + p.squaredNorm()); }

void require_kappa(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be positive");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Running mean and squared deviations of complex samples (Welford), merged
// pairwise in stream order.
struct Accumulator {
  double n = 0.0;
  cplx mean{0.0, 0.0};
  double m2_re = 0.0;
  double m2_im = 0.0;
  std::size_t rejected = 0;

  void add(cplx x) {
    n += 1.0;
    const cplx d = x - mean;
    mean += d / n;
    const cplx d2 = x - mean;
    m2_re += d.real() * d2.real();
    m2_im += d.imag() * d2.imag();
  }
  void merge(const Accumulator& o) {
    if (o.n == 0.0) {
      rejected += o.rejected;
      return;
    }
    const double total = n + o.n;
    const cplx d = o.mean - mean;
    mean += d * (o.n / total);
    m2_re += o.m2_re + d.real() * d.real() * n * o.n / total;
    m2_im += o.m2_im + d.imag() * d.imag() * n * o.n / total;
    n = total;
    rejected += o.rejected;
  }
};

// Gaussian proposal over (p1, p2) with a 2x2 covariance shared by the three
// axes, mixed 50/50 with its exchange p1 <-> p2.
class PairProposal {
 public:
  PairProposal(const Label2& f, double scale) : c1_(f.center1), c2_(f.center2) {
    if (!(scale > 0.0)) throw ConfigurationError("proposal_scale must be positive");
    const double s2 = scale * scale;
    const double v1 = f.var1 * s2, v2 = f.var2 * s2, c = f.cov12 * s2;
    const double det = v1 * v2 - c * c;
    if (!(v1 > 0.0) || !(v2 > 0.0) || !(det > 1e-14 * v1 * v2) || !std::isfinite(det))
      throw ConfigurationError("degenerate proposal: label covariance is singular");
    l11_ = std::sqrt(v1);
    l21_ = c / l11_;
    l22_ = std::sqrt(v2 - l21_ * l21_);
    i11_ = v2 / det;
    i22_ = v1 / det;
    i12_ = -c / det;
    log_norm_ = -3.0 * std::log(2.0 * kPi * std::sqrt(det));
  }

  template <class Rng>
  void draw(Rng& rng, Vec3& p1, Vec3& p2) const {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int a = 0; a < 3; ++a) {
      const double z1 = n(rng), z2 = n(rng);
      p1[a] = c1_[a] + l11_ * z1;
      p2[a] = c2_[a] + l21_ * z1 + l22_ * z2;
    }
    if (u(rng) < 0.5) std::swap(p1, p2);
  }

  double density(const Vec3& p1, const Vec3& p2) const {
    const double a = log_gauss(p1, p2), b = log_gauss(p2, p1);
    const double m = std::max(a, b);
    return 0.5 * std::exp(m) * (std::exp(a - m) + std::exp(b - m));
  }

 private:
  double log_gauss(const Vec3& p1, const Vec3& p2) const {
    const Vec3 d1 = p1 - c1_, d2 = p2 - c2_;
    const double q = i11_ * d1.squaredNorm() + 2.0 * i12_ * d1.dot(d2) + i22_ * d2.squaredNorm();
    return log_norm_ - 0.5 * q;
  }

  Vec3 c1_, c2_;
  double l11_, l21_, l22_;
  double i11_, i12_, i22_;
  double log_norm_;
};

// One sample's contribution, or nullopt when it is rejected.
using SampleFn = std::function<std::optional<cplx>(std::mt19937_64&)>;

AmplitudeEstimate run_monte_carlo(const MonteCarloConfig& mc, const SampleFn& sample) {
  if (mc.samples < 2) throw ConfigurationError("at least two samples are required");
  std::vector<Accumulator> streams(kStreams);
  auto run_stream = [&](std::size_t s) {
    std::mt19937_64 rng(splitmix64(mc.seed ^ splitmix64(s + 1)));
    const std::size_t count = mc.samples / kStreams + (s < mc.samples % kStreams ? 1 : 0);
    Accumulator& acc = streams[s];
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = sample(rng);
      if (x) {
        acc.add(*x);
      } else {
        acc.add(cplx{0.0, 0.0});
        ++acc.rejected;
      }
    }
  };

  std::size_t workers = mc.workers == 0 ? std::thread::hardware_concurrency() : mc.workers;
  workers = std::clamp<std::size_t>(workers, 1, kStreams);
  if (workers == 1) {
    for (std::size_t s = 0; s < kStreams; ++s) run_stream(s);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = w; s < kStreams; s += workers) run_stream(s);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  Accumulator total;
  for (const auto& s : streams) total.merge(s);
  AmplitudeEstimate e;
  e.value = total.mean;
  e.samples = static_cast<std::size_t>(total.n);
  e.seed = mc.seed;
  e.rejection_rate = static_cast<double>(total.rejected) / total.n;
  const double var = (total.m2_re + total.m2_im) / (total.n - 1.0);
  e.std_error = std::sqrt(var / total.n);
  return e;
}

// Adaptive Gauss-Kronrod on [a, b] mapped by hand to [-1, 1]; accumulates
// the reported error.
template <class F>
cplx gk(F&& f, double a, double b, double tol, double& err) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double e = 0.0;
  const cplx r = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double t) { return f(mid + half * t); }, -1.0, 1.0, 12, tol, &e);
  err += e * half;
  return r * half;
}

}  // namespace

Vec4 on_shell(const Vec3& p, double kappa) {
  Vec4 v;
  v << omega_k(p, kappa), p;
  return v;
}

Label1 packet_label(const MinimumPacket& pk, const PhysicalConstants& k) {
  pk.validate();
  return Label1{[pk, k](const Vec3& p) { return eval_packet_momentum(pk, p, k); }, pk.carrier(k),
                0.5 / pk.sigma};
}

Label1 b_form(const Label1& f, double kappa) {
  require_kappa(kappa);
  Label1 out = f;
  out.eval = [e = f.eval, kappa](const Vec3& p) { return 2.0 * omega_k(p, kappa) * e(p); };
  return out;
}

Label2 product_label(const Label1& a, const Label1& b) {
  return Label2{[ea = a.eval, eb = b.eval](const Vec3& p1, const Vec3& p2) { return ea(p1) * eb(p2); },
                a.center, b.center, a.spread * a.spread, b.spread * b.spread, 0.0};
}

Label2 jacobi_label(const MinimumPacket& rel, const MinimumPacket& cm, double kappa,
                    const PhysicalConstants& k) {
  require_kappa(kappa);
  rel.validate();
  cm.validate();
  if (std::abs(cm.m - 4.0 * rel.m) > 1e-12 * cm.m)
    throw DomainError("jacobi_label needs mu = m/2 and m_T = 2m");
  if (std::abs(0.5 * cm.m * k.c / k.hbar - kappa) > 1e-12 * kappa)
    throw DomainError("packet masses do not match the field's kappa");
  const double sP2 = std::pow(0.5 / cm.sigma, 2), sk2 = std::pow(0.5 / rel.sigma, 2);
  const Vec3 P0 = cm.carrier(k), k0 = rel.carrier(k);
  Label2 out;
  out.eval = [rel, cm, kappa, k](const Vec3& p1, const Vec3& p2) {
    return 4.0 * omega_k(p1, kappa) * omega_k(p2, kappa) *
           eval_packet_momentum(rel, 0.5 * (p1 - p2), k) * eval_packet_momentum(cm, p1 + p2, k);
  };
  out.center1 = 0.5 * P0 + k0;
  out.center2 = 0.5 * P0 - k0;
  out.var1 = out.var2 = 0.25 * sP2 + sk2;
  out.cov12 = 0.25 * sP2 - sk2;
  return out;
}

Label2 symmetrize(const Label2& f) {
  Label2 out = f;
  out.eval = [e = f.eval](const Vec3& p1, const Vec3& p2) { return 0.5 * (e(p1, p2) + e(p2, p1)); };
  return out;
}

Label2 swapped(const Label2& f) {
  return Label2{[e = f.eval](const Vec3& p1, const Vec3& p2) { return e(p2, p1); }, f.center2,
                f.center1, f.var2, f.var1, f.cov12};
}

ScalarFunction4 constant_function(cplx value) {
  return [value](const Vec4&) { return value; };
}

ScalarFunction4 gaussian_damped(double amplitude, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  return [amplitude, lambda](const Vec4& p) {
    const double x = minkowski_square(p) / (lambda * lambda);
    return cplx{amplitude * std::exp(-x * x), 0.0};
  };
}

ScalarFunction4 laplace_exponential(const Vec4& s) {
  if (!(s[0] > s.tail<3>().norm())) throw DomainError("s must be forward timelike");
  return [s](const Vec4& p) {
    return cplx{std::exp(-(s[0] * p[0] - s.tail<3>().dot(p.tail<3>()))), 0.0};
  };
}

std::vector<std::string> validate_model(const WightmanModel& model, std::size_t probes) {
  std::vector<std::string> v;
  if (!(model.c4 >= 0.0) || !std::isfinite(model.c4)) v.emplace_back("c4 must be nonnegative");
  if (!(model.beta_combined >= 0.0) || !std::isfinite(model.beta_combined))
    v.emplace_back("beta_combined must be nonnegative");
  if (!model.U_e) v.emplace_back("U_e is not set");
  if (!model.Upsilon) v.emplace_back("Upsilon is not set");
  if (!v.empty() && (!model.U_e || !model.Upsilon)) return v;

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool even = true, bounded = true, positive = true;
  for (std::size_t i = 0; i < probes; ++i) {
    const double scale = std::pow(10.0, -1.0 + 2.0 * u(rng));
    Vec4 p;
    for (int a = 0; a < 4; ++a) p[a] = scale * n(rng);
    const cplx a = model.U_e(p), b = model.U_e(-p);
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) bounded = false;
    else if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) even = false;

    // Forward timelike probe.
    const Vec3 q = scale * Vec3(n(rng), n(rng), n(rng));
    Vec4 t;
    t << std::sqrt(q.squaredNorm() + std::pow(scale * (0.1 + u(rng)), 2)), q;
    const cplx y = model.Upsilon(t);
    if (!std::isfinite(y.real()) || !std::isfinite(y.imag())) bounded = false;
    else if (!(y.real() > 0.0) || std::abs(y.imag()) > 1e-12 * y.real()) positive = false;
  }
  if (!even) v.emplace_back("U_e is not even");
  if (!bounded) v.emplace_back("model function is not finite on a probe");
  if (!positive) v.emplace_back("Upsilon is not positive on timelike probes");
  return v;
}

cplx shell_overlap(const Label1& f, const Label1& g, int power, double kappa, double rel_tol) {
  require_kappa(kappa);
  if (!f.eval || !g.eval) throw ConfigurationError("label has no evaluator");
  if (!(f.spread > 0.0) || !(g.spread > 0.0)) throw ConfigurationError("label spread must be positive");
  Vec3 lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(f.center[a] - 10.0 * f.spread, g.center[a] - 10.0 * g.spread);
    hi[a] = std::min(f.center[a] + 10.0 * f.spread, g.center[a] + 10.0 * g.spread);
    if (!(hi[a] > lo[a])) return cplx{0.0, 0.0};  // disjoint supports
  }
  const double inner_tol = rel_tol;
  double err = 0.0, err_inner = 0.0;
  auto integrand = [&](const Vec3& p) {
    return std::conj(f.eval(p)) * g.eval(p) * std::pow(2.0 * omega_k(p, kappa), -power);
  };
  const cplx r = gk(
      [&](double x) {
        return gk(
            [&](double y) {
              return gk(
                  [&](double z) { return integrand(Vec3(x, y, z)); },
                  lo[2], hi[2], inner_tol, err_inner);
            },
            lo[1], hi[1], inner_tol, err_inner);
      },
      lo[0], hi[0], rel_tol, err);
  // Absolute floor from the labels' peak amplitudes, so that a vanishing
  // overlap of separated labels does not count as non-convergence.
  const double peak = std::abs(f.eval(f.center)) * std::abs(g.eval(g.center)) *
                      std::pow(2.0 * kappa, -power) * (hi - lo).prod();
  const double scale = std::abs(r) + 1e-4 * peak;
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag()) || err > rel_tol * scale)
    throw NumericalError("shell_overlap did not converge", err / std::max(scale, 1e-300));
  return r;
}

cplx two_point_product(const Label1& f, const Label1& g, double kappa) {
  return shell_overlap(f, g, 1, kappa);
}

AmplitudeEstimate four_point_free(const Label2& f, const Label2& g, double kappa,
                                  const MonteCarloConfig& mc) {
  require_kappa(kappa);
  if (!f.eval || !g.eval) throw ConfigurationError("label has no evaluator");
  const PairProposal prop(f, mc.proposal_scale);
  return run_monte_carlo(mc, [&](std::mt19937_64& rng) -> std::optional<cplx> {
    Vec3 p1, p2;
    prop.draw(rng, p1, p2);
    const double w = std::pow(4.0 * omega_k(p1, kappa) * omega_k(p2, kappa), -3.0);
    return w * std::conj(f.eval(p1, p2)) * (g.eval(p1, p2) + g.eval(p2, p1)) / prop.density(p1, p2);
  });
}

AmplitudeEstimate four_point_connected(const Label2& f, const Label2& g,
                                       const WightmanModel& model, double kappa,
                                       const MonteCarloConfig& mc) {
  require_kappa(kappa);
  if (!f.eval || !g.eval) throw ConfigurationError("label has no evaluator");
  const auto violations = validate_model(model);
  if (!violations.empty()) throw ConfigurationError("invalid model: " + violations.front());
  const PairProposal prop(f, mc.proposal_scale);
  if (model.c4 == 0.0) {
    AmplitudeEstimate e;
    e.samples = mc.samples;
    e.seed = mc.seed;
    return e;
  }
  const bool printed = model.legs == LegNormalization::AsPrinted;
  const double beta = model.beta_combined;

  auto est = run_monte_carlo(mc, [&](std::mt19937_64& rng) -> std::optional<cplx> {
    Vec3 p1, p2;
    prop.draw(rng, p1, p2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cz = 2.0 * u(rng) - 1.0, ph = 2.0 * kPi * u(rng);
    const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    const Vec3 n(sz * std::cos(ph), sz * std::sin(ph), cz);

    const Vec3 half = 0.5 * (p1 + p2);
    const double w1 = omega_k(p1, kappa), w2 = omega_k(p2, kappa);
    const double E = w1 + w2;
    auto h = [&](double rho) {
      return omega_k(half + rho * n, kappa) + omega_k(half - rho * n, kappa) - E;
    };
    // h is even and convex in rho, h(0) <= 0 and h(E/2) >= 0.
    if (h(0.0) >= 0.0) return cplx{0.0, 0.0};
    double rho = 0.0;
    try {
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(
          h, 0.0, 0.5 * E, boost::math::tools::eps_tolerance<double>(42), iters);
      if (iters >= 200) return std::nullopt;
      rho = 0.5 * (r.first + r.second);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    const Vec3 p3 = half + rho * n, p4 = half - rho * n;
    const double w3 = omega_k(p3, kappa), w4 = omega_k(p4, kappa);
    const double dh = n.dot(p3) / w3 - n.dot(p4) / w4;
    if (!(dh > 0.0)) return std::nullopt;

    const Vec4 k1 = on_shell(p1, kappa), k2 = on_shell(p2, kappa);
    const Vec4 k3 = on_shell(p3, kappa), k4 = on_shell(p4, kappa);
    const cplx kernel = std::conj(model.U_e(k1 - k2)) * model.U_e(k3 - k4) +
                        beta * model.Upsilon(k1 + k3) * model.Upsilon(k2 + k4) +
                        beta * model.Upsilon(k1 + k4) * model.Upsilon(k2 + k3);
    const double measure = 1.0 / (16.0 * w1 * w2 * w3 * w4);
    const double legs = printed ? measure : std::sqrt(measure);
    const double jac = 4.0 * kPi * rho * rho / dh;
    const cplx v = model.c4 * kConservationNorm * measure * legs * jac * std::conj(f.eval(p1, p2)) *
                   g.eval(p3, p4) * kernel / prop.density(p1, p2);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return std::nullopt;
    return v;
  });
  if (est.rejection_rate > 0.5)
    throw ConfigurationError("more than half of the samples were rejected");
  return est;
}

void write_estimate_json(std::ostream& os, const AmplitudeEstimate& e) {
  nlohmann::ordered_json j;
  j["value_re"] = e.value.real();
  j["value_im"] = e.value.imag();
  j["std_error"] = e.std_error;
  j["samples"] = e.samples;
  j["rejection_rate"] = e.rejection_rate;
  j["seed"] = e.seed;
  os << j.dump(2) << '\n';
}

}  // namespace uqftlab
