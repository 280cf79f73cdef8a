// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uqftlab/grid.hpp"
#include "uqftlab/packets.hpp"

// Two- and four-point Wightman functionals of a neutral scalar field of
// mass kappa = mc/hbar (1/m), evaluated on momentum-space labels with the
// energies on the positive shell E = omega(p). Momenta are wavenumbers.

namespace uqftlab {

/// (E, px, py, pz).
using Vec4 = Eigen::Vector4d;

/// E^2 - |p|^2.
inline double minkowski_square(const Vec4& p) { return p[0] * p[0] - p.tail<3>().squaredNorm(); }
/// On-shell 4-vector (omega(p), p).
Vec4 on_shell(const Vec3& p, double kappa);

/// Single-particle label. `center` and `spread` describe where |f|^2 lives
/// (mean and per-axis standard deviation); they bound quadrature boxes and
/// shape Monte Carlo proposals.
struct Label1 {
  std::function<cplx(const Vec3&)> eval;
  Vec3 center = Vec3::Zero();
  double spread = 1.0;
};

/// Two-particle label with a Gaussian description of |f|^2 per Cartesian
/// axis: variances var1, var2 and covariance cov12 between p1 and p2.
struct Label2 {
  std::function<cplx(const Vec3&, const Vec3&)> eval;
  Vec3 center1 = Vec3::Zero();
  Vec3 center2 = Vec3::Zero();
  double var1 = 1.0;
  double var2 = 1.0;
  double cov12 = 0.0;
};

/// Minimum packet in momentum space. Desk units put hbar in `k`.
Label1 packet_label(const MinimumPacket& pk, const PhysicalConstants& k = {});
/// Multiplies by E + omega = 2 omega on the positive shell.
Label1 b_form(const Label1& f, double kappa);
Label2 product_label(const Label1& a, const Label1& b);
/// 2 omega_1 2 omega_2 phi~_rel((p1 - p2)/2) phi~_cm(p1 + p2) for two
/// particles of the field's mass.
Label2 jacobi_label(const MinimumPacket& rel, const MinimumPacket& cm, double kappa,
                    const PhysicalConstants& k = {});
/// (f(p1, p2) + f(p2, p1)) / 2.
Label2 symmetrize(const Label2& f);
/// f(p2, p1).
Label2 swapped(const Label2& f);

using ScalarFunction4 = std::function<cplx(const Vec4&)>;

/// Per-leg factor of the connected function. The free part always carries
/// 1/sqrt(2 omega) per leg; AsPrinted gives the connected part 1/(2 omega),
/// Harmonized gives it 1/sqrt(2 omega) as well.
enum class LegNormalization { AsPrinted, Harmonized };

struct WightmanModel {
  double c4 = 1.0;
  double beta_combined = 1.0;  // (beta_2 beta_4 + beta_3^2) / 2
  ScalarFunction4 U_e;         // even part of U_2
  ScalarFunction4 Upsilon;
  LegNormalization legs = LegNormalization::AsPrinted;
};

ScalarFunction4 constant_function(cplx value);
/// A exp(-(p^2 / Lambda^2)^2): even, Lorentz invariant and bounded.
ScalarFunction4 gaussian_damped(double amplitude, double lambda);
/// exp(-s.p) for a forward timelike s (Minkowski product).
ScalarFunction4 laplace_exponential(const Vec4& s);

/// Empty when the model is usable. Probes are drawn from a fixed seed.
std::vector<std::string> validate_model(const WightmanModel& model, std::size_t probes = 256);

/// (2 pi)^4 from the u integral; the only 2 pi constant in the functionals.
inline constexpr double kConservationNorm =
    16.0 * std::numbers::pi * std::numbers::pi * std::numbers::pi * std::numbers::pi;

/// int d^3p (2 omega)^-power conj(f) g by nested adaptive Gauss-Kronrod
/// over the overlap of the labels' boxes (center +- 10 spread). Throws
/// NumericalError when the estimated error exceeds rel_tol.
cplx shell_overlap(const Label1& f, const Label1& g, int power, double kappa,
                   double rel_tol = 1e-10);
/// W_2(f* g) = int d^3p / (2 omega) conj(f~) g~.
cplx two_point_product(const Label1& f, const Label1& g, double kappa = 1.0);

struct MonteCarloConfig {
  std::uint64_t seed = 1;
  std::size_t samples = 1u << 20;
  std::size_t workers = 1;       // 0 selects the hardware count
  double proposal_scale = 1.25;  // proposal covariance = scale^2 * label's
};

/// Fixed number of independent sub-streams; results do not depend on the
/// worker count.
inline constexpr std::size_t kStreams = 64;

struct AmplitudeEstimate {
  cplx value{0.0, 0.0};
  double std_error = 0.0;  // sqrt((var_re + var_im) / n)
  std::size_t samples = 0;
  double rejection_rate = 0.0;
  std::uint64_t seed = 0;
};

/// int d^3p1 d^3p2 w(p1) w(p2) conj(f(p1,p2)) (g(p1,p2) + g(p2,p1)) with
/// w = (2 omega)^-3: d^3p/(2 omega) from each of the four shell measures
/// and 1/sqrt(2 omega) per leg. Importance sampling from f's Gaussian
/// description mixed with its exchange. A singular description raises
/// ConfigurationError.
AmplitudeEstimate four_point_free(const Label2& f, const Label2& g, double kappa = 1.0,
                                  const MonteCarloConfig& mc = {});

/// c4 (2 pi)^4 int prod d^3p_k/(2 omega_k) L_k delta^4(p3 + p4 - p1 - p2)
///   conj(f(p1,p2)) g(p3,p4) [conj(U_e(p1-p2)) U_e(p3-p4)
///     + beta Upsilon(p1+p3) Upsilon(p2+p4) + beta Upsilon(p1+p4) Upsilon(p2+p3)]
/// with L_k the leg factor. (p1, p2) come from f's proposal, p3 = P/2 + rho n
/// with n uniform on the sphere and rho the root of the energy balance.
/// Samples whose root cannot be bracketed are rejected (counted as zero);
/// more than half rejected raises ConfigurationError, as does an invalid
/// model.
AmplitudeEstimate four_point_connected(const Label2& f, const Label2& g,
                                       const WightmanModel& model, double kappa = 1.0,
                                       const MonteCarloConfig& mc = {});

void write_estimate_json(std::ostream& os, const AmplitudeEstimate& e);

}  // namespace uqftlab
