// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "uqftlab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "uqftlab/errors.hpp"
#include "uqftlab/packets.hpp"
#include "uqftlab/spectral.hpp"

namespace uqftlab {

namespace fs = std::filesystem;

namespace {

using Env = std::function<const char*(const std::string&)>;

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Shortest text that reads back to the same double.
std::string round_trip(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads typed values from a document, applying environment overrides and
// recording every value it hands out.
class Reader {
 public:
  Reader(const ConfigDocument& doc, Env env) : doc_(doc), env_(std::move(env)), source_(doc) {}

  std::string text(const std::string& section, const std::string& key,
                   const std::optional<std::string>& fallback) {
    std::optional<std::string> v;
    if (env_) {
      if (const char* e = env_("UQFTLAB_" + upper(section) + "_" + upper(key))) {
        v = trim(e);
        source_[section][key] = *v;
      }
    }
    if (!v) {
      const auto s = doc_.find(section);
      if (s != doc_.end()) {
        const auto k = s->second.find(key);
        if (k != s->second.end()) v = trim(k->second);
      }
    }
    if (!v) {
      if (!fallback) throw ConfigurationError(section + "." + key + ": required");
      v = fallback;
    }
    used_.insert(section + "." + key);
    resolved_[section][key] = *v;
    return *v;
  }

  bool has(const std::string& section, const std::string& key) const {
    if (env_ && env_("UQFTLAB_" + upper(section) + "_" + upper(key))) return true;
    const auto s = doc_.find(section);
    return s != doc_.end() && s->second.count(key) > 0;
  }

  double number(const std::string& section, const std::string& key,
                std::optional<double> fallback = std::nullopt) {
    const std::string t =
        text(section, key, fallback ? std::optional<std::string>(round_trip(*fallback)) : std::nullopt);
    return parse_number(section + "." + key, t);
  }

  double positive(const std::string& section, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
    const double v = number(section, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigurationError(section + "." + key + ": must be positive");
    return v;
  }

  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) {
    const std::string t = text(section, key, std::to_string(fallback));
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(t, &pos);
      if (pos != t.size() || v < 0) throw std::invalid_argument("");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigurationError(section + "." + key + ": not a nonnegative integer");
    }
  }

  std::vector<double> numbers(const std::string& section, const std::string& key,
                              const std::string& fallback) {
    std::vector<double> out;
    for (const auto& item : split_list(text(section, key, fallback)))
      out.push_back(parse_number(section + "." + key, item));
    return out;
  }

  /// Every key present in the document must have been read.
  void reject_unknown() const {
    for (const auto& [section, keys] : doc_)
      for (const auto& [key, value] : keys)
        if (!used_.count(section + "." + key))
          throw ConfigurationError(section + "." + key + ": unknown key for this scenario kind");
  }

  const ConfigDocument& resolved() const { return resolved_; }
  const ConfigDocument& source() const { return source_; }

  static double parse_number(const std::string& field, const std::string& t) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(t, &pos);
      if (pos != t.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigurationError(field + ": not a number");
    }
  }

 private:
  const ConfigDocument& doc_;
  Env env_;
  ConfigDocument source_;
  ConfigDocument resolved_;
  std::set<std::string> used_;
};

ScenarioKind parse_kind(const std::string& field, const std::string& s) {
  if (s == "kepler") return ScenarioKind::Kepler;
  if (s == "packet") return ScenarioKind::PacketCheck;
  if (s == "evolve") return ScenarioKind::Evolve;
  if (s == "wightman") return ScenarioKind::Wightman;
  if (s == "sweep") return ScenarioKind::Sweep;
  throw ConfigurationError(field + ": unknown kind '" + s + "'");
}

Regime parse_regime(const std::string& s) {
  if (s == "bound") return Regime::Bound;
  if (s == "scattered") return Regime::Scattered;
  if (s == "transition") return Regime::Transition;
  throw ConfigurationError("orbit.regime: expected bound, scattered or transition");
}

bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

void read_orbit(Reader& r, ScenarioConfig& c) {
  c.orbit_from_energy = r.has("orbit", "delta_E_J");
  if (c.orbit_from_energy) {
    c.delta_e = r.number("orbit", "delta_E_J");
    c.L = r.positive("orbit", "L_m2_per_s");
  } else {
    c.regime = parse_regime(r.text("orbit", "regime", std::nullopt));
    c.a = r.positive("orbit", "a_m");
    if (c.regime != Regime::Transition) c.b = r.positive("orbit", "b_m");
    if (c.regime == Regime::Bound && !(c.b < c.a))
      throw ConfigurationError("orbit.b_m: a bound orbit needs b < a");
  }
  c.theta0 = r.number("orbit", "theta0_rad", std::numbers::pi);
  try {
    const auto t = c.orbit(reduced_total_mass(c.m1, c.m2));
    c.regime = t.regime;
  } catch (const DomainError& e) {
    throw ConfigurationError(std::string("orbit: ") + e.what());
  }
}

void read_sigma(Reader& r, ScenarioConfig& c) {
  const std::string mode = r.text("sigma", "mode", std::string("gravity"));
  if (mode == "gravity") {
    c.sigma_mode = SigmaMode::GravitySchedule;
  } else if (mode == "explicit") {
    c.sigma_mode = SigmaMode::Explicit;
    c.sigma_value = r.positive("sigma", "value_m");
  } else {
    throw ConfigurationError("sigma.mode: expected gravity or explicit");
  }
  const double closest = c.orbit(reduced_total_mass(c.m1, c.m2)).closest_approach();
  c.r_a = r.positive("sigma", "r_a_m", closest);
  c.sigma = c.sigma_for(c.m1);
  r.text("sigma", "resolved_m", round_trip(c.sigma));  // echoed only
}

void read_limits(Reader& r, ScenarioConfig& c) {
  c.limits.lambda = r.number("limits", "lambda", 2.0);
  c.limits.much_less_threshold = r.number("limits", "threshold", 1e-3);
  try {
    c.limits.validate();
  } catch (const std::exception& e) {
    throw ConfigurationError(std::string("limits: ") + e.what());
  }
}

void read_kind_sections(Reader& r, ScenarioConfig& c, ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Kepler:
      read_orbit(r, c);
      c.kepler_samples = r.count("time", "samples", 200);
      if (c.kepler_samples < 100) throw ConfigurationError("time.samples: at least 100");
      c.span = r.positive("time", "span", 3.0);
      break;
    case ScenarioKind::PacketCheck:
      read_orbit(r, c);
      read_sigma(r, c);
      c.taus = r.numbers("time", "tau_s", "0");
      if (c.taus.empty()) throw ConfigurationError("time.tau_s: empty list");
      read_limits(r, c);
      {
        const auto rc = r.text("limits", "require_compliant", std::string("true"));
        if (rc != "true" && rc != "false")
          throw ConfigurationError("limits.require_compliant: expected true or false");
      }
      break;
    case ScenarioKind::Evolve: {
      c.ladder = r.numbers("ladder", "masses_kg", round_trip(c.m1));
      for (double m : c.ladder)
        if (!(m > 0.0)) throw ConfigurationError("ladder.masses_kg: masses must be positive");
      read_orbit(r, c);
      read_sigma(r, c);
      c.points = r.count("grid", "points", 64);
      if (!is_power_of_two(c.points) || c.points < 16)
        throw ConfigurationError("grid.points: power of two >= 16");
      c.axes_per_particle = r.count("grid", "axes_per_particle", 2);
      if (c.axes_per_particle != 1 && c.axes_per_particle != 2)
        throw ConfigurationError("grid.axes_per_particle: 1 or 2");
      c.sigma_o = r.number("grid", "sigma_o_m", 0.0);
      if (c.sigma_o < 0.0) throw ConfigurationError("grid.sigma_o_m: must be nonnegative");
      c.tau0 = r.number("time", "tau0_s", 0.0);
      c.delta_t_widths = r.numbers("time", "delta_t_widths", "1");
      if (c.delta_t_widths.empty()) throw ConfigurationError("time.delta_t_widths: empty list");
      for (double d : c.delta_t_widths)
        if (!(d >= 0.0)) throw ConfigurationError("time.delta_t_widths: must be nonnegative");
      read_limits(r, c);
      break;
    }
    case ScenarioKind::Wightman: {
      c.kappa = r.positive("model", "kappa_per_m", 1.0);
      c.c4 = r.number("model", "c4", 1.0);
      c.beta_combined = r.number("model", "beta_combined", 1.0);
      c.upsilon = r.text("model", "upsilon", std::string("laplace"));
      if (c.upsilon != "laplace" && c.upsilon != "constant")
        throw ConfigurationError("model.upsilon: expected laplace or constant");
      c.upsilon_value = r.number("model", "upsilon_value", 0.4);
      c.ue_amplitude = r.number("model", "ue_amplitude", 1.0);
      c.ue_lambda = r.positive("model", "ue_lambda_per_m", 1.0);
      const std::string legs = r.text("model", "legs", std::string("printed"));
      if (legs == "printed") c.legs = LegNormalization::AsPrinted;
      else if (legs == "harmonized") c.legs = LegNormalization::Harmonized;
      else throw ConfigurationError("model.legs: expected printed or harmonized");
      c.mc_samples = r.count("model", "samples", 1u << 18);
      if (c.mc_samples < 2) throw ConfigurationError("model.samples: at least 2");
      c.proposal_scale = r.positive("model", "proposal_scale", 1.25);
      c.label_sigma_rel = r.positive("labels", "sigma_rel_m", 2.5);
      c.label_sigma_cm = r.positive("labels", "sigma_cm_m", 2.5);
      c.label_k_rel = r.number("labels", "k_rel_per_m", 0.8);
      try {
        const auto v = validate_model(c.model());
        if (!v.empty()) throw ConfigurationError("model: " + v.front());
      } catch (const DomainError& e) {
        throw ConfigurationError(std::string("model: ") + e.what());
      }
      break;
    }
    case ScenarioKind::Sweep:
      break;
  }
}

void ensure_directory(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

template <class Write>
void write_file(const fs::path& path, Write&& write) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  write(os);
  os.flush();
  if (!os) throw IoError("cannot write " + path.string());
}

CheckResult check_le(std::string name, double measured, double tol) {
  return {std::move(name), measured, tol, "<=", measured <= tol};
}
CheckResult check_ge(std::string name, double measured, double tol) {
  return {std::move(name), measured, tol, ">=", measured >= tol};
}
CheckResult check_lt(std::string name, double measured, double tol) {
  return {std::move(name), measured, tol, "<", measured < tol};
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void run_kepler(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  const auto& k = c.constants;
  const auto frame = reduced_total_mass(c.m1, c.m2);
  const auto traj = c.orbit(frame);
  const double p = traj.semi_latus();
  const double scale = p * p / traj.L;
  std::vector<double> taus;
  for (std::size_t i = 0; i < c.kepler_samples; ++i)
    taus.push_back(scale * c.span * (2.0 * static_cast<double>(i) / (c.kepler_samples - 1) - 1.0));

  const auto s0 = trajectory_state(traj, frame, taus.front());
  const double e0 = relative_energy(frame, s0, k);
  const double l0 = s0.q.cross(s0.q_dot).z();
  const double e_scale = k.G * frame.m1 * frame.m2 / p;
  double de = 0.0, dl = 0.0;
  for (double tau : taus) {
    const auto s = trajectory_state(traj, frame, tau);
    de = std::max(de, std::abs(relative_energy(frame, s, k) - e0) / e_scale);
    dl = std::max(dl, rel_diff(s.q.cross(s.q_dot).z(), l0));
  }
  rep.checks.push_back(check_le("energy_conservation", de, 1e-9));
  rep.checks.push_back(check_le("angular_momentum_conservation", dl, 1e-9));

  double radial = 0.0;
  const double h = 1e-4 * scale;
  for (int i = 0; i < 9; ++i) {
    const double tau = scale * 1.5 * (i / 4.0 - 1.0);
    const auto s = trajectory_state(traj, frame, tau);
    const auto sp = trajectory_state(traj, frame, tau + h);
    const auto sm = trajectory_state(traj, frame, tau - h);
    const double lhs = (sp.r_dot - sm.r_dot) / (2.0 * h) - traj.L * traj.L / std::pow(s.r, 3);
    radial = std::max(radial, rel_diff(lhs, -k.G * frame.m_T / (s.r * s.r)));
  }
  rep.checks.push_back(check_le("radial_equation", radial, 1e-6));

  if (traj.regime == Regime::Bound) {
    const double period = tau_of_theta(traj, traj.theta0 + 2.0 * std::numbers::pi);
    const double area = 2.0 * std::numbers::pi * traj.a * traj.b / traj.L;
    rep.checks.push_back(check_le("period_area_law", rel_diff(period, area), 1e-8));
    rep.summary.emplace_back("period_s", period);
  }
  rep.summary.emplace_back("energy_offset_J", traj.energy_offset);
  rep.summary.emplace_back("closest_approach_m", traj.closest_approach());
  rep.summary.emplace_back("max_energy_drift", de);

  write_file(out / "trajectory.csv", [&](std::ostream& os) {
    write_trajectory_csv(os, traj, frame, taus, k);
  });
  rep.artifacts.push_back("trajectory.csv");
}

void run_packet(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  const auto& k = c.constants;
  const auto frame = reduced_total_mass(c.m1, c.m2);
  const auto traj = c.orbit(frame);
  const auto ps = relative_schedule(traj, frame, c.sigma);
  ResidualConfig rc;
  rc.lambda = c.limits.lambda;
  double worst_identity = 0.0, worst_eps = 0.0;
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    const auto pk = packet_on_trajectory(traj, frame, ps, c.taus[i], k);
    const auto r = lemma_residual(pk, ps, traj, frame, c.taus[i], rc, k);
    worst_identity = std::max(worst_identity, r.identity_residual);
    worst_eps = std::max(worst_eps, r.core_epsilon_ratio);
    const std::string name = "residual_" + std::to_string(i) + ".json";
    write_file(out / name, [&](std::ostream& os) { write_residual_json(os, r); });
    rep.artifacts.push_back(name);
  }
  rep.checks.push_back(check_le("identity_residual", worst_identity, 1e-10));

  const double force = gravity_force(c.m1, c.m2, c.r_a, k);
  const auto lim = check_classical_limit(frame.mu, c.sigma, force, c.r_a, c.limits, k);
  const bool require = c.resolved.at("limits").at("require_compliant") == "true";
  if (require) {
    rep.checks.push_back(check_le("core_epsilon_ratio", worst_eps, c.limits.much_less_threshold));
    rep.checks.push_back(check_ge("classical_limit_compliant", lim.compliant ? 1.0 : 0.0, 1.0));
  }

  // Grid-measured uncertainty product of the relative packet. The product
  // does not depend on q or q_dot, and an SI offset of metres next to a
  // width of 1e-20 m is below double resolution, so the packet is centred.
  MinimumPacket pk0 = packet_on_trajectory(traj, frame, ps, c.taus.front(), k);
  pk0.q = Vec3::Zero();
  pk0.q_dot = Vec3::Zero();
  const auto g = make_analysis_grid({AxisSpec{256, 24.0 * c.sigma, 0.0, 0.0}});
  const auto mom = packet_moments(pk0, g, k);
  const double product = mom.sigma_X * mom.sigma_P / (k.hbar / 2.0);
  rep.checks.push_back(check_le("uncertainty_product", std::abs(product - 1.0), 1e-8));

  rep.summary.emplace_back("sigma_m", c.sigma);
  rep.summary.emplace_back("identity_residual", worst_identity);
  rep.summary.emplace_back("core_epsilon_ratio", worst_eps);
  rep.summary.emplace_back("nonrel_ratio", lim.nonrel_ratio);
  rep.summary.emplace_back("limpak_ratio", lim.limpak_ratio);
  rep.summary.emplace_back("compliant", lim.compliant ? 1.0 : 0.0);
}

void run_evolve(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  const auto& k = c.constants;
  std::vector<std::vector<double>> errors;
  for (std::size_t i = 0; i < c.ladder.size(); ++i) {
    const double m = c.ladder[i];
    TrackingScenario sc;
    // The ladder scales both particles, keeping m2 / m1.
    sc.frame = reduced_total_mass(m, m * c.m2 / c.m1);
    sc.traj = c.orbit(sc.frame);
    sc.sigma = c.sigma_for(m);
    sc.sigma_o = c.sigma_o > 0.0 ? c.sigma_o : sc.sigma;
    sc.points = c.points;
    sc.axes_per_particle = c.axes_per_particle;
    sc.lambda = c.limits.lambda;
    sc.much_less_threshold = c.limits.much_less_threshold;
    sc.constants = k;

    std::vector<TrackingResult> rows;
    Series s{"error_vs_dt", "m = " + short_number(m) + " kg", {}, {}};
    bool compliant = true;
    for (double d : c.delta_t_widths) {
      const double dt = delta_t_from_dimensionless(sc, c.tau0, d);
      rows.push_back(tracking_error(sc, c.tau0, dt));
      compliant = compliant && rows.back().compliant;
      s.x.push_back(d);
      s.y.push_back(rows.back().evolution_error);
    }
    errors.push_back(s.y);
    rep.series.push_back(s);
    rep.checks.push_back(check_ge("compliant_m" + std::to_string(i), compliant ? 1.0 : 0.0, 1.0));
    const std::string name = "tracking_m" + std::to_string(i) + ".csv";
    write_file(out / name, [&](std::ostream& os) { write_tracking_csv(os, rows); });
    rep.artifacts.push_back(name);
    rep.summary.emplace_back("sigma_m" + std::to_string(i), sc.sigma);
    rep.summary.emplace_back("error_m" + std::to_string(i), s.y.back());
  }
  if (c.ladder.size() >= 2) {
    for (std::size_t j = 0; j < c.delta_t_widths.size(); ++j) {
      Series s{"error_vs_mass", "dt = " + short_number(c.delta_t_widths[j]) + " widths", {}, {}};
      double worst = 0.0;
      for (std::size_t i = 0; i < c.ladder.size(); ++i) {
        s.x.push_back(c.ladder[i]);
        s.y.push_back(errors[i][j]);
        if (i > 0) worst = std::max(worst, errors[i][j] / errors[i - 1][j]);
      }
      rep.series.push_back(s);
      if (c.delta_t_widths[j] > 0.0)
        rep.checks.push_back(check_lt("ladder_decreasing_w" + std::to_string(j), worst, 1.0));
    }
  }
}

void run_wightman(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  const auto& k = c.constants;
  const double m = c.kappa * k.hbar / k.c;
  const MinimumPacket rel{0.5 * m, c.label_sigma_rel, Vec3::Zero(),
                          Vec3(0.0, 0.0, c.label_k_rel * k.hbar / (0.5 * m)), 0.0};
  const MinimumPacket cm{2.0 * m, c.label_sigma_cm, Vec3::Zero(), Vec3::Zero(), 0.0};
  const Label2 f = symmetrize(jacobi_label(rel, cm, c.kappa, k));
  MonteCarloConfig mc;
  mc.seed = c.seed;
  mc.samples = c.mc_samples;
  mc.workers = c.workers;
  mc.proposal_scale = c.proposal_scale;
  const auto free = four_point_free(f, f, c.kappa, mc);
  const auto conn = four_point_connected(f, f, c.model(), c.kappa, mc);
  write_file(out / "four_point_free.json", [&](std::ostream& os) { write_estimate_json(os, free); });
  write_file(out / "four_point_connected.json", [&](std::ostream& os) { write_estimate_json(os, conn); });
  rep.artifacts = {"four_point_free.json", "four_point_connected.json"};

  const double total = free.value.real() + conn.value.real();
  const double se = std::hypot(free.std_error, conn.std_error);
  rep.checks.push_back(check_ge("norm_nonnegative", total / se, -3.0));
  rep.checks.push_back(check_le("free_imaginary_part", std::abs(free.value.imag()) / free.std_error, 3.0));
  rep.checks.push_back(check_le("rejection_rate", conn.rejection_rate, 0.5));
  rep.summary.emplace_back("free_re", free.value.real());
  rep.summary.emplace_back("connected_re", conn.value.real());
  rep.summary.emplace_back("connected_im", conn.value.imag());
  rep.summary.emplace_back("std_error", se);
}

// Minimal SVG line plot, log axes where all values are positive.
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::vector<Series>& curves) {
  const double W = 640, H = 420, L = 70, R = 180, T = 40, B = 50;
  bool logx = true, logy = true;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : curves)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0)) logx = false;
      if (!(s.y[i] > 0.0)) logy = false;
    }
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  for (const auto& s : curves)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto f2 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << f2(L + (W - L - R) / 2) << "\" y=\"" << H - 12
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << xlabel
     << (logx ? " (log)" : "") << "</text>\n";
  os << "<text x=\"16\" y=\"" << f2(T + (H - T - B) / 2)
     << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
     << f2(T + (H - T - B) / 2) << ")\" text-anchor=\"middle\">evolution error"
     << (logy ? " (log)" : "") << "</text>\n";
  auto tick = [&](double x, double y, const char* anchor, double v) {
    os << "<text x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\""
       << anchor << "\">" << short_number(v) << "</text>\n";
  };
  tick(L - 4, H - B, "end", logy ? std::pow(10.0, y0) : y0);
  tick(L - 4, T + 10, "end", logy ? std::pow(10.0, y1) : y1);
  tick(L, H - B + 14, "middle", logx ? std::pow(10.0, x0) : x0);
  tick(W - R, H - B + 14, "middle", logx ? std::pow(10.0, x1) : x1);
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& s = curves[c];
    const char* col = colors[c % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << f2(px(s.x[i])) << "," << f2(py(s.y[i]));
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx=\"" << f2(px(s.x[i])) << "\" cy=\"" << f2(py(s.y[i])) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    const double ly = T + 16 + 18.0 * c;
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << f2(ly) << "\" x2=\"" << W - R + 32 << "\" y2=\"" << f2(ly)
       << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 36 << "\" y=\"" << f2(ly + 4) << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

nlohmann::ordered_json report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["kind"] = to_string(r.kind);
  j["pass"] = r.pass();
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["measured"] = c.measured;
    cj["relation"] = c.relation;
    cj["tolerance"] = c.tolerance;
    cj["pass"] = c.pass;
    checks.push_back(cj);
  }
  auto& summary = j["summary"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : r.summary) summary[name] = v;
  j["artifacts"] = r.artifacts;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [section, keys] : r.config)
    for (const auto& [key, value] : keys) cfg[section][key] = value;
  return j;
}

}  // namespace

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Kepler: return "kepler";
    case ScenarioKind::PacketCheck: return "packet";
    case ScenarioKind::Evolve: return "evolve";
    case ScenarioKind::Wightman: return "wightman";
    case ScenarioKind::Sweep: return "sweep";
  }
  return "?";
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double ScenarioConfig::sigma_for(double m) const {
  if (sigma_mode == SigmaMode::Explicit) return sigma_value;
  return gravity_sigma(m, r_a, constants);
}

ConicTrajectory ScenarioConfig::orbit(const JacobiFrame& frame) const {
  if (orbit_from_energy) return uqftlab::orbit_from_energy(frame, delta_e, L, constants, theta0);
  return orbit_from_axes(frame, regime, a, b, constants, theta0);
}

WightmanModel ScenarioConfig::model() const {
  WightmanModel m;
  m.c4 = c4;
  m.beta_combined = beta_combined;
  m.U_e = gaussian_damped(ue_amplitude, ue_lambda);
  m.Upsilon = upsilon == "constant" ? constant_function(upsilon_value)
                                    : laplace_exponential(Vec4(upsilon_value, 0.0, 0.0, 0.0));
  m.legs = legs;
  return m;
}

ConfigDocument read_config_document(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  ConfigDocument doc;
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      is >> j;
    } catch (const std::exception& e) {
      throw ConfigurationError(path.string() + ": " + e.what());
    }
    if (j.contains("reports") && j["reports"].is_array() && !j["reports"].empty()) j = j["reports"][0];
    if (j.contains("config")) j = j["config"];
    if (!j.is_object()) throw ConfigurationError(path.string() + ": expected an object of sections");
    for (const auto& [section, keys] : j.items()) {
      if (!keys.is_object()) throw ConfigurationError(section + ": expected a section object");
      for (const auto& [key, value] : keys.items())
        doc[section][key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return doc;
  }
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigurationError(path.string() + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, keys] : pt) {
    if (keys.empty()) throw ConfigurationError(section + ": keys must live in a [section]");
    for (const auto& [key, value] : keys) doc[section][key] = value.data();
  }
  return doc;
}

namespace {

ScenarioConfig parse_with_env(const ConfigDocument& doc, const Env& env) {
  Reader r(doc, env);
  ScenarioConfig c;
  c.id = r.text("scenario", "id", std::string("scenario"));
  c.kind = parse_kind("scenario.kind", r.text("scenario", "kind", std::nullopt));
  c.seed = static_cast<std::uint64_t>(r.count("scenario", "seed", 1));
  c.workers = r.count("scenario", "workers", 1);

  const PhysicalConstants si;
  c.constants.hbar = r.positive("constants", "hbar_J_s", si.hbar);
  c.constants.c = r.positive("constants", "c_m_per_s", si.c);
  c.constants.G = r.positive("constants", "G_m3_per_kg_s2", si.G);

  const ScenarioKind body = c.kind == ScenarioKind::Sweep
                                ? parse_kind("sweep.kind", r.text("sweep", "kind", std::nullopt))
                                : c.kind;
  if (body != ScenarioKind::Wightman) {
    c.m1 = r.positive("masses", "m1_kg", 1.0);
    c.m2 = r.positive("masses", "m2_kg", c.m1);
  }
  if (c.kind == ScenarioKind::Sweep) {
    if (body == ScenarioKind::Sweep) throw ConfigurationError("sweep.kind: sweeps cannot nest");
    c.sweep_kind = body;
    c.sweep_parameter = r.text("sweep", "parameter", std::nullopt);
    const auto dot = c.sweep_parameter.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == c.sweep_parameter.size())
      throw ConfigurationError("sweep.parameter: expected section.key");
    c.sweep_values = split_list(r.text("sweep", "values", std::string("")));
  }
  read_kind_sections(r, c, body);
  r.reject_unknown();
  c.resolved = r.resolved();
  c.source = r.source();
  return c;
}

}  // namespace

ScenarioConfig parse_scenario(const ConfigDocument& doc) {
  return parse_with_env(doc, [](const std::string& name) { return std::getenv(name.c_str()); });
}

ScenarioConfig load_scenario(const fs::path& path) { return parse_scenario(read_config_document(path)); }

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

RunReport run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.id = cfg.id;
  rep.kind = cfg.kind;
  rep.config = cfg.resolved;
  ensure_directory(out_dir);
  switch (cfg.kind) {
    case ScenarioKind::Kepler: run_kepler(cfg, out_dir, rep); break;
    case ScenarioKind::PacketCheck: run_packet(cfg, out_dir, rep); break;
    case ScenarioKind::Evolve: run_evolve(cfg, out_dir, rep); break;
    case ScenarioKind::Wightman: run_wightman(cfg, out_dir, rep); break;
    case ScenarioKind::Sweep: throw ConfigurationError("use sweep() for sweep scenarios");
  }
  rep.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<RunReport> sweep(const ScenarioConfig& cfg, const fs::path& out_dir) {
  if (cfg.kind != ScenarioKind::Sweep) throw ConfigurationError("not a sweep scenario");
  const auto dot = cfg.sweep_parameter.find('.');
  const std::string section = cfg.sweep_parameter.substr(0, dot);
  const std::string key = cfg.sweep_parameter.substr(dot + 1);
  const std::size_t n = cfg.sweep_values.size();
  ensure_directory(out_dir);

  std::vector<RunReport> reports(n);
  std::vector<std::exception_ptr> io_errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      RunReport& rep = reports[i];
      rep.id = cfg.id + "_" + std::to_string(i);
      rep.kind = cfg.sweep_kind;
      try {
        ConfigDocument doc = cfg.source;
        doc.erase("sweep");
        doc["scenario"]["kind"] = to_string(cfg.sweep_kind);
        doc["scenario"]["id"] = rep.id;
        doc[section][key] = cfg.sweep_values[i];
        // The source already carries the environment overrides.
        const auto pc = parse_with_env(doc, nullptr);
        rep = run_scenario(pc, out_dir / ("point_" + std::to_string(i)));
        for (auto& a : rep.artifacts) a = "point_" + std::to_string(i) + "/" + a;
      } catch (const IoError&) {
        io_errors[i] = std::current_exception();
      } catch (const std::exception& e) {
        rep.checks.push_back({std::string("error: ") + e.what(), 0.0, 0.0, "==", false});
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : io_errors)
    if (e) std::rethrow_exception(e);

  // Columns come from the first report that produced a summary.
  std::vector<std::string> columns;
  for (const auto& r : reports)
    if (!r.summary.empty()) {
      for (const auto& s : r.summary) columns.push_back(s.first);
      break;
    }
  write_file(out_dir / "summary.csv", [&](std::ostream& os) {
    os << "index," << cfg.sweep_parameter << ",pass";
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      os << i << ',' << cfg.sweep_values[i] << ',' << (reports[i].pass() ? 1 : 0);
      for (const auto& c : columns) {
        os << ',';
        for (const auto& s : reports[i].summary)
          if (s.first == c) {
            os << format_number(s.second);
            break;
          }
      }
      os << '\n';
    }
  });
  return reports;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "json") return ReportFormat::Json;
  if (s == "svg-plots") return ReportFormat::SvgPlots;
  throw ConfigurationError("format: expected text, json or svg-plots");
}

std::string report_text(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  bool all = true;
  for (const auto& r : reports) {
    os << "scenario " << r.id << " (" << to_string(r.kind) << ")\n";
    for (const auto& c : r.checks)
      os << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << format_number(c.measured) << ' '
         << c.relation << ' ' << round_trip(c.tolerance) << '\n';
    for (const auto& [name, v] : r.summary) os << "  " << name << " = " << format_number(v) << '\n';
    for (const auto& a : r.artifacts) os << "  artifact " << a << '\n';
    os << "  " << (r.pass() ? "PASS" : "FAIL") << '\n';
    all = all && r.pass();
  }
  os << (all ? "PASS" : "FAIL") << '\n';
  return os.str();
}

std::vector<fs::path> emit_report(const std::vector<RunReport>& reports, ReportFormat format,
                                  const fs::path& out_dir) {
  ensure_directory(out_dir);
  std::vector<fs::path> written;
  switch (format) {
    case ReportFormat::Text: {
      const auto p = out_dir / "report.txt";
      write_file(p, [&](std::ostream& os) { os << report_text(reports); });
      written.push_back(p);
      break;
    }
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["pass"] = std::all_of(reports.begin(), reports.end(), [](const RunReport& r) { return r.pass(); });
      auto& arr = j["reports"] = nlohmann::ordered_json::array();
      for (const auto& r : reports) arr.push_back(report_json(r));
      const auto p = out_dir / "report.json";
      write_file(p, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      written.push_back(p);
      break;
    }
    case ReportFormat::SvgPlots: {
      if (reports.empty()) throw ConfigurationError("svg-plots needs at least one report");
      for (const auto& [plot, title, xlabel] :
           {std::tuple{"error_vs_dt", "Tracking error against step", "dt (packet widths)"},
            std::tuple{"error_vs_mass", "Tracking error against mass", "mass (kg)"}}) {
        std::vector<Series> curves;
        for (const auto& r : reports)
          for (const auto& s : r.series)
            if (s.plot == plot && !s.x.empty()) {
              curves.push_back(s);
              if (reports.size() > 1) curves.back().label = r.id + ": " + s.label;
            }
        if (curves.empty()) continue;
        const auto p = out_dir / (std::string(plot) + ".svg");
        write_file(p, [&](std::ostream& os) { os << svg_plot(title, xlabel, curves); });
        written.push_back(p);
      }
      break;
    }
  }
  return written;
}

}  // namespace uqftlab
