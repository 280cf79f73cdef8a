// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uqftlab/kepler.hpp"
#include "uqftlab/physical_core.hpp"
#include "uqftlab/wightman.hpp"

namespace uqftlab {

/// Reading or writing an artifact failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { Kepler, PacketCheck, Evolve, Wightman, Sweep };
const char* to_string(ScenarioKind k);

enum class SigmaMode { Explicit, GravitySchedule };

/// Raw key/value document: section -> key -> text. Values keep their exact
/// spelling so that an echoed configuration reloads to the same numbers.
using ConfigDocument = std::map<std::string, std::map<std::string, std::string>>;

struct ScenarioConfig {
  std::string id;
  ScenarioKind kind = ScenarioKind::Kepler;
  std::uint64_t seed = 1;
  PhysicalConstants constants;

  double m1 = 1.0;  // kg
  double m2 = 1.0;

  // Orbit either from its axes or from (delta_E, L).
  bool orbit_from_energy = false;
  Regime regime = Regime::Bound;
  double a = 0.0, b = 0.0;       // m
  double delta_e = 0.0, L = 0.0;  // J, m^2/s
  double theta0 = std::numbers::pi;

  SigmaMode sigma_mode = SigmaMode::GravitySchedule;
  double sigma_value = 0.0;  // explicit value, m
  double r_a = 0.0;          // closest approach used by the schedule, m
  double sigma = 0.0;        // resolved for m1

  std::size_t points = 64;
  std::size_t axes_per_particle = 2;
  double sigma_o = 0.0;  // centre-of-mass width, 0 = same as sigma

  std::size_t kepler_samples = 200;
  double span = 3.0;  // in units of p^2/L
  std::vector<double> taus{0.0};
  double tau0 = 0.0;
  std::vector<double> delta_t_widths{1.0};

  LimitCheckConfig limits;
  std::vector<double> ladder;  // masses for Evolve; empty = {m1}

  // Wightman labels and model.
  double kappa = 1.0;
  double label_sigma_rel = 2.5, label_sigma_cm = 2.5, label_k_rel = 0.8;
  double c4 = 1.0, beta_combined = 1.0;
  std::string upsilon = "laplace";
  double upsilon_value = 0.4;
  double ue_amplitude = 1.0, ue_lambda = 1.0;
  LegNormalization legs = LegNormalization::AsPrinted;
  std::size_t mc_samples = 1u << 18;
  double proposal_scale = 1.25;

  // Sweep.
  ScenarioKind sweep_kind = ScenarioKind::Evolve;
  std::string sweep_parameter;  // "section.key"
  std::vector<std::string> sweep_values;

  std::size_t workers = 1;

  /// Every value used, defaults included, in document form.
  ConfigDocument resolved;
  /// The document as read (after environment overrides), for sweeps.
  ConfigDocument source;

  /// gravity_sigma(m, r_a) or the explicit value.
  double sigma_for(double m) const;
  ConicTrajectory orbit(const JacobiFrame& frame) const;
  WightmanModel model() const;
};

/// Parses a nested-section key/value document (INI, or the JSON report of
/// a previous run). Environment variables UQFTLAB_<SECTION>_<KEY> override
/// file values. Throws ConfigurationError naming section.key on invalid
/// or unknown fields, IoError when the file cannot be read.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const ConfigDocument& doc);
ConfigDocument read_config_document(const std::filesystem::path& path);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=", ">=", "=="
  bool pass = false;
};

/// One curve for the report plots.
struct Series {
  std::string plot;   // "error_vs_dt" or "error_vs_mass"
  std::string label;
  std::vector<double> x, y;
};

struct RunReport {
  std::string id;
  ScenarioKind kind = ScenarioKind::Kepler;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::vector<Series> series;
  std::vector<std::pair<std::string, double>> summary;  // headline numbers
  ConfigDocument config;
  double duration_s = 0.0;  // wall clock; never written to artifacts

  bool pass() const;
};

/// Runs the pipeline for cfg.kind and writes its artifacts under out_dir.
/// Numerical tolerance failures become failed checks; other numerical
/// errors propagate.
RunReport run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

/// Runs every point of cfg's parameter grid (cfg.workers at a time) in
/// out_dir/point_<i>, then writes out_dir/summary.csv with one row per
/// point in index order. Failures are recorded and the sweep continues.
std::vector<RunReport> sweep(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

enum class ReportFormat { Text, Json, SvgPlots };
ReportFormat parse_report_format(const std::string& s);

/// Writes report.txt, report.json or the SVG plots and returns the paths.
std::vector<std::filesystem::path> emit_report(const std::vector<RunReport>& reports,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir);
std::string report_text(const std::vector<RunReport>& reports);

/// 17 significant digits.
std::string format_number(double v);

}  // namespace uqftlab
