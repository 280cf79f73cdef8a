// Copyright 2026 The uqftlab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: runs one scenario file and reports its checks.
// Exit codes: 0 all checks pass, 1 configuration or domain error,
// 2 numerical error or failed check, 3 I/O error.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uqftlab/errors.hpp"
#include "uqftlab/scenario.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string format = "text";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

uqftlab::ScenarioConfig load(const Options& o) {
  auto doc = uqftlab::read_config_document(o.config);
  if (o.seed) doc["scenario"]["seed"] = std::to_string(*o.seed);
  if (o.workers) doc["scenario"]["workers"] = std::to_string(*o.workers);
  return uqftlab::parse_scenario(doc);
}

int run(const std::string& command, const Options& o) {
  using namespace uqftlab;
  const auto start = std::chrono::steady_clock::now();
  const auto format = parse_report_format(o.format);
  const auto cfg = load(o);
  if (command == "validate") {
    std::cout << "scenario " << cfg.id << " (" << to_string(cfg.kind) << ") is valid\n";
    for (const auto& [section, keys] : cfg.resolved) {
      std::cout << '[' << section << "]\n";
      for (const auto& [key, value] : keys) std::cout << key << " = " << value << '\n';
    }
    return 0;
  }
  if (command != to_string(cfg.kind))
    throw ConfigurationError("scenario.kind: file describes '" + std::string(to_string(cfg.kind)) +
                             "', not '" + command + "'");

  const std::vector<RunReport> reports =
      cfg.kind == ScenarioKind::Sweep ? sweep(cfg, o.out) : std::vector<RunReport>{run_scenario(cfg, o.out)};
  for (const auto& p : emit_report(reports, format, o.out)) std::cout << "wrote " << p.string() << '\n';
  std::cout << report_text(reports);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("duration %.3f s\n", seconds);
  for (const auto& r : reports)
    if (!r.pass()) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uqftlab scenario runner"};
  app.require_subcommand(1);
  Options o;
  for (const char* name : {"kepler", "packet", "evolve", "wightman", "sweep", "validate"}) {
    auto* sub = app.add_subcommand(name, std::string("run a ") + name + " scenario");
    sub->add_option("-c,--config", o.config, "scenario file (.ini or report .json)")->required();
    sub->add_option("-o,--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "override scenario.seed");
    sub->add_option("--workers", o.workers, "override scenario.workers")->check(CLI::PositiveNumber);
    sub->add_option("--format", o.format, "text, json or svg-plots")->capture_default_str();
  }
  if (auto* v = app.get_subcommand("validate")) v->description("check a scenario file and print it resolved");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const uqftlab::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const uqftlab::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 1;
  } catch (const uqftlab::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const uqftlab::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
