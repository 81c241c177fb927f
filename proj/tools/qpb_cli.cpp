/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "qpbreather/qpbreather.h"

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  int threads = 0;
  bool force = false;
  bool oracle = false;
  std::string solution;
};

int finish(qpb_status st) {
  std::fputs(qpb_last_log(), stdout);
  std::fflush(stdout);
  if (st != QPB_OK && *qpb_last_error() && std::string(qpb_last_log()).find(qpb_last_error()) == std::string::npos)
    std::fprintf(stderr, "%s\n", qpb_last_error());
  if (st != QPB_OK) std::fprintf(stderr, "exit %d (%s)\n", static_cast<int>(st), qpb_status_string(st));
  return static_cast<int>(st);
}

// Loads the config named on the command line and applies the overrides.
qpb_status open_config(const Options& o, qpb_config** cfg) {
  qpb_status st;
  if (!o.config.empty() && !o.preset.empty()) {
    std::fprintf(stderr, "--config and --preset are mutually exclusive\n");
    return QPB_INVALID;
  }
  if (!o.config.empty())
    st = qpb_config_load(o.config.c_str(), cfg);
  else if (!o.preset.empty())
    st = qpb_config_preset(o.preset.c_str(), cfg);
  else {
    std::fprintf(stderr, "supply --config PATH or --preset NAME\n");
    return QPB_INVALID;
  }
  if (st != QPB_OK) {
    std::fprintf(stderr, "%s\n", qpb_last_error());
    return st;
  }
  if (!o.out.empty() && (st = qpb_config_set_output_dir(*cfg, o.out.c_str())) != QPB_OK) {
    std::fprintf(stderr, "%s\n", qpb_last_error());
    return st;
  }
  if (o.threads > 0 && (st = qpb_config_set_threads(*cfg, o.threads)) != QPB_OK) {
    std::fprintf(stderr, "%s\n", qpb_last_error());
    return st;
  }
  return QPB_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-periodic breather solutions of nonlinear lattice Klein-Gordon equations"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--preset", o.preset, "built-in configuration")
      ->check(CLI::IsMember({"trivial", "small-coupling", "scan-demo"}));
  app.add_option("--out", o.out, "output directory (overrides output.dir)");
  app.add_option("--threads", o.threads, "worker threads for scans")->check(CLI::Range(1, 256));

  auto* certify = app.add_subcommand("certify", "write the arithmetic certificate bundle");
  auto* solve = app.add_subcommand("solve", "run the staged Newton scheme and write solution and trace");
  solve->add_flag("--force", o.force, "skip the certificate gate");
  solve->add_flag("--oracle", o.oracle, "also run the brute-force oracle and record the discrepancy");
  auto* scan = app.add_subcommand("lde-scan", "scan sigma for large-deviation estimates");
  auto* report = app.add_subcommand("report", "summarize a solution file");
  report->add_option("solution", o.solution, "solution file")->required();
  auto* compare = app.add_subcommand("oracle-compare", "compare the staged solver with the brute-force oracle");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(QPB_INVALID);
  }

  if (report->parsed()) return finish(qpb_report(o.solution.c_str()));

  qpb_config* cfg = nullptr;
  const qpb_status st = open_config(o, &cfg);
  if (st != QPB_OK) return static_cast<int>(st);
  qpb_status rc = QPB_ERROR;
  if (certify->parsed())
    rc = qpb_certify(cfg);
  else if (solve->parsed())
    rc = qpb_solve_to_files(cfg, o.force, o.oracle);
  else if (scan->parsed())
    rc = qpb_lde_scan(cfg);
  else if (compare->parsed())
    rc = qpb_oracle_compare(cfg);
  qpb_config_free(cfg);
  return finish(rc);
}
