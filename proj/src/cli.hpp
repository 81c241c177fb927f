/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Run configuration, command drivers and file formats. Every command returns
// a process exit status; diagnostics go to the supplied log string.

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "solver.hpp"
#include "spectrum.hpp"

namespace qpb::cli {

constexpr int kFormatVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitGateFailed = 1,
  kExitInvalid = 2,
  kExitResonantBox = 3,
  kExitNonConvergence = 4,
  kExitOther = 5,
};

int exit_code_for(ErrorCode code);

struct CertConfig {
  int L = 5;
  double c_star = 1e-2;
  double eta = 1e-3;
  int m_points = 1000;  // admissible-m grid over [2, 3]
  int transversality_L = 2;
  int transversality_m_points = 101;
  double ctilde = 0.0;
};

struct ScanConfig {
  std::vector<int> scales{8};
  double sigma_lo = -1.0;
  double sigma_hi = 1.0;
  int sigma_points = 200;
  int max_regions = 4;
  double kernel_C = 1.0;
  double rho1 = 0.1;
  double rho2 = 0.7;
  double rho3 = 0.9;
  double rho4 = 0.05;
  std::optional<double> gamma_prime;
  int theta_points = 0;  // 0 disables the Schrodinger theta scan
  int schrodinger_N = 12;
  double energy = 2.5;
};

struct RunConfig {
  spectrum::ModelParams model;
  solver::SolverConfig solver;
  int oracle_L = 0;  // 0: final solver box
  double oracle_tolerance = 1e-9;
  CertConfig cert;
  ScanConfig scan;
  std::string output_dir = "qpb_out";
  std::uint64_t seed = 12345;
  int threads = 1;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Throws InvalidConfig on unknown keys, wrong types or out-of-range values.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig config_from_text(const std::string& text);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

/// trivial | small-coupling | scan-demo. Throws InvalidConfig otherwise.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Deterministic serialization: sorted keys, two-space indent, doubles with 17
/// significant digits, non-finite numbers as null.
std::string dump(const nlohmann::json& j);

/// FNV-1a 64 of the bytes, hex.
std::string digest(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

nlohmann::json certificate_json(const spectrum::Certificate& c, bool hard);

struct CommandResult {
  int status = kExitOk;
  std::string log;
};

CommandResult run_certify(const RunConfig& c);
CommandResult run_solve(const RunConfig& c, bool force, bool oracle);
CommandResult run_lde_scan(const RunConfig& c);
CommandResult run_report(const std::string& solution_path);
CommandResult run_oracle_compare(const RunConfig& c);

/// Solution file body; no wall times.
nlohmann::json solution_json(const RunConfig& c, const solver::Solution& s);
nlohmann::json trace_json(const RunConfig& c, const solver::Solution& s);

/// Records (k, n, value) sorted by (|k| + |n|, lexicographic).
nlohmann::json field_records(const nonlin::CoefficientField& q);

}  // namespace qpb::cli
