/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Lyapunov-Schmidt Newton scheme: P-steps solve the linearized equation off
// the resonant set on growing boxes, Q-steps update omega from the equations
// on S. A dense unstaged Newton solver serves as an independent oracle.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nonlin.hpp"
#include "spectrum.hpp"

namespace qpb::solver {

using nonlin::CoefficientField;
using spectrum::ModelParams;

struct SolverConfig {
  int M = 3;       // box growth base, box radius at stage r is min(M^r, box_cap)
  int r_max = 6;
  int box_cap = 8;
  double residual_floor = 1e-12;
  double q_update_damping = 1.0;
  double q_tolerance_factor = 1e-2;  // Q-step tolerance relative to the current residual
  std::string backend = "auto";      // auto | dense | sparse
  std::uint64_t seed = 12345;        // time samples of the quality block

  void validate() const;
  int box_radius(int stage) const;
  int final_radius() const { return box_radius(r_max); }
};

struct StageRecord {
  int stage = 0;
  int box = 0;
  double increment_sup = 0.0;
  double residual_sup = 0.0;  // on the final truncation cube
  double residual_l1 = 0.0;
  double full_residual_sup = 0.0;  // on the whole support of F(q)
  std::vector<double> omega;
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
  double rcond = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct Quality {
  double weighted_tail = 0.0;  // rho = 0.1
  double tail_threshold = 0.0;  // sqrt(eps + delta)
  double pde_residual = 0.0;    // 100 sampled times
  double residual_l1 = 0.0;     // full ||F||_1
  double residual_sup = 0.0;
  bool anchors_exact = false;
  bool symmetric = false;
  double omega_shift = 0.0;  // max |omega - omega0|
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
};

struct Solution {
  CoefficientField q;
  std::vector<double> omega;
  std::vector<double> omega0;
  ModelParams params;
  SolverConfig config;
  std::vector<StageRecord> trace;
  bool converged = false;
  Quality quality;
};

CoefficientField initial_field(const ModelParams& params);

/// Damped fixed point on omega^2 from the equations on S. Throws
/// FrequencyCollapse for a nonpositive radicand.
std::vector<double> q_step(const CoefficientField& q, const std::vector<double>& omega_current,
                           const ModelParams& params, double damping = 1.0, double tolerance = 1e-15);

/// Increment -G F(q) on the stage box minus S at sigma = 0. Throws ResonantBox.
CoefficientField p_step(const CoefficientField& q, const std::vector<double>& omega, const ModelParams& params,
                        int stage, const SolverConfig& config, double* rcond = nullptr);

/// Residual restricted to cube(R).
nonlin::ResidualReport truncated_residual(const CoefficientField& q, const std::vector<double>& omega,
                                          const ModelParams& params, int R);

Quality assess(const CoefficientField& q, const std::vector<double>& omega, const ModelParams& params,
               int R, std::uint64_t seed);

/// Throws ResonantBox, FrequencyCollapse, or NonConvergence on stagnation.
Solution solve(const ModelParams& params, const SolverConfig& config);

struct OracleResult {
  CoefficientField q;
  std::vector<double> omega;
  int iterations = 0;
  double residual_sup = 0.0;
  std::vector<double> history;
};

/// Dense Newton on (q on cube(L) \ S, omega) with backtracking. Throws
/// OracleDiverged.
OracleResult brute_force_oracle(const ModelParams& params, int L, int max_iterations = 60);

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  std::size_t points = 0;
};

/// Least squares of log|q| against |k| + |n| off S. Throws InsufficientData
/// with fewer than 10 usable entries.
DecayFit decay_fit(const CoefficientField& q, const lattice::ResonantSet& S);

double sup_difference(const CoefficientField& a, const CoefficientField& b);

}  // namespace qpb::solver
