/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Linear frequencies mu_n and omega^(0), and certification of the arithmetic
// conditions the construction needs: Diophantine conditions on (alpha, theta0),
// eigenvalue separation, transversality in m, sublevel-set measures,
// admissible-m scans and cluster counts.
//
// Phases are given in units of a full turn: alpha and theta0 live in [0, 1]
// and the phase of site n is 2*pi*(n.alpha + theta0). Torus distances are
// measured in radians.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace qpb::spectrum {

using lattice::IntVec;
using lattice::Site;

struct ModelParams {
  std::vector<double> alpha;  // length d, turns
  double theta0 = 0.0;        // turns
  double m = 2.5;
  double eps = 0.0;
  double delta = 0.0;
  int p = 2;
  std::vector<IntVec> anchors;     // b distinct sites of Z^d
  std::vector<double> amplitudes;  // length b, in [1, 2]
  double gamma = 1.0;              // kernel decay rate
  double K_exponent = 1e4;         // 0 < K <= 1e4 d b^4

  int b() const { return static_cast<int>(anchors.size()); }
  int d() const { return static_cast<int>(alpha.size()); }

  /// Throws InvalidConfig / InvalidAnchors on out-of-range values.
  void validate() const;
  /// Non-fatal diagnostics (e.g. eps much larger than delta).
  std::vector<std::string> warnings() const;

  lattice::ResonantSet resonant_set() const;
  /// 2*pi*(n.alpha + theta0).
  double phase(std::span<const int> n) const;
};

// --- frequencies -----------------------------------------------------------

double mu(std::span<const int> n, const ModelParams& params);
double mu_at(std::span<const int> n, const ModelParams& params, double m);
/// mu_n^2 - mu_n'^2 evaluated as a product of sines (no cancellation).
double mu_squared_difference(std::span<const int> n, std::span<const int> n2,
                             const ModelParams& params);
/// Throws InvalidAnchors for duplicate anchors.
std::vector<double> omega0(const ModelParams& params);
std::vector<double> omega0_at(const ModelParams& params, double m);

/// lambda_l = (1/2)(1/2 - 1)...(1/2 - l + 1).
double lambda_coefficient(int l);
/// d^l mu_n / dm^l = lambda_l mu_n^{-(2l-1)}.
double d_mu_dm(std::span<const int> n, int l, const ModelParams& params);
double d_mu_dm_at(std::span<const int> n, int l, const ModelParams& params, double m);

// --- certificates ----------------------------------------------------------

enum class CertificateKind { AlphaDc, ThetaDc, Separation, Transversality, Cluster, AdmissibleM };
const char* to_string(CertificateKind kind);

struct Witness {
  IntVec index;
  double value = 0.0;
};

struct Certificate {
  CertificateKind kind{};
  std::map<std::string, double> inputs;
  std::map<std::string, double> details;
  std::vector<std::string> notes;
  double margin = 0.0;
  std::vector<Witness> witnesses;

  bool pass() const { return margin > 0.0; }
};

/// Full: distance to 2*pi*Z. Half: distance to pi*Z, which is what the sine
/// lower bound |sin x| >= (2/pi) dist(x, pi Z) behind eigenvalue separation
/// actually needs.
enum class Torus { Full, Half };
/// Fixed: ||(n/2).alpha|| >= c_star. PowerLaw: min over xi in {1, 1/2} of
/// ||(xi n).alpha|| >= nu / |n|^{2d}, with nu passed as c_star.
enum class DcForm { Fixed, PowerLaw };

/// Distance from 2*pi*x to 2*pi*Z (Full) or pi*Z (Half), padded downwards by
/// a rounding allowance.
double torus_distance(double turns, Torus torus = Torus::Full);

Certificate check_alpha_dc(std::span<const double> alpha, int L, double c_star,
                           DcForm form = DcForm::Fixed, Torus torus = Torus::Full);
Certificate check_theta_dc(double theta0, std::span<const double> alpha, int L, double c_star,
                           Torus torus = Torus::Full);
/// Both separation bounds over n != n', |(n, n')| <= L. Requires both
/// Diophantine certificates to pass in the Half torus form; throws
/// PreconditionFailed otherwise.
Certificate separation_certificate(const ModelParams& params, int L, double c_star);
/// Same evaluation without the precondition gate.
Certificate separation_scan(const ModelParams& params, int L, double c_star);

// --- Wronskian -------------------------------------------------------------

struct WronskianResult {
  double product = 0.0;  // (prod_l lambda_l)(prod_s v_s^{-1}) Vandermonde(v_s^{-2})
  double direct = 0.0;   // LU determinant of M_{l,s} = lambda_l v_s^{-(2l-1)}
  bool degenerate = false;
};

double wronskian_product(std::span<const double> v);
double wronskian_direct(std::span<const double> v);
WronskianResult wronskian_det(std::span<const IntVec> sites, double m, const ModelParams& params);

// --- functions of m ---------------------------------------------------------

/// f(m) = sum_s coeff_s mu_{site_s}(m) + slope*m + offset.
class FrequencyFunction {
 public:
  FrequencyFunction() = default;
  static FrequencyFunction affine(double slope, double offset);

  void add_term(double coeff, IntVec site);
  double value(double m, const ModelParams& params) const;
  double derivative(double m, int order, const ModelParams& params) const;

  /// max_{1<=l<=r} |f^{(l)}(m)|.
  double derivative_sup(double m, int r, const ModelParams& params) const;

 private:
  std::vector<std::pair<double, IntVec>> terms_;
  double slope_ = 0.0;
  double offset_ = 0.0;
};

enum class TransversalityKind { Harmonic, Shifted, Difference };

struct TransversalityCase {
  FrequencyFunction f;
  int order = 1;            // r: derivative orders 1..r are inspected
  int c_star_exponent = 0;  // power of c_star in the reference bound
  double reduced_norm = 0;  // |k~|_2 of the reduced integer vector
  std::string label;
};

/// Selects the case of the transversality statement for (kind, k, n, n').
/// Throws NotApplicable for inadmissible k.
TransversalityCase transversality_case(TransversalityKind kind, std::span<const int> k,
                                       std::span<const int> n, std::span<const int> n2,
                                       const ModelParams& params);

struct MGrid {
  double lo = 2.0;
  double hi = 3.0;
  int points = 1000;
  /// Cell midpoints.
  double at(int i) const { return lo + (hi - lo) * (i + 0.5) / points; }
  double spacing() const { return (hi - lo) / points; }
};

/// margin = min over grid m of (sup_l |f^{(l)}(m)| - ctilde c_star^e |k~|_2).
/// details carry the implied empirical constant min sup / (c_star^e |k~|_2).
Certificate transversality_margin(TransversalityKind kind, std::span<const int> k,
                                  std::span<const int> n, std::span<const int> n2,
                                  const ModelParams& params, const MGrid& grid, double c_star,
                                  double ctilde = 0.0);

struct SublevelResult {
  double bound = 0.0;      // N r(r+3) eta^{1/r} / tau with N = [2A|I|/tau] + 1
  double empirical = 0.0;  // midpoint-counted measure of {|f| <= eta}
  double tau = 0.0;
  double A = 0.0;
  int r = 1;
  int cells = 0;
};

/// tau and A are estimated on the grid when not supplied. Throws
/// InsufficientResolution when tau <= 0 or the spacing exceeds eta / (10 A).
SublevelResult sublevel_measure(const FrequencyFunction& f, const ModelParams& params, double eta,
                                int r, const MGrid& grid, std::optional<double> tau = {},
                                std::optional<double> A = {});

// --- admissible m and clusters --------------------------------------------------

struct AdmissibleScan {
  std::vector<double> certified;
  double failing_fraction = 0.0;
  double asymptotic_bound = 0.0;  // L^{50 d b^2} eta^{1/(b+2)}
  int grid_points = 0;
  std::map<std::string, int> failures;  // per condition
};

struct AdmissibleCheck {
  bool separation = true;
  bool harmonic = true;
  bool shifted = true;
  bool difference = true;
  double worst_slack = 0.0;  // min over conditions of (|f| - threshold)
  bool ok() const { return separation && harmonic && shifted && difference; }
};

/// Evaluates the four non-resonance conditions at one value of m.
AdmissibleCheck admissible_at(const ModelParams& params, double m, int L, double eta);

/// Throws PreconditionFailed unless alpha and theta0 are certified at
/// (L, L^{-3d}) in the Half torus form.
AdmissibleScan admissible_m_scan(const ModelParams& params, int L, double eta, const MGrid& grid,
                                 int threads = 1);

/// max over xi = +-1 of #{(k, n) in Lambda_L : |xi(sigma + k.omega0) + mu_n| < eta/2}.
int cluster_count(double sigma, const ModelParams& params, int L, double eta);

/// Exact supremum over sigma of cluster_count by sweeping interval endpoints.
int cluster_supremum(const ModelParams& params, int L, double eta);

struct SigmaGrid {
  double lo = -1.0;
  double hi = 1.0;
  int points = 1000;
  double at(int i) const { return lo + (hi - lo) * (i + 0.5) / points; }
  double spacing() const { return (hi - lo) / points; }
};

/// Default sigma window covering every resonance in Lambda_L.
SigmaGrid cluster_window(const ModelParams& params, int L, int points);

}  // namespace qpb::spectrum
