/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Linearized operators H(sigma) = D(sigma) + eps*Lap + delta*T_phi restricted
// to lattice regions, their Green's functions and the multiscale diagnostics
// built on them.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lattice.hpp"
#include "nonlin.hpp"
#include "spectrum.hpp"

namespace qpb::linop {

using lattice::IntVec;
using lattice::RegionSpec;
using lattice::Site;
using spectrum::ModelParams;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr std::size_t kDenseLimit = 5000;
constexpr double kSingularRelative = 1e-14;

/// phi(k, n): either an explicit table or C e^{-gamma(|k|+|n|)}.
class Kernel {
 public:
  Kernel() = default;
  /// Entries for both signs of k must be supplied; asymmetry is reported by
  /// assemble() as AsymmetricKernel.
  static Kernel table(std::map<Site, double> entries);
  static Kernel from_field(const nonlin::CoefficientField& phi);
  static Kernel exponential(double C, double gamma);

  double at(const IntVec& dk, const IntVec& n) const;
  bool symmetric() const;
  std::string describe() const;

 private:
  enum class Type { Zero, Table, Exponential };
  Type type_ = Type::Zero;
  std::map<Site, double> table_;
  double C_ = 0.0;
  double gamma_ = 0.0;
};

struct OperatorSpec {
  RegionSpec region;
  double sigma = 0.0;
  std::vector<double> omega;
  ModelParams params;
  Kernel kernel;
};

/// Dense symmetric matrix in the ordering of region_members(spec.region).
Matrix assemble(const OperatorSpec& spec);
Eigen::SparseMatrix<double> assemble_sparse(const OperatorSpec& spec, const lattice::IndexMap& map);

struct Thresholds {
  double M = 8.0;
  double rho1 = 0.1;
  double rho2 = 0.7;
  double rho3 = 0.9;
  std::optional<double> gamma_prime;  // default gamma - M^{-0.2}

  double norm_bound() const;
  double far_distance() const;
  double gamma_prime_for(double gamma) const;
  double measure_bound() const;
};

struct GreenReport {
  std::size_t size = 0;
  double norm = 0.0;                // l2 operator norm of G
  double min_abs_eigenvalue = 0.0;  // smallest |eigenvalue| of the restricted H
  double inverse_residual = 0.0;    // max |A G - I|
  double norm_threshold = 0.0;
  bool norm_ok = false;
  double gamma_prime = 0.0;
  double far_distance = 0.0;
  std::size_t far_pairs = 0;
  double decay_margin = std::numeric_limits<double>::infinity();  // min(-log|G| - gamma'|j-j'|)
  bool decay_ok = true;
  bool fit_valid = false;
  double gamma_hat = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  Matrix G;  // only filled on request

  bool good() const { return norm_ok && decay_ok; }
};

/// Inverse of a symmetric matrix by eigendecomposition. Throws Singular when
/// the smallest |eigenvalue| is below 1e-14 ||A||.
Matrix symmetric_inverse(const Matrix& A, double* min_abs_eigenvalue = nullptr);

/// Norm, decay fit and LDE inequalities for G at the given site positions.
GreenReport analyse_inverse(const Matrix& A, const Matrix& G, const std::vector<IntVec>& positions,
                            double norm_threshold, double rate, double far_distance, bool keep);

GreenReport green(const OperatorSpec& spec, const Thresholds& th, bool keep_inverse = false);

struct LinearSolve {
  Vector x;
  double rcond = std::numeric_limits<double>::quiet_NaN();
  bool sparse = false;
};

enum class Backend { Auto, Dense, Sparse };

/// Solves H x = rhs on the region of spec (index order of map). Auto picks dense
/// LU up to kDenseLimit sites and sparse LU above. Throws Singular with the
/// smallest diagonal site in the message when rcond < 1e-14.
LinearSolve solve_system(const OperatorSpec& spec, const lattice::IndexMap& map, const Vector& rhs,
                         Backend backend = Backend::Auto);

// --- LDE scans -----------------------------------------------------------------

struct LdeFamily {
  std::vector<RegionSpec> regions;
  std::vector<std::string> labels;
  std::size_t candidates = 0;  // size of the family before subsampling
};

/// (0, n) + R_M(0) \ (R_M(0) + z) for shifts z at the centre, edges and
/// corners and translations |n| <= 2M, evenly subsampled to max_regions.
LdeFamily lde_family(int M, int b, int d, int max_regions);

struct LdeScanReport {
  int M = 0;
  spectrum::SigmaGrid grid;
  Thresholds thresholds;
  std::size_t regions_used = 0;
  std::size_t regions_total = 0;
  std::vector<double> sigma;
  std::vector<double> worst_norm;
  std::vector<double> worst_decay_margin;
  std::vector<int> bad;
  double bad_fraction = 0.0;
  double bad_measure = 0.0;  // bad_fraction * window length
  std::vector<std::pair<double, double>> bad_intervals;
  double comparison = 0.0;  // e^{-M^{rho1}}
};

LdeScanReport lde_scan(const ModelParams& params, const std::vector<double>& omega, const Kernel& kernel,
                       const Thresholds& th, const spectrum::SigmaGrid& grid, int max_regions,
                       int threads = 1);

// --- Schur complement ---------------------------------------------------------------

struct SchurReport {
  Matrix S;
  double min_singular = std::numeric_limits<double>::infinity();  // of S; inf when B* is empty
  double inverse_norm_S = 0.0;
  double complement_norm = 0.0;  // ||G_{Lambda \ B*}||
  double green_norm = 0.0;       // ||G_Lambda|| by direct inversion
  double bound = 0.0;            // 4(1+||G_c||)^2 (1+||S^{-1}||)
  bool bound_holds = false;
};

/// Throws ComplementSingular when H on Lambda \ B* is singular and Singular
/// when H on Lambda itself is.
SchurReport schur_complement(const OperatorSpec& spec, const std::vector<Site>& B_star);

// --- fixed-k blocks and the Schrodinger operator ---------------------------------------

struct BlockSpectrum {
  std::vector<double> zeta;  // eigenvalues of diag(mu_n^2) + eps*Lap on Lambda'
  double bound = 0.0;        // max_l |zeta_l - (sigma + k.omega)^2|^{-1}
  double direct_norm = 0.0;  // ||A_k^{-1}|| by direct inversion
  bool negative_shift = false;
};

BlockSpectrum block_spectral_bound(const IntVec& k, const std::vector<IntVec>& space_sites, double sigma,
                                   const std::vector<double>& omega, const ModelParams& params);

struct SchrodingerThresholds {
  int N = 12;
  double rho3 = 0.9;
  double rho4 = 0.05;
};

/// T(E; theta) = cos(2 pi (theta + n.alpha)) + m - E + eps*Lap on Q, theta in
/// turns. Norm threshold e^{sqrt N}, decay rate (1/2)|log eps| beyond N^{rho3}.
GreenReport qp_schrodinger_green(const std::vector<IntVec>& Q, double E, double theta,
                                 const ModelParams& params, const SchrodingerThresholds& th);

struct ThetaScan {
  std::vector<double> theta;
  std::vector<int> bad;
  double bad_fraction = 0.0;
  double comparison = 0.0;  // e^{-N^{rho4}}
};

ThetaScan qp_theta_scan(double E, int theta_points, const ModelParams& params,
                        const SchrodingerThresholds& th, int threads = 1);

}  // namespace qpb::linop
