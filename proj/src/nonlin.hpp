/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Coefficient fields q(k, n) of the cosine ansatz and the nonlinear lattice
// map F(q) = Dq + eps*Lap q + delta*q^{*(p+1)}.

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "lattice.hpp"
#include "spectrum.hpp"

namespace qpb::nonlin {

using lattice::IntVec;
using lattice::Site;
using spectrum::ModelParams;

/// Sparse field with q(k, n) = q(-k, n). Only the canonical representative
/// (the lexicographically larger of k and -k) is stored.
class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(int b, int d);

  int b() const { return b_; }
  int d() const { return d_; }

  static Site canonical(const Site& s);
  static bool is_canonical(const Site& s);

  double get(const Site& s) const;
  /// Stores v at s and at (-k, n). Zero values are kept until prune().
  void set(const Site& s, double v);
  void add(const Site& s, double v);
  void erase(const Site& s);
  void prune(double threshold);

  /// Canonical entries, sorted.
  const std::map<Site, double>& entries() const { return entries_; }
  /// Every (site, value) including both signs of k, sorted.
  std::vector<std::pair<Site, double>> expanded() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Largest sup-norm of a stored site (0 for an empty field).
  int support_bound() const;
  double sup_norm() const;

 private:
  int b_ = 0;
  int d_ = 0;
  std::map<Site, double> entries_;
};

/// Per-n k-convolution of two symmetric fields.
CoefficientField convolve(const CoefficientField& a, const CoefficientField& b);
/// q^{*order}; order >= 1.
CoefficientField convolve_power(const CoefficientField& q, int order);

struct ResidualReport {
  CoefficientField F;
  double sup = 0.0;
  double l2 = 0.0;
  double l1 = 0.0;  // over all sites, both signs of k
  int support_bound = 0;
};

double diagonal(const Site& s, std::span<const double> omega, const ModelParams& params,
                double sigma = 0.0);

ResidualReport residual(const CoefficientField& q, std::span<const double> omega,
                        const ModelParams& params);

/// phi = (p+1) q^{*p}.
CoefficientField linearize(const CoefficientField& q, int p);

/// (D + eps*Lap + delta*T_phi) v with phi = linearize(q, p).
CoefficientField apply_linearization(const CoefficientField& q, const CoefficientField& v,
                                     std::span<const double> omega, const ModelParams& params);

/// u(t, n) = sum_k q(k, n) cos(k.omega t).
double evaluate_solution(const CoefficientField& q, std::span<const double> omega, double t,
                         std::span<const int> n);

/// max over t in t_samples and n of |u_tt + eps*Lap u + (cos(phase)+m) u + delta u^{p+1}|,
/// evaluated pointwise in time.
double pde_residual(const CoefficientField& q, std::span<const double> omega,
                    const ModelParams& params, std::span<const double> t_samples);

/// max over t and n of |sum_k F(k, n) cos(k.omega t)|.
double time_domain_max(const CoefficientField& F, std::span<const double> omega,
                       std::span<const double> t_samples);

/// sum over (k, n) not in S of |q(k, n)| e^{rho(|k|+|n|)}.
double weighted_tail_norm(const CoefficientField& q, double rho, const lattice::ResonantSet& S);

}  // namespace qpb::nonlin
