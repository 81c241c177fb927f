/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "nonlin.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "error.hpp"

namespace qpb::nonlin {

namespace {

constexpr double kDropRelative = 1e-16;

IntVec negated(const IntVec& k) {
  IntVec r(k);
  for (int& x : r) x = -x;
  return r;
}

IntVec add(const IntVec& a, const IntVec& b) {
  IntVec r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

double k_dot(std::span<const int> k, std::span<const double> omega) {
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * omega[i];
  return s;
}

using Slice = std::map<IntVec, double>;

// n -> (k -> value) with both signs of k present.
std::map<IntVec, Slice> slices(const CoefficientField& q) {
  std::map<IntVec, Slice> out;
  for (const auto& [s, v] : q.expanded()) out[s.n][s.k] = v;
  return out;
}

std::vector<IntVec> neighbours(const IntVec& n) {
  std::vector<IntVec> out;
  for (std::size_t i = 0; i < n.size(); ++i)
    for (int step : {-1, 1}) {
      IntVec m = n;
      m[i] += step;
      out.push_back(std::move(m));
    }
  return out;
}

}  // namespace

CoefficientField::CoefficientField(int b, int d) : b_(b), d_(d) {
  if (b < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "field dimensions must be positive");
}

Site CoefficientField::canonical(const Site& s) {
  IntVec nk = negated(s.k);
  if (nk > s.k) return Site{std::move(nk), s.n};
  return s;
}

bool CoefficientField::is_canonical(const Site& s) { return !(negated(s.k) > s.k); }

double CoefficientField::get(const Site& s) const {
  auto it = entries_.find(canonical(s));
  return it == entries_.end() ? 0.0 : it->second;
}

void CoefficientField::set(const Site& s, double v) {
  if (s.b() != b_ || s.d() != d_) throw Error(ErrorCode::InvalidArgument, "site shape mismatch");
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "field values must be finite");
  entries_[canonical(s)] = v;
}

void CoefficientField::add(const Site& s, double v) { set(s, get(s) + v); }

void CoefficientField::erase(const Site& s) { entries_.erase(canonical(s)); }

void CoefficientField::prune(double threshold) {
  std::erase_if(entries_, [&](const auto& e) { return std::abs(e.second) <= threshold; });
}

std::vector<std::pair<Site, double>> CoefficientField::expanded() const {
  std::vector<std::pair<Site, double>> out;
  out.reserve(2 * entries_.size());
  for (const auto& [s, v] : entries_) {
    out.emplace_back(s, v);
    Site m{negated(s.k), s.n};
    if (m.k != s.k) out.emplace_back(std::move(m), v);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

int CoefficientField::support_bound() const {
  int r = 0;
  for (const auto& e : entries_) r = std::max(r, e.first.norm());
  return r;
}

double CoefficientField::sup_norm() const {
  double r = 0.0;
  for (const auto& e : entries_) r = std::max(r, std::abs(e.second));
  return r;
}

CoefficientField convolve(const CoefficientField& a, const CoefficientField& b) {
  if (a.b() != b.b() || a.d() != b.d()) throw Error(ErrorCode::InvalidArgument, "field shapes differ");
  CoefficientField out(a.b(), a.d());
  const auto sa = slices(a);
  const auto sb = slices(b);
  const double scale = std::max(a.sup_norm(), b.sup_norm());
  for (const auto& [n, ka] : sa) {
    auto it = sb.find(n);
    if (it == sb.end()) continue;
    Slice acc;
    for (const auto& [k1, v1] : ka)
      for (const auto& [k2, v2] : it->second) {
        IntVec k = add(k1, k2);
        if (!CoefficientField::is_canonical(Site{k, n})) continue;
        acc[k] += v1 * v2;
      }
    for (const auto& [k, v] : acc)
      if (std::abs(v) >= kDropRelative * scale * scale && v != 0.0) out.set(Site{k, n}, v);
  }
  return out;
}

CoefficientField convolve_power(const CoefficientField& q, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "convolution order must be >= 1");
  CoefficientField r = q;
  for (int i = 1; i < order; ++i) r = convolve(r, q);
  return r;
}

double diagonal(const Site& s, std::span<const double> omega, const ModelParams& params,
                double sigma) {
  const double mu = spectrum::mu(s.n, params);
  const double w = sigma + k_dot(s.k, omega);
  return mu * mu - w * w;
}

ResidualReport residual(const CoefficientField& q, std::span<const double> omega,
                        const ModelParams& params) {
  ResidualReport rep;
  CoefficientField F(q.b(), q.d());
  // Linear part on the support and its n-neighbours.
  std::set<Site> sites;
  for (const auto& [s, v] : q.entries()) {
    sites.insert(s);
    if (params.eps != 0.0)
      for (auto& m : neighbours(s.n)) sites.insert(Site{s.k, std::move(m)});
  }
  for (const auto& s : sites) {
    double v = diagonal(s, omega, params) * q.get(s);
    if (params.eps != 0.0) {
      double lap = 0.0;
      for (const auto& m : neighbours(s.n)) lap += q.get(Site{s.k, m});
      v += params.eps * lap;
    }
    F.set(s, v);
  }
  if (params.delta != 0.0) {
    const auto pw = convolve_power(q, params.p + 1);
    for (const auto& [s, v] : pw.entries()) F.add(s, params.delta * v);
  }
  for (const auto& [s, v] : F.expanded()) {
    const double a = std::abs(v);
    rep.sup = std::max(rep.sup, a);
    rep.l1 += a;
    rep.l2 += a * a;
  }
  rep.l2 = std::sqrt(rep.l2);
  rep.support_bound = F.support_bound();
  rep.F = std::move(F);
  return rep;
}

CoefficientField linearize(const CoefficientField& q, int p) {
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
  CoefficientField phi = convolve_power(q, p);
  CoefficientField out(q.b(), q.d());
  for (const auto& [s, v] : phi.entries()) out.set(s, (p + 1) * v);
  return out;
}

CoefficientField apply_linearization(const CoefficientField& q, const CoefficientField& v,
                                     std::span<const double> omega, const ModelParams& params) {
  CoefficientField out(v.b(), v.d());
  std::set<Site> sites;
  for (const auto& [s, x] : v.entries()) {
    sites.insert(s);
    for (auto& m : neighbours(s.n)) sites.insert(Site{s.k, std::move(m)});
  }
  for (const auto& s : sites) {
    double r = diagonal(s, omega, params) * v.get(s);
    double lap = 0.0;
    for (const auto& m : neighbours(s.n)) lap += v.get(Site{s.k, m});
    out.set(s, r + params.eps * lap);
  }
  if (params.delta != 0.0) {
    const auto tv = convolve(linearize(q, params.p), v);
    for (const auto& [s, x] : tv.entries()) out.add(s, params.delta * x);
  }
  return out;
}

double evaluate_solution(const CoefficientField& q, std::span<const double> omega, double t,
                         std::span<const int> n) {
  double u = 0.0;
  for (const auto& [s, v] : q.entries()) {
    if (!std::equal(s.n.begin(), s.n.end(), n.begin(), n.end())) continue;
    const double c = std::cos(k_dot(s.k, omega) * t);
    const bool zero_k = std::all_of(s.k.begin(), s.k.end(), [](int x) { return x == 0; });
    u += (zero_k ? 1.0 : 2.0) * v * c;
  }
  return u;
}

double pde_residual(const CoefficientField& q, std::span<const double> omega,
                    const ModelParams& params, std::span<const double> t_samples) {
  std::set<IntVec> ns;
  for (const auto& [s, v] : q.entries()) {
    ns.insert(s.n);
    for (auto& m : neighbours(s.n)) ns.insert(std::move(m));
  }
  double worst = 0.0;
  for (double t : t_samples) {
    for (const auto& n : ns) {
      double u = 0.0;
      double utt = 0.0;
      for (const auto& [s, v] : q.entries()) {
        if (s.n != n) continue;
        const double kw = k_dot(s.k, omega);
        const bool zero_k = std::all_of(s.k.begin(), s.k.end(), [](int x) { return x == 0; });
        const double w = (zero_k ? 1.0 : 2.0) * v;
        const double c = std::cos(kw * t);
        u += w * c;
        utt -= kw * kw * w * c;
      }
      double lap = 0.0;
      for (const auto& m : neighbours(n)) lap += evaluate_solution(q, omega, t, m);
      const double potential = std::cos(params.phase(n)) + params.m;
      const double r = utt + params.eps * lap + potential * u + params.delta * std::pow(u, params.p + 1);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

double time_domain_max(const CoefficientField& F, std::span<const double> omega,
                       std::span<const double> t_samples) {
  std::set<IntVec> ns;
  for (const auto& [s, v] : F.entries()) ns.insert(s.n);
  double worst = 0.0;
  for (double t : t_samples)
    for (const auto& n : ns) worst = std::max(worst, std::abs(evaluate_solution(F, omega, t, n)));
  return worst;
}

double weighted_tail_norm(const CoefficientField& q, double rho, const lattice::ResonantSet& S) {
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be positive");
  double s = 0.0;
  for (const auto& [site, v] : q.expanded()) {
    if (S.contains(site)) continue;
    s += std::abs(v) * std::exp(rho * (site.k_norm() + site.n_norm()));
  }
  return s;
}

}  // namespace qpb::nonlin
