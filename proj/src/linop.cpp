/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "linop.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"
#include "parallel.hpp"

namespace qpb::linop {

namespace {

double k_dot(const IntVec& k, const std::vector<double>& omega) {
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * omega[i];
  return s;
}

IntVec diff(const IntVec& a, const IntVec& b) {
  IntVec r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

int sup_distance(const IntVec& a, const IntVec& b) {
  int r = 0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

std::string site_string(const Site& s) {
  return fmt::format("k=({}) n=({})", fmt::join(s.k, ","), fmt::join(s.n, ","));
}

// Static part diag(mu^2 + delta*phi(0,n)) + eps*Lap + delta*T_phi; the sigma
// dependent -(sigma + k.omega)^2 is added separately.
std::vector<Eigen::Triplet<double>> static_triplets(const OperatorSpec& spec, const lattice::IndexMap& map) {
  if (!spec.kernel.symmetric()) throw Error(ErrorCode::AsymmetricKernel, "kernel is not symmetric in k");
  const auto& p = spec.params;
  std::vector<Eigen::Triplet<double>> t;
  std::map<IntVec, std::vector<std::size_t>> by_n;
  for (std::size_t i = 0; i < map.size(); ++i) by_n[map.site(i).n].push_back(i);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Site& s = map.site(i);
    const double mu = spectrum::mu(s.n, p);
    t.emplace_back(i, i, mu * mu);
    if (p.eps != 0.0) {
      for (std::size_t j = 0; j < s.n.size(); ++j)
        for (int step : {-1, 1}) {
          Site nb = s;
          nb.n[j] += step;
          if (auto idx = map.find(nb)) t.emplace_back(i, *idx, p.eps);
        }
    }
    if (p.delta != 0.0) {
      for (std::size_t j : by_n[s.n]) {
        const double v = spec.kernel.at(diff(s.k, map.site(j).k), s.n);
        if (v != 0.0) t.emplace_back(i, j, p.delta * v);
      }
    }
  }
  return t;
}

Matrix dense_static(const OperatorSpec& spec, const lattice::IndexMap& map) {
  Matrix A = Matrix::Zero(map.size(), map.size());
  for (const auto& t : static_triplets(spec, map)) A(t.row(), t.col()) += t.value();
  return A;
}

std::vector<double> shifted_frequencies(const lattice::IndexMap& map, const std::vector<double>& omega) {
  std::vector<double> kw(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) kw[i] = k_dot(map.site(i).k, omega);
  return kw;
}

void add_sigma(Matrix& A, const std::vector<double>& kw, double sigma) {
  for (std::size_t i = 0; i < kw.size(); ++i) {
    const double w = sigma + kw[i];
    A(i, i) -= w * w;
  }
}

std::vector<IntVec> positions_of(const lattice::IndexMap& map) {
  std::vector<IntVec> out;
  out.reserve(map.size());
  for (const auto& s : map.sites()) out.push_back(s.coords());
  return out;
}

double operator_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

double min_singular(const Matrix& A) {
  if (A.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

// --- Kernel ---------------------------------------------------------------------

Kernel Kernel::table(std::map<Site, double> entries) {
  Kernel k;
  k.type_ = Type::Table;
  k.table_ = std::move(entries);
  return k;
}

Kernel Kernel::from_field(const nonlin::CoefficientField& phi) {
  std::map<Site, double> t;
  for (const auto& [s, v] : phi.expanded()) t.emplace(s, v);
  return table(std::move(t));
}

Kernel Kernel::exponential(double C, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel decay rate must be positive");
  Kernel k;
  k.type_ = Type::Exponential;
  k.C_ = C;
  k.gamma_ = gamma;
  return k;
}

double Kernel::at(const IntVec& dk, const IntVec& n) const {
  switch (type_) {
    case Type::Zero: return 0.0;
    case Type::Exponential:
      return C_ * std::exp(-gamma_ * (lattice::sup_norm(dk) + lattice::sup_norm(n)));
    case Type::Table: {
      auto it = table_.find(Site{dk, n});
      return it == table_.end() ? 0.0 : it->second;
    }
  }
  return 0.0;
}

bool Kernel::symmetric() const {
  if (type_ != Type::Table) return true;
  for (const auto& [s, v] : table_)
    if (at(lattice::negate_k(s).k, s.n) != v) return false;
  return true;
}

std::string Kernel::describe() const {
  switch (type_) {
    case Type::Zero: return "zero";
    case Type::Exponential: return fmt::format("exponential(C={:.17g}, gamma={:.17g})", C_, gamma_);
    case Type::Table: return fmt::format("table({} entries)", table_.size());
  }
  return "unknown";
}

// --- assembly -------------------------------------------------------------------

Eigen::SparseMatrix<double> assemble_sparse(const OperatorSpec& spec, const lattice::IndexMap& map) {
  auto t = static_triplets(spec, map);
  const auto kw = shifted_frequencies(map, spec.omega);
  for (std::size_t i = 0; i < kw.size(); ++i) {
    const double w = spec.sigma + kw[i];
    t.emplace_back(i, i, -w * w);
  }
  Eigen::SparseMatrix<double> A(map.size(), map.size());
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Matrix assemble(const OperatorSpec& spec) {
  if (static_cast<int>(spec.omega.size()) != spec.region.b())
    throw Error(ErrorCode::InvalidArgument, "omega must have length b");
  lattice::IndexMap map(spec.region);
  Matrix A = dense_static(spec, map);
  add_sigma(A, shifted_frequencies(map, spec.omega), spec.sigma);
  return A;
}

// --- Green's functions ----------------------------------------------------------------

double Thresholds::norm_bound() const { return std::exp(std::pow(M, rho2)); }
double Thresholds::far_distance() const { return std::pow(M, rho3); }
double Thresholds::gamma_prime_for(double gamma) const {
  return gamma_prime ? *gamma_prime : gamma - std::pow(M, -0.2);
}
double Thresholds::measure_bound() const { return std::exp(-std::pow(M, rho1)); }

Matrix symmetric_inverse(const Matrix& A, double* min_abs_eigenvalue) {
  if (A.rows() == 0) {
    if (min_abs_eigenvalue) *min_abs_eigenvalue = std::numeric_limits<double>::infinity();
    return Matrix();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::Singular, "eigenvalue computation failed");
  const auto& lam = es.eigenvalues();
  const double lo = lam.cwiseAbs().minCoeff();
  const double hi = lam.cwiseAbs().maxCoeff();
  if (min_abs_eigenvalue) *min_abs_eigenvalue = lo;
  if (lo < kSingularRelative * hi || lo == 0.0)
    throw Error(ErrorCode::Singular, fmt::format("smallest singular value {:.6e} (norm {:.6e})", lo, hi));
  Matrix G = Eigen::PartialPivLU<Matrix>(A).inverse();
  // Symmetrize; the LU inverse is symmetric only up to rounding.
  return 0.5 * (G + G.transpose());
}

GreenReport analyse_inverse(const Matrix& A, const Matrix& G, const std::vector<IntVec>& positions,
                            double norm_threshold, double rate, double far_distance, bool keep) {
  GreenReport r;
  r.size = static_cast<std::size_t>(G.rows());
  if (A.size() != 0) {
    Matrix R = A * G - Matrix::Identity(G.rows(), G.cols());
    r.inverse_residual = R.cwiseAbs().maxCoeff();
  }
  r.norm_threshold = norm_threshold;
  r.gamma_prime = rate;
  r.far_distance = far_distance;

  // Least-squares sums per distance; deterministic order.
  std::map<int, std::pair<double, double>> by_dist;  // dist -> (count, sum log|G|)
  double sxx = 0, sx = 0, sy = 0, sxy = 0, syy = 0, count = 0;
  int max_dist = 0;
  const Eigen::Index n = G.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int dist = sup_distance(positions[i], positions[j]);
      max_dist = std::max(max_dist, dist);
      if (dist < far_distance) continue;
      ++r.far_pairs;
      const double g = std::abs(G(i, j));
      if (g == 0.0) continue;
      const double slack = -std::log(g) - rate * dist;
      r.decay_margin = std::min(r.decay_margin, slack);
      if (g > 1e-30) {
        const double y = std::log(g);
        sx += dist;
        sy += y;
        sxx += double(dist) * dist;
        sxy += dist * y;
        syy += y * y;
        count += 1;
        by_dist[dist].first += 1;
      }
    }
  }
  r.decay_ok = !(r.decay_margin < 0.0);
  if (count >= 2 && by_dist.size() >= 2 && max_dist >= 2.0 * far_distance) {
    const double denom = count * sxx - sx * sx;
    const double slope = (count * sxy - sx * sy) / denom;
    const double icpt = (sy - slope * sx) / count;
    const double sse = syy - 2 * slope * sxy - 2 * icpt * sy + slope * slope * sxx + 2 * slope * icpt * sx +
                       count * icpt * icpt;
    r.gamma_hat = -slope;
    r.fit_residual = std::sqrt(std::max(0.0, sse) / count);
    r.fit_valid = true;
  }
  if (keep) r.G = G;
  return r;
}

GreenReport green(const OperatorSpec& spec, const Thresholds& th, bool keep_inverse) {
  lattice::IndexMap map(spec.region);
  if (map.size() > kDenseLimit)
    throw Error(ErrorCode::InvalidArgument, "region too large for a dense Green's function");
  const Matrix A = assemble(spec);
  double lo = 0.0;
  const Matrix G = symmetric_inverse(A, &lo);
  auto r = analyse_inverse(A, G, positions_of(map), th.norm_bound(), th.gamma_prime_for(spec.params.gamma),
                           th.far_distance(), keep_inverse);
  r.min_abs_eigenvalue = lo;
  r.norm = 1.0 / lo;
  r.norm_ok = r.norm <= r.norm_threshold;
  return r;
}

LinearSolve solve_system(const OperatorSpec& spec, const lattice::IndexMap& map, const Vector& rhs,
                         Backend backend) {
  LinearSolve out;
  const auto A = assemble_sparse(spec, map);
  auto weakest = [&]() {
    std::size_t best = 0;
    double v = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (std::abs(A.coeff(i, i)) < v) v = std::abs(A.coeff(i, i)), best = static_cast<std::size_t>(i);
    return site_string(map.site(best));
  };
  const bool dense = backend == Backend::Dense || (backend == Backend::Auto && map.size() <= kDenseLimit);
  if (dense) {
    Matrix D(A);
    Eigen::PartialPivLU<Matrix> lu(D);
    out.rcond = lu.rcond();
    if (!(out.rcond >= 1e-14))
      throw Error(ErrorCode::Singular, fmt::format("rcond {:.3e}; smallest diagonal at {}", out.rcond, weakest()));
    out.x = lu.solve(rhs);
  } else {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorCode::Singular, fmt::format("sparse factorization failed; smallest diagonal at {}", weakest()));
    out.x = lu.solve(rhs);
    out.sparse = true;
  }
  return out;
}

// --- LDE scans ------------------------------------------------------------------------

LdeFamily lde_family(int M, int b, int d, int max_regions) {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "scale M must be >= 1");
  if (max_regions < 1) throw Error(ErrorCode::InvalidArgument, "max_regions must be >= 1");
  const int dim = b + d;
  std::vector<std::pair<IntVec, std::string>> shifts;
  shifts.emplace_back(IntVec(dim, 0), "centre");
  for (int i = 0; i < dim; ++i)
    for (int s : {1, -1}) {
      IntVec z(dim, 0);
      z[i] = s * M;
      shifts.emplace_back(z, fmt::format("edge{}{}", s > 0 ? '+' : '-', i));
    }
  for (int s : {1, -1}) shifts.emplace_back(IntVec(dim, s * M), s > 0 ? "corner+" : "corner-");

  std::vector<IntVec> translations;
  lattice::for_each_point(2, d, [&](const IntVec& v) {
    IntVec n(v);
    for (int& x : n) x *= M;
    translations.push_back(n);
  });

  LdeFamily all;
  for (const auto& [z, label] : shifts)
    for (const auto& n : translations) {
      RegionSpec r = lattice::rectangle(Site{IntVec(b, 0), n}, IntVec(dim, M));
      r.shift = z;
      all.regions.push_back(r);
      all.labels.push_back(fmt::format("{} n=({})", label, fmt::join(n, ",")));
    }
  all.candidates = all.regions.size();
  if (all.regions.size() <= static_cast<std::size_t>(max_regions)) return all;
  LdeFamily sub;
  sub.candidates = all.candidates;
  for (int i = 0; i < max_regions; ++i) {
    const std::size_t idx = static_cast<std::size_t>(i) * all.regions.size() / max_regions;
    sub.regions.push_back(all.regions[idx]);
    sub.labels.push_back(all.labels[idx]);
  }
  return sub;
}

LdeScanReport lde_scan(const ModelParams& params, const std::vector<double>& omega, const Kernel& kernel,
                       const Thresholds& th, const spectrum::SigmaGrid& grid, int max_regions, int threads) {
  if (grid.points < 1) throw Error(ErrorCode::InvalidArgument, "sigma grid must have points");
  const int M = static_cast<int>(std::lround(th.M));
  const auto family = lde_family(M, params.b(), params.d(), max_regions);

  struct Prepared {
    Matrix A0;
    std::vector<double> kw;
    std::vector<IntVec> positions;
  };
  std::vector<Prepared> prepared;
  for (const auto& region : family.regions) {
    lattice::IndexMap map(region);
    OperatorSpec spec{region, 0.0, omega, params, kernel};
    prepared.push_back({dense_static(spec, map), shifted_frequencies(map, omega), positions_of(map)});
  }

  LdeScanReport rep;
  rep.M = M;
  rep.grid = grid;
  rep.thresholds = th;
  rep.regions_used = family.regions.size();
  rep.regions_total = family.candidates;
  rep.comparison = th.measure_bound();
  const std::size_t P = static_cast<std::size_t>(grid.points);
  rep.sigma.resize(P);
  rep.worst_norm.assign(P, 0.0);
  rep.worst_decay_margin.assign(P, std::numeric_limits<double>::infinity());
  rep.bad.assign(P, 0);
  const double rate = th.gamma_prime_for(params.gamma);

  parallel_for(P, threads, [&](std::size_t i) {
    const double sigma = grid.at(static_cast<int>(i));
    rep.sigma[i] = sigma;
    for (const auto& pr : prepared) {
      Matrix A = pr.A0;
      add_sigma(A, pr.kw, sigma);
      double lo = 0.0;
      Matrix G;
      try {
        G = symmetric_inverse(A, &lo);
      } catch (const Error&) {
        rep.worst_norm[i] = std::numeric_limits<double>::infinity();
        rep.worst_decay_margin[i] = -std::numeric_limits<double>::infinity();
        rep.bad[i] = 1;
        continue;
      }
      auto r = analyse_inverse(Matrix(), G, pr.positions, th.norm_bound(), rate, th.far_distance(), false);
      const double norm = 1.0 / lo;
      rep.worst_norm[i] = std::max(rep.worst_norm[i], norm);
      rep.worst_decay_margin[i] = std::min(rep.worst_decay_margin[i], r.decay_margin);
      if (norm > th.norm_bound() || !r.decay_ok) rep.bad[i] = 1;
    }
  });

  const double h = grid.spacing();
  std::size_t bad = 0;
  for (std::size_t i = 0; i < P; ++i) {
    if (!rep.bad[i]) continue;
    ++bad;
    const double lo = grid.lo + h * i;
    const double hi = grid.lo + h * (i + 1);
    if (!rep.bad_intervals.empty() && i > 0 && rep.bad[i - 1])
      rep.bad_intervals.back().second = hi;
    else
      rep.bad_intervals.emplace_back(lo, hi);
  }
  rep.bad_fraction = static_cast<double>(bad) / P;
  rep.bad_measure = rep.bad_fraction * (grid.hi - grid.lo);
  return rep;
}

// --- Schur complement ---------------------------------------------------------------------

SchurReport schur_complement(const OperatorSpec& spec, const std::vector<Site>& B_star) {
  lattice::IndexMap map(spec.region);
  const Matrix H = assemble(spec);
  std::vector<int> in_b(map.size(), 0);
  std::vector<Eigen::Index> bi, ci;
  for (const auto& s : B_star) {
    const auto i = map.index(s);
    if (in_b[i]) throw Error(ErrorCode::InvalidArgument, "duplicate site in B*");
    in_b[i] = 1;
  }
  for (std::size_t i = 0; i < map.size(); ++i) (in_b[i] ? bi : ci).push_back(static_cast<Eigen::Index>(i));

  SchurReport r;
  double lo = 0.0;
  const Matrix G = symmetric_inverse(H, &lo);
  r.green_norm = 1.0 / lo;

  const Matrix Hcc = H(ci, ci);
  Matrix Gc;
  try {
    Gc = symmetric_inverse(Hcc, &lo);
  } catch (const Error& e) {
    throw Error(ErrorCode::ComplementSingular, e.what());
  }
  r.complement_norm = ci.empty() ? 0.0 : 1.0 / lo;
  if (!bi.empty()) {
    const Matrix Hbc = H(bi, ci);
    r.S = H(bi, bi) - Hbc * Gc * Hbc.transpose();
    r.min_singular = min_singular(r.S);
    r.inverse_norm_S = r.min_singular > 0.0 ? 1.0 / r.min_singular : std::numeric_limits<double>::infinity();
  }
  const double c = 1.0 + r.complement_norm;
  r.bound = 4.0 * c * c * (1.0 + r.inverse_norm_S);
  r.bound_holds = r.green_norm <= r.bound * (1.0 + 1e-12);
  return r;
}

// --- fixed-k blocks --------------------------------------------------------------------------

BlockSpectrum block_spectral_bound(const IntVec& k, const std::vector<IntVec>& space_sites, double sigma,
                                   const std::vector<double>& omega, const ModelParams& params) {
  if (space_sites.empty()) throw Error(ErrorCode::EmptyRegion, "empty space region");
  const std::size_t n = space_sites.size();
  std::map<IntVec, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i)
    if (!index.emplace(space_sites[i], i).second) throw Error(ErrorCode::InvalidArgument, "duplicate site");
  Matrix A = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = spectrum::mu(space_sites[i], params);
    A(i, i) = mu * mu;
    for (std::size_t j = 0; j < space_sites[i].size(); ++j)
      for (int step : {-1, 1}) {
        IntVec nb = space_sites[i];
        nb[j] += step;
        auto it = index.find(nb);
        if (it != index.end()) A(i, it->second) += params.eps;
      }
  }
  BlockSpectrum out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  const double s = sigma + k_dot(k, omega);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double z = es.eigenvalues()(i);
    out.zeta.push_back(z);
    if (z <= 0.0) out.negative_shift = true;
    const double denom = z > 0.0 ? std::abs(s - std::sqrt(z)) * std::abs(s + std::sqrt(z)) : std::abs(z - s * s);
    out.bound = std::max(out.bound, 1.0 / denom);
  }
  Matrix Ak = A - s * s * Matrix::Identity(n, n);
  Eigen::PartialPivLU<Matrix> lu(Ak);
  out.direct_norm = operator_norm(lu.inverse());
  return out;
}

GreenReport qp_schrodinger_green(const std::vector<IntVec>& Q, double E, double theta,
                                 const ModelParams& params, const SchrodingerThresholds& th) {
  if (Q.empty()) throw Error(ErrorCode::EmptyRegion, "empty space region");
  const std::size_t n = Q.size();
  std::map<IntVec, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(Q[i], i);
  Matrix T = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double na = 0.0;
    for (std::size_t j = 0; j < Q[i].size(); ++j) na += Q[i][j] * params.alpha[j];
    T(i, i) = std::cos(2.0 * std::numbers::pi * (theta + na)) + params.m - E;
    for (std::size_t j = 0; j < Q[i].size(); ++j)
      for (int step : {-1, 1}) {
        IntVec nb = Q[i];
        nb[j] += step;
        auto it = index.find(nb);
        if (it != index.end()) T(i, it->second) += params.eps;
      }
  }
  double lo = 0.0;
  const Matrix G = symmetric_inverse(T, &lo);
  const double rate = params.eps > 0.0 ? 0.5 * std::abs(std::log(params.eps)) : std::numeric_limits<double>::infinity();
  auto r = analyse_inverse(T, G, Q, std::exp(std::sqrt(static_cast<double>(th.N))), rate,
                           std::pow(static_cast<double>(th.N), th.rho3), false);
  r.min_abs_eigenvalue = lo;
  r.norm = 1.0 / lo;
  r.norm_ok = r.norm <= r.norm_threshold;
  return r;
}

ThetaScan qp_theta_scan(double E, int theta_points, const ModelParams& params, const SchrodingerThresholds& th,
                        int threads) {
  if (theta_points < 1) throw Error(ErrorCode::InvalidArgument, "theta grid must have points");
  std::vector<IntVec> Q;
  lattice::for_each_point(th.N, params.d(), [&](const IntVec& v) { Q.push_back(v); });
  ThetaScan out;
  out.theta.resize(theta_points);
  out.bad.assign(theta_points, 0);
  parallel_for(static_cast<std::size_t>(theta_points), threads, [&](std::size_t i) {
    const double theta = (i + 0.5) / theta_points;
    out.theta[i] = theta;
    try {
      out.bad[i] = !qp_schrodinger_green(Q, E, theta, params, th).good();
    } catch (const Error&) {
      out.bad[i] = 1;
    }
  });
  int bad = 0;
  for (int b : out.bad) bad += b;
  out.bad_fraction = static_cast<double>(bad) / theta_points;
  out.comparison = std::exp(-std::pow(static_cast<double>(th.N), th.rho4));
  return out;
}

}  // namespace qpb::linop
