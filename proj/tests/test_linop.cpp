/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "linop.hpp"

using namespace qpb;
using namespace qpb::linop;

namespace {

ModelParams params_1d(double eps, double delta) {
  ModelParams p;
  p.alpha = {(std::sqrt(5.0) - 1.0) / 2.0};
  p.theta0 = 0.2;
  p.m = 2.5;
  p.eps = eps;
  p.delta = delta;
  p.anchors = {{0}};
  p.amplitudes = {1.0};
  return p;
}

double dval(const Site& s, double sigma, const std::vector<double>& w, const ModelParams& p) {
  const double mu = spectrum::mu(s.n, p);
  const double x = sigma + s.k[0] * w[0];
  return mu * mu - x * x;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

RegionSpec hundred_site_region(const Site& centre) {
  RegionSpec r = lattice::rectangle(centre, {5, 5});
  r.shift = {8, 4};
  return r;
}

}  // namespace

TEST_CASE("assembly") {
  auto p = params_1d(0.0, 0.0);
  const std::vector<double> w = spectrum::omega0(p);
  OperatorSpec spec{lattice::cube(2, 1, 1), 0.3, w, p, Kernel::exponential(1.0, 1.0)};
  const Matrix A = assemble(spec);
  const auto sites = lattice::region_members(spec.region);
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = 0; j < sites.size(); ++j)
      CHECK(A(i, j) == (i == j ? doctest::Approx(dval(sites[i], 0.3, w, p)) : doctest::Approx(0.0)));

  spec.params = params_1d(0.1, 0.0);
  spec.region = lattice::cube(1, 1, 1);
  const Matrix B = assemble(spec);
  const auto s1 = lattice::region_members(spec.region);
  int expected = 0;
  for (const auto& a : s1)
    for (const auto& b : s1)
      if (a.k == b.k && std::abs(a.n[0] - b.n[0]) == 1) ++expected;
  int count = 0;
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j)
      if (i != j && B(i, j) != 0.0) {
        CHECK(B(i, j) == 0.1);
        ++count;
      }
  CHECK(count == expected);
  CHECK(count == 12);

  spec.params = params_1d(0.05, 0.2);
  spec.region = lattice::cube(3, 1, 1);
  const Matrix C = assemble(spec);
  CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // Diagonal carries delta*phi(0, n).
  const auto s3 = lattice::region_members(spec.region);
  for (std::size_t i = 0; i < s3.size(); ++i)
    CHECK(C(i, i) == doctest::Approx(dval(s3[i], 0.3, w, spec.params) +
                                     0.2 * std::exp(-std::abs(s3[i].n[0]))));

  std::map<Site, double> t{{Site{{1}, {0}}, 0.5}, {Site{{-1}, {0}}, 0.4}};
  spec.kernel = Kernel::table(t);
  CHECK(code_of([&] { assemble(spec); }) == ErrorCode::AsymmetricKernel);
}

TEST_CASE("Green's function") {
  auto p = params_1d(0.0, 0.0);
  const auto w = spectrum::omega0(p);
  OperatorSpec spec{lattice::cube(3, 1, 1), 0.37, w, p, Kernel()};
  Thresholds th;
  th.M = 3;
  auto g = green(spec, th, true);
  const auto sites = lattice::region_members(spec.region);
  double dmin = 1e9;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double d = dval(sites[i], 0.37, w, p);
    dmin = std::min(dmin, std::abs(d));
    CHECK(g.G(i, i) == doctest::Approx(1.0 / d).epsilon(1e-12));
    for (std::size_t j = 0; j < sites.size(); ++j)
      if (i != j) CHECK(std::abs(g.G(i, j)) <= 1e-15 * std::abs(g.G(i, i)));
  }
  CHECK(g.norm == doctest::Approx(1.0 / dmin));

  // 100-site instance.
  spec.params = params_1d(0.05, 0.1);
  spec.kernel = Kernel::exponential(1.0, 1.0);
  spec.region = hundred_site_region(Site{{0}, {0}});
  REQUIRE(lattice::region_members(spec.region).size() == 100);
  auto g2 = green(spec, th);
  CHECK(g2.inverse_residual <= 1e-10);
  CHECK(g2.size == 100);

  // Singular: put sigma on an exact diagonal zero.
  OperatorSpec sing{lattice::cube(1, 1, 1), 0.0, w, params_1d(0.0, 0.0), Kernel()};
  sing.sigma = spectrum::mu(IntVec{0}, p) - w[0];
  CHECK(code_of([&] { green(sing, th); }) == ErrorCode::Singular);
}

TEST_CASE("Toeplitz covariance") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 3; ++t) {
    auto p = params_1d(0.02 * U(rng), 0.05 * U(rng));
    const auto w = spectrum::omega0(p);
    const int k0 = 1 + static_cast<int>(U(rng) * 4);
    const double sigma = U(rng) - 0.5;
    OperatorSpec a{hundred_site_region(Site{{k0}, {0}}), sigma, w, p, Kernel::exponential(1.0, 1.0)};
    OperatorSpec b{hundred_site_region(Site{{0}, {0}}), sigma + k0 * w[0], w, p, Kernel::exponential(1.0, 1.0)};
    Thresholds th;
    auto ga = green(a, th, true);
    auto gb = green(b, th, true);
    CHECK((ga.G - gb.G).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ga.norm));
  }
}

TEST_CASE("Schur complement") {
  auto p = params_1d(0.01, 0.02);
  const auto w = spectrum::omega0(p);
  OperatorSpec spec{lattice::rectangle(Site{{0}, {0}}, {9, 5}), 0.1, w, p, Kernel::exponential(1.0, 1.0)};
  auto empty = schur_complement(spec, {});
  CHECK(empty.S.size() == 0);
  CHECK(empty.bound == doctest::Approx(4.0 * std::pow(1.0 + empty.green_norm, 2)));
  CHECK(empty.bound_holds);

  // B* = the two sites with the smallest |D|; the direct norm satisfies the bound.
  const auto sites = lattice::region_members(spec.region);
  CHECK(sites.size() == 209);
  std::vector<std::pair<double, Site>> ranked;
  for (const auto& s : sites) ranked.emplace_back(std::abs(dval(s, 0.1, w, p)), s);
  std::sort(ranked.begin(), ranked.end());
  auto rep = schur_complement(spec, {ranked[0].second, ranked[1].second});
  CHECK(rep.S.rows() == 2);
  CHECK(rep.bound_holds);
  // Direct inversion oracle for ||G_Lambda||.
  Eigen::JacobiSVD<Matrix> svd(assemble(spec));
  CHECK(rep.green_norm == doctest::Approx(1.0 / svd.singularValues().tail(1)(0)).epsilon(1e-8));

  // Diagonal case: S is the diagonal sub-block.
  spec.params = params_1d(0.0, 0.0);
  auto diag = schur_complement(spec, {ranked[0].second});
  CHECK(diag.S(0, 0) == doctest::Approx(dval(ranked[0].second, 0.1, w, spec.params)));
}

TEST_CASE("fixed-k block spectrum") {
  auto p = params_1d(0.0, 0.0);
  const auto w = spectrum::omega0(p);
  std::vector<IntVec> L{{-2}, {-1}, {0}, {1}, {2}};
  auto b0 = block_spectral_bound(IntVec{2}, L, 0.1, w, p);
  std::vector<double> mu2;
  for (const auto& n : L) mu2.push_back(std::pow(spectrum::mu(n, p), 2));
  std::sort(mu2.begin(), mu2.end());
  for (std::size_t i = 0; i < L.size(); ++i) {
    CHECK(b0.zeta[i] == doctest::Approx(mu2[i]));
    CHECK(b0.zeta[i] >= 0.5);
  }
  CHECK_FALSE(b0.negative_shift);

  p.eps = 1e-3;
  auto b1 = block_spectral_bound(IntVec{1}, L, 0.2, w, p);
  for (std::size_t i = 0; i < L.size(); ++i) CHECK(std::abs(b1.zeta[i] - mu2[i]) <= 2 * 1 * 1e-3);
  CHECK(std::abs(b1.bound - b1.direct_norm) <= 1e-10 * b1.direct_norm);
}

TEST_CASE("quasi-periodic Schrodinger block") {
  auto p = params_1d(0.0, 0.0);
  std::vector<IntVec> Q;
  for (int n = -6; n <= 6; ++n) Q.push_back({n});
  SchrodingerThresholds th{6, 0.9, 0.05};
  auto g = qp_schrodinger_green(Q, 2.3, 0.11, p, th);
  double dmin = 1e9;
  for (const auto& n : Q) dmin = std::min(dmin, std::abs(std::cos(2 * M_PI * (0.11 + n[0] * p.alpha[0])) + 2.5 - 2.3));
  CHECK(g.norm == doctest::Approx(1.0 / dmin));
  CHECK(g.decay_ok);

  p.eps = 1e-3;
  for (double theta : {0.0, 0.3, 0.77}) CHECK(qp_schrodinger_green(Q, -5.0, theta, p, th).good());
}

TEST_CASE("LDE scan, diagonal case") {
  auto p = params_1d(0.0, 0.0);
  const auto w = spectrum::omega0(p);
  Thresholds th;
  th.M = 3;
  spectrum::SigmaGrid grid{-8.0, 8.0, 4000};
  auto rep = lde_scan(p, w, Kernel(), th, grid, 8);
  // Explicit criterion: sigma is bad iff some region site has |D| < e^{-M^{rho2}}.
  const auto fam = lde_family(3, 1, 1, 8);
  const double thr = 1.0 / th.norm_bound();
  int mismatches = 0;
  for (int i = 0; i < grid.points; ++i) {
    const double s = grid.at(i);
    bool bad = false;
    for (const auto& r : fam.regions)
      for (const auto& site : lattice::region_members(r))
        if (std::abs(dval(site, s, w, p)) < thr) bad = true;
    mismatches += (bad != static_cast<bool>(rep.bad[i]));
  }
  CHECK(mismatches == 0);
  CHECK(rep.bad_fraction > 0.0);
  CHECK(rep.bad_fraction < 1.0);
}
