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

#include "nonlin.hpp"

using namespace qpb;
using namespace qpb::nonlin;

namespace {

ModelParams params_1d(double eps, double delta) {
  ModelParams p;
  p.alpha = {(std::sqrt(5.0) - 1.0) / 2.0};
  p.theta0 = 0.2;
  p.m = 2.5;
  p.eps = eps;
  p.delta = delta;
  p.p = 2;
  p.anchors = {{0}};
  p.amplitudes = {1.0};
  return p;
}

CoefficientField random_field(std::mt19937_64& rng, int b, int d, int radius, int count) {
  std::uniform_int_distribution<int> I(-radius, radius);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  CoefficientField q(b, d);
  for (int i = 0; i < count; ++i) {
    Site s{IntVec(b), IntVec(d)};
    for (int& x : s.k) x = I(rng);
    for (int& x : s.n) x = I(rng);
    q.set(s, U(rng));
  }
  return q;
}

// Dense 1-D k-convolution at a single n, written without the field class.
std::vector<double> dense_conv(const std::vector<double>& a, const std::vector<double>& b, int ra, int rb) {
  std::vector<double> out(2 * (ra + rb) + 1, 0.0);
  for (int i = -ra; i <= ra; ++i)
    for (int j = -rb; j <= rb; ++j) out[i + j + ra + rb] += a[i + ra] * b[j + rb];
  return out;
}

}  // namespace

TEST_CASE("canonical storage keeps symmetry") {
  CoefficientField q(1, 1);
  q.set(Site{{-2}, {1}}, 0.3);
  CHECK(q.get(Site{{2}, {1}}) == 0.3);
  CHECK(q.size() == 1);
  CHECK(q.expanded().size() == 2);
  q.set(Site{{0}, {0}}, 1.0);
  CHECK(q.expanded().size() == 3);
  CoefficientField q2(2, 1);
  q2.set(Site{{-1, 3}, {0}}, 1.0);
  CHECK(q2.get(Site{{1, -3}, {0}}) == 1.0);
}

TEST_CASE("convolution powers") {
  CoefficientField q(1, 1);
  q.set(Site{{1}, {4}}, 0.5);
  CHECK(convolve_power(q, 1).entries() == q.entries());

  // Enumerate all 8 sign triples by hand.
  std::map<int, double> oracle;
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1})
      for (int s3 : {-1, 1}) oracle[s1 + s2 + s3] += 0.125;
  auto c3 = convolve_power(q, 3);
  for (int k : {-3, -1, 1, 3}) CHECK(c3.get(Site{{k}, {4}}) == doctest::Approx(oracle[k]));
  CHECK(c3.get(Site{{3}, {4}}) == doctest::Approx(0.125));
  CHECK(c3.get(Site{{1}, {4}}) == doctest::Approx(0.375));
  CHECK(c3.get(Site{{1}, {3}}) == 0.0);

  CHECK(convolve_power(CoefficientField(1, 1), 3).empty());

  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    auto r = random_field(rng, 1, 1, 3, 12);
    auto lhs = convolve_power(r, 5);
    auto rhs = convolve(convolve_power(r, 2), convolve_power(r, 3));
    for (const auto& [s, v] : lhs.entries()) CHECK(std::abs(v - rhs.get(s)) <= 1e-12);
    for (const auto& [s, v] : rhs.entries()) CHECK(std::abs(v - lhs.get(s)) <= 1e-12);

    // Dense oracle on the n = 0 slice.
    std::vector<double> dense(7);
    for (int k = -3; k <= 3; ++k) dense[k + 3] = r.get(Site{{k}, {0}});
    auto d2 = dense_conv(dense, dense, 3, 3);
    auto c2 = convolve_power(r, 2);
    for (int k = -6; k <= 6; ++k) CHECK(std::abs(c2.get(Site{{k}, {0}}) - d2[k + 6]) <= 1e-14);
    // Symmetry is structural; check the dense result agrees.
    for (int k = 0; k <= 6; ++k) CHECK(std::abs(d2[6 + k] - d2[6 - k]) <= 1e-14);
  }
}

TEST_CASE("residual") {
  auto p = params_1d(0.0, 0.0);
  CHECK(residual(CoefficientField(1, 1), spectrum::omega0(p), p).sup == 0.0);

  CoefficientField q0(1, 1);
  q0.set(Site{{1}, {0}}, 0.5);
  auto w0 = spectrum::omega0(p);
  CHECK(residual(q0, w0, p).sup == 0.0);

  for (double s : {1e-2, 1e-3, 1e-4}) {
    auto ps = params_1d(s, s);
    auto r = residual(q0, w0, ps);
    CHECK(r.sup > 0.0);
    CHECK(r.sup <= 3.0 * s);
    CHECK(r.support_bound <= 3);
  }

  // Hand evaluation: eps = 0, delta = 0.1 at k = 3, n = 0: D*0 + 0.1*(1/8).
  auto pd = params_1d(0.0, 0.1);
  auto r = residual(q0, w0, pd);
  CHECK(r.F.get(Site{{3}, {0}}) == doctest::Approx(0.0125));
  CHECK(r.F.get(Site{{1}, {0}}) == doctest::Approx(0.1 * 0.375));
  CHECK(r.l1 == doctest::Approx(2 * 0.0125 + 2 * 0.0375));
}

TEST_CASE("linearization") {
  CoefficientField q(1, 1);
  q.set(Site{{1}, {2}}, 0.5);
  auto phi = linearize(q, 2);
  CHECK(phi.get(Site{{0}, {2}}) == doctest::Approx(1.5));
  CHECK(phi.get(Site{{2}, {2}}) == doctest::Approx(0.75));
  CHECK(linearize(CoefficientField(1, 1), 2).empty());

  // Directional derivative: error of the forward difference is O(h).
  auto p = params_1d(0.01, 0.3);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    auto qr = random_field(rng, 1, 1, 2, 8);
    auto v = random_field(rng, 1, 1, 2, 6);
    const auto w = spectrum::omega0(p);
    const auto F0 = residual(qr, w, p).F;
    const auto J = apply_linearization(qr, v, w, p);
    std::vector<double> errs;
    for (double h : {1e-3, 1e-4}) {
      CoefficientField qh = qr;
      for (const auto& [s, x] : v.entries()) qh.add(s, h * x);
      const auto Fh = residual(qh, w, p).F;
      double err = 0.0;
      std::set<Site> all;
      for (const auto& e : Fh.entries()) all.insert(e.first);
      for (const auto& e : F0.entries()) all.insert(e.first);
      for (const auto& e : J.entries()) all.insert(e.first);
      for (const auto& s : all) err = std::max(err, std::abs((Fh.get(s) - F0.get(s)) / h - J.get(s)));
      errs.push_back(err);
    }
    CHECK(errs[0] / errs[1] > 8.0);
    CHECK(errs[0] / errs[1] < 12.0);
  }
}

TEST_CASE("time domain") {
  auto p = params_1d(0.0, 0.0);
  const auto w = spectrum::omega0(p);
  CoefficientField q0(1, 1);
  q0.set(Site{{1}, {0}}, 0.5);
  CHECK(evaluate_solution(q0, w, 0.0, IntVec{0}) == doctest::Approx(1.0));
  for (double t : {0.3, 1.7, -2.2}) {
    CHECK(evaluate_solution(q0, w, t, IntVec{0}) == doctest::Approx(std::cos(w[0] * t)));
    CHECK(evaluate_solution(q0, w, t, IntVec{0}) == evaluate_solution(q0, w, -t, IntVec{0}));
  }
  std::vector<double> ts;
  for (int i = 0; i < 50; ++i) ts.push_back(0.37 * i);
  CHECK(pde_residual(q0, w, p, ts) <= 1e-12);

  // Pointwise-in-time residual equals the time image of the lattice residual.
  auto pr = params_1d(0.05, 0.2);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 4; ++t) {
    auto q = random_field(rng, 1, 1, 2, 7);
    const auto F = residual(q, w, pr).F;
    const double a = pde_residual(q, w, pr, ts);
    const double b = time_domain_max(F, w, ts);
    CHECK(std::abs(a - b) <= 1e-10);
  }
}

TEST_CASE("weighted tail norm") {
  lattice::ResonantSet S(std::vector<IntVec>{{0}});
  CoefficientField q0(1, 1);
  q0.set(Site{{1}, {0}}, 0.5);
  CHECK(weighted_tail_norm(q0, 0.1, S) == 0.0);
  CoefficientField q(1, 1);
  q.set(Site{{0}, {2}}, -0.25);
  CHECK(weighted_tail_norm(q, 0.1, S) == doctest::Approx(0.25 * std::exp(0.2)));
  q.set(Site{{3}, {1}}, 0.1);
  CHECK(weighted_tail_norm(q, 0.1, S) == doctest::Approx(0.25 * std::exp(0.2) + 2 * 0.1 * std::exp(0.4)));
}
