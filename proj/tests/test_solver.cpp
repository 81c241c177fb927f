/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "solver.hpp"

using namespace qpb;
using namespace qpb::solver;
using lattice::IntVec;
using lattice::Site;

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

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("initial field") {
  auto p = params_1d(0.0, 0.0);
  p.amplitudes = {1.4};
  auto q = initial_field(p);
  const auto ex = q.expanded();
  REQUIRE(ex.size() == 2);
  CHECK(q.get(Site{{1}, {0}}) == 0.7);
  CHECK(q.get(Site{{-1}, {0}}) == 0.7);
  CHECK(nonlin::evaluate_solution(q, spectrum::omega0(p), 0.0, IntVec{0}) == doctest::Approx(1.4));
  CHECK(nonlin::weighted_tail_norm(q, 0.1, p.resonant_set()) == 0.0);
}

TEST_CASE("Q-step") {
  auto p = params_1d(0.0, 0.01);
  p.theta0 = 0.25;
  p.m = 3.0;
  const auto w0 = spectrum::omega0(p);
  CHECK(w0[0] * w0[0] == doctest::Approx(3.0));
  const auto w = q_step(initial_field(p), w0, p);
  CHECK(w[0] * w[0] == doctest::Approx(3.0075).epsilon(1e-14));

  auto z = params_1d(0.0, 0.0);
  const auto wz = spectrum::omega0(z);
  CHECK(q_step(initial_field(z), wz, z) == wz);

  // d omega / d a by central differences; order delta for b = 1.
  for (double delta : {1e-3, 1e-2}) {
    p.delta = delta;
    const double h = 1e-5;
    auto plus = p, minus = p;
    plus.amplitudes = {1.0 + h};
    minus.amplitudes = {1.0 - h};
    const double dw = (q_step(initial_field(plus), w0, plus)[0] - q_step(initial_field(minus), w0, minus)[0]) / (2 * h);
    // omega^2 = 3 + 3 delta a^2 / 4 at eps = 0.
    const double exact = 1.5 * delta / (2.0 * std::sqrt(3.0 + 0.75 * delta));
    CHECK(dw == doctest::Approx(exact).epsilon(1e-6));
    CHECK(dw / delta > 0.1);
    CHECK(dw / delta < 10.0);
  }

  // Two frequencies: det of the 2x2 Jacobian scales as delta^2.
  ModelParams p2;
  p2.alpha = {(std::sqrt(5.0) - 1.0) / 2.0};
  p2.theta0 = 0.2;
  p2.m = 2.5;
  p2.p = 2;
  p2.anchors = {{0}, {1}};
  p2.amplitudes = {1.0, 1.5};
  auto det_at = [&](double delta) {
    p2.delta = delta;
    const auto base = spectrum::omega0(p2);
    const double h = 1e-5;
    double J[2][2];
    for (int j = 0; j < 2; ++j) {
      auto a = p2, b = p2;
      a.amplitudes[j] += h;
      b.amplitudes[j] -= h;
      const auto wa = q_step(initial_field(a), base, a);
      const auto wb = q_step(initial_field(b), base, b);
      for (int i = 0; i < 2; ++i) J[i][j] = (wa[i] - wb[i]) / (2 * h);
    }
    return J[0][0] * J[1][1] - J[0][1] * J[1][0];
  };
  const double d1 = det_at(1e-3), d2 = det_at(2e-3);
  CHECK(std::abs(d1) / 1e-6 > 0.01);
  CHECK(std::abs(d1) / 1e-6 < 100.0);
  CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(1e-2));

  auto collapse = params_1d(0.0, 1.0);
  collapse.amplitudes = {2.0};
  collapse.m = 2.0;
  collapse.theta0 = 0.5;
  collapse.p = 2;
  auto q = initial_field(collapse);
  q.set(Site{{1}, {0}}, -20.0);
  CHECK(code_of([&] { q_step(q, spectrum::omega0(collapse), collapse); }) == ErrorCode::FrequencyCollapse);
}

TEST_CASE("P-step") {
  auto p = params_1d(1e-3, 1e-3);
  SolverConfig c;
  const auto q0 = initial_field(p);
  const auto w0 = spectrum::omega0(p);
  const auto inc = p_step(q0, w0, p, 1, c);
  const auto S = p.resonant_set();
  for (const auto& [s, v] : inc.expanded()) {
    CHECK_FALSE(S.contains(s));
    CHECK(s.norm() <= 3);
  }
  CHECK(inc.sup_norm() > 0.0);
  CHECK(inc.sup_norm() < 10 * (p.eps + p.delta));

  auto z = params_1d(0.0, 0.0);
  CHECK(p_step(initial_field(z), spectrum::omega0(z), z, 1, c).entries().empty());
}

TEST_CASE("solve") {
  SUBCASE("uncoupled") {
    auto p = params_1d(0.0, 0.0);
    auto s = solve(p, SolverConfig{});
    CHECK(s.trace.size() == 1);
    CHECK(s.converged);
    CHECK(s.omega == s.omega0);
    CHECK(sup_difference(s.q, initial_field(p)) == 0.0);
  }
  SUBCASE("small coupling") {
    auto p = params_1d(1e-3, 1e-3);
    SolverConfig c;
    auto s = solve(p, c);
    CHECK(s.converged);
    CHECK(s.trace.back().residual_sup <= 1e-12);
    CHECK(s.trace.size() <= static_cast<std::size_t>(c.r_max + 1));
    CHECK(s.quality.anchors_exact);
    CHECK(s.quality.symmetric);
    CHECK(std::abs(s.omega[0] - s.omega0[0]) <= 10 * p.delta);
    CHECK(s.quality.pde_residual <= 10 * s.quality.residual_l1 + 1e-15);

    // log log 1/F grows by at least 0.8 log(4/3) per stage above the floor.
    for (std::size_t r = 1; r < s.trace.size(); ++r) {
      const double a = s.trace[r - 1].residual_sup, b = s.trace[r].residual_sup;
      if (b < 1e-13) break;
      CHECK(std::log(std::log(1 / b)) - std::log(std::log(1 / a)) >= 0.8 * std::log(4.0 / 3.0));
    }
    // Decay rate stays positive across stages.
    for (std::size_t r = 2; r < s.trace.size(); ++r) CHECK(s.trace[r].decay_rate > 1.0);

    // Converged omega is a fixed point of the Q-step.
    const auto w = q_step(s.q, s.omega, p);
    CHECK(std::abs(w[0] - s.omega[0]) <= 1e-12);

    auto o = brute_force_oracle(p, 8);
    CHECK(o.residual_sup <= 1e-13);
    CHECK(sup_difference(o.q, s.q) <= 1e-9);
    CHECK(std::abs(o.omega[0] - s.omega[0]) <= 1e-9);
  }
  SUBCASE("determinism") {
    auto p = params_1d(1e-3, 2e-3);
    auto a = solve(p, SolverConfig{});
    auto b = solve(p, SolverConfig{});
    CHECK(sup_difference(a.q, b.q) == 0.0);
    CHECK(a.omega == b.omega);
  }
  SUBCASE("invalid config") {
    SolverConfig c;
    c.M = 1;
    CHECK(code_of([&] { solve(params_1d(0, 0), c); }) == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("oracle") {
  auto z = params_1d(0.0, 0.0);
  auto o = brute_force_oracle(z, 4);
  CHECK(o.iterations == 0);
  CHECK(sup_difference(o.q, initial_field(z)) == 0.0);

  // Quadratic convergence from q0.
  auto p = params_1d(1e-3, 1e-3);
  auto r = brute_force_oracle(p, 8);
  REQUIRE(r.history.size() >= 3);
  CHECK(r.history[2] <= 10 * r.history[1] * r.history[1] / r.history[0]);

  // First-order frequency shift for p = 2, eps = 0.
  for (double delta : {1e-3, 2e-3}) {
    auto d = params_1d(0.0, delta);
    auto od = brute_force_oracle(d, 6);
    const double w0 = spectrum::omega0(d)[0];
    const double excess = od.omega[0] * od.omega[0] - w0 * w0 - 0.75 * delta;
    CHECK(std::abs(excess) <= 10 * delta * delta);
  }
}

TEST_CASE("decay fit") {
  nonlin::CoefficientField q(1, 1);
  for (int k = 0; k <= 6; ++k)
    for (int n = -5; n <= 5; ++n) q.set(Site{{k}, {n}}, std::exp(-0.7 * (k + std::abs(n))));
  const auto S = lattice::ResonantSet(std::vector<IntVec>{{0}});
  auto f = decay_fit(q, S);
  CHECK(f.rate == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(f.residual <= 1e-10);
  CHECK(code_of([&] { decay_fit(initial_field(params_1d(0, 0)), S); }) == ErrorCode::InsufficientData);
}

TEST_CASE("sparse backend agrees with dense") {
  auto p = params_1d(1e-3, 1e-3);
  SolverConfig dense, sparse;
  dense.backend = "dense";
  sparse.backend = "sparse";
  auto a = solve(p, dense);
  auto b = solve(p, sparse);
  CHECK(b.converged);
  CHECK(sup_difference(a.q, b.q) <= 1e-12);
}
