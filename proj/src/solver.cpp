/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "solver.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <random>

#include "error.hpp"
#include "linop.hpp"

namespace qpb::solver {

using lattice::IntVec;
using lattice::Site;

namespace {

constexpr double kTailRho = 0.1;
constexpr int kQualityTimes = 100;
constexpr double kQualityHorizon = 100.0;

Site anchor_site(const ModelParams& params, int l, int sign) {
  Site s{IntVec(params.b(), 0), params.anchors[l]};
  s.k[l] = sign;
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void SolverConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (M < 2) bad("solver.M must be >= 2");
  if (r_max < 0 || r_max > 64) bad("solver.r_max must lie in [0, 64]");
  if (box_cap < 1) bad("solver.box_cap must be >= 1");
  if (!(residual_floor > 0.0)) bad("solver.residual_floor must be positive");
  if (!(q_update_damping > 0.0 && q_update_damping <= 1.0)) bad("solver.q_update_damping must lie in (0, 1]");
  if (!(q_tolerance_factor > 0.0)) bad("solver.q_tolerance_factor must be positive");
  if (backend != "auto" && backend != "dense" && backend != "sparse") bad("solver.backend must be auto, dense or sparse");
}

int SolverConfig::box_radius(int stage) const {
  long long r = 1;
  for (int i = 0; i < stage && r < box_cap; ++i) r *= M;
  return static_cast<int>(std::min<long long>(r, box_cap));
}

CoefficientField initial_field(const ModelParams& params) {
  const auto S = params.resonant_set();
  CoefficientField q(params.b(), params.d());
  for (int l = 0; l < params.b(); ++l) q.set(anchor_site(params, l, 1), params.amplitudes.at(l) / 2.0);
  return q;
}

std::vector<double> q_step(const CoefficientField& q, const std::vector<double>& omega_current,
                           const ModelParams& params, double damping, double tolerance) {
  const int b = params.b();
  const auto pw = params.delta != 0.0 ? nonlin::convolve_power(q, params.p + 1) : CoefficientField(b, params.d());
  std::vector<double> target(b);
  for (int l = 0; l < b; ++l) {
    const Site s = anchor_site(params, l, 1);
    double lap = 0.0;
    for (std::size_t j = 0; j < s.n.size(); ++j)
      for (int step : {-1, 1}) {
        Site nb = s;
        nb.n[j] += step;
        lap += q.get(nb);
      }
    const double mu = spectrum::mu(s.n, params);
    const double rhs = params.eps * lap + params.delta * pw.get(s);
    target[l] = mu * mu + 2.0 / params.amplitudes.at(l) * rhs;
    if (!(target[l] > 0.0))
      throw Error(ErrorCode::FrequencyCollapse, fmt::format("omega_{}^2 = {:.6e} is not positive", l + 1, target[l]));
  }
  std::vector<double> w2(b);
  for (int l = 0; l < b; ++l) w2[l] = omega_current.at(l) * omega_current.at(l);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double change = 0.0;
    for (int l = 0; l < b; ++l) {
      const double next = w2[l] + damping * (target[l] - w2[l]);
      change = std::max(change, std::abs(std::sqrt(next) - std::sqrt(w2[l])));
      w2[l] = next;
    }
    if (change <= tolerance) break;
  }
  std::vector<double> omega(b);
  for (int l = 0; l < b; ++l) omega[l] = std::sqrt(w2[l]);
  return omega;
}

CoefficientField p_step(const CoefficientField& q, const std::vector<double>& omega, const ModelParams& params,
                        int stage, const SolverConfig& config, double* rcond) {
  const int R = config.box_radius(stage);
  const auto S = params.resonant_set();
  const auto region = lattice::cube_excluding(R, S, params.d());
  lattice::IndexMap map(region);
  const auto F = nonlin::residual(q, omega, params).F;
  linop::Vector rhs(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) rhs(i) = -F.get(map.site(i));

  CoefficientField inc(params.b(), params.d());
  if (rhs.cwiseAbs().maxCoeff() == 0.0) return inc;

  linop::OperatorSpec spec{region, 0.0, omega, params,
                           linop::Kernel::from_field(nonlin::linearize(q, params.p))};
  linop::LinearSolve sol;
  try {
    const auto backend = config.backend == "dense"    ? linop::Backend::Dense
                         : config.backend == "sparse" ? linop::Backend::Sparse
                                                      : linop::Backend::Auto;
    sol = linop::solve_system(spec, map, rhs, backend);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    throw Error(ErrorCode::ResonantBox, fmt::format("stage {} box {}: {}", stage, R, e.what()));
  }
  if (rcond) *rcond = sol.rcond;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Site& s = map.site(i);
    if (!CoefficientField::is_canonical(s)) continue;
    const double v = 0.5 * (sol.x(i) + sol.x(map.index(lattice::negate_k(s))));
    if (v != 0.0) inc.set(s, v);
  }
  return inc;
}

nonlin::ResidualReport truncated_residual(const CoefficientField& q, const std::vector<double>& omega,
                                          const ModelParams& params, int R) {
  auto full = nonlin::residual(q, omega, params);
  nonlin::ResidualReport r;
  r.F = CoefficientField(q.b(), q.d());
  for (const auto& [s, v] : full.F.entries())
    if (s.norm() <= R) r.F.set(s, v);
  for (const auto& [s, v] : r.F.expanded()) {
    r.sup = std::max(r.sup, std::abs(v));
    r.l1 += std::abs(v);
    r.l2 += v * v;
  }
  r.l2 = std::sqrt(r.l2);
  r.support_bound = r.F.support_bound();
  return r;
}

Quality assess(const CoefficientField& q, const std::vector<double>& omega, const ModelParams& params, int R,
               std::uint64_t seed) {
  (void)R;
  Quality Q;
  const auto S = params.resonant_set();
  Q.weighted_tail = nonlin::weighted_tail_norm(q, kTailRho, S);
  Q.tail_threshold = std::sqrt(params.eps + params.delta);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, kQualityHorizon);
  std::vector<double> ts(kQualityTimes);
  for (auto& t : ts) t = U(rng);
  Q.pde_residual = nonlin::pde_residual(q, omega, params, ts);
  const auto full = nonlin::residual(q, omega, params);
  Q.residual_l1 = full.l1;
  Q.residual_sup = full.sup;
  Q.anchors_exact = true;
  for (int l = 0; l < params.b(); ++l)
    for (int sign : {1, -1})
      if (q.get(anchor_site(params, l, sign)) != params.amplitudes[l] / 2.0) Q.anchors_exact = false;
  Q.symmetric = true;
  for (const auto& [s, v] : q.expanded())
    if (q.get(lattice::negate_k(s)) != v) Q.symmetric = false;
  const auto w0 = spectrum::omega0(params);
  for (std::size_t l = 0; l < w0.size(); ++l) Q.omega_shift = std::max(Q.omega_shift, std::abs(omega[l] - w0[l]));
  try {
    Q.decay_rate = decay_fit(q, S).rate;
  } catch (const Error&) {
  }
  return Q;
}

Solution solve(const ModelParams& params, const SolverConfig& config) {
  params.validate();
  config.validate();
  Solution sol;
  sol.params = params;
  sol.config = config;
  sol.omega0 = spectrum::omega0(params);
  sol.omega = sol.omega0;
  sol.q = initial_field(params);
  const int R = config.final_radius();
  const auto S = params.resonant_set();

  auto record = [&](int stage, int box, double inc, double rcond, double secs) {
    StageRecord rec;
    rec.stage = stage;
    rec.box = box;
    rec.increment_sup = inc;
    const auto tr = truncated_residual(sol.q, sol.omega, params, R);
    rec.residual_sup = tr.sup;
    rec.residual_l1 = tr.l1;
    rec.full_residual_sup = nonlin::residual(sol.q, sol.omega, params).sup;
    rec.omega = sol.omega;
    rec.rcond = rcond;
    try {
      rec.decay_rate = decay_fit(sol.q, S).rate;
    } catch (const Error&) {
    }
    rec.wall_seconds = secs;
    sol.trace.push_back(rec);
    return rec.residual_sup;
  };

  auto t0 = std::chrono::steady_clock::now();
  double res = record(0, 0, 0.0, std::numeric_limits<double>::quiet_NaN(), seconds_since(t0));
  int stagnant = 0;
  for (int r = 1; r <= config.r_max && res > config.residual_floor; ++r) {
    t0 = std::chrono::steady_clock::now();
    double rcond = std::numeric_limits<double>::quiet_NaN();
    const auto inc = p_step(sol.q, sol.omega, params, r, config, &rcond);
    for (const auto& [s, v] : inc.entries()) sol.q.add(s, v);
    sol.q.prune(1e-16 * sol.q.sup_norm());
    sol.omega = q_step(sol.q, sol.omega, params, config.q_update_damping,
                       std::max(1e-16, config.q_tolerance_factor * res));
    const double next = record(r, config.box_radius(r), inc.sup_norm(), rcond, seconds_since(t0));
    stagnant = next >= 0.9 * res ? stagnant + 1 : 0;
    res = next;
    if (stagnant >= 3)
      throw Error(ErrorCode::NonConvergence, fmt::format("residual stagnated at {:.3e} by stage {}", res, r));
  }
  sol.converged = res <= config.residual_floor;
  sol.quality = assess(sol.q, sol.omega, params, R, config.seed);
  return sol;
}

// --- oracle -----------------------------------------------------------------------------

namespace {

// Dense arrays over k in [-R, R]^b, flat in lexicographic order.
struct KBox {
  int b = 1;
  int R = 0;
  int side() const { return 2 * R + 1; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < b; ++i) s *= side();
    return s;
  }
  std::size_t flat(const IntVec& k) const {
    std::size_t f = 0;
    for (int i = 0; i < b; ++i) f = f * side() + static_cast<std::size_t>(k[i] + R);
    return f;
  }
  IntVec coord(std::size_t f) const {
    IntVec k(b);
    for (int i = b - 1; i >= 0; --i) {
      k[i] = static_cast<int>(f % side()) - R;
      f /= side();
    }
    return k;
  }
  bool inside(const IntVec& k) const {
    for (int x : k)
      if (std::abs(x) > R) return false;
    return true;
  }
};

std::vector<double> kconv(const std::vector<double>& a, const KBox& ba, const std::vector<double>& c, const KBox& bc,
                          const KBox& out_box) {
  std::vector<double> out(out_box.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    const IntVec ki = ba.coord(i);
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (c[j] == 0.0) continue;
      IntVec k = bc.coord(j);
      for (int t = 0; t < ba.b; ++t) k[t] += ki[t];
      out[out_box.flat(k)] += a[i] * c[j];
    }
  }
  return out;
}

class OracleSystem {
 public:
  OracleSystem(const ModelParams& params, int L) : p_(params), L_(L), kb_{params.b(), L} {
    const auto S = params.resonant_set();
    lattice::for_each_point(L, params.d(), [&](const IntVec& n) { ns_.push_back(n); });
    for (std::size_t i = 0; i < ns_.size(); ++i) n_index_[ns_[i]] = i;
    for (const auto& s : lattice::region_members(lattice::cube_excluding(L, S, params.d())))
      if (CoefficientField::is_canonical(s)) unknowns_.push_back(s);
    for (int l = 0; l < params.b(); ++l) {
      Site s{IntVec(params.b(), 0), params.anchors[l]};
      s.k[l] = 1;
      anchors_.push_back(s);
    }
    q_.assign(ns_.size(), std::vector<double>(kb_.size(), 0.0));
    for (std::size_t l = 0; l < anchors_.size(); ++l) set(anchors_[l], params.amplitudes[l] / 2.0);
    omega_ = spectrum::omega0(params);
  }

  std::size_t dim() const { return unknowns_.size() + anchors_.size(); }

  Eigen::VectorXd state() const {
    Eigen::VectorXd x(dim());
    for (std::size_t i = 0; i < unknowns_.size(); ++i) x(i) = get(unknowns_[i]);
    for (std::size_t l = 0; l < omega_.size(); ++l) x(unknowns_.size() + l) = omega_[l];
    return x;
  }

  void load(const Eigen::VectorXd& x) {
    for (std::size_t i = 0; i < unknowns_.size(); ++i) set(unknowns_[i], x(i));
    for (std::size_t l = 0; l < omega_.size(); ++l) omega_[l] = x(unknowns_.size() + l);
  }

  // Equations: F at the canonical unknown sites, then F at (e_l, n^(l)).
  Eigen::VectorXd residual() {
    powers();
    Eigen::VectorXd F(dim());
    for (std::size_t i = 0; i < unknowns_.size(); ++i) F(i) = F_at(unknowns_[i]);
    for (std::size_t l = 0; l < anchors_.size(); ++l) F(unknowns_.size() + l) = F_at(anchors_[l]);
    return F;
  }

  Eigen::MatrixXd jacobian() {
    powers();
    const std::size_t N = dim();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    std::vector<Site> eqs = unknowns_;
    eqs.insert(eqs.end(), anchors_.begin(), anchors_.end());
    for (std::size_t r = 0; r < N; ++r) {
      const Site& s = eqs[r];
      for (std::size_t c = 0; c < unknowns_.size(); ++c) {
        const Site& u = unknowns_[c];
        double v = full_jac(s, u);
        const Site mirror = lattice::negate_k(u);
        if (mirror != u) v += full_jac(s, mirror);
        J(r, c) = v;
      }
      const double kw = kdot(s.k);
      for (std::size_t l = 0; l < omega_.size(); ++l)
        J(r, unknowns_.size() + l) = -2.0 * kw * s.k[l] * get(s);
    }
    return J;
  }

  CoefficientField field() const {
    CoefficientField q(p_.b(), p_.d());
    for (const auto& u : unknowns_) {
      const double v = get(u);
      if (v != 0.0) q.set(u, v);
    }
    for (std::size_t l = 0; l < anchors_.size(); ++l) q.set(anchors_[l], p_.amplitudes[l] / 2.0);
    return q;
  }
  const std::vector<double>& omega() const { return omega_; }

 private:
  double get(const Site& s) const {
    if (!kb_.inside(s.k)) return 0.0;
    auto it = n_index_.find(s.n);
    if (it == n_index_.end()) return 0.0;
    return q_[it->second][kb_.flat(s.k)];
  }
  void set(const Site& s, double v) {
    const auto ni = n_index_.at(s.n);
    q_[ni][kb_.flat(s.k)] = v;
    q_[ni][kb_.flat(lattice::negate_k(s).k)] = v;
  }
  double kdot(const IntVec& k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * omega_[i];
    return s;
  }
  double dval(const Site& s) const {
    const double mu = spectrum::mu(s.n, p_);
    const double w = kdot(s.k);
    return mu * mu - w * w;
  }
  void powers() {
    const int p = p_.p;
    pw_p_.assign(ns_.size(), {});
    pw_p1_.assign(ns_.size(), {});
    for (std::size_t ni = 0; ni < ns_.size(); ++ni) {
      std::vector<double> cur = q_[ni];
      for (int j = 2; j <= p + 1; ++j) {
        const KBox in{p_.b(), (j - 1) * L_};
        const KBox out{p_.b(), j * L_};
        cur = kconv(cur, in, q_[ni], kb_, out);
        if (j == p) pw_p_[ni] = cur;
      }
      pw_p1_[ni] = cur;
    }
  }
  double F_at(const Site& s) const {
    double v = dval(s) * get(s);
    for (std::size_t j = 0; j < s.n.size(); ++j)
      for (int step : {-1, 1}) {
        Site nb = s;
        nb.n[j] += step;
        v += p_.eps * get(nb);
      }
    const auto ni = n_index_.at(s.n);
    const KBox big{p_.b(), (p_.p + 1) * L_};
    v += p_.delta * pw_p1_[ni][big.flat(s.k)];
    return v;
  }
  // dF(s)/dq(t) with q(t) and q(-t) treated as independent.
  double full_jac(const Site& s, const Site& t) const {
    double v = 0.0;
    if (s == t) v += dval(s);
    if (s.k == t.k) {
      int l1 = 0;
      for (std::size_t j = 0; j < s.n.size(); ++j) l1 += std::abs(s.n[j] - t.n[j]);
      if (l1 == 1) v += p_.eps;
    }
    if (s.n == t.n) {
      IntVec dk = s.k;
      for (std::size_t j = 0; j < dk.size(); ++j) dk[j] -= t.k[j];
      const KBox pb{p_.b(), p_.p * L_};
      if (pb.inside(dk)) v += p_.delta * (p_.p + 1) * pw_p_[n_index_.at(s.n)][pb.flat(dk)];
    }
    return v;
  }

  ModelParams p_;
  int L_;
  KBox kb_;
  std::vector<IntVec> ns_;
  std::map<IntVec, std::size_t> n_index_;
  std::vector<Site> unknowns_;
  std::vector<Site> anchors_;
  std::vector<std::vector<double>> q_;
  std::vector<std::vector<double>> pw_p_;
  std::vector<std::vector<double>> pw_p1_;
  std::vector<double> omega_;
};

}  // namespace

OracleResult brute_force_oracle(const ModelParams& params, int L, int max_iterations) {
  params.validate();
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "oracle box must be >= 1");
  OracleSystem sys(params, L);
  if (sys.dim() > 10000) throw Error(ErrorCode::InvalidArgument, "oracle system exceeds 10^4 unknowns");
  OracleResult out;
  Eigen::VectorXd x = sys.state();
  Eigen::VectorXd F = sys.residual();
  double res = F.cwiseAbs().maxCoeff();
  out.history.push_back(res);
  int stalls = 0;
  while (res > 0.0 && out.iterations < max_iterations) {
    const Eigen::MatrixXd J = sys.jacobian();
    const Eigen::VectorXd dx = J.partialPivLu().solve(F);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h, lambda *= 0.5) {
      sys.load(x - lambda * dx);
      const Eigen::VectorXd Fn = sys.residual();
      const double rn = Fn.cwiseAbs().maxCoeff();
      if (std::isfinite(rn) && rn < res) {
        x -= lambda * dx;
        F = Fn;
        res = rn;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      sys.load(x);
      if (res <= 1e-12) break;
      throw Error(ErrorCode::OracleDiverged, fmt::format("line search failed at residual {:.3e}", res));
    }
    out.history.push_back(res);
    // Stop once the floor is reached and progress stalls.
    if (res <= 1e-13) {
      const double prev = out.history[out.history.size() - 2];
      if (res > 0.5 * prev) ++stalls;
      if (stalls >= 1 || res <= 1e-15) break;
    }
  }
  sys.load(x);
  if (res > 1e-10) throw Error(ErrorCode::OracleDiverged, fmt::format("residual {:.3e} after {} iterations", res, out.iterations));
  out.q = sys.field();
  out.omega = sys.omega();
  out.residual_sup = res;
  return out;
}

// --- diagnostics ------------------------------------------------------------------------

DecayFit decay_fit(const CoefficientField& q, const lattice::ResonantSet& S) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [s, v] : q.expanded()) {
    if (S.contains(s) || !(std::abs(v) > 1e-30)) continue;
    pts.emplace_back(s.k_norm() + s.n_norm(), std::log(std::abs(v)));
  }
  if (pts.size() < 10) throw Error(ErrorCode::InsufficientData, fmt::format("{} usable entries, need 10", pts.size()));
  const double N = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x / N;
    my += y / N;
  }
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientData, "all entries at one distance");
  DecayFit f;
  const double slope = sxy / sxx;
  f.rate = -slope;
  f.intercept = my - slope * mx;
  double sse = 0;
  for (const auto& [x, y] : pts) sse += std::pow(y - f.intercept - slope * x, 2);
  f.residual = std::sqrt(sse / N);
  f.points = pts.size();
  return f;
}

double sup_difference(const CoefficientField& a, const CoefficientField& b) {
  double d = 0.0;
  for (const auto& [s, v] : a.entries()) d = std::max(d, std::abs(v - b.get(s)));
  for (const auto& [s, v] : b.entries()) d = std::max(d, std::abs(v - a.get(s)));
  return d;
}

}  // namespace qpb::solver
