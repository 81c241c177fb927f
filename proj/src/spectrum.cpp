/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "error.hpp"
#include "parallel.hpp"

namespace qpb::spectrum {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMaxWitnesses = 5;

double dot(std::span<const int> n, std::span<const double> alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) s += n[i] * alpha[i];
  return s;
}

// Keeps the witnesses with the smallest slack.
class WitnessSet {
 public:
  void offer(double slack, const IntVec& index, double value) {
    entries_.push_back({slack, Witness{index, value}});
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (entries_.size() > kMaxWitnesses) entries_.pop_back();
  }
  double min_slack() const {
    return entries_.empty() ? std::numeric_limits<double>::infinity() : entries_.front().first;
  }
  std::vector<Witness> take() const {
    std::vector<Witness> out;
    for (const auto& e : entries_) out.push_back(e.second);
    return out;
  }

 private:
  std::vector<std::pair<double, Witness>> entries_;
};

IntVec concat(std::span<const int> a, std::span<const int> b) {
  IntVec r(a.begin(), a.end());
  r.insert(r.end(), b.begin(), b.end());
  return r;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

// --- ModelParams ---------------------------------------------------------------

void ModelParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (alpha.empty()) bad("alpha must have length d >= 1");
  for (double a : alpha)
    if (!(a >= 0.0 && a <= 1.0)) bad("alpha entries must lie in [0, 1]");
  if (!(theta0 >= 0.0 && theta0 <= 1.0)) bad("theta0 must lie in [0, 1]");
  if (!(m >= 2.0 && m <= 3.0)) bad("m must lie in [2, 3]");
  if (!(eps >= 0.0 && eps <= 1.0)) bad("eps must lie in [0, 1]");
  if (!(delta >= 0.0 && delta <= 1.0)) bad("delta must lie in [0, 1]");
  if (p < 2 || p % 2 != 0) bad("p must be a positive even integer");
  if (anchors.empty()) bad("at least one anchor is required");
  for (const auto& a : anchors)
    if (a.size() != alpha.size()) bad("anchor dimension must equal d");
  (void)resonant_set();  // throws InvalidAnchors on duplicates
  if (amplitudes.size() != anchors.size()) bad("amplitudes must have length b");
  for (double a : amplitudes)
    if (!(a >= 1.0 && a <= 2.0)) bad("amplitudes must lie in [1, 2]");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) bad("gamma must be positive");
  const double bb = static_cast<double>(b());
  if (!(K_exponent > 0.0 && K_exponent <= 1e4 * d() * bb * bb * bb * bb))
    bad("K_exponent must lie in (0, 1e4 d b^4]");
}

std::vector<std::string> ModelParams::warnings() const {
  std::vector<std::string> w;
  if (eps > 0.0 && eps > 10.0 * delta)
    w.emplace_back("eps is much larger than delta; the construction assumes eps <~ delta");
  return w;
}

lattice::ResonantSet ModelParams::resonant_set() const { return lattice::ResonantSet(anchors); }

double ModelParams::phase(std::span<const int> n) const { return kTwoPi * (dot(n, alpha) + theta0); }

// --- frequencies ---------------------------------------------------------------

double mu_at(std::span<const int> n, const ModelParams& params, double m) {
  return std::sqrt(std::cos(params.phase(n)) + m);
}

double mu(std::span<const int> n, const ModelParams& params) { return mu_at(n, params, params.m); }

double mu_squared_difference(std::span<const int> n, std::span<const int> n2,
                             const ModelParams& params) {
  // cos x - cos y = -2 sin((x+y)/2) sin((x-y)/2)
  IntVec diff(n.size()), sum(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    diff[i] = n[i] - n2[i];
    sum[i] = n[i] + n2[i];
  }
  const double half_diff = kPi * dot(diff, params.alpha);
  const double half_sum = kTwoPi * params.theta0 + kPi * dot(sum, params.alpha);
  return -2.0 * std::sin(half_sum) * std::sin(half_diff);
}

std::vector<double> omega0_at(const ModelParams& params, double m) {
  (void)params.resonant_set();
  std::vector<double> w;
  w.reserve(params.anchors.size());
  for (const auto& a : params.anchors) w.push_back(mu_at(a, params, m));
  return w;
}

std::vector<double> omega0(const ModelParams& params) { return omega0_at(params, params.m); }

double lambda_coefficient(int l) {
  if (l < 1) throw Error(ErrorCode::InvalidArgument, "derivative order must be >= 1");
  double r = 1.0;
  for (int j = 0; j < l; ++j) r *= 0.5 - j;
  return r;
}

double d_mu_dm_at(std::span<const int> n, int l, const ModelParams& params, double m) {
  const double v = mu_at(n, params, m);
  return lambda_coefficient(l) * std::pow(v, -(2.0 * l - 1.0));
}

double d_mu_dm(std::span<const int> n, int l, const ModelParams& params) {
  return d_mu_dm_at(n, l, params, params.m);
}

// --- Diophantine certificates --------------------------------------------------

const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::AlphaDc: return "alpha_dc";
    case CertificateKind::ThetaDc: return "theta_dc";
    case CertificateKind::Separation: return "separation";
    case CertificateKind::Transversality: return "transversality";
    case CertificateKind::Cluster: return "cluster";
    case CertificateKind::AdmissibleM: return "admissible_m";
  }
  return "unknown";
}

double torus_distance(double turns, Torus torus) {
  const double pad = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(turns));
  double dist = 0.0;
  if (torus == Torus::Full) {
    dist = kTwoPi * std::abs(turns - std::nearbyint(turns));
  } else {
    const double t2 = 2.0 * turns;
    dist = kPi * std::abs(t2 - std::nearbyint(t2));
  }
  return std::max(0.0, dist - kTwoPi * pad);
}

Certificate check_alpha_dc(std::span<const double> alpha, int L, double c_star, DcForm form,
                           Torus torus) {
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "L must be >= 1");
  if (!(c_star > 0.0 && c_star < 1.0)) throw Error(ErrorCode::InvalidArgument, "c_star must lie in (0, 1)");
  const int d = static_cast<int>(alpha.size());
  Certificate cert;
  cert.kind = CertificateKind::AlphaDc;
  cert.inputs = {{"L", L}, {"c_star", c_star}, {"d", d},
                 {"power_law", form == DcForm::PowerLaw ? 1.0 : 0.0},
                 {"half_period", torus == Torus::Half ? 1.0 : 0.0}};
  for (int i = 0; i < d; ++i) cert.inputs["alpha_" + std::to_string(i)] = alpha[i];
  WitnessSet ws;
  lattice::for_each_point(2 * L, d, [&](const IntVec& n) {
    const int norm = lattice::sup_norm(n);
    if (norm == 0) return;
    const double t = dot(n, alpha);
    double attained = torus_distance(0.5 * t, torus);
    double threshold = c_star;
    if (form == DcForm::PowerLaw) {
      attained = std::min(attained, torus_distance(t, torus));
      threshold = c_star / std::pow(static_cast<double>(norm), 2.0 * d);
    }
    ws.offer(attained - threshold, n, attained);
  });
  cert.margin = ws.min_slack();
  cert.witnesses = ws.take();
  return cert;
}

Certificate check_theta_dc(double theta0, std::span<const double> alpha, int L, double c_star,
                           Torus torus) {
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "L must be >= 1");
  if (!(c_star > 0.0 && c_star < 1.0)) throw Error(ErrorCode::InvalidArgument, "c_star must lie in (0, 1)");
  const int d = static_cast<int>(alpha.size());
  Certificate cert;
  cert.kind = CertificateKind::ThetaDc;
  cert.inputs = {{"L", L}, {"c_star", c_star}, {"d", d}, {"theta0", theta0},
                 {"half_period", torus == Torus::Half ? 1.0 : 0.0}};
  WitnessSet ws;
  lattice::for_each_point(2 * L, d, [&](const IntVec& n) {
    const double attained = torus_distance(theta0 + 0.5 * dot(n, alpha), torus);
    ws.offer(attained - c_star, n, attained);
  });
  cert.margin = ws.min_slack();
  cert.witnesses = ws.take();
  return cert;
}

Certificate separation_scan(const ModelParams& params, int L, double c_star) {
  const int d = params.d();
  const double bound_abs = 2.0 / (kPi * kPi) * c_star * c_star;
  const double bound_sq = 8.0 / (kPi * kPi) * c_star * c_star;
  std::vector<IntVec> sites;
  lattice::for_each_point(L, d, [&](const IntVec& n) { sites.push_back(n); });
  std::vector<double> mus;
  for (const auto& n : sites) mus.push_back(mu(n, params));

  double min_abs = std::numeric_limits<double>::infinity();
  double min_sq = min_abs;
  double max_ratio = 0.0;
  WitnessSet ws;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      const double sq = std::abs(mu_squared_difference(sites[i], sites[j], params));
      const double ab = sq / (mus[i] + mus[j]);
      min_abs = std::min(min_abs, ab);
      min_sq = std::min(min_sq, sq);
      if (ab > 0.0) max_ratio = std::max(max_ratio, sq / ab);
      ws.offer(std::min(ab - bound_abs, sq - bound_sq), concat(sites[i], sites[j]), ab);
    }
  }
  Certificate cert;
  cert.kind = CertificateKind::Separation;
  cert.inputs = {{"L", L}, {"c_star", c_star}, {"m", params.m}, {"theta0", params.theta0}};
  cert.details = {{"min_abs_difference", min_abs},
                  {"min_abs_square_difference", min_sq},
                  {"bound_abs_difference", bound_abs},
                  {"bound_square_difference", bound_sq},
                  {"margin_abs_difference", min_abs - bound_abs},
                  {"margin_square_difference", min_sq - bound_sq},
                  {"max_square_to_abs_ratio", max_ratio}};
  cert.margin = std::min(min_abs - bound_abs, min_sq - bound_sq);
  cert.witnesses = ws.take();
  return cert;
}

Certificate separation_certificate(const ModelParams& params, int L, double c_star) {
  const auto a = check_alpha_dc(params.alpha, L, c_star, DcForm::Fixed, Torus::Half);
  const auto t = check_theta_dc(params.theta0, params.alpha, L, c_star, Torus::Half);
  if (!a.pass() || !t.pass())
    throw Error(ErrorCode::PreconditionFailed,
                "alpha/theta0 are not Diophantine at (L, c_star) in the half-period form");
  return separation_scan(params, L, c_star);
}

// --- Wronskian -----------------------------------------------------------------

double wronskian_product(std::span<const double> v) {
  const std::size_t beta = v.size();
  double r = 1.0;
  for (std::size_t l = 1; l <= beta; ++l) r *= lambda_coefficient(static_cast<int>(l));
  for (double x : v) r /= x;
  for (std::size_t i = 0; i < beta; ++i)
    for (std::size_t j = i + 1; j < beta; ++j) r *= 1.0 / (v[j] * v[j]) - 1.0 / (v[i] * v[i]);
  return r;
}

double wronskian_direct(std::span<const double> v) {
  const int beta = static_cast<int>(v.size());
  Eigen::MatrixXd M(beta, beta);
  for (int l = 1; l <= beta; ++l)
    for (int s = 0; s < beta; ++s) M(l - 1, s) = lambda_coefficient(l) * std::pow(v[s], -(2.0 * l - 1.0));
  return M.fullPivLu().determinant();
}

WronskianResult wronskian_det(std::span<const IntVec> sites, double m, const ModelParams& params) {
  if (sites.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one site");
  std::vector<double> v;
  for (const auto& n : sites) v.push_back(mu_at(n, params, m));
  WronskianResult r;
  r.product = wronskian_product(v);
  r.direct = wronskian_direct(v);
  std::set<double> distinct(v.begin(), v.end());
  r.degenerate = distinct.size() != v.size();
  if (r.degenerate) r.product = 0.0;
  return r;
}

// --- functions of m ----------------------------------------------------------------

FrequencyFunction FrequencyFunction::affine(double slope, double offset) {
  FrequencyFunction f;
  f.slope_ = slope;
  f.offset_ = offset;
  return f;
}

void FrequencyFunction::add_term(double coeff, IntVec site) {
  if (coeff != 0.0) terms_.emplace_back(coeff, std::move(site));
}

double FrequencyFunction::value(double m, const ModelParams& params) const {
  double s = slope_ * m + offset_;
  for (const auto& [c, n] : terms_) s += c * mu_at(n, params, m);
  return s;
}

double FrequencyFunction::derivative(double m, int order, const ModelParams& params) const {
  double s = order == 1 ? slope_ : 0.0;
  for (const auto& [c, n] : terms_) s += c * d_mu_dm_at(n, order, params, m);
  return s;
}

double FrequencyFunction::derivative_sup(double m, int r, const ModelParams& params) const {
  double s = 0.0;
  for (int l = 1; l <= r; ++l) s = std::max(s, std::abs(derivative(m, l, params)));
  return s;
}

TransversalityCase transversality_case(TransversalityKind kind, std::span<const int> k,
                                       std::span<const int> n, std::span<const int> n2,
                                       const ModelParams& params) {
  const int b = params.b();
  if (static_cast<int>(k.size()) != b) throw Error(ErrorCode::InvalidArgument, "k must have length b");
  const auto S = params.resonant_set();
  auto harmonic_of = [&](const std::vector<int>& kk) {
    FrequencyFunction f;
    for (int l = 0; l < b; ++l) f.add_term(kk[l], params.anchors[l]);
    return f;
  };
  auto norm_of = [](std::vector<double> v) { return l2(v); };
  auto as_double = [](const std::vector<int>& v) { return std::vector<double>(v.begin(), v.end()); };

  TransversalityCase tc;
  IntVec kk(k.begin(), k.end());
  switch (kind) {
    case TransversalityKind::Harmonic: {
      if (lattice::sup_norm(k) == 0) throw Error(ErrorCode::NotApplicable, "k must be nonzero");
      tc.f = harmonic_of(kk);
      tc.order = b;
      tc.c_star_exponent = b * (b - 1);
      tc.reduced_norm = norm_of(as_double(kk));
      tc.label = "harmonic";
      return tc;
    }
    case TransversalityKind::Shifted: {
      const Site s{kk, IntVec(n.begin(), n.end())};
      if (S.contains(s)) throw Error(ErrorCode::NotApplicable, "(k, n) lies in the resonant set");
      if (auto l = S.anchor_index(n)) {
        kk[*l] += 1;
        tc.f = harmonic_of(kk);
        tc.order = b;
        tc.c_star_exponent = b * (b - 1);
        tc.reduced_norm = norm_of(as_double(kk));
        tc.label = "shifted_anchor";
      } else {
        tc.f = harmonic_of(kk);
        tc.f.add_term(1.0, IntVec(n.begin(), n.end()));
        auto red = as_double(kk);
        red.push_back(1.0);
        tc.order = b + 1;
        tc.c_star_exponent = b * (b + 1);
        tc.reduced_norm = norm_of(red);
        tc.label = "shifted";
      }
      return tc;
    }
    case TransversalityKind::Difference: {
      if (std::equal(n.begin(), n.end(), n2.begin(), n2.end()))
        throw Error(ErrorCode::NotApplicable, "n and n' must differ");
      const auto l1 = S.anchor_index(n);
      const auto l2i = S.anchor_index(n2);
      if (l1 && l2i) {
        IntVec red = kk;
        red[*l1] += 1;
        red[*l2i] -= 1;
        if (lattice::sup_norm(red) == 0)
          throw Error(ErrorCode::NotApplicable, "k = -e_l' + e_l'' for anchor pair");
        tc.f = harmonic_of(red);
        tc.order = b;
        tc.c_star_exponent = b * (b - 1);
        tc.reduced_norm = norm_of(as_double(red));
        tc.label = "difference_both_anchors";
        return tc;
      }
      tc.order = b + 2;
      tc.c_star_exponent = (b + 1) * (b + 2);
      if (l1) {
        kk[*l1] += 1;
        tc.f = harmonic_of(kk);
        tc.f.add_term(-1.0, IntVec(n2.begin(), n2.end()));
        auto red = as_double(kk);
        red.push_back(-1.0);
        tc.reduced_norm = norm_of(red);
        tc.label = "difference_first_anchor";
      } else if (l2i) {
        kk[*l2i] -= 1;
        tc.f = harmonic_of(kk);
        tc.f.add_term(1.0, IntVec(n.begin(), n.end()));
        auto red = as_double(kk);
        red.push_back(1.0);
        tc.reduced_norm = norm_of(red);
        tc.label = "difference_second_anchor";
      } else {
        tc.f = harmonic_of(kk);
        tc.f.add_term(1.0, IntVec(n.begin(), n.end()));
        tc.f.add_term(-1.0, IntVec(n2.begin(), n2.end()));
        auto red = as_double(kk);
        red.push_back(1.0);
        red.push_back(-1.0);
        tc.reduced_norm = norm_of(red);
        tc.label = "difference";
      }
      return tc;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown transversality kind");
}

Certificate transversality_margin(TransversalityKind kind, std::span<const int> k,
                                  std::span<const int> n, std::span<const int> n2,
                                  const ModelParams& params, const MGrid& grid, double c_star,
                                  double ctilde) {
  if (grid.points < 1) throw Error(ErrorCode::InvalidArgument, "m grid must have points");
  const auto tc = transversality_case(kind, k, n, n2, params);
  const double scale = std::pow(c_star, tc.c_star_exponent) * tc.reduced_norm;
  double min_sup = std::numeric_limits<double>::infinity();
  double argmin = grid.at(0);
  for (int i = 0; i < grid.points; ++i) {
    const double m = grid.at(i);
    const double s = tc.f.derivative_sup(m, tc.order, params);
    if (s < min_sup) {
      min_sup = s;
      argmin = m;
    }
  }
  Certificate cert;
  cert.kind = CertificateKind::Transversality;
  cert.inputs = {{"c_star", c_star}, {"ctilde", ctilde}, {"order", tc.order},
                 {"c_star_exponent", tc.c_star_exponent}, {"reduced_norm", tc.reduced_norm}};
  cert.notes.push_back(tc.label);
  cert.details = {{"min_derivative_sup", min_sup},
                  {"implied_ctilde", scale > 0.0 ? min_sup / scale : 0.0},
                  {"argmin_m", argmin}};
  cert.margin = min_sup - ctilde * scale;
  cert.witnesses.push_back(Witness{IntVec(k.begin(), k.end()), argmin});
  return cert;
}

SublevelResult sublevel_measure(const FrequencyFunction& f, const ModelParams& params, double eta,
                                int r, const MGrid& grid_in, std::optional<double> tau,
                                std::optional<double> A) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "r must be >= 1");
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in (0, 1)");
  MGrid grid = grid_in;
  const double length = grid.hi - grid.lo;

  // Constants from a coarse pass when not supplied.
  const int probe = 4096;
  if (!tau || !A) {
    double tmin = std::numeric_limits<double>::infinity();
    double amax = 0.0;
    for (int i = 0; i < probe; ++i) {
      const double m = grid.lo + length * (i + 0.5) / probe;
      tmin = std::min(tmin, f.derivative_sup(m, r, params));
      amax = std::max(amax, f.derivative_sup(m, r + 1, params));
    }
    if (!tau) tau = tmin;
    if (!A) A = amax;
  }
  if (!(*tau > 0.0)) throw Error(ErrorCode::InsufficientResolution, "tau must be positive");
  const double tau_used = std::min(*tau, 0.999);
  const double a_used = std::max(*A, tau_used);
  if (grid.points <= 0) grid.points = static_cast<int>(std::ceil(10.0 * a_used * length / eta)) + 1;
  if (grid.spacing() > eta / (10.0 * a_used))
    throw Error(ErrorCode::InsufficientResolution, "grid spacing exceeds eta / (10 A)");

  long count = 0;
  for (int i = 0; i < grid.points; ++i)
    if (std::abs(f.value(grid.at(i), params)) <= eta) ++count;

  SublevelResult res;
  res.r = r;
  res.tau = tau_used;
  res.A = a_used;
  res.cells = grid.points;
  res.empirical = static_cast<double>(count) * grid.spacing();
  const double pieces = std::floor(2.0 * a_used * length / tau_used) + 1.0;
  res.bound = pieces * r * (r + 3.0) * std::pow(eta, 1.0 / r) / tau_used;
  return res;
}

// --- admissible m and clusters ------------------------------------------------------------

AdmissibleCheck admissible_at(const ModelParams& params, double m, int L, double eta) {
  const int b = params.b();
  const int d = params.d();
  const auto S = params.resonant_set();
  const auto w = omega0_at(params, m);

  std::vector<IntVec> ns;
  lattice::for_each_point(L, d, [&](const IntVec& n) { ns.push_back(n); });
  std::vector<double> mus;
  std::vector<int> anchor_of;
  for (const auto& n : ns) {
    mus.push_back(mu_at(n, params, m));
    anchor_of.push_back(S.anchor_index(n).value_or(-1));
  }
  std::vector<IntVec> ks;
  std::vector<double> kw;
  lattice::for_each_point(2 * L, b, [&](const IntVec& k) {
    ks.push_back(k);
    double s = 0.0;
    for (int l = 0; l < b; ++l) s += k[l] * w[l];
    kw.push_back(s);
  });

  AdmissibleCheck chk;
  double worst = std::numeric_limits<double>::infinity();
  const double sep_bound = 2.0 / (kPi * kPi) * std::pow(static_cast<double>(L), -6.0 * d);

  // (1) separation of mu_n
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = i + 1; j < ns.size(); ++j) {
      const double gap = std::abs(mus[i] - mus[j]);
      worst = std::min(worst, gap - sep_bound);
      if (!(gap > sep_bound)) chk.separation = false;
    }
  for (std::size_t ik = 0; ik < ks.size(); ++ik) {
    const int knorm = lattice::sup_norm(ks[ik]);
    // (2) |k.omega0| > eta
    if (knorm > 0) {
      const double v = std::abs(kw[ik]);
      worst = std::min(worst, v - eta);
      if (!(v > eta)) chk.harmonic = false;
    }
    // (3) |k.omega0 + mu_n| > eta on Lambda_L \ S
    if (knorm <= L) {
      for (std::size_t i = 0; i < ns.size(); ++i) {
        if (S.contains(Site{ks[ik], ns[i]})) continue;
        const double v = std::abs(kw[ik] + mus[i]);
        worst = std::min(worst, v - eta);
        if (!(v > eta)) chk.shifted = false;
      }
    }
    // differences over J1 and J2
    for (std::size_t i = 0; i < ns.size(); ++i) {
      for (std::size_t j = 0; j < ns.size(); ++j) {
        if (i == j) continue;
        const int li = anchor_of[i];
        const int lj = anchor_of[j];
        if (li >= 0 && lj >= 0) {
          IntVec red = ks[ik];
          red[li] += 1;
          red[lj] -= 1;
          if (lattice::sup_norm(red) == 0) continue;
        }
        const double v = std::abs(kw[ik] + mus[i] - mus[j]);
        worst = std::min(worst, v - eta);
        if (!(v > eta)) chk.difference = false;
      }
    }
  }
  chk.worst_slack = worst;
  return chk;
}

AdmissibleScan admissible_m_scan(const ModelParams& params, int L, double eta, const MGrid& grid,
                                 int threads) {
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "L must be >= 1");
  if (grid.points < 1) throw Error(ErrorCode::InvalidArgument, "m grid must have points");
  const int d = params.d();
  const int b = params.b();
  const double c_star = std::pow(static_cast<double>(L), -3.0 * d);
  const auto a = check_alpha_dc(params.alpha, L, c_star, DcForm::Fixed, Torus::Half);
  const auto t = check_theta_dc(params.theta0, params.alpha, L, c_star, Torus::Half);
  if (!a.pass() || !t.pass())
    throw Error(ErrorCode::PreconditionFailed, "alpha/theta0 not certified at (L, L^{-3d})");

  std::vector<AdmissibleCheck> checks(grid.points);
  parallel_for(static_cast<std::size_t>(grid.points), threads,
               [&](std::size_t i) { checks[i] = admissible_at(params, grid.at(static_cast<int>(i)), L, eta); });

  AdmissibleScan scan;
  scan.grid_points = grid.points;
  scan.failures = {{"separation", 0}, {"harmonic", 0}, {"shifted", 0}, {"difference", 0}};
  int failing = 0;
  for (int i = 0; i < grid.points; ++i) {
    const auto& c = checks[i];
    if (c.ok()) {
      scan.certified.push_back(grid.at(i));
    } else {
      ++failing;
    }
    scan.failures["separation"] += !c.separation;
    scan.failures["harmonic"] += !c.harmonic;
    scan.failures["shifted"] += !c.shifted;
    scan.failures["difference"] += !c.difference;
  }
  scan.failing_fraction = static_cast<double>(failing) / grid.points;
  scan.asymptotic_bound = std::pow(static_cast<double>(L), 50.0 * d * b * b) * std::pow(eta, 1.0 / (b + 2));
  return scan;
}

namespace {

// Centres c of the open intervals (c - eta/2, c + eta/2) of sigma values at
// which a site of Lambda_L is near-resonant, for one sign xi.
std::vector<double> cluster_centres(const ModelParams& params, int L, int xi) {
  const int b = params.b();
  const auto w = omega0(params);
  std::vector<double> mus;
  lattice::for_each_point(L, params.d(), [&](const IntVec& n) { mus.push_back(mu(n, params)); });
  std::vector<double> out;
  lattice::for_each_point(L, b, [&](const IntVec& k) {
    double kw = 0.0;
    for (int l = 0; l < b; ++l) kw += k[l] * w[l];
    for (double m : mus) out.push_back(xi == 1 ? -kw - m : m - kw);
  });
  return out;
}

}  // namespace

int cluster_count(double sigma, const ModelParams& params, int L, double eta) {
  const int b = params.b();
  const auto w = omega0(params);
  std::vector<double> mus;
  lattice::for_each_point(L, params.d(), [&](const IntVec& n) { mus.push_back(mu(n, params)); });
  int best = 0;
  for (int xi : {1, -1}) {
    int count = 0;
    lattice::for_each_point(L, b, [&](const IntVec& k) {
      double kw = 0.0;
      for (int l = 0; l < b; ++l) kw += k[l] * w[l];
      for (double m : mus)
        if (std::abs(xi * (sigma + kw) + m) < 0.5 * eta) ++count;
    });
    best = std::max(best, count);
  }
  return best;
}

int cluster_supremum(const ModelParams& params, int L, double eta) {
  int best = 0;
  for (int xi : {1, -1}) {
    const auto centres = cluster_centres(params, L, xi);
    // Open intervals: at equal coordinates, closings are processed first.
    std::vector<std::pair<double, int>> events;
    for (double c : centres) {
      events.emplace_back(c - 0.5 * eta, +1);
      events.emplace_back(c + 0.5 * eta, -1);
    }
    std::sort(events.begin(), events.end());
    int open = 0;
    for (const auto& e : events) {
      open += e.second;
      best = std::max(best, open);
    }
  }
  return best;
}

SigmaGrid cluster_window(const ModelParams& params, int L, int points) {
  const auto w = omega0(params);
  double reach = std::sqrt(params.m + 1.0) + 1.0;
  for (double x : w) reach += L * std::abs(x);
  return SigmaGrid{-reach, reach, points};
}

}  // namespace qpb::spectrum
