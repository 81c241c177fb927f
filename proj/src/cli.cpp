/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "cli.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "linop.hpp"

namespace qpb::cli {

using nlohmann::json;
using lattice::IntVec;
using lattice::Site;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::MalformedFile:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidAnchors:
      return kExitInvalid;
    case ErrorCode::ResonantBox:
      return kExitResonantBox;
    case ErrorCode::NonConvergence:
      return kExitNonConvergence;
    default:
      return kExitOther;
  }
}

// --- deterministic JSON ---------------------------------------------------------------

namespace {

bool is_flat(const json& j) {
  if (j.is_array()) {
    for (const auto& e : j)
      if (e.is_structured()) return false;
    return true;
  }
  if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      if (v.is_object() || (v.is_array() && !is_flat(v))) return false;
    return true;
  }
  return true;
}

void emit(const json& j, std::string& out, int indent) {
  switch (j.type()) {
    case json::value_t::null:
      out += "null";
      return;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case json::value_t::number_integer:
      out += fmt::format("{}", j.get<std::int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += fmt::format("{}", j.get<std::uint64_t>());
      return;
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt::format("{:.17g}", v) : "null";
      return;
    }
    case json::value_t::string:
      out += j.dump();
      return;
    default:
      break;
  }
  const bool arr = j.is_array();
  if (j.empty()) {
    out += arr ? "[]" : "{}";
    return;
  }
  const bool flat = is_flat(j);
  const std::string pad(flat ? 0 : 2 * (indent + 1), ' ');
  const char* sep = flat ? ", " : ",\n";
  out += arr ? "[" : "{";
  if (!flat) out += "\n";
  bool first = true;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!first) out += sep;
    first = false;
    out += pad;
    if (!arr) out += json(it.key()).dump() + ": ";
    emit(*it, out, flat ? indent : indent + 1);
  }
  if (!flat) out += "\n" + std::string(2 * indent, ' ');
  out += arr ? "]" : "}";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Typed field access with unknown-key detection.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail("must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    read(j_.at(key), out, path_ + "." + key);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(fmt::format("unknown key '{}'", k));
  }

 private:
  [[noreturn]] void fail(const std::string& m) const {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: {}", path_.empty() ? "config" : path_, m));
  }
  [[noreturn]] static void bad(const std::string& where, const char* what) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: expected {}", where, what));
  }
  static void read(const json& v, double& out, const std::string& w) {
    if (!v.is_number()) bad(w, "a number");
    out = v.get<double>();
  }
  static void read(const json& v, int& out, const std::string& w) {
    if (!v.is_number_integer()) bad(w, "an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad(w, "a 32-bit integer");
    out = static_cast<int>(x);
  }
  static void read(const json& v, std::uint64_t& out, const std::string& w) {
    if (!v.is_number_unsigned()) bad(w, "a nonnegative integer");
    out = v.get<std::uint64_t>();
  }
  static void read(const json& v, std::string& out, const std::string& w) {
    if (!v.is_string()) bad(w, "a string");
    out = v.get<std::string>();
  }
  static void read(const json& v, std::optional<double>& out, const std::string& w) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    double x = 0;
    read(v, x, w);
    out = x;
  }
  template <class T>
  static void read(const json& v, std::vector<T>& out, const std::string& w) {
    if (!v.is_array()) bad(w, "an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T x{};
      read(v[i], x, fmt::format("{}[{}]", w, i));
      out.push_back(std::move(x));
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void invalid(const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); }

}  // namespace

std::string dump(const json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

std::string digest(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw Error(ErrorCode::Io, fmt::format("write to '{}' failed", path));
}

// --- configuration ----------------------------------------------------------------------

void RunConfig::validate() const {
  model.validate();
  solver.validate();
  if (oracle_L < 0) invalid("oracle_L must be >= 0");
  if (!(oracle_tolerance > 0.0)) invalid("oracle_tolerance must be positive");
  if (cert.L < 1 || cert.L > 200) invalid("cert.L must lie in [1, 200]");
  if (!(cert.c_star > 0.0 && cert.c_star < 1.0)) invalid("cert.c_star must lie in (0, 1)");
  if (!(cert.eta > 0.0 && cert.eta < 1.0)) invalid("cert.eta must lie in (0, 1)");
  if (cert.m_points < 1) invalid("cert.m_points must be >= 1");
  if (cert.transversality_L < 1) invalid("cert.transversality_L must be >= 1");
  if (cert.transversality_m_points < 1) invalid("cert.transversality_m_points must be >= 1");
  if (!(cert.ctilde >= 0.0)) invalid("cert.ctilde must be >= 0");
  if (scan.scales.empty()) invalid("scan.scales must not be empty");
  for (int M : scan.scales)
    if (M < 2 || M > 64) invalid("scan.scales entries must lie in [2, 64]");
  if (!(scan.sigma_hi > scan.sigma_lo)) invalid("scan.sigma_hi must exceed scan.sigma_lo");
  if (scan.sigma_points < 1) invalid("scan.sigma_points must be >= 1");
  if (scan.max_regions < 1) invalid("scan.max_regions must be >= 1");
  if (!(scan.kernel_C >= 0.0)) invalid("scan.kernel_C must be >= 0");
  for (double r : {scan.rho1, scan.rho2, scan.rho3, scan.rho4})
    if (!(r > 0.0 && r < 1.0)) invalid("scan exponents rho1..rho4 must lie in (0, 1)");
  if (scan.gamma_prime && !(*scan.gamma_prime > 0.0)) invalid("scan.gamma_prime must be positive");
  if (scan.theta_points < 0) invalid("scan.theta_points must be >= 0");
  if (scan.schrodinger_N < 1) invalid("scan.schrodinger_N must be >= 1");
  if (!std::isfinite(scan.energy)) invalid("scan.energy must be finite");
  if (output_dir.empty()) invalid("output.dir must not be empty");
  if (threads < 1 || threads > 256) invalid("threads must lie in [1, 256]");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Reader top(j, "");
  int version = kFormatVersion;
  top.get("format_version", version);
  if (version != kFormatVersion) invalid(fmt::format("unsupported format_version {}", version));
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  if (const json* m = top.child("model")) {
    Reader r(*m, "model");
    auto& p = c.model;
    r.get("alpha", p.alpha);
    r.get("theta0", p.theta0);
    r.get("m", p.m);
    r.get("eps", p.eps);
    r.get("delta", p.delta);
    r.get("p", p.p);
    r.get("anchors", p.anchors);
    r.get("amplitudes", p.amplitudes);
    r.get("gamma", p.gamma);
    r.get("K_exponent", p.K_exponent);
    r.finish();
  }
  if (const json* s = top.child("solver")) {
    Reader r(*s, "solver");
    auto& v = c.solver;
    r.get("M", v.M);
    r.get("r_max", v.r_max);
    r.get("box_cap", v.box_cap);
    r.get("residual_floor", v.residual_floor);
    r.get("q_update_damping", v.q_update_damping);
    r.get("q_tolerance_factor", v.q_tolerance_factor);
    r.get("backend", v.backend);
    r.get("oracle_L", c.oracle_L);
    r.get("oracle_tolerance", c.oracle_tolerance);
    r.finish();
  }
  if (const json* s = top.child("cert")) {
    Reader r(*s, "cert");
    auto& v = c.cert;
    r.get("L", v.L);
    r.get("c_star", v.c_star);
    r.get("eta", v.eta);
    r.get("m_points", v.m_points);
    r.get("transversality_L", v.transversality_L);
    r.get("transversality_m_points", v.transversality_m_points);
    r.get("ctilde", v.ctilde);
    r.finish();
  }
  if (const json* s = top.child("scan")) {
    Reader r(*s, "scan");
    auto& v = c.scan;
    r.get("scales", v.scales);
    r.get("sigma_lo", v.sigma_lo);
    r.get("sigma_hi", v.sigma_hi);
    r.get("sigma_points", v.sigma_points);
    r.get("max_regions", v.max_regions);
    r.get("kernel_C", v.kernel_C);
    r.get("rho1", v.rho1);
    r.get("rho2", v.rho2);
    r.get("rho3", v.rho3);
    r.get("rho4", v.rho4);
    r.get("gamma_prime", v.gamma_prime);
    r.get("theta_points", v.theta_points);
    r.get("schrodinger_N", v.schrodinger_N);
    r.get("energy", v.energy);
    r.finish();
  }
  if (const json* s = top.child("output")) {
    Reader r(*s, "output");
    r.get("dir", c.output_dir);
    r.finish();
  }
  top.finish();
  c.solver.seed = c.seed;
  c.validate();
  return c;
}

RunConfig config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("config is not valid JSON: {}", e.what()));
  }
  return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return config_from_text(text);
}

json config_to_json(const RunConfig& c) {
  const auto& p = c.model;
  json model = {{"alpha", p.alpha},   {"theta0", p.theta0},         {"m", p.m},
                {"eps", p.eps},       {"delta", p.delta},           {"p", p.p},
                {"anchors", p.anchors}, {"amplitudes", p.amplitudes}, {"gamma", p.gamma},
                {"K_exponent", p.K_exponent}};
  const auto& s = c.solver;
  json solver = {{"M", s.M},
                 {"r_max", s.r_max},
                 {"box_cap", s.box_cap},
                 {"residual_floor", s.residual_floor},
                 {"q_update_damping", s.q_update_damping},
                 {"q_tolerance_factor", s.q_tolerance_factor},
                 {"backend", s.backend},
                 {"oracle_L", c.oracle_L},
                 {"oracle_tolerance", c.oracle_tolerance}};
  const auto& ce = c.cert;
  json cert = {{"L", ce.L},
               {"c_star", ce.c_star},
               {"eta", ce.eta},
               {"m_points", ce.m_points},
               {"transversality_L", ce.transversality_L},
               {"transversality_m_points", ce.transversality_m_points},
               {"ctilde", ce.ctilde}};
  const auto& sc = c.scan;
  json scan = {{"scales", sc.scales},
               {"sigma_lo", sc.sigma_lo},
               {"sigma_hi", sc.sigma_hi},
               {"sigma_points", sc.sigma_points},
               {"max_regions", sc.max_regions},
               {"kernel_C", sc.kernel_C},
               {"rho1", sc.rho1},
               {"rho2", sc.rho2},
               {"rho3", sc.rho3},
               {"rho4", sc.rho4},
               {"gamma_prime", sc.gamma_prime ? json(*sc.gamma_prime) : json(nullptr)},
               {"theta_points", sc.theta_points},
               {"schrodinger_N", sc.schrodinger_N},
               {"energy", sc.energy}};
  return json{{"format_version", kFormatVersion},
              {"seed", c.seed},
              {"threads", c.threads},
              {"model", model},
              {"solver", solver},
              {"cert", cert},
              {"scan", scan},
              {"output", {{"dir", c.output_dir}}}};
}

std::vector<std::string> preset_names() { return {"trivial", "small-coupling", "scan-demo"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  auto& p = c.model;
  p.alpha = {(std::sqrt(5.0) - 1.0) / 2.0};
  p.theta0 = 0.2;
  p.m = 2.5;
  p.p = 2;
  p.anchors = {{0}};
  p.amplitudes = {1.0};
  if (name == "trivial") {
    p.eps = 0.0;
    p.delta = 0.0;
  } else if (name == "small-coupling") {
    p.eps = 1e-3;
    p.delta = 1e-3;
  } else if (name == "scan-demo") {
    p.eps = 1e-3;
    p.delta = 1e-3;
    c.scan.scales = {4, 8};
    c.scan.theta_points = 200;
  } else {
    invalid(fmt::format("unknown preset '{}'", name));
  }
  c.validate();
  return c;
}

// --- certificates -------------------------------------------------------------------

json certificate_json(const spectrum::Certificate& c, bool hard) {
  json w = json::array();
  for (const auto& x : c.witnesses) w.push_back({{"index", x.index}, {"value", number_or_null(x.value)}});
  json inputs = json::object(), details = json::object();
  for (const auto& [k, v] : c.inputs) inputs[k] = number_or_null(v);
  for (const auto& [k, v] : c.details) details[k] = number_or_null(v);
  return json{{"kind", spectrum::to_string(c.kind)},
              {"hard", hard},
              {"pass", c.pass()},
              {"margin", number_or_null(c.margin)},
              {"inputs", inputs},
              {"details", details},
              {"notes", c.notes},
              {"witnesses", w}};
}

namespace {

using spectrum::Certificate;
using spectrum::CertificateKind;

Certificate transversality_summary(const RunConfig& c) {
  const auto& p = c.model;
  const int T = c.cert.transversality_L;
  const spectrum::MGrid grid{2.0, 3.0, c.cert.transversality_m_points};
  Certificate out;
  out.kind = CertificateKind::Transversality;
  out.inputs = {{"L", T}, {"c_star", c.cert.c_star}, {"ctilde", c.cert.ctilde}, {"m_points", grid.points}};
  out.margin = std::numeric_limits<double>::infinity();
  const char* names[] = {"harmonic", "shifted", "difference"};
  const spectrum::TransversalityKind kinds[] = {spectrum::TransversalityKind::Harmonic,
                                                spectrum::TransversalityKind::Shifted,
                                                spectrum::TransversalityKind::Difference};
  for (int t = 0; t < 3; ++t) {
    double implied = std::numeric_limits<double>::infinity();
    int cases = 0;
    auto visit = [&](const IntVec& k, const IntVec& n, const IntVec& n2) {
      try {
        const auto cert = spectrum::transversality_margin(kinds[t], k, n, n2, p, grid, c.cert.c_star, c.cert.ctilde);
        ++cases;
        implied = std::min(implied, cert.details.at("implied_ctilde"));
        if (cert.margin < out.margin) {
          out.margin = cert.margin;
          out.witnesses = {spectrum::Witness{k, cert.details.at("argmin_m")}};
          out.notes = {fmt::format("worst case: {}", names[t])};
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotApplicable) throw;
      }
    };
    lattice::for_each_point(T, p.b(), [&](const IntVec& k) {
      if (t == 0) {
        if (lattice::sup_norm(k) != 0) visit(k, IntVec(p.d(), 0), IntVec(p.d(), 0));
        return;
      }
      lattice::for_each_point(T, p.d(), [&](const IntVec& n) {
        if (t == 1) {
          visit(k, n, n);
          return;
        }
        lattice::for_each_point(T, p.d(), [&](const IntVec& n2) {
          if (n != n2) visit(k, n, n2);
        });
      });
    });
    out.details[std::string(names[t]) + "_cases"] = cases;
    out.details[std::string(names[t]) + "_implied_ctilde"] = implied;
  }
  out.notes.push_back("shape check: constants are reported, not gated");
  return out;
}

Certificate admissible_summary(const RunConfig& c) {
  const auto& p = c.model;
  Certificate out;
  out.kind = CertificateKind::AdmissibleM;
  out.inputs = {{"L", c.cert.L}, {"eta", c.cert.eta}, {"m", p.m}, {"m_points", c.cert.m_points}};
  try {
    const auto scan = spectrum::admissible_m_scan(p, c.cert.L, c.cert.eta, spectrum::MGrid{2.0, 3.0, c.cert.m_points},
                                                  c.threads);
    out.details["certified_count"] = static_cast<double>(scan.certified.size());
    out.details["failing_fraction"] = scan.failing_fraction;
    out.details["asymptotic_bound"] = scan.asymptotic_bound;
    for (const auto& [k, v] : scan.failures) out.details["failures_" + k] = v;
    const auto at = spectrum::admissible_at(p, p.m, c.cert.L, c.cert.eta);
    out.details["configured_m_slack"] = at.worst_slack;
    out.margin = at.ok() ? at.worst_slack : std::min(at.worst_slack, 0.0);
    if (scan.certified.empty()) {
      out.margin = std::min(out.margin, 0.0);
      out.notes.push_back("no certified m on the grid");
    }
    if (!at.ok()) out.notes.push_back("configured m fails the non-resonance conditions");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PreconditionFailed) throw;
    out.margin = 0.0;
    out.notes.push_back(e.what());
  }
  return out;
}

Certificate cluster_summary(const RunConfig& c) {
  const auto& p = c.model;
  Certificate out;
  out.kind = CertificateKind::Cluster;
  out.inputs = {{"L", c.cert.L}, {"eta", c.cert.eta}, {"b", p.b()}};
  const int sup = spectrum::cluster_supremum(p, c.cert.L, c.cert.eta);
  out.details["supremum"] = sup;
  out.margin = p.b() + 1 - sup;
  out.notes.push_back("margin = b + 1 - supremum over sigma");
  return out;
}

std::string bundle_path(const RunConfig& c) { return (std::filesystem::path(c.output_dir) / "certificates.json").string(); }
std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.output_dir) / name).string();
}

template <class Fn>
CommandResult guarded(Fn&& fn) {
  CommandResult r;
  try {
    fn(r);
  } catch (const Error& e) {
    r.status = exit_code_for(e.code());
    r.log += fmt::format("error: {}\n", e.what());
  } catch (const std::exception& e) {
    r.status = kExitOther;
    r.log += fmt::format("error: {}\n", e.what());
  }
  return r;
}

json header(const RunConfig& c, const char* kind) {
  return json{{"format_version", kFormatVersion}, {"kind", kind}, {"config", config_to_json(c)}};
}

json oracle_block(const RunConfig& c, const solver::Solution& s) {
  const int L = c.oracle_L > 0 ? c.oracle_L : c.solver.final_radius();
  const auto o = solver::brute_force_oracle(c.model, L);
  double dw = 0.0;
  for (std::size_t l = 0; l < o.omega.size(); ++l) dw = std::max(dw, std::abs(o.omega[l] - s.omega[l]));
  const double dq = solver::sup_difference(o.q, s.q);
  return json{{"L", L},
              {"iterations", o.iterations},
              {"residual_sup", o.residual_sup},
              {"omega", o.omega},
              {"sup_discrepancy", dq},
              {"omega_discrepancy", dw},
              {"tolerance", c.oracle_tolerance},
              {"agree", dq <= c.oracle_tolerance && dw <= c.oracle_tolerance}};
}

}  // namespace

json field_records(const nonlin::CoefficientField& q) {
  auto entries = q.expanded();
  std::vector<std::pair<Site, double>> rec(entries.begin(), entries.end());
  std::stable_sort(rec.begin(), rec.end(), [](const auto& a, const auto& b) {
    const int na = a.first.k_norm() + a.first.n_norm(), nb = b.first.k_norm() + b.first.n_norm();
    if (na != nb) return na < nb;
    return a.first < b.first;
  });
  json out = json::array();
  for (const auto& [s, v] : rec) out.push_back({{"k", s.k}, {"n", s.n}, {"value", v}});
  return out;
}

json solution_json(const RunConfig& c, const solver::Solution& s) {
  json j = header(c, "solution");
  const auto& Q = s.quality;
  j["omega"] = s.omega;
  j["omega0"] = s.omega0;
  j["converged"] = s.converged;
  j["stages"] = static_cast<int>(s.trace.size()) - 1;
  j["final_residual_sup"] = s.trace.empty() ? 0.0 : s.trace.back().residual_sup;
  j["quality"] = {{"weighted_tail", Q.weighted_tail},
                  {"tail_threshold", Q.tail_threshold},
                  {"tail_rho", 0.1},
                  {"pde_residual", Q.pde_residual},
                  {"residual_l1", Q.residual_l1},
                  {"residual_sup", Q.residual_sup},
                  {"anchors_exact", Q.anchors_exact},
                  {"symmetric", Q.symmetric},
                  {"omega_shift", Q.omega_shift},
                  {"decay_rate", number_or_null(Q.decay_rate)}};
  j["records"] = field_records(s.q);
  return j;
}

json trace_json(const RunConfig& c, const solver::Solution& s) {
  json j = header(c, "trace");
  json stages = json::array();
  for (const auto& r : s.trace)
    stages.push_back({{"stage", r.stage},
                      {"box", r.box},
                      {"increment_sup", r.increment_sup},
                      {"residual_sup", r.residual_sup},
                      {"residual_l1", r.residual_l1},
                      {"full_residual_sup", r.full_residual_sup},
                      {"omega", r.omega},
                      {"decay_rate", number_or_null(r.decay_rate)},
                      {"rcond", number_or_null(r.rcond)},
                      {"wall_seconds", r.wall_seconds}});
  j["stages"] = stages;
  return j;
}

CommandResult run_certify(const RunConfig& c) {
  return guarded([&](CommandResult& r) {
    c.validate();
    const auto& p = c.model;
    json certs = json::array();
    bool all = true;
    auto add = [&](const Certificate& cert, bool hard) {
      certs.push_back(certificate_json(cert, hard));
      if (hard && !cert.pass()) all = false;
      r.log += fmt::format("{:<15} {:<4} margin {:.6e}{}\n", spectrum::to_string(cert.kind),
                           cert.pass() ? "PASS" : "FAIL", cert.margin, hard ? "" : "  (shape check)");
    };
    using spectrum::DcForm;
    using spectrum::Torus;
    add(spectrum::check_alpha_dc(p.alpha, c.cert.L, c.cert.c_star, DcForm::Fixed, Torus::Half), true);
    add(spectrum::check_theta_dc(p.theta0, p.alpha, c.cert.L, c.cert.c_star, Torus::Half), true);
    Certificate sep;
    try {
      sep = spectrum::separation_certificate(p, c.cert.L, c.cert.c_star);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PreconditionFailed) throw;
      sep = spectrum::separation_scan(p, c.cert.L, c.cert.c_star);
      sep.margin = std::min(sep.margin, 0.0);
      sep.notes.push_back(e.what());
    }
    add(sep, true);
    add(transversality_summary(c), false);
    add(admissible_summary(c), true);
    add(cluster_summary(c), true);
    json bundle = header(c, "certificates");
    bundle["certificates"] = certs;
    bundle["all_pass"] = all;
    write_file(bundle_path(c), dump(bundle));
    r.log += fmt::format("bundle written to {}\n", bundle_path(c));
    r.status = all ? kExitOk : kExitGateFailed;
  });
}

CommandResult run_solve(const RunConfig& c, bool force, bool oracle) {
  return guarded([&](CommandResult& r) {
    c.validate();
    json certs = {{"forced", force}, {"digest", nullptr}, {"all_pass", nullptr}};
    if (std::filesystem::exists(bundle_path(c))) {
      const std::string text = read_file(bundle_path(c));
      certs["digest"] = digest(text);
      try {
        const json b = json::parse(text);
        const bool same_model = b.at("config").at("model") == config_to_json(c).at("model");
        certs["all_pass"] = b.at("all_pass").get<bool>() && same_model;
        if (!same_model) r.log += "certificate bundle was produced for a different model block\n";
      } catch (const json::exception&) {
        certs["all_pass"] = false;
        r.log += "certificate bundle is malformed\n";
      }
    }
    if (!force && certs["all_pass"] != json(true)) {
      r.log += "no passing certificate bundle for this model; run certify first or pass --force\n";
      r.status = kExitGateFailed;
      return;
    }
    const auto s = solver::solve(c.model, c.solver);
    json sol = solution_json(c, s);
    sol["certificates"] = certs;
    if (oracle) sol["oracle"] = oracle_block(c, s);
    write_file(out_path(c, "solution.json"), dump(sol));
    write_file(out_path(c, "trace.json"), dump(trace_json(c, s)));
    for (const auto& w : c.model.warnings()) r.log += fmt::format("warning: {}\n", w);
    r.log += fmt::format("stages {} residual {:.3e} omega {}\n", s.trace.size() - 1, s.trace.back().residual_sup,
                         fmt::join(s.omega, " "));
    if (oracle)
      r.log += fmt::format("oracle discrepancy {:.3e}\n", sol["oracle"]["sup_discrepancy"].get<double>());
    r.log += fmt::format("solution written to {}\n", out_path(c, "solution.json"));
    if (!s.converged) {
      r.log += fmt::format("not converged after r_max = {} stages\n", c.solver.r_max);
      r.status = kExitNonConvergence;
    }
  });
}

CommandResult run_lde_scan(const RunConfig& c) {
  return guarded([&](CommandResult& r) {
    c.validate();
    const auto& p = c.model;
    const auto omega = spectrum::omega0(p);
    const auto kernel = linop::Kernel::exponential(c.scan.kernel_C, p.gamma);
    const spectrum::SigmaGrid grid{c.scan.sigma_lo, c.scan.sigma_hi, c.scan.sigma_points};
    json report = header(c, "lde_scan");
    json scales = json::array();
    auto sorted = c.scan.scales;
    std::sort(sorted.begin(), sorted.end());
    double prev = std::numeric_limits<double>::infinity();
    bool non_increasing = true;
    for (int M : sorted) {
      linop::Thresholds th{static_cast<double>(M), c.scan.rho1, c.scan.rho2, c.scan.rho3, c.scan.gamma_prime};
      const auto rep = linop::lde_scan(p, omega, kernel, th, grid, c.scan.max_regions, c.threads);
      std::string plot = fmt::format("# format_version {}\n# config {}\n# M {}\n# sigma worst_norm worst_decay_margin bad\n",
                                     kFormatVersion, digest(dump(config_to_json(c))), M);
      for (std::size_t i = 0; i < rep.sigma.size(); ++i)
        plot += fmt::format("{:.17g} {:.17g} {:.17g} {}\n", rep.sigma[i], rep.worst_norm[i], rep.worst_decay_margin[i],
                            rep.bad[i]);
      const std::string name = fmt::format("lde_scan_M{}.dat", M);
      write_file(out_path(c, name), plot);
      json intervals = json::array();
      for (const auto& [a, b] : rep.bad_intervals) intervals.push_back({a, b});
      scales.push_back({{"M", M},
                        {"regions_used", rep.regions_used},
                        {"regions_total", rep.regions_total},
                        {"norm_threshold", th.norm_bound()},
                        {"bad_fraction", rep.bad_fraction},
                        {"bad_measure", rep.bad_measure},
                        {"comparison", rep.comparison},
                        {"bad_intervals", intervals},
                        {"plot", name}});
      r.log += fmt::format("M={:<3} bad fraction {:.6e}  bad measure {:.6e}  e^(-M^rho1) {:.6e}\n", M, rep.bad_fraction,
                           rep.bad_measure, rep.comparison);
      if (rep.bad_fraction > prev) non_increasing = false;
      prev = rep.bad_fraction;
    }
    report["scales"] = scales;
    report["bad_fraction_non_increasing"] = non_increasing;
    if (sorted.size() > 1) r.log += fmt::format("bad fraction non-increasing across scales: {}\n", non_increasing);
    if (c.scan.theta_points > 0) {
      const linop::SchrodingerThresholds sth{c.scan.schrodinger_N, c.scan.rho3, c.scan.rho4};
      const auto ts = linop::qp_theta_scan(c.scan.energy, c.scan.theta_points, p, sth, c.threads);
      report["theta_scan"] = {{"N", sth.N},
                              {"energy", c.scan.energy},
                              {"points", c.scan.theta_points},
                              {"bad_fraction", ts.bad_fraction},
                              {"comparison", ts.comparison}};
      r.log += fmt::format("theta scan N={} bad fraction {:.6e}  e^(-N^rho4) {:.6e}\n", sth.N, ts.bad_fraction,
                           ts.comparison);
    }
    write_file(out_path(c, "lde_scan.json"), dump(report));
    r.log += fmt::format("report written to {}\n", out_path(c, "lde_scan.json"));
  });
}

CommandResult run_report(const std::string& path) {
  return guarded([&](CommandResult& r) {
    const std::string text = read_file(path);
    try {
      const json j = json::parse(text);
      if (j.at("format_version").get<int>() != kFormatVersion)
        throw Error(ErrorCode::MalformedFile, "unsupported format_version");
      if (j.at("kind").get<std::string>() != "solution") throw Error(ErrorCode::MalformedFile, "not a solution file");
      const auto omega = j.at("omega").get<std::vector<double>>();
      const auto omega0 = j.at("omega0").get<std::vector<double>>();
      if (omega.size() != omega0.size()) throw Error(ErrorCode::MalformedFile, "omega and omega0 differ in length");
      const json& Q = j.at("quality");
      double shift = 0.0;
      for (std::size_t l = 0; l < omega.size(); ++l) shift = std::max(shift, std::abs(omega[l] - omega0[l]));
      const double tail = Q.at("weighted_tail").get<double>();
      const double thr = Q.at("tail_threshold").get<double>();
      const json& rate = Q.at("decay_rate");
      const json& cert = j.at("certificates");
      const std::size_t records = j.at("records").size();
      auto num = [](const json& v) { return v.is_null() ? std::string("n/a") : fmt::format("{:.6e}", v.get<double>()); };
      r.log += fmt::format("solution        {}\n", path);
      r.log += fmt::format("converged       {}\n", j.at("converged").get<bool>());
      r.log += fmt::format("stages          {}\n", j.at("stages").get<int>());
      r.log += fmt::format("omega           {}\n", fmt::join(omega, " "));
      r.log += fmt::format("|omega-omega0|  {:.6e}\n", shift);
      r.log += fmt::format("residual sup    {:.6e}\n", Q.at("residual_sup").get<double>());
      r.log += fmt::format("residual l1     {:.6e}\n", Q.at("residual_l1").get<double>());
      r.log += fmt::format("pde residual    {:.6e}\n", Q.at("pde_residual").get<double>());
      r.log += fmt::format("decay rate      {}\n", num(rate));
      r.log += fmt::format("tail (rho=0.1)  {:.6e}  threshold {:.6e}  {}\n", tail, thr, tail < thr || (tail == 0.0 && thr == 0.0) ? "OK" : "WARN");
      r.log += fmt::format("anchors exact   {}\n", Q.at("anchors_exact").get<bool>());
      r.log += fmt::format("symmetric       {}\n", Q.at("symmetric").get<bool>());
      r.log += fmt::format("certificates    {}{}\n", cert.at("digest").is_null() ? "none" : cert.at("digest").get<std::string>(),
                           cert.at("forced").get<bool>() ? " (forced)" : "");
      r.log += fmt::format("records         {}\n", records);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedFile, fmt::format("'{}': {}", path, e.what()));
    }
  });
}

CommandResult run_oracle_compare(const RunConfig& c) {
  return guarded([&](CommandResult& r) {
    c.validate();
    const auto s = solver::solve(c.model, c.solver);
    json j = header(c, "oracle_compare");
    j["solver_residual_sup"] = s.trace.back().residual_sup;
    j["solver_omega"] = s.omega;
    j["oracle"] = oracle_block(c, s);
    write_file(out_path(c, "oracle_compare.json"), dump(j));
    const auto& o = j["oracle"];
    r.log += fmt::format("oracle L={} iterations {} residual {:.3e}\n", o["L"].get<int>(), o["iterations"].get<int>(),
                         o["residual_sup"].get<double>());
    r.log += fmt::format("sup discrepancy {:.3e}  omega discrepancy {:.3e}  tolerance {:.1e}\n",
                         o["sup_discrepancy"].get<double>(), o["omega_discrepancy"].get<double>(), c.oracle_tolerance);
    r.status = o["agree"].get<bool>() ? kExitOk : kExitGateFailed;
  });
}

}  // namespace qpb::cli
