/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "qpbreather/qpbreather.h"

#include <cstring>
#include <string>

#include "cli.hpp"

struct qpb_config {
  qpb::cli::RunConfig value;
};

struct qpb_solution {
  qpb::solver::Solution value;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_log;

qpb_status from_exit(int code) { return static_cast<qpb_status>(code); }

template <class Fn>
qpb_status guard(Fn&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const qpb::Error& e) {
    last_error = e.what();
    return from_exit(qpb::cli::exit_code_for(e.code()));
  } catch (const std::exception& e) {
    last_error = e.what();
    return QPB_ERROR;
  } catch (...) {
    last_error = "unknown exception";
    return QPB_ERROR;
  }
}

qpb_status null_arg(const char* what) {
  last_error = std::string(what) + " must not be null";
  return QPB_INVALID;
}

qpb_status command(const qpb::cli::CommandResult& r) {
  last_log = r.log;
  const auto pos = r.log.find("error: ");
  if (r.status != QPB_OK && pos != std::string::npos) last_error = r.log.substr(pos + 7);
  while (!last_error.empty() && last_error.back() == '\n') last_error.pop_back();
  return from_exit(r.status);
}

qpb_status make_config(qpb::cli::RunConfig c, qpb_config** out) {
  *out = new qpb_config{std::move(c)};
  return QPB_OK;
}

}  // namespace

extern "C" {

int qpb_format_version(void) { return qpb::cli::kFormatVersion; }

const char* qpb_status_string(qpb_status status) {
  switch (status) {
    case QPB_OK: return "ok";
    case QPB_GATE_FAILED: return "gate failed";
    case QPB_INVALID: return "invalid input";
    case QPB_RESONANT_BOX: return "resonant box";
    case QPB_NON_CONVERGENCE: return "non-convergence";
    case QPB_ERROR: return "error";
  }
  return "unknown status";
}

const char* qpb_last_error(void) { return last_error.c_str(); }
const char* qpb_last_log(void) { return last_log.c_str(); }

qpb_status qpb_config_preset(const char* name, qpb_config** out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  return guard([&] { return make_config(qpb::cli::preset(name), out); });
}

qpb_status qpb_config_load(const char* path, qpb_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guard([&] { return make_config(qpb::cli::load_config(path), out); });
}

qpb_status qpb_config_parse(const char* json_text, qpb_config** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  return guard([&] { return make_config(qpb::cli::config_from_text(json_text), out); });
}

qpb_status qpb_config_set_threads(qpb_config* config, int threads) {
  if (!config) return null_arg("config");
  return guard([&] {
    auto c = config->value;
    c.threads = threads;
    c.validate();
    config->value = std::move(c);
    return QPB_OK;
  });
}

qpb_status qpb_config_set_output_dir(qpb_config* config, const char* dir) {
  if (!config) return null_arg("config");
  if (!dir) return null_arg("dir");
  return guard([&] {
    auto c = config->value;
    c.output_dir = dir;
    c.validate();
    config->value = std::move(c);
    return QPB_OK;
  });
}

char* qpb_config_to_json(const qpb_config* config) {
  if (!config) {
    null_arg("config");
    return nullptr;
  }
  char* out = nullptr;
  guard([&] {
    const std::string s = qpb::cli::dump(qpb::cli::config_to_json(config->value));
    out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return QPB_OK;
  });
  return out;
}

void qpb_config_free(qpb_config* config) { delete config; }
void qpb_string_free(char* text) { std::free(text); }

qpb_status qpb_certify(const qpb_config* config) {
  if (!config) return null_arg("config");
  return guard([&] { return command(qpb::cli::run_certify(config->value)); });
}

qpb_status qpb_solve_to_files(const qpb_config* config, int force, int oracle) {
  if (!config) return null_arg("config");
  return guard([&] { return command(qpb::cli::run_solve(config->value, force != 0, oracle != 0)); });
}

qpb_status qpb_lde_scan(const qpb_config* config) {
  if (!config) return null_arg("config");
  return guard([&] { return command(qpb::cli::run_lde_scan(config->value)); });
}

qpb_status qpb_report(const char* solution_path) {
  if (!solution_path) return null_arg("solution_path");
  return guard([&] { return command(qpb::cli::run_report(solution_path)); });
}

qpb_status qpb_oracle_compare(const qpb_config* config) {
  if (!config) return null_arg("config");
  return guard([&] { return command(qpb::cli::run_oracle_compare(config->value)); });
}

qpb_status qpb_solve(const qpb_config* config, qpb_solution** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guard([&] {
    auto s = qpb::solver::solve(config->value.model, config->value.solver);
    *out = new qpb_solution{std::move(s)};
    return QPB_OK;
  });
}

size_t qpb_solution_frequency_count(const qpb_solution* solution) {
  return solution ? solution->value.omega.size() : 0;
}

double qpb_solution_frequency(const qpb_solution* solution, size_t l) {
  if (!solution || l >= solution->value.omega.size()) return 0.0;
  return solution->value.omega[l];
}

int qpb_solution_converged(const qpb_solution* solution) { return solution && solution->value.converged ? 1 : 0; }

double qpb_solution_residual(const qpb_solution* solution) {
  if (!solution || solution->value.trace.empty()) return 0.0;
  return solution->value.trace.back().residual_sup;
}

size_t qpb_solution_stages(const qpb_solution* solution) {
  return solution && !solution->value.trace.empty() ? solution->value.trace.size() - 1 : 0;
}

qpb_status qpb_solution_coefficient(const qpb_solution* solution, const int* k, const int* n, double* value) {
  if (!solution) return null_arg("solution");
  if (!k || !n || !value) return null_arg("k, n and value");
  return guard([&] {
    const auto& q = solution->value.q;
    qpb::lattice::Site s{qpb::lattice::IntVec(k, k + q.b()), qpb::lattice::IntVec(n, n + q.d())};
    *value = q.get(s);
    return QPB_OK;
  });
}

void qpb_solution_free(qpb_solution* solution) { delete solution; }

}  // extern "C"
