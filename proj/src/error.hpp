/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qpb {

enum class ErrorCode {
  InvalidArgument,
  EmptyRegion,
  OutOfRegion,
  InvalidAnchors,
  PreconditionFailed,
  NotApplicable,
  InsufficientResolution,
  AsymmetricKernel,
  Singular,
  ComplementSingular,
  FrequencyCollapse,
  ResonantBox,
  NonConvergence,
  OracleDiverged,
  InsufficientData,
  InvalidConfig,
  MalformedFile,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qpb
