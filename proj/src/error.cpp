/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "error.hpp"

namespace qpb {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::OutOfRegion: return "OutOfRegion";
    case ErrorCode::InvalidAnchors: return "InvalidAnchors";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::InsufficientResolution: return "InsufficientResolution";
    case ErrorCode::AsymmetricKernel: return "AsymmetricKernel";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::ComplementSingular: return "ComplementSingular";
    case ErrorCode::FrequencyCollapse: return "FrequencyCollapse";
    case ErrorCode::ResonantBox: return "ResonantBox";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::OracleDiverged: return "OracleDiverged";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace qpb
