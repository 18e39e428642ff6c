#pragma once

#include <string>

#include "sgsim/solver.hpp"

namespace sgsim {

/// One JSON document holding the full problem statement (grid, generator,
/// coefficients, initial state, noise measure, indices) together with the
/// numerical settings. Schema reference: docs/manifest.md.
struct RunManifest {
  CauchyProblemSpec problem;
  SolverConfig config;
};

/// Parses a manifest from JSON text. Schema violations, unknown expressions,
/// and type mismatches throw parse_error with the offending key; values that
/// parse but break a structural hypothesis (non-symmetric measure, negative
/// mass) throw hypothesis_error from the underlying constructors.
RunManifest parse_manifest(const std::string& json_text);

/// Reads and parses a manifest file; file-system failures throw io_error.
RunManifest load_manifest(const std::string& path);

/// Moment table serialization: a comment header with the run scalars, then
/// one "time,mean_sq,se" row per knot at 17 significant digits, enough to
/// round-trip doubles through text exactly.
void write_moment_csv(const MomentReport& rep, const std::string& path);
MomentReport read_moment_csv(const std::string& path);

}  // namespace sgsim
