#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "glsim/solver.hpp"

namespace glsim {

using Json = nlohmann::json;

/// Validated run configuration: model block, seeding block, output block and
/// the command-specific experiment block (validated per command). Unknown
/// keys are rejected everywhere.
struct RunConfig {
  int schema = 1;
  SolverConfig solver;
  ForcingSpec forcing;
  std::uint64_t master_seed = 0;
  std::string seed_scheme;
  std::string out_dir = "out";
  Json experiment;  ///< command-specific block, kept verbatim

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const Json& j);
  /// Canonical serialization (defines the config hash).
  Json to_json() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

/// Throws when `j` is not an object or carries keys outside `allowed`.
void require_keys(const Json& j, const std::string& where,
                  std::initializer_list<const char*> allowed);

/// Field specification: either the string "zero" or an object mapping signed
/// mode numbers (as strings) to coefficients, e.g. {"1": 2.0, "-2": 0.5}.
Vec parse_field(const Json& j, int n_modes);
Json field_to_json(const Vec& coeffs, int n_modes);

ForcingSpec parse_forcing(const Json& j, int n_modes);

}  // namespace glsim
