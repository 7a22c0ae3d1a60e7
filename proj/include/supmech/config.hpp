#pragma once

#include <filesystem>
#include <string>

#include "supmech/measurement.hpp"

namespace supmech {

/// Parses a versioned JSON experiment config. The schema is strict: unknown
/// fields are rejected so that typos in physics parameters surface as errors.
/// Throws ParseError for structural problems; value-level invariants are
/// reported by diagnose_config.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);

}  // namespace supmech
