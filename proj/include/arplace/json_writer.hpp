#pragma once

#include <string>

#include <json.hpp>

#include "arplace/transform.hpp"

namespace arplace {

/// Deterministic pretty printer: keys in insertion order, two-space indent,
/// floating-point numbers with 17 significant digits (always carrying a '.'
/// or exponent so they re-parse as floats). Non-finite floats are written as
/// null.
std::string write_json(const nlohmann::ordered_json& value);

nlohmann::ordered_json transform_json(const SimilarityTransformY& transform);
SimilarityTransformY transform_from_json_value(const nlohmann::json& j);

}  // namespace arplace
