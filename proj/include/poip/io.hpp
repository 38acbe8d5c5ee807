#pragma once

#include <string>

#include "poip/model.hpp"

namespace poip {

/// Canonical on-disk extension for instance documents.
constexpr const char* kInstanceExtension = ".poip.json";

/// Parses and validates an instance document. Throws ParseError for
/// malformed JSON and ValidationError for schema/contract violations; error
/// messages carry the offending field path.
Instance instance_from_json(const std::string& text);
Instance read_instance(const std::string& path);

/// Canonical serialization: fixed key order, canonical term order, shortest
/// round-trip number formatting, infinite bounds as "inf"/"-inf". Writing a
/// freshly parsed document is byte-stable.
std::string instance_to_json(const Instance& inst);
void write_instance(const Instance& inst, const std::string& path);

}  // namespace poip
