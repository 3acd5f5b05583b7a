#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>

namespace bciqt {

// Serialises with insertion-ordered keys and every floating-point number
// printed as %.17g, so a value read back compares bit-equal.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

// Parses a JSON file; syntax errors and truncation raise SchemaMismatch.
nlohmann::json read_json_file(const std::filesystem::path& path);

// Writes through a sibling temporary and renames it into place, so a failed
// write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace bciqt
