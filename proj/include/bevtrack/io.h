#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace bevtrack {

// Writes to a temporary sibling file and renames it over `path`, so readers
// never observe a partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace bevtrack
