#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lrshield {

std::string read_text_file(const std::filesystem::path& path);

// Writes to `<path>.tmp` in the target directory and renames into place, so a
// crash never leaves a half-written artifact behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value, int indent = 1);

// FNV-1a 64-bit; used to fingerprint config sections inside artifacts.
std::uint64_t fnv1a64(const std::string& data);
std::string hash_hex(std::uint64_t h);

// Splits one CSV record; no quoting support (the formats we emit never need
// it), trims surrounding whitespace and a trailing '\r'.
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace lrshield
