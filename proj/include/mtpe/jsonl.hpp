#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mtpe::io {

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Calls fn(line_number, json) for every non-blank line. Parse failures are
/// reported as ParseError naming `name` and the line.
void for_each_json_line(std::string_view content, const std::string& name,
                        const std::function<void(std::size_t, const nlohmann::json&)>& fn);

/// Serialized form used for every artifact: compact, UTF-8 kept as-is.
std::string dump_line(const nlohmann::ordered_json& j);

}  // namespace mtpe::io
