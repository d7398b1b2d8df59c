#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mtpe::text {

bool is_space(char c);

std::string_view trim(std::string_view s);

/// Collapses every run of ASCII whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

/// Splits on a single delimiter character, keeping empty fields.
std::vector<std::string> split(std::string_view s, char delim);

std::string to_lower(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

bool starts_with(std::string_view s, std::string_view prefix);

/// Number of UTF-8 code points; continuation bytes are not counted.
std::size_t utf8_length(std::string_view s);

/// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace mtpe::text
