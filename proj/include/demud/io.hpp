#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace demud {

std::string read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Lowercase hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

/// Splits text into lines, accepting LF or CRLF; a trailing newline does not
/// produce an empty final line.
std::vector<std::string> split_lines(std::string_view text);

/// printf("%.17g"); exact round-trip representation of a double.
std::string format_double(double value);

}  // namespace demud
