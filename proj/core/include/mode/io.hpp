#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mode/matrix.hpp"

namespace mode {

// Writes via a temp file in the same directory, then renames into place.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

// Matrix as CSV, one row per line, format_double cells (lossless round-trip).
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

// Expands a pattern whose final component may contain '*' wildcards; plain
// paths pass through. Results are sorted.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

}  // namespace mode
