#include "mode/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mode {

namespace fs = std::filesystem;

void atomic_write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + tmp.string() + " -> " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m.at(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(const std::string& text) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::size_t line_cols = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw IoError("matrix_from_csv: bad number in row " +
                                           std::to_string(rows));
      data.push_back(v);
      ++line_cols;
      p = next;
      if (p < end && *p == ',') ++p;
    }
    if (rows == 0) {
      cols = line_cols;
    } else if (line_cols != cols) {
      throw IoError("matrix_from_csv: ragged row " + std::to_string(rows));
    }
    ++rows;
  }
  if (rows == 0 || cols == 0) throw IoError("matrix_from_csv: empty input");
  return Matrix(rows, cols, std::move(data));
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  atomic_write_text(path, matrix_to_csv(m));
}

Matrix read_matrix_csv(const fs::path& path) { return matrix_from_csv(read_text(path)); }

namespace {

bool wildcard_match(const std::string& pattern, const std::string& text) {
  // Iterative '*' matcher; no '?' support needed.
  std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

std::vector<fs::path> expand_glob(const std::string& pattern) {
  const fs::path as_path(pattern);
  const std::string filename = as_path.filename().string();
  if (filename.find('*') == std::string::npos) {
    return {as_path};
  }
  const fs::path dir = as_path.has_parent_path() ? as_path.parent_path() : fs::path(".");
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (wildcard_match(filename, entry.path().filename().string())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mode
