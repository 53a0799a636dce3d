#include "mode/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace mode {

namespace {

void require_positive(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("Matrix: dimensions must be positive, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  require_positive(rows, cols);
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_positive(rows, cols);
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r > 0 ? rows.begin()->size() : 0;
  require_positive(r, c);
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::row_vector(std::vector<double> entries) {
  return Matrix(1, entries.size(), std::move(entries));
}

Matrix Matrix::column_vector(std::vector<double> entries) {
  return Matrix(entries.size(), 1, std::move(entries));
}

std::vector<double> Matrix::column(std::size_t j) const {
  assert(j < cols_);
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
  return out;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a) + " vs " + shape_str(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.data() + i * m;
    for (std::size_t l = 0; l < k; ++l) {
      const double a_il = a.at(i, l);
      const double* b_row = b.data() + l * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += a_il * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shapes disagree: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("sub: shapes disagree: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard: shapes disagree: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

Matrix scale(const Matrix& a, double c) {
  Matrix out = a;
  for (double& v : out.entries()) v *= c;
  return out;
}

Matrix scale_rows(const Matrix& u, const Matrix& w) {
  if (w.cols() != 1 || w.rows() != u.rows()) {
    throw ShapeError("scale_rows: weight shape " + shape_str(w) + " does not match rows of " +
                     shape_str(u));
  }
  Matrix out = u;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const double wi = w.at(i, 0);
    double* row = out.data() + i * u.cols();
    for (std::size_t j = 0; j < u.cols(); ++j) row[j] *= wi;
  }
  return out;
}

Matrix slice_cols(const Matrix& a, std::size_t c0, std::size_t c1) {
  if (c0 >= c1 || c1 > a.cols()) {
    throw ShapeError("slice_cols: invalid column range [" + std::to_string(c0) + ", " +
                     std::to_string(c1) + ") for " + shape_str(a));
  }
  Matrix out(a.rows(), c1 - c0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = a.at(i, j);
  return out;
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
  if (u.empty() || v.empty()) throw ShapeError("outer: empty input vector");
  Matrix out(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out.at(i, j) = u[i] * v[j];
  return out;
}

std::vector<double> softmax_row(std::span<const double> v) {
  if (v.empty()) throw ShapeError("softmax_row: empty input");
  const double shift = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - shift);
    total += out[i];
  }
  for (double& e : out) e /= total;
  return out;
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const std::vector<double> s = softmax_row(a.row(i));
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = s[j];
  }
  return out;
}

double sum(const Matrix& a) {
  double total = 0.0;
  for (double v : a.entries()) total += v;
  return total;
}

double frobenius_norm(const Matrix& a) {
  double total = 0.0;
  for (double v : a.entries()) total += v * v;
  return std::sqrt(total);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.entries()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: shapes disagree: " + shape_str(a) + " vs " + shape_str(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool all_finite(const Matrix& a) {
  for (double v : a.entries())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace mode
