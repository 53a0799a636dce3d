#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mode/errors.hpp"

namespace mode {

// Dense row-major matrix of doubles. A "token" is a 1xP row vector; a batch is
// n stacked rows. All arithmetic is double precision.
class Matrix {
 public:
  Matrix() = default;  // empty 0x0, usable only as a placeholder
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::vector<double> entries);
  static Matrix column_vector(std::vector<double> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double at(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> entries() const { return data_; }
  std::span<double> entries() { return data_; }
  std::span<const double> row(std::size_t i) const {
    assert(i < rows_);
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double> column(std::size_t j) const;

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_str(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);

// out[i][j] = u[i][j] * w[i]; w must be a column vector with u's row count.
Matrix scale_rows(const Matrix& u, const Matrix& w);

// Columns [c0, c1) of a, as a new matrix.
Matrix slice_cols(const Matrix& a, std::size_t c0, std::size_t c1);

// Dyadic (outer) product: result[i][j] = u[i] * v[j].
Matrix outer(std::span<const double> u, std::span<const double> v);

// Numerically stable softmax (max-shifted); entries positive, sum 1.
std::vector<double> softmax_row(std::span<const double> v);
Matrix softmax_rows(const Matrix& a);

double sum(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

}  // namespace mode
