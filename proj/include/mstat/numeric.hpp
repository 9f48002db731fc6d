#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mstat {

using Rational = mpq_class;
using Vec = std::vector<double>;
using QVec = std::vector<Rational>;

/// Exact rational with the value of the shortest decimal that round-trips
/// to `v` (so 0.1 becomes 1/10, not the binary expansion). Throws on
/// non-finite input.
Rational to_rational(double v);

/// Parses "3", "-1.25", "2e-3" or "7/9".
Rational parse_rational(const std::string& text);

/// Correctly rounded (nearest) double; mpq_get_d alone truncates.
double to_double(const Rational& q);
inline double to_double(double v) { return v; }

std::string to_string(const Rational& q);

QVec to_rational(std::span<const double> v);
Vec to_double(std::span<const Rational> v);

/// Scalar-generic helpers used by the templated solvers.
template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static bool is_zero(double v, double tol) { return std::fabs(v) <= tol; }
  static double abs(double v) { return std::fabs(v); }
  static constexpr bool exact = false;
};

template <>
struct ScalarTraits<Rational> {
  static bool is_zero(const Rational& v, double) { return sgn(v) == 0; }
  static Rational abs(const Rational& v) { return ::abs(v); }
  static constexpr bool exact = true;
};

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const T> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Mat = Matrix<double>;
using QMat = Matrix<Rational>;

QMat to_rational(const Mat& m);
Mat to_double(const QMat& m);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace mstat
