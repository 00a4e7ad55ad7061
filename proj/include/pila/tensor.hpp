#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pila {

// Row-major 2-D shape. Scalars are 1x1, vectors are 1xn or nx1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

// Raised for nonconforming operand shapes. Always a configuration bug, never data-dependent.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, Shape a, Shape b);
  ShapeError(const std::string& op, Shape a, const std::string& detail);
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : Tensor(Shape{rows, cols}, fill) {}

  static Tensor scalar(double v) { return Tensor(Shape{1, 1}, v); }
  static Tensor row(std::vector<double> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  [[nodiscard]] Shape shape() const { return shape_; }
  [[nodiscard]] std::size_t rows() const { return shape_.rows; }
  [[nodiscard]] std::size_t cols() const { return shape_.cols; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * shape_.cols, shape_.cols);
  }
  [[nodiscard]] std::span<double> row_span(std::size_t r) {
    return std::span<double>(values_).subspan(r * shape_.cols, shape_.cols);
  }

  // Value of a 1x1 tensor.
  [[nodiscard]] double item() const;

  Tensor& operator+=(const Tensor& other);
  void fill(double v);
  [[nodiscard]] bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

Tensor transpose(const Tensor& t);
double max_abs(const Tensor& t);

}  // namespace pila
