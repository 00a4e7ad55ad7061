#include "pila/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace pila {

std::string to_string(Shape s) { return fmt::format("[{}x{}]", s.rows, s.cols); }

ShapeError::ShapeError(const std::string& op, Shape a, Shape b)
    : std::invalid_argument(
          fmt::format("{}: shape mismatch {} vs {}", op, to_string(a), to_string(b))) {}

ShapeError::ShapeError(const std::string& op, Shape a, const std::string& detail)
    : std::invalid_argument(fmt::format("{}: bad shape {} ({})", op, to_string(a), detail)) {}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw ShapeError("Tensor", shape_,
                     fmt::format("{} values supplied", values_.size()));
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(Shape{1, n}, std::move(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Tensor::from_rows", Shape{r, c}, "ragged rows");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(v));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (shape_ != Shape{1, 1}) throw ShapeError("item", shape_, "expected a scalar");
  return values_[0];
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (shape_ != other.shape_) throw ShapeError("operator+=", shape_, other.shape_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor transpose(const Tensor& t) {
  Tensor out(t.cols(), t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out(j, i) = t(i, j);
  return out;
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace pila
