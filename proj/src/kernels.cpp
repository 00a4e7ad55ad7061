#include "pila/kernels.hpp"

#include <cstdint>

namespace pila::kernels {
namespace {

void check_mm(const char* op, Shape a, Shape b, std::size_t a_inner, std::size_t b_inner) {
  if (a_inner != b_inner) throw ShapeError(op, a, b);
}

// out row i of a*b
inline void mm_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  double* o = &out(i, 0);
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = a(i, k);
    const double* br = b.row_span(k).data();
    for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
  }
}

// out row i of a^T*b, a is k x m
inline void mm_tn_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t inner = a.rows();
  const std::size_t n = b.cols();
  double* o = &out(i, 0);
  for (std::size_t k = 0; k < inner; ++k) {
    const double aki = a(k, i);
    const double* br = b.row_span(k).data();
    for (std::size_t j = 0; j < n; ++j) o[j] += aki * br[j];
  }
}

// out row i of a*b^T
inline void mm_nt_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t inner = a.cols();
  const double* ar = a.row_span(i).data();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* br = b.row_span(j).data();
    double acc = 0.0;
    for (std::size_t k = 0; k < inner; ++k) acc += ar[k] * br[k];
    out(i, j) = acc;
  }
}

}  // namespace

namespace serial {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_mm("matmul", a.shape(), b.shape(), a.cols(), b.rows());
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) mm_row(a, b, out, i);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_mm("matmul_tn", a.shape(), b.shape(), a.rows(), b.rows());
  Tensor out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) mm_tn_row(a, b, out, i);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_mm("matmul_nt", a.shape(), b.shape(), a.cols(), b.cols());
  Tensor out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) mm_nt_row(a, b, out, i);
  return out;
}

}  // namespace serial

namespace omp {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_mm("matmul", a.shape(), b.shape(), a.cols(), b.rows());
  Tensor out(a.rows(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) mm_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_mm("matmul_tn", a.shape(), b.shape(), a.rows(), b.rows());
  Tensor out(a.cols(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) mm_tn_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_mm("matmul_nt", a.shape(), b.shape(), a.cols(), b.cols());
  Tensor out(a.rows(), b.rows());
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) mm_nt_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

}  // namespace omp

Tensor matmul(const Tensor& a, const Tensor& b) {
  return a.rows() * a.cols() * b.cols() >= kParallelThreshold ? omp::matmul(a, b)
                                                             : serial::matmul(a, b);
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  return a.rows() * a.cols() * b.cols() >= kParallelThreshold ? omp::matmul_tn(a, b)
                                                             : serial::matmul_tn(a, b);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  return a.rows() * a.cols() * b.rows() >= kParallelThreshold ? omp::matmul_nt(a, b)
                                                             : serial::matmul_nt(a, b);
}

}  // namespace pila::kernels
