#pragma once

#include "pila/tensor.hpp"

// Dense matrix-product kernels. Each kernel exists twice: a serial reference and an
// OpenMP version that splits work over output rows. Every output element is accumulated
// by exactly one thread in the same order as the serial loop, so the two agree bit for bit.
namespace pila::kernels {

namespace serial {
Tensor matmul(const Tensor& a, const Tensor& b);     // a * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
}  // namespace serial

namespace omp {
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
}  // namespace omp

// Dispatch on problem size: tiny products stay serial to skip the fork/join cost.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Work (multiply-adds) above which the dispatchers go parallel.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

}  // namespace pila::kernels
