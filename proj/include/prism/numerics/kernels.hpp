/*
 * Copyright 2026 The PRISm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <vector>

#include "prism/numerics/tensor.hpp"

// Dense matrix products. Accumulation is always done in double so that the
// float32 forward pass stays close to the float64 reference used by the
// gradient checker.
namespace prism::numerics::kernels {

// C = A * B, A: m x k, B: k x n.
template <typename T>
BasicTensor<T> matmul_nn(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  check_shape(b.rows() == k, "matmul: inner dimensions differ " + a.shape_string() +
                                 " * " + b.shape_string());
  BasicTensor<T> c(m, n);
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const T* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += av * static_cast<double>(brow[j]);
    }
    T* crow = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = static_cast<T>(acc[j]);
  }
  return c;
}

// C = A * B^T, A: m x k, B: n x k.
template <typename T>
BasicTensor<T> matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  check_shape(b.cols() == k, "matmul_nt: inner dimensions differ");
  BasicTensor<T> c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += static_cast<double>(arow[p]) * brow[p];
      c(i, j) = static_cast<T>(acc);
    }
  }
  return c;
}

// C = A^T * B, A: k x m, B: k x n.
template <typename T>
BasicTensor<T> matmul_tn(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  check_shape(b.rows() == k, "matmul_tn: inner dimensions differ");
  std::vector<double> acc(m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a.data() + p * m;
    const T* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = acc.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * static_cast<double>(brow[j]);
    }
  }
  BasicTensor<T> c(m, n);
  for (std::size_t i = 0; i < m * n; ++i) c[i] = static_cast<T>(acc[i]);
  return c;
}

template <typename T>
void add_into(BasicTensor<T>& dst, const BasicTensor<T>& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

}  // namespace prism::numerics::kernels
