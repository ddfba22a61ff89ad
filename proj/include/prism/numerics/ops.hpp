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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "prism/numerics/kernels.hpp"
#include "prism/numerics/tape.hpp"

// Differentiable operations on rank-2 tensors. Each op computes its forward
// value eagerly and registers a closure that turns the output gradient into
// input gradients.
namespace prism::numerics {

namespace detail {

template <typename T>
void debug_check_finite(const BasicTensor<T>& t, const char* op) {
#ifndef NDEBUG
  if (!t.all_finite()) {
    fail(ErrorKind::kInvariantViolation, std::string("non-finite output from ") + op);
  }
#else
  (void)t;
  (void)op;
#endif
}

template <typename T>
Var<T> emit(Tape<T>& tape, BasicTensor<T> value, std::initializer_list<Var<T>> inputs,
            typename Tape<T>::BackwardFn fn, const char* op) {
  debug_check_finite(value, op);
  return tape.record(std::move(value), inputs, std::move(fn));
}

}  // namespace detail

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  Tape<T>& tape = a.tape();
  BasicTensor<T> out = kernels::matmul_nn(a.value(), b.value());
  return detail::emit(tape, std::move(out), {a, b},
      [a, b](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.needs_grad(a)) t.accumulate(a, kernels::matmul_nt(g, b.value()));
        if (t.needs_grad(b)) t.accumulate(b, kernels::matmul_tn(a.value(), g));
      }, "matmul");
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_shape(a.value().same_shape(b.value()), "add: shapes differ");
  BasicTensor<T> out = a.value();
  kernels::add_into(out, b.value());
  return detail::emit(a.tape(), std::move(out), {a, b},
      [a, b](Tape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
      }, "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_shape(a.value().same_shape(b.value()), "sub: shapes differ");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return detail::emit(a.tape(), std::move(out), {a, b},
      [a, b](Tape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, g);
        if (t.needs_grad(b)) {
          BasicTensor<T> neg = g;
          for (auto& v : neg.values()) v = -v;
          t.accumulate(b, neg);
        }
      }, "sub");
}

// Elementwise product.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_shape(a.value().same_shape(b.value()), "mul: shapes differ");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return detail::emit(a.tape(), std::move(out), {a, b},
      [a, b](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.needs_grad(a)) {
          BasicTensor<T> ga = g;
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
          t.accumulate(a, ga);
        }
        if (t.needs_grad(b)) {
          BasicTensor<T> gb = g;
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
          t.accumulate(b, gb);
        }
      }, "mul");
}

template <typename T>
Var<T> scale(const Var<T>& a, double factor) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.values()) v = static_cast<T>(v * factor);
  return detail::emit(a.tape(), std::move(out), {a},
      [a, factor](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga = g;
        for (auto& v : ga.values()) v = static_cast<T>(v * factor);
        t.accumulate(a, ga);
      }, "scale");
}

// a (m x n) + row (1 x n) broadcast over rows.
template <typename T>
Var<T> add_row(const Var<T>& a, const Var<T>& row) {
  const std::size_t m = a.rows(), n = a.cols();
  check_shape(row.rows() == 1 && row.cols() == n, "add_row: row vector width differs");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) += row.value()(0, j);
  return detail::emit(a.tape(), std::move(out), {a, row},
      [a, row, m, n](Tape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, g);
        if (t.needs_grad(row)) {
          BasicTensor<T> gr(1, n);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gr(0, j) += g(i, j);
          t.accumulate(row, gr);
        }
      }, "add_row");
}

// a (m x n) * row (1 x n) broadcast over rows.
template <typename T>
Var<T> mul_row(const Var<T>& a, const Var<T>& row) {
  const std::size_t m = a.rows(), n = a.cols();
  check_shape(row.rows() == 1 && row.cols() == n, "mul_row: row vector width differs");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= row.value()(0, j);
  return detail::emit(a.tape(), std::move(out), {a, row},
      [a, row, m, n](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.needs_grad(a)) {
          BasicTensor<T> ga = g;
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga(i, j) *= row.value()(0, j);
          t.accumulate(a, ga);
        }
        if (t.needs_grad(row)) {
          BasicTensor<T> gr(1, n);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gr(0, j) += g(i, j) * a.value()(i, j);
          t.accumulate(row, gr);
        }
      }, "mul_row");
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  check_shape(!parts.empty(), "concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    check_shape(p.rows() == m, "concat_cols: row counts differ");
    total += p.cols();
  }
  BasicTensor<T> out(m, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t i = 0; i < m; ++i)
      std::copy(v.data() + i * v.cols(), v.data() + (i + 1) * v.cols(),
                out.data() + i * total + offset);
    offset += v.cols();
  }
  return parts.front().tape().record(std::move(out), parts,
      [parts, m, total](Tape<T>& t, const BasicTensor<T>& g) {
        std::size_t off = 0;
        for (const auto& p : parts) {
          const std::size_t w = p.cols();
          if (t.needs_grad(p)) {
            BasicTensor<T> gp(m, w);
            for (std::size_t i = 0; i < m; ++i)
              std::copy(g.data() + i * total + off, g.data() + i * total + off + w,
                        gp.data() + i * w);
            t.accumulate(p, gp);
          }
          off += w;
        }
      });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  check_shape(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    check_shape(p.cols() == n, "concat_rows: column counts differ");
    total += p.rows();
  }
  BasicTensor<T> out(total, n);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + offset * n);
    offset += v.rows();
  }
  return parts.front().tape().record(std::move(out), parts,
      [parts, n](Tape<T>& t, const BasicTensor<T>& g) {
        std::size_t off = 0;
        for (const auto& p : parts) {
          const std::size_t r = p.rows();
          if (t.needs_grad(p)) {
            BasicTensor<T> gp(r, n);
            std::copy(g.data() + off * n, g.data() + (off + r) * n, gp.data());
            t.accumulate(p, gp);
          }
          off += r;
        }
      });
}

template <typename T>
Var<T> slice_cols(const Var<T>& a, std::size_t start, std::size_t width) {
  const std::size_t m = a.rows(), n = a.cols();
  check_shape(start + width <= n, "slice_cols: range exceeds width");
  BasicTensor<T> out(m, width);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < width; ++j) out(i, j) = a.value()(i, start + j);
  return detail::emit(a.tape(), std::move(out), {a},
      [a, start, width, m, n](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < width; ++j) ga(i, start + j) = g(i, j);
        t.accumulate(a, ga);
      }, "slice_cols");
}

// out[r] = a[index[r]].
template <typename T>
Var<T> gather_rows(const Var<T>& a, std::vector<std::size_t> index) {
  const std::size_t m = a.rows(), n = a.cols();
  BasicTensor<T> out(index.size(), n);
  for (std::size_t r = 0; r < index.size(); ++r) {
    check_shape(index[r] < m, "gather_rows: index out of range");
    std::copy(a.value().data() + index[r] * n, a.value().data() + (index[r] + 1) * n,
              out.data() + r * n);
  }
  return detail::emit(a.tape(), std::move(out), {a},
      [a, index = std::move(index), m, n](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t r = 0; r < index.size(); ++r)
          for (std::size_t j = 0; j < n; ++j) ga(index[r], j) += g(r, j);
        t.accumulate(a, ga);
      }, "gather_rows");
}

// Stacks `times` copies of `a` vertically.
template <typename T>
Var<T> tile_rows(const Var<T>& a, std::size_t times) {
  const std::size_t m = a.rows(), n = a.cols();
  BasicTensor<T> out(m * times, n);
  for (std::size_t k = 0; k < times; ++k)
    std::copy(a.value().data(), a.value().data() + m * n, out.data() + k * m * n);
  return detail::emit(a.tape(), std::move(out), {a},
      [a, times, m, n](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t k = 0; k < times; ++k)
          for (std::size_t i = 0; i < m * n; ++i) ga[i] += g[k * m * n + i];
        t.accumulate(a, ga);
      }, "tile_rows");
}

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  double acc = 0.0;
  for (T v : a.value().values()) acc += v;
  BasicTensor<T> out(1, 1, static_cast<T>(acc));
  return detail::emit(a.tape(), std::move(out), {a},
      [a](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(a.value().shape(), g[0]);
        t.accumulate(a, ga);
      }, "sum_all");
}

template <typename T>
Var<T> mean_all(const Var<T>& a) {
  const double count = static_cast<double>(a.value().size());
  check_shape(count > 0, "mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / count);
}

// Sum of each row: m x n -> m x 1.
template <typename T>
Var<T> row_sum(const Var<T>& a) {
  const std::size_t m = a.rows(), n = a.cols();
  BasicTensor<T> out(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += a.value()(i, j);
    out(i, 0) = static_cast<T>(acc);
  }
  return detail::emit(a.tape(), std::move(out), {a},
      [a, m, n](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) ga(i, j) = g(i, 0);
        t.accumulate(a, ga);
      }, "row_sum");
}

// Mean of the rows belonging to each segment: out[s] = mean{a[r] : seg[r] = s}.
// Every segment must be nonempty.
template <typename T>
Var<T> segment_mean(const Var<T>& a, std::vector<std::size_t> seg, std::size_t segments) {
  const std::size_t m = a.rows(), n = a.cols();
  check_shape(seg.size() == m, "segment_mean: one segment id per row required");
  std::vector<std::size_t> count(segments, 0);
  for (std::size_t s : seg) {
    check_shape(s < segments, "segment_mean: segment id out of range");
    ++count[s];
  }
  for (std::size_t c : count) {
    require(c > 0, ErrorKind::kEmptyGraph, "segment_mean: empty segment");
  }
  std::vector<double> acc(segments * n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) acc[seg[r] * n + j] += a.value()(r, j);
  BasicTensor<T> out(segments, n);
  for (std::size_t s = 0; s < segments; ++s)
    for (std::size_t j = 0; j < n; ++j)
      out(s, j) = static_cast<T>(acc[s * n + j] / static_cast<double>(count[s]));
  return detail::emit(a.tape(), std::move(out), {a},
      [a, seg = std::move(seg), count = std::move(count), m, n](Tape<T>& t,
                                                                const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t r = 0; r < m; ++r) {
          const double inv = 1.0 / static_cast<double>(count[seg[r]]);
          for (std::size_t j = 0; j < n; ++j) ga(r, j) = static_cast<T>(g(seg[r], j) * inv);
        }
        t.accumulate(a, ga);
      }, "segment_mean");
}

// Mean over consecutive blocks of `group` rows.
template <typename T>
Var<T> group_mean_rows(const Var<T>& a, std::size_t group) {
  check_shape(group > 0 && a.rows() % group == 0, "group_mean_rows: rows not divisible by group");
  std::vector<std::size_t> seg(a.rows());
  for (std::size_t r = 0; r < seg.size(); ++r) seg[r] = r / group;
  return segment_mean(a, std::move(seg), a.rows() / group);
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, double slope = 0.2) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.values()) v = v > T(0) ? v : static_cast<T>(v * slope);
  if (auto* log = a.tape().kink_log()) {
    for (T v : a.value().values()) log->push_back(v > T(0) ? 1 : 0);
  }
  return detail::emit(a.tape(), std::move(out), {a},
      [a, slope](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i)
          if (!(a.value()[i] > T(0))) ga[i] = static_cast<T>(ga[i] * slope);
        t.accumulate(a, ga);
      }, "leaky_relu");
}

// Exact (erf) GELU.
template <typename T>
Var<T> gelu(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.values()) {
    const double x = v;
    v = static_cast<T>(0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)));
  }
  return detail::emit(a.tape(), std::move(out), {a},
      [a](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga = g;
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < ga.size(); ++i) {
          const double x = a.value()[i];
          const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
          const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
          ga[i] = static_cast<T>(ga[i] * (cdf + x * pdf));
        }
        t.accumulate(a, ga);
      }, "gelu");
}

template <typename T>
Var<T> softmax_rows(const Var<T>& a) {
  const std::size_t m = a.rows(), n = a.cols();
  BasicTensor<T> out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(a.value()(i, j)));
    double z = 0.0;
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) z += e[j] = std::exp(a.value()(i, j) - mx);
    for (std::size_t j = 0; j < n; ++j) out(i, j) = static_cast<T>(e[j] / z);
  }
  BasicTensor<T> probs = out;
  return detail::emit(a.tape(), std::move(out), {a},
      [a, probs = std::move(probs), m, n](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t i = 0; i < m; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += static_cast<double>(g(i, j)) * probs(i, j);
          for (std::size_t j = 0; j < n; ++j)
            ga(i, j) = static_cast<T>(probs(i, j) * (g(i, j) - dot));
        }
        t.accumulate(a, ga);
      }, "softmax_rows");
}

// Per-row normalization to zero mean and unit variance, then gain and bias.
template <typename T>
Var<T> layer_norm_rows(const Var<T>& a, const Var<T>& gain, const Var<T>& bias,
                       double eps = 1e-5) {
  const std::size_t m = a.rows(), n = a.cols();
  check_shape(gain.cols() == n && bias.cols() == n && gain.rows() == 1 && bias.rows() == 1,
              "layer_norm_rows: gain/bias width differs");
  BasicTensor<T> xhat(m, n);
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += a.value()(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = a.value()(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j)
      xhat(i, j) = static_cast<T>((a.value()(i, j) - mean) * inv_std[i]);
  }
  BasicTensor<T> out(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = static_cast<T>(static_cast<double>(xhat(i, j)) * gain.value()(0, j) +
                                 bias.value()(0, j));
  return detail::emit(a.tape(), std::move(out), {a, gain, bias},
      [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), m, n](
          Tape<T>& t, const BasicTensor<T>& g) {
        if (t.needs_grad(gain) || t.needs_grad(bias)) {
          BasicTensor<T> gg(1, n), gb(1, n);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              gg(0, j) += g(i, j) * xhat(i, j);
              gb(0, j) += g(i, j);
            }
          t.accumulate(gain, gg);
          t.accumulate(bias, gb);
        }
        if (t.needs_grad(a)) {
          BasicTensor<T> ga(m, n);
          std::vector<double> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = static_cast<double>(g(i, j)) * gain.value()(0, j);
              sum_d += dxhat[j];
              sum_dx += dxhat[j] * xhat(i, j);
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j)
              ga(i, j) = static_cast<T>(inv_std[i] *
                                        (dxhat[j] - inv_n * sum_d - xhat(i, j) * inv_n * sum_dx));
          }
          t.accumulate(a, ga);
        }
      }, "layer_norm_rows");
}

// Inverted dropout: active only when the tape is in training mode.
template <typename T>
Var<T> dropout(const Var<T>& a, double p) {
  require(p >= 0.0 && p < 1.0, ErrorKind::kInvalidArgument, "dropout rate must be in [0, 1)");
  Tape<T>& tape = a.tape();
  if (!tape.training() || p == 0.0) return a;
  require(tape.rng() != nullptr, ErrorKind::kInvalidArgument, "dropout needs a seeded rng");
  BasicTensor<T> mask(a.value().shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& v : mask.values()) v = tape.rng()->uniform() >= p ? keep_scale : T(0);
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return detail::emit(tape, std::move(out), {a},
      [a, mask = std::move(mask)](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= mask[i];
        t.accumulate(a, ga);
      }, "dropout");
}

// Scales every row to L2 norm `target`. Rows with norm below `min_norm` are
// rejected with `error_kind` since they have no direction to keep.
template <typename T>
Var<T> normalize_rows(const Var<T>& a, double target, double min_norm = 1e-9,
                      ErrorKind error_kind = ErrorKind::kInvalidArgument) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> norms(m);
  BasicTensor<T> out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) sq += static_cast<double>(a.value()(i, j)) * a.value()(i, j);
    norms[i] = std::sqrt(sq);
    require(norms[i] >= min_norm, error_kind, "cannot normalize a zero-norm row");
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = static_cast<T>(target * a.value()(i, j) / norms[i]);
  }
  return detail::emit(a.tape(), std::move(out), {a},
      [a, target, norms = std::move(norms), m, n](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t i = 0; i < m; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            dot += static_cast<double>(g(i, j)) * a.value()(i, j) / norms[i];
          for (std::size_t j = 0; j < n; ++j) {
            const double unit = a.value()(i, j) / norms[i];
            ga(i, j) = static_cast<T>(target / norms[i] * (g(i, j) - unit * dot));
          }
        }
        t.accumulate(a, ga);
      }, "normalize_rows");
}

// Sum within each of `heads` equal-width column blocks: m x (heads*w) -> m x heads.
template <typename T>
Var<T> head_sum(const Var<T>& a, std::size_t heads) {
  const std::size_t m = a.rows(), n = a.cols();
  require(heads > 0 && n % heads == 0, ErrorKind::kHeadsDoNotDivide,
          "head_sum: width not divisible by head count");
  const std::size_t w = n / heads;
  BasicTensor<T> out(m, heads);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t h = 0; h < heads; ++h) {
      double acc = 0.0;
      for (std::size_t j = 0; j < w; ++j) acc += a.value()(i, h * w + j);
      out(i, h) = static_cast<T>(acc);
    }
  return detail::emit(a.tape(), std::move(out), {a},
      [a, m, n, w, heads](Tape<T>& t, const BasicTensor<T>& g) {
        BasicTensor<T> ga(m, n);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t j = 0; j < w; ++j) ga(i, h * w + j) = g(i, h);
        t.accumulate(a, ga);
      }, "head_sum");
}

// Softmax of edge logits (edges x heads) among edges sharing a target node.
template <typename T>
Var<T> edge_softmax(const Var<T>& logits, std::vector<std::size_t> target, std::size_t nodes) {
  const std::size_t edges = logits.rows(), heads = logits.cols();
  check_shape(target.size() == edges, "edge_softmax: one target per edge required");
  std::vector<double> mx(nodes * heads, -INFINITY), z(nodes * heads, 0.0);
  for (std::size_t e = 0; e < edges; ++e) {
    check_shape(target[e] < nodes, "edge_softmax: target out of range");
    for (std::size_t h = 0; h < heads; ++h)
      mx[target[e] * heads + h] = std::max(mx[target[e] * heads + h],
                                           static_cast<double>(logits.value()(e, h)));
  }
  std::vector<double> ex(edges * heads);
  for (std::size_t e = 0; e < edges; ++e)
    for (std::size_t h = 0; h < heads; ++h) {
      ex[e * heads + h] = std::exp(logits.value()(e, h) - mx[target[e] * heads + h]);
      z[target[e] * heads + h] += ex[e * heads + h];
    }
  BasicTensor<T> out(edges, heads);
  for (std::size_t e = 0; e < edges; ++e)
    for (std::size_t h = 0; h < heads; ++h)
      out(e, h) = static_cast<T>(ex[e * heads + h] / z[target[e] * heads + h]);
  BasicTensor<T> alpha = out;
  return detail::emit(logits.tape(), std::move(out), {logits},
      [logits, alpha = std::move(alpha), target = std::move(target), nodes, edges, heads](
          Tape<T>& t, const BasicTensor<T>& g) {
        std::vector<double> dot(nodes * heads, 0.0);
        for (std::size_t e = 0; e < edges; ++e)
          for (std::size_t h = 0; h < heads; ++h)
            dot[target[e] * heads + h] += static_cast<double>(g(e, h)) * alpha(e, h);
        BasicTensor<T> gl(edges, heads);
        for (std::size_t e = 0; e < edges; ++e)
          for (std::size_t h = 0; h < heads; ++h)
            gl(e, h) = static_cast<T>(alpha(e, h) * (g(e, h) - dot[target[e] * heads + h]));
        t.accumulate(logits, gl);
      }, "edge_softmax");
}

// out[target[e], head block h] += weight[e, h] * message[e, head block h].
template <typename T>
Var<T> scatter_weighted(const Var<T>& message, const Var<T>& weight,
                        std::vector<std::size_t> target, std::size_t nodes) {
  const std::size_t edges = message.rows(), width = message.cols(), heads = weight.cols();
  check_shape(weight.rows() == edges && target.size() == edges,
              "scatter_weighted: edge counts differ");
  require(heads > 0 && width % heads == 0, ErrorKind::kHeadsDoNotDivide,
          "scatter_weighted: width not divisible by head count");
  const std::size_t w = width / heads;
  std::vector<double> acc(nodes * width, 0.0);
  for (std::size_t e = 0; e < edges; ++e) {
    check_shape(target[e] < nodes, "scatter_weighted: target out of range");
    for (std::size_t h = 0; h < heads; ++h) {
      const double a = weight.value()(e, h);
      for (std::size_t j = 0; j < w; ++j)
        acc[target[e] * width + h * w + j] += a * message.value()(e, h * w + j);
    }
  }
  BasicTensor<T> out(nodes, width);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<T>(acc[i]);
  return detail::emit(message.tape(), std::move(out), {message, weight},
      [message, weight, target = std::move(target), edges, width, heads, w](
          Tape<T>& t, const BasicTensor<T>& g) {
        if (t.needs_grad(message)) {
          BasicTensor<T> gm(edges, width);
          for (std::size_t e = 0; e < edges; ++e)
            for (std::size_t h = 0; h < heads; ++h)
              for (std::size_t j = 0; j < w; ++j)
                gm(e, h * w + j) = static_cast<T>(static_cast<double>(weight.value()(e, h)) *
                                                  g(target[e], h * w + j));
          t.accumulate(message, gm);
        }
        if (t.needs_grad(weight)) {
          BasicTensor<T> gw(edges, heads);
          for (std::size_t e = 0; e < edges; ++e)
            for (std::size_t h = 0; h < heads; ++h) {
              double acc = 0.0;
              for (std::size_t j = 0; j < w; ++j)
                acc += static_cast<double>(g(target[e], h * w + j)) * message.value()(e, h * w + j);
              gw(e, h) = static_cast<T>(acc);
            }
          t.accumulate(weight, gw);
        }
      }, "scatter_weighted");
}

// Multi-head scaled dot-product attention over independent groups.
// q holds groups*mq rows, k and v hold groups*nk rows; rows of group g only
// attend to keys of group g. Column blocks of width d/heads form the heads.
// If `weights_out` is given it receives one (groups*heads*mq) x nk matrix of
// attention probabilities, ordered group-major then head.
template <typename T>
Var<T> scaled_dot_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                            std::size_t heads, std::size_t groups = 1,
                            BasicTensor<T>* weights_out = nullptr) {
  const std::size_t d = q.cols();
  check_shape(k.cols() == d && v.cols() == d, "attention: q/k/v widths differ");
  require(heads > 0 && d % heads == 0, ErrorKind::kHeadsDoNotDivide,
          "attention: width not divisible by head count");
  check_shape(groups > 0 && q.rows() % groups == 0 && k.rows() % groups == 0 &&
                  v.rows() == k.rows(),
              "attention: row counts incompatible with group count");
  const std::size_t mq = q.rows() / groups, nk = k.rows() / groups, dh = d / heads;
  check_shape(mq > 0 && nk > 0, "attention: empty query or key set");
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  BasicTensor<T> probs(groups * heads * mq, nk);
  BasicTensor<T> out(q.rows(), d);
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();
  std::vector<double> logit(nk);
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < mq; ++i) {
        const std::size_t qi = g * mq + i;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < nk; ++j) {
          const std::size_t kj = g * nk + j;
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c)
            acc += static_cast<double>(Q(qi, h * dh + c)) * K(kj, h * dh + c);
          logit[j] = acc * scale_factor;
          mx = std::max(mx, logit[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < nk; ++j) z += logit[j] = std::exp(logit[j] - mx);
        const std::size_t prow = (g * heads + h) * mq + i;
        for (std::size_t j = 0; j < nk; ++j) probs(prow, j) = static_cast<T>(logit[j] / z);
        for (std::size_t c = 0; c < dh; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < nk; ++j)
            acc += static_cast<double>(probs(prow, j)) * V(g * nk + j, h * dh + c);
          out(qi, h * dh + c) = static_cast<T>(acc);
        }
      }
  if (weights_out) *weights_out = probs;

  return detail::emit(q.tape(), std::move(out), {q, k, v},
      [q, k, v, probs = std::move(probs), heads, groups, mq, nk, dh, scale_factor](
          Tape<T>& t, const BasicTensor<T>& gout) {
        const auto& Q = q.value();
        const auto& K = k.value();
        const auto& V = v.value();
        const std::size_t d = heads * dh;
        BasicTensor<T> gq(Q.rows(), d), gk(K.rows(), d), gv(V.rows(), d);
        std::vector<double> dp(nk), ds(nk);
        for (std::size_t g = 0; g < groups; ++g)
          for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t i = 0; i < mq; ++i) {
              const std::size_t qi = g * mq + i;
              const std::size_t prow = (g * heads + h) * mq + i;
              double dot = 0.0;
              for (std::size_t j = 0; j < nk; ++j) {
                const std::size_t kj = g * nk + j;
                double acc = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                  acc += static_cast<double>(gout(qi, h * dh + c)) * V(kj, h * dh + c);
                  gv(kj, h * dh + c) += static_cast<T>(static_cast<double>(probs(prow, j)) *
                                                       gout(qi, h * dh + c));
                }
                dp[j] = acc;
                dot += acc * probs(prow, j);
              }
              for (std::size_t j = 0; j < nk; ++j)
                ds[j] = probs(prow, j) * (dp[j] - dot) * scale_factor;
              for (std::size_t j = 0; j < nk; ++j) {
                const std::size_t kj = g * nk + j;
                for (std::size_t c = 0; c < dh; ++c) {
                  gq(qi, h * dh + c) += static_cast<T>(ds[j] * K(kj, h * dh + c));
                  gk(kj, h * dh + c) += static_cast<T>(ds[j] * Q(qi, h * dh + c));
                }
              }
            }
        t.accumulate(q, gq);
        t.accumulate(k, gk);
        t.accumulate(v, gv);
      }, "scaled_dot_attention");
}

}  // namespace prism::numerics
