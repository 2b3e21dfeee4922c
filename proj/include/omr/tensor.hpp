// include/omr/tensor.hpp

// Copyright 2026  omr-toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef OMR_TENSOR_HPP_
#define OMR_TENSOR_HPP_

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "omr/threading.hpp"

namespace omr {

// All numeric work runs in double precision so that finite-difference
// gradient checks have enough headroom.
using Real = double;

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

// Dense row-major tensor. The layout is fixed row-major everywhere; index
// formulas in the layer code assume it.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(shape_numel(shape_), Real{0}) {}

  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size())
      throw DimensionError("tensor data size " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
  }

  static Tensor full(Shape shape, Real value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  // 1-D / 2-D literals, mostly for tests.
  static Tensor row(std::initializer_list<Real> v) {
    return Tensor({v.size()}, std::vector<Real>(v));
  }
  static Tensor matrix(std::initializer_list<std::initializer_list<Real>> rows) {
    std::size_t r = rows.size(), c = rows.begin()->size();
    std::vector<Real> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::vector<Real>& vec() { return data_; }
  const std::vector<Real>& vec() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  Real& operator()(std::size_t i) { return data_[i]; }
  Real operator()(std::size_t i) const { return data_[i]; }
  Real& operator()(std::size_t i, std::size_t j) {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
  }
  Real operator()(std::size_t i, std::size_t j) const {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
  }
  Real& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(rank() == 3);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Real operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(rank() == 3);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Real& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    assert(rank() == 4);
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  Real operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    assert(rank() == 4);
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  // Same flat data, new shape; element count must match.
  Tensor reshape(Shape new_shape) const {
    if (shape_numel(new_shape) != data_.size())
      throw DimensionError("reshape " + shape_str(shape_) + " -> " +
                           shape_str(new_shape) + ": element count mismatch");
    return Tensor(std::move(new_shape), data_);
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor& operator+=(const Tensor& o) {
    check_same_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check_same_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(Real s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  Tensor& operator+=(Real s) {
    for (auto& v : data_) v += s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, Real s) { return a *= s; }
  friend Tensor operator*(Real s, Tensor a) { return a *= s; }

  // Elementwise product; shapes must match exactly (no broadcasting).
  friend Tensor hadamard(Tensor a, const Tensor& b) {
    a.check_same_shape(b, "hadamard");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] *= b.data_[i];
    return a;
  }

 private:
  void check_same_shape(const Tensor& o, const char* op) const {
    if (shape_ != o.shape_)
      throw DimensionError(std::string(op) + ": shape mismatch " +
                           shape_str(shape_) + " vs " + shape_str(o.shape_));
  }

  Shape shape_;
  std::vector<Real> data_;
};

// --- raw matrix kernels -----------------------------------------------------
//
// All layers funnel their heavy lifting through these three kernels. Output
// rows are partitioned across threads; each output element is produced by a
// single serial k-loop, so results are bit-identical for any thread count.

namespace detail {

inline void matmul_rows(const Real* a, const Real* b, Real* c, std::size_t m,
                        std::size_t k, std::size_t n, std::size_t i0,
                        std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) {
    Real* crow = c + i * n;
    std::fill(crow, crow + n, Real{0});
    const Real* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const Real aik = arow[kk];
      if (aik == Real{0}) continue;
      const Real* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

inline void matmul_abt_rows(const Real* a, const Real* b, Real* c,
                            std::size_t m, std::size_t k, std::size_t n,
                            std::size_t i0, std::size_t i1) {
  // c[m x n] = a[m x k] * b^T, where b is [n x k].
  for (std::size_t i = i0; i < i1; ++i) {
    const Real* arow = a + i * k;
    Real* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* brow = b + j * k;
      Real acc = 0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] = acc;
    }
  }
}

inline void matmul_atb_rows(const Real* a, const Real* b, Real* c,
                            std::size_t m, std::size_t k, std::size_t n,
                            std::size_t i0, std::size_t i1) {
  // c[m x n] = a^T * b, where a is [k x m], b is [k x n].
  for (std::size_t i = i0; i < i1; ++i) {
    Real* crow = c + i * n;
    std::fill(crow, crow + n, Real{0});
    for (std::size_t kk = 0; kk < k; ++kk) {
      const Real aki = a[kk * m + i];
      if (aki == Real{0}) continue;
      const Real* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
}

}  // namespace detail

inline void matmul_into(const Real* a, const Real* b, Real* c, std::size_t m,
                        std::size_t k, std::size_t n) {
  parallel_rows(m, m * k * n, [&](std::size_t i0, std::size_t i1) {
    detail::matmul_rows(a, b, c, m, k, n, i0, i1);
  });
}

inline void matmul_abt_into(const Real* a, const Real* b, Real* c,
                            std::size_t m, std::size_t k, std::size_t n) {
  parallel_rows(m, m * k * n, [&](std::size_t i0, std::size_t i1) {
    detail::matmul_abt_rows(a, b, c, m, k, n, i0, i1);
  });
}

inline void matmul_atb_into(const Real* a, const Real* b, Real* c,
                            std::size_t m, std::size_t k, std::size_t n) {
  parallel_rows(m, m * k * n, [&](std::size_t i0, std::size_t i1) {
    detail::matmul_atb_rows(a, b, c, m, k, n, i0, i1);
  });
}

// c[MxN] = a[MxK] * b[KxN]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul expects rank-2 tensors, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  if (a.extent(1) != b.extent(0))
    throw DimensionError("matmul inner dimensions differ: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor c({m, n});
  matmul_into(a.data(), b.data(), c.data(), m, k, n);
  return c;
}

}  // namespace omr

#endif  // OMR_TENSOR_HPP_
