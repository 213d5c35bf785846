#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcaeeg/error.hpp"

namespace mcaeeg {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Summation by recursive halving. Error grows as O(log n) instead of O(n),
/// and a power-of-two count of identical terms sums exactly.
template <typename Get>
double pairwise_sum(std::size_t n, Get&& get, std::size_t offset = 0) {
  if (n == 0) return 0.0;
  if (n == 1) return get(offset);
  const std::size_t half = n / 2;
  return pairwise_sum(half, get, offset) + pairwise_sum(n - half, get, offset + half);
}

inline double pairwise_sum(std::span<const double> v) {
  return pairwise_sum(v.size(), [&](std::size_t i) { return v[i]; });
}

/// Allocator returning 64-byte aligned blocks. Vectorized reductions then
/// see the same alignment on every run, which keeps results bit-identical.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major n-dimensional array of doubles.
class Tensor {
 public:
  Tensor() : shape_{1}, data_(1, 0.0) {}

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
  }

  Tensor(Shape shape, const std::vector<double>& data) : Tensor(std::move(shape), Buffer(data.begin(), data.end())) {}

  Tensor(Shape shape, Buffer data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
    }
  }

  /// Rank-2 tensor from nested rows; all rows must share a length.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    if (rows.size() == 0) throw ShapeError("tensor: from_rows needs at least one row");
    const std::size_t cols = rows.begin()->size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) throw ShapeError("tensor: ragged rows");
      data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(data));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() & noexcept { return data_; }
  std::span<const double> data() const& noexcept { return data_; }
  std::span<const double> data() && = delete;
  const Buffer& vec() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool operator==(const Tensor& o) const = default;

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor: rank must be at least 1");
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("tensor: zero-sized dimension in " + shape_str(shape));
    }
  }

  Shape shape_;
  Buffer data_;
};

inline Tensor zeros_like(const Tensor& x) { return Tensor(x.shape(), 0.0); }

namespace detail {
inline void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_str(x.shape()));
  }
}
inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}
}  // namespace detail

/// [m x k] * [k x n] -> [m x n]. Inner products use pairwise summation.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  Tensor out({m, n});
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.at(i, j) = pairwise_sum(k, [&](std::size_t p) { return ad[i * k + p] * bd[p * n + j]; });
    }
  }
  return out;
}

/// Row-wise softmax with max subtraction; safe for any finite input.
inline Tensor softmax_rows(const Tensor& x) {
  detail::require_rank(x, 2, "softmax_rows");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor out(x.shape());
  std::vector<double> e(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double mx = x.at(i, 0);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x.at(i, j));
    for (std::size_t j = 0; j < cols; ++j) e[j] = std::exp(x.at(i, j) - mx);
    const double total = pairwise_sum(e);
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = e[j] / total;
  }
  return out;
}

inline Tensor transpose2d(const Tensor& x) {
  detail::require_rank(x, 2, "transpose2d");
  Tensor out({x.dim(1), x.dim(0)});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t j = 0; j < x.dim(1); ++j) out.at(j, i) = x.at(i, j);
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Tensor scale(const Tensor& x, double s) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * s;
  return out;
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  return Tensor(std::move(shape), x.vec());
}

/// Slice [t0, t1) along the last axis.
inline Tensor slice_time(const Tensor& x, std::size_t t0, std::size_t t1) {
  const std::size_t len = x.shape().back();
  if (t0 >= t1 || t1 > len) {
    throw ShapeError("slice_time: range [" + std::to_string(t0) + ", " + std::to_string(t1) +
                     ") out of bounds for last axis of " + shape_str(x.shape()));
  }
  Shape shape = x.shape();
  shape.back() = t1 - t0;
  const std::size_t outer = x.size() / len;
  Tensor out(shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t t = t0; t < t1; ++t) out[o * (t1 - t0) + (t - t0)] = x[o * len + t];
  return out;
}

}  // namespace mcaeeg
