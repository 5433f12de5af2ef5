#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ggan {

/// Dense row-major tensor. Rank up to 4; layout for feature maps is NHWC
/// (batch outermost, channels innermost), dense activations are (N, F).
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), T(0)) {}

  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static Tensor full(std::vector<std::size_t> shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // (N, F) indexing
  T& at(std::size_t n, std::size_t f) {
    assert(ndim() == 2);
    return data_[n * shape_[1] + f];
  }
  const T& at(std::size_t n, std::size_t f) const {
    assert(ndim() == 2);
    return data_[n * shape_[1] + f];
  }

  // (H, W, C) indexing
  T& at(std::size_t h, std::size_t w, std::size_t c) {
    assert(ndim() == 3);
    return data_[(h * shape_[1] + w) * shape_[2] + c];
  }
  const T& at(std::size_t h, std::size_t w, std::size_t c) const {
    assert(ndim() == 3);
    return data_[(h * shape_[1] + w) * shape_[2] + c];
  }

  // (N, H, W, C) indexing
  T& at(std::size_t n, std::size_t h, std::size_t w, std::size_t c) {
    assert(ndim() == 4);
    return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
  }
  const T& at(std::size_t n, std::size_t h, std::size_t w, std::size_t c) const {
    assert(ndim() == 4);
    return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Reinterpret shape; element count must be unchanged.
  Tensor reshaped(std::vector<std::size_t> shape) const {
    if (count(shape) != numel()) throw std::invalid_argument("reshape: element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  void set_shape(std::vector<std::size_t> shape) {
    if (count(shape) != numel()) throw std::invalid_argument("set_shape: element count mismatch");
    shape_ = std::move(shape);
  }

  /// Reshape with reallocation only when growing past capacity; contents
  /// are unspecified afterwards. For reusable scratch buffers.
  void resize(std::vector<std::size_t> shape) {
    const std::size_t n = count(shape);
    shape_ = std::move(shape);
    data_.resize(n);
  }

  /// Rows [begin, end) along the outermost axis, copied.
  Tensor rows(std::size_t begin, std::size_t end) const {
    assert(!shape_.empty() && begin <= end && end <= shape_[0]);
    std::vector<std::size_t> s = shape_;
    s[0] = end - begin;
    Tensor t(s);
    const std::size_t stride = row_stride();
    std::copy(data_.begin() + begin * stride, data_.begin() + end * stride, t.data_.begin());
    return t;
  }

  /// Copy `src` into rows starting at `row`.
  void set_rows(std::size_t row, const Tensor& src) {
    assert(src.ndim() == ndim());
    const std::size_t stride = row_stride();
    assert(src.row_stride() == stride && row + src.dim(0) <= shape_[0]);
    std::copy(src.data_.begin(), src.data_.end(), data_.begin() + row * stride);
  }

  std::size_t row_stride() const {
    std::size_t s = 1;
    for (std::size_t i = 1; i < shape_.size(); ++i) s *= shape_[i];
    return s;
  }

  Tensor& operator+=(const Tensor& o) {
    assert(o.numel() == numel());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  Tensor& operator*=(T a) {
    for (auto& v : data_) v *= a;
    return *this;
  }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> t(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) t[i] = static_cast<U>(data_[i]);
    return t;
  }

  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> concat_rows(const std::vector<const Tensor<T>*>& parts) {
  assert(!parts.empty());
  std::vector<std::size_t> shape = parts[0]->shape();
  std::size_t total = 0;
  for (const auto* p : parts) total += p->dim(0);
  shape[0] = total;
  Tensor<T> out(shape);
  std::size_t row = 0;
  for (const auto* p : parts) {
    out.set_rows(row, *p);
    row += p->dim(0);
  }
  return out;
}

inline std::string shape_string(const std::vector<std::size_t>& s) {
  std::string r = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    r += std::to_string(s[i]);
    if (i + 1 < s.size()) r += ",";
  }
  return r + ")";
}

}  // namespace ggan
