#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "sfit/error.hpp"

namespace sfit {

// Dense row-major tensor of rank 1..4. Image batches use NCHW layout.
// Arithmetic-heavy code maps slices onto Eigen matrices; everything else
// indexes directly.
template <typename T>
class Tensor {
 public:
  using Scalar = T;
  using Mat =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Mat>;
  using ConstMatMap = Eigen::Map<const Mat>;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), T(0)) {}
  Tensor(std::initializer_list<int> shape)
      : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, T v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int size(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // NCHW accessor.
  T& at(int n, int c, int h, int w) {
    return data_[offset4(n, c, h, w)];
  }
  const T& at(int n, int c, int h, int w) const {
    return data_[offset4(n, c, h, w)];
  }

  // Rank-2 accessor.
  T& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  const T& at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(T(0)); }

  // View of the whole buffer as a rows x cols row-major matrix.
  MatMap mat(int rows, int cols) {
    check_view(rows, cols);
    return MatMap(data_.data(), rows, cols);
  }
  ConstMatMap mat(int rows, int cols) const {
    check_view(rows, cols);
    return ConstMatMap(data_.data(), rows, cols);
  }

  // View of one sample of an NCHW batch as (C, H*W).
  MatMap sample(int n) {
    return MatMap(data_.data() + sample_offset(n), shape_[1],
                  static_cast<long>(shape_[2]) * shape_[3]);
  }
  ConstMatMap sample(int n) const {
    return ConstMatMap(data_.data() + sample_offset(n), shape_[1],
                       static_cast<long>(shape_[2]) * shape_[3]);
  }

  std::size_t sample_numel() const {
    return numel() / static_cast<std::size_t>(shape_.at(0));
  }

  Tensor reshaped(std::vector<int> shape) const {
    if (checked_numel(shape) != numel())
      throw ContractError("reshape changes element count");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  // In-place elementwise helpers.
  Tensor& operator+=(const Tensor& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(T s) {
    for (T& v : data_) v *= s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ &&
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(T)) == 0;
  }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i)
      out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
  }

 private:
  static std::size_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4)
      throw ContractError("tensor rank must be 1..4");
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw ContractError("tensor dims must be positive");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t offset4(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) *
               shape_[3] +
           w;
  }

  std::size_t sample_offset(int n) const {
    return static_cast<std::size_t>(n) * sample_numel();
  }

  void check_view(int rows, int cols) const {
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) !=
        numel())
      throw ContractError("matrix view does not cover tensor");
  }

  void require_same(const Tensor& o) const {
    if (shape_ != o.shape_)
      throw ContractError("shape mismatch: " + shape_str(shape_) + " vs " +
                          shape_str(o.shape_));
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Casting copy, used by double-precision gradient checks.
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& src) {
  Tensor<To> out(src.shape());
  for (std::size_t i = 0; i < src.numel(); ++i)
    out[i] = static_cast<To>(src[i]);
  return out;
}

}  // namespace sfit
