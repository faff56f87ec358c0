#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fcgan/error.hpp"

namespace fcgan {

using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kStorageAlignment = 64;

/// Every buffer starts on a 64-byte boundary. Eigen picks its vectorized
/// peeling from the runtime address, so with malloc's arbitrary alignment the
/// same product could round differently from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kStorageAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kStorageAlignment}); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

/// Dense row-major array. Image-like tensors use (batch, channels, height, width).
///
/// `T` is `float` for training and inference and `double` for gradient checking.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, const std::vector<T>& data) : Tensor(std::move(shape), AlignedVector<T>(data.begin(), data.end())) {}
  Tensor(Shape shape, AlignedVector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      fail(ErrorKind::kShape, "tensor " + shape_string(shape_) + " needs " +
                                  std::to_string(shape_size(shape_)) + " values, got " +
                                  std::to_string(data_.size()));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  // NCHW accessors; only meaningful for rank-4 tensors.
  std::size_t n() const { return shape_.at(0); }
  std::size_t c() const { return shape_.at(1); }
  std::size_t h() const { return shape_.at(2); }
  std::size_t w() const { return shape_.at(3); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) {
    return data_[((b * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return data_[((b * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
  }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool flag) noexcept { requires_grad_ = flag; }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const {
    Tensor out(std::move(shape), data_);
    out.requires_grad_ = requires_grad_;
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    AlignedVector<U> converted(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(converted));
  }

  bool all_finite() const noexcept {
    for (const T& v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  AlignedVector<T> data_;
  bool requires_grad_ = false;
};

/// Throws a kNonFinite error naming `what` if any element is NaN or Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const std::string& what) {
  if (!t.all_finite()) fail(ErrorKind::kNonFinite, what + " contains NaN or Inf");
}

template <typename T>
void require_rank4(const Tensor<T>& t, const char* what) {
  if (t.rank() != 4) {
    fail(ErrorKind::kShape, std::string(what) + " must be rank 4 (N,C,H,W), got " +
                                shape_string(t.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::kShape,
         std::string(what) + ": shapes differ " + shape_string(a.shape()) + " vs " +
             shape_string(b.shape()));
  }
}

template <typename T>
double inner_product(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "inner_product");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

}  // namespace fcgan
