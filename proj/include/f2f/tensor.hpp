#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace f2f {

// 64-byte aligned storage. Vectorized reductions and products peel an
// unaligned head element by element, so the summation order (and the last
// bits of the result) would otherwise depend on where the heap put a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense 4-D array in (batch, channel, row, col) order, row-major.
template <typename T>
class BasicTensor4 {
 public:
  using Shape = std::array<int, 4>;

  BasicTensor4() = default;
  explicit BasicTensor4(Shape shape, T fill = T{0})
      : shape_(shape), data_(element_count(shape), fill) {}

  const Shape& shape() const { return shape_; }
  int batch() const { return shape_[0]; }
  int channels() const { return shape_[1]; }
  int rows() const { return shape_[2]; }
  int cols() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(int n, int c, int r, int col) { return data_[offset(n, c, r, col)]; }
  const T& operator()(int n, int c, int r, int col) const { return data_[offset(n, c, r, col)]; }

  std::size_t offset(int n, int c, int r, int col) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + r) * shape_[3] + col;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    for (const T& x : data_) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  friend bool operator==(const BasicTensor4&, const BasicTensor4&) = default;

  static std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d < 0 ? 0 : d);
    return n;
  }

 private:
  Shape shape_{0, 0, 0, 0};
  AlignedVector<T> data_;
};

using Tensor4 = BasicTensor4<float>;

template <typename T>
std::string shape_string(const typename BasicTensor4<T>::Shape& s) {
  return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) + "," +
         std::to_string(s[3]) + ")";
}

// A learnable tensor with its gradient accumulator.
template <typename T>
struct BasicParameter {
  BasicTensor4<T> value;
  BasicTensor4<T> grad;
  bool trainable = true;

  BasicParameter() = default;
  explicit BasicParameter(BasicTensor4<T> v, bool is_trainable = true)
      : value(std::move(v)), grad(value.shape()), trainable(is_trainable) {}

  friend bool operator==(const BasicParameter&, const BasicParameter&) = default;
};

using Parameter = BasicParameter<float>;

template <typename T>
void zero_grads(std::span<BasicParameter<T>* const> params) {
  for (auto* p : params) p->grad.fill(T{0});
}

}  // namespace f2f
